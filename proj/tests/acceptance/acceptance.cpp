// Runs the acceptance criteria in order and prints one PASS/FAIL line each.
// Usage: vmflow_acceptance [criterion numbers...]

#include <boost/math/distributions/chi_squared.hpp>

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <flow_checks.hpp>
#include <oracles.hpp>

#include "vmflow/attn_mask.hpp"
#include "vmflow/checkpoint.hpp"
#include "vmflow/data_synth.hpp"
#include "vmflow/error.hpp"
#include "vmflow/flow_infer.hpp"
#include "vmflow/flow_train.hpp"
#include "vmflow/granger.hpp"
#include "vmflow/losses.hpp"
#include "vmflow/metrics.hpp"
#include "vmflow/ops.hpp"

using namespace vmflow;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += "FAILED " + what;
    }
  }
  void note(const std::string& s) {
    if (!detail.empty()) detail += "; ";
    detail += s;
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

bool same_bits(std::span<const float> a, std::span<const float> b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

// ---------------------------------------------------------------- 1

Outcome mask_suite() {
  Outcome out;
  const auto t0 = Clock::now();
  Rng rng(2024);
  const double decays[3] = {0.5, 0.9, 1.0};
  std::size_t bad_oracle = 0, bad_values = 0, bad_context = 0, bad_causal = 0, bad_block = 0, bad_split = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto len = static_cast<std::size_t>(rng.uniform_int(1, 16));
    const double decay = decays[trial % 3];
    const auto cond = static_cast<std::size_t>(rng.uniform_int(0, 4));
    const auto lat = static_cast<std::size_t>(rng.uniform_int(0, 4));
    const GroupSplit split = split_with_decay(len, decay, rng);
    std::size_t total = 0;
    bool sizes_ok = split.cumsum.front() == 0;
    for (auto s : split.sizes) {
      total += s;
      sizes_ok = sizes_ok && s >= 1;
    }
    if (!sizes_ok || total != len) ++bad_split;
    const AttentionMask m = build_mask(len, cond, lat, split);
    if (m.blocked != oracle::oracle_mask(len, cond, lat, split)) ++bad_oracle;
    const std::size_t seq = m.seq_len(), ctx = m.context_len(), vis = m.visible_len;
    for (auto v : m.blocked)
      if (v > 1) ++bad_values;
    for (std::size_t r = 0; r < seq; ++r)
      for (std::size_t c = 0; c < ctx; ++c)
        if (m.at(r, c)) ++bad_context;
    // x_p row in group g never sees an x_p column at or after g's start.
    for (std::size_t g = 0; g + 1 < split.groups(); ++g) {
      for (std::size_t r = split.cumsum[g]; r < split.cumsum[g + 1] && r < vis; ++r)
        for (std::size_t c = split.cumsum[g]; c < vis; ++c)
          if (!m.at(ctx + r, ctx + c)) ++bad_causal;
    }
    // z-z block is open exactly within a group.
    const std::size_t zo = m.sample_offset();
    for (std::size_t g = 0; g < split.groups(); ++g)
      for (std::size_t h = 0; h < split.groups(); ++h)
        for (std::size_t r = split.cumsum[g]; r < split.cumsum[g + 1]; ++r)
          for (std::size_t c = split.cumsum[h]; c < split.cumsum[h + 1]; ++c)
            if ((m.at(zo + r, zo + c) == 0) != (g == h)) ++bad_block;
  }
  out.require(bad_split == 0, "split sizes (" + std::to_string(bad_split) + ")");
  out.require(bad_oracle == 0, "oracle agreement (" + std::to_string(bad_oracle) + ")");
  out.require(bad_values == 0, "binary entries");
  out.require(bad_context == 0, "context columns open");
  out.require(bad_causal == 0, "strict x_p causality");
  out.require(bad_block == 0, "z block diagonal");

  const AttentionMask fig = build_mask(10, 4, 4, split_from_sizes({9, 1}));
  out.require(fig.seq_len() == 27, "reference layout seq_len 27");
  bool ctx_open = true;
  for (std::size_t r = 0; r < 27; ++r)
    for (std::size_t c = 0; c < 8; ++c) ctx_open = ctx_open && fig.at(r, c) == 0;
  out.require(ctx_open, "reference layout context columns open");

  // Uniform group count at decay 1.
  const std::size_t len = 12, draws = 10000;
  std::vector<double> counts(len, 0.0);
  Rng crng(7);
  for (std::size_t i = 0; i < draws; ++i) counts[split_with_decay(len, 1.0, crng).groups() - 1] += 1.0;
  double chi2 = 0.0;
  const double expect = static_cast<double>(draws) / len;
  for (double c : counts) chi2 += (c - expect) * (c - expect) / expect;
  const double crit = boost::math::quantile(boost::math::chi_squared(static_cast<double>(len - 1)), 0.99);
  out.require(chi2 < crit, "chi-square uniformity");

  const double secs = seconds_since(t0);
  out.require(secs < 10.0, "runtime < 10 s");
  out.note("1000 masks, chi2 " + fmt("%.1f", chi2) + " < " + fmt("%.1f", crit) + ", " + fmt("%.2f s", secs));
  return out;
}

// ---------------------------------------------------------------- 2

TrainConfig config_for(Variant v, float alpha = 0.1f, float beta = 0.5f) {
  TrainConfig cfg;
  cfg.variant = v;
  const auto tr = variant_traits(v);
  cfg.alpha = tr.variational ? alpha : 0.0f;
  cfg.beta = tr.dispersive ? beta : 0.0f;
  if (tr.instantaneous_only) cfg.time.p_equal = 1.0f;
  return cfg;
}

const Variant kAll[6] = {Variant::kMF, Variant::kVMF, Variant::kMFD, Variant::kVMFD, Variant::kFM, Variant::kRFM};

Outcome jvp_check() {
  Outcome out;
  const auto t0 = Clock::now();
  Rng rng(31);
  double worst_fd = 0.0, worst_lin = 0.0;
  std::size_t fails = 0;
  for (int i = 0; i < 100; ++i) {
    const ModelDims d = oracle::random_tiny_dims(rng);
    // Mean-flow variants so r < t is exercised; VMF-type ones carry phi.
    const Variant v = kAll[i % 4];
    FlowTrainer tr(d, config_for(v), 500 + i);
    auto pb = oracle::random_batch(tr, static_cast<std::size_t>(rng.uniform_int(1, 4)), rng, i);
    oracle::keep_interior(pb, 0.01f);
    const auto res = oracle::check_field_jvp(tr, pb, rng, 1e-3);
    worst_fd = std::max(worst_fd, res.fd_rel);
    worst_lin = std::max(worst_lin, res.linearity);
    if (!(res.fd_rel < 1e-2 && res.linearity < 1e-4)) ++fails;
  }
  const double secs = seconds_since(t0);
  out.require(fails == 0, std::to_string(fails) + " of 100 instances");
  out.require(secs < 60.0, "runtime < 60 s");
  out.note("worst FD rel " + fmt("%.2e", worst_fd) + ", worst linearity " + fmt("%.2e", worst_lin) + ", " +
           fmt("%.2f s", secs));
  return out;
}

// ---------------------------------------------------------------- 3

ModelDims small_dims() {
  ModelDims d;
  d.token_dim = 2;
  d.sample_len = 4;
  d.cond_dim = 3;
  d.cond_len = 1;
  d.latent_dim = 3;
  d.latent_tokens = 1;
  d.width = 8;
  d.heads = 2;
  d.blocks = 2;
  d.mlp_ratio = 2;
  d.time_freqs = 3;
  d.disp_layer = 1;
  d.phi_hidden = 8;
  return d;
}

Outcome grad_check() {
  Outcome out;
  Rng rng(41);
  double worst = 0.0;
  for (Variant v : {Variant::kVMFD, Variant::kVMF, Variant::kMFD}) {
    FlowTrainer tr(small_dims(), config_for(v), 42);
    const auto pb = oracle::random_batch(tr, 6, rng);
    for (const char* prefix : {"theta/", "phi/"}) {
      if (!tr.variational() && std::string(prefix) == "phi/") continue;
      const auto res = oracle::check_total_grad(tr, pb, rng, prefix, 20, 1e-2);
      worst = std::max(worst, res.rel);
      out.require(res.checked == 20 && res.rel < 1e-2, to_string(v) + " " + prefix + " rel " + fmt("%.2e", res.rel));
    }
  }
  out.note("20 parameters per module, worst rel " + fmt("%.2e", worst));
  return out;
}

// ---------------------------------------------------------------- 4

Outcome loss_identities() {
  Outcome out;
  const Tensor zeros = Tensor::zeros({1, 5});
  out.require(kl_loss(zeros, zeros).item() == 0.0f, "kl(0, 0) = 0");
  const Tensor ones = Tensor::full({1, 5}, 1.0f);
  out.require(std::abs(kl_loss(ones, zeros).item() - 2.5f) < 1e-6f, "kl(1, 0) = 0.5 per dim");
  Rng rng(51);
  const auto row = oracle::random_vec(6, rng);
  std::vector<float> same;
  for (int i = 0; i < 4; ++i) same.insert(same.end(), row.begin(), row.end());
  out.require(dispersive_loss(Tensor::from_data({4, 6}, same), 1.0f).item() == 0.0f, "dispersive on identical rows");
  float worst = -1e30f;
  for (int i = 0; i < 200; ++i) {
    const Tensor z = Tensor::randn({static_cast<std::size_t>(rng.uniform_int(1, 8)), 5}, rng,
                                   static_cast<float>(rng.uniform_double() * 3.0));
    worst = std::max(worst, dispersive_loss(z, 0.1f + static_cast<float>(rng.uniform_double())).item());
  }
  out.require(worst <= 0.0f, "dispersive <= 0");

  std::size_t exact = 0, total = 0;
  for (Variant v : kAll) {
    FlowTrainer tr(small_dims(), config_for(v, 0.3f, 0.7f), 52);
    for (std::uint64_t s = 0; s < 10; ++s) {
      const auto pb = oracle::random_batch(tr, 5, rng, s);
      const auto r = tr.compute_loss(pb).report;
      const float expect = (r.l2 + r.alpha * r.kl) + r.beta * r.dispersive;
      exact += r.total == expect;
      ++total;
    }
  }
  out.require(exact == total, "total identity " + std::to_string(exact) + "/" + std::to_string(total));
  out.note("max dispersive " + fmt("%.3g", worst) + ", total identity " + std::to_string(exact) + "/" +
           std::to_string(total));
  return out;
}

// ---------------------------------------------------------------- 5

Outcome reductions() {
  Outcome out;
  Rng rng(61);
  const ModelDims d = small_dims();
  const Tensor x = Tensor::randn({6, d.sample_len, d.token_dim}, rng);
  const Tensor c = Tensor::randn({6, d.cond_len, d.cond_dim}, rng);

  // r = t, through the trainer.
  std::size_t target_ok = 0, target_total = 0;
  for (Variant v : {Variant::kFM, Variant::kRFM}) {
    FlowTrainer tr(d, config_for(v), 62);
    for (std::uint64_t s = 0; s < 10; ++s) {
      const auto pb = tr.prepare(x, c, s);
      target_ok += same_bits(tr.compute_loss(pb).target, pb.flow.v.data());
      ++target_total;
    }
  }
  // Mixed batch: r = t rows only.
  {
    FlowTrainer tr(d, config_for(Variant::kMF), 63);
    auto pb = tr.prepare(x, c, 0);
    pb.flow.r[1] = pb.flow.t[1];
    pb.flow.r[4] = pb.flow.t[4];
    const auto target = tr.compute_loss(pb).target;
    const std::size_t per = d.sample_len * d.token_dim;
    for (std::size_t b : {1u, 4u}) {
      target_ok += same_bits(std::span(target).subspan(b * per, per), pb.flow.v.data().subspan(b * per, per));
      ++target_total;
    }
  }
  out.require(target_ok == target_total, "target == v when r = t");

  ModelDims no_h = d;
  no_h.latent_tokens = 0;
  FlowTrainer mf(no_h, config_for(Variant::kMF), 64);
  TrainConfig vcfg = config_for(Variant::kVMF);
  vcfg.alpha = 0.0f;
  FlowTrainer vmf(no_h, vcfg, 64);
  bool equal = true;
  for (int s = 0; s < 5; ++s) {
    const auto a = mf.step(x, c), b = vmf.step(x, c);
    equal = equal && a.total == b.total && a.l2 == b.l2;
  }
  out.require(equal, "MF == VMF(alpha 0, no h)");

  bool beta_only = true;
  for (auto [plain, disp] : {std::pair{Variant::kMF, Variant::kMFD}, std::pair{Variant::kVMF, Variant::kVMFD}}) {
    const TrainConfig cp = config_for(plain), cd = config_for(disp);
    FlowTrainer a(d, cp, 65), b(d, cd, 65);
    for (std::uint64_t s = 0; s < 5; ++s) {
      const auto ra = a.compute_loss(a.prepare(x, c, s)).report;
      const auto rb = b.compute_loss(b.prepare(x, c, s)).report;
      beta_only = beta_only && ra.l2 == rb.l2 && ra.kl == rb.kl && ra.dispersive == rb.dispersive &&
                  rb.total == (rb.l2 + rb.alpha * rb.kl) + cd.beta * rb.dispersive &&
                  ra.total == rb.l2 + rb.alpha * rb.kl;
    }
  }
  out.require(beta_only, "dispersive variants differ only by beta");
  out.note(std::to_string(target_ok) + "/" + std::to_string(target_total) + " bit-exact targets");
  return out;
}

// ---------------------------------------------------------------- 6

struct StubField : VelocityField {
  float cond_value = 0.3f, uncond_value = -0.8f;
  std::size_t calls = 0;
  Tensor velocity(const Tensor& cond, const Tensor& z, float, float) override {
    ++calls;
    return Tensor::full(z.shape(), cond.defined() ? cond_value : uncond_value);
  }
};

Outcome sampler_algebra() {
  Outcome out;
  Rng rng(71);
  const ModelDims d = small_dims();
  Rng init(72);
  const CatModel model(d, init);
  const Tensor cond = Tensor::randn({5, d.cond_len, d.cond_dim}, rng);
  const Shape shape{5, d.sample_len, d.token_dim};

  for (float w : {1.0f, 1.5f, 0.0f}) {
    CatVelocityField f1(model, true), f2(model, true);
    const auto a = sample_one_nfe(f1, cond, shape, Rng(73), w);
    const auto b = sample_multi_step(f2, cond, shape, Rng(73), 1, w);
    out.require(same_bits(a.x.data(), b.x.data()), "K = 1 bit-exact at w " + fmt("%.1f", w));
  }

  bool telescope = true, counts = true, affine = true;
  for (std::size_t k : {1u, 3u, 5u}) {
    StubField f;
    const auto res = sample_multi_step(f, cond, shape, Rng(74), k, 1.0f);
    for (std::size_t i = 0; i < res.x.numel(); ++i)
      telescope = telescope && std::abs(res.x.data()[i] - (res.eps.data()[i] - 0.3f)) <= 1e-6f;
    counts = counts && f.calls == k && res.evaluations == k;
    for (float w : {0.0f, 2.0f}) {
      StubField g;
      const auto r2 = sample_multi_step(g, cond, shape, Rng(74), k, w);
      const float u = w * 0.3f + (1.0f - w) * -0.8f;
      for (std::size_t i = 0; i < r2.x.numel(); ++i)
        affine = affine && std::abs(r2.x.data()[i] - (r2.eps.data()[i] - u)) <= 1e-5f;
      counts = counts && g.calls == 2 * k;
    }
  }
  out.require(telescope, "constant field gives eps - u0");
  out.require(counts, "evaluation counts");
  out.require(affine, "w in {0, 2} matches the affine formula");

  // w = 1 is the conditional pass alone on the trained-model field too.
  bool pure = true;
  for (std::size_t k : {1u, 4u}) {
    CatVelocityField f(model, true);
    const auto res = sample_multi_step(f, cond, shape, Rng(75), k, 1.0f);
    pure = pure && f.evaluations() == k;
    // Replay with the conditional velocity alone.
    CatVelocityField g(model, true);
    g.begin(5, Rng(75));
    Tensor xk = res.eps;
    for (std::size_t s = 0; s < k; ++s) {
      const float t = 1.0f - static_cast<float>(s) / static_cast<float>(k);
      const float r = s + 1 == k ? 0.0f : 1.0f - static_cast<float>(s + 1) / static_cast<float>(k);
      xk = ops::sub(xk, ops::scale(g.velocity(cond, xk, r, t), t - r));
    }
    pure = pure && same_bits(xk.data(), res.x.data());
  }
  out.require(pure, "w = 1 equals the conditional pass with K evaluations");
  out.note("K in {1, 3, 5}, w in {0, 1, 1.5, 2}");
  return out;
}

// ---------------------------------------------------------------- 7

ModelDims gmm_dims() {
  ModelDims d;
  d.token_dim = 2;
  d.sample_len = 1;
  d.cond_dim = 8;
  d.cond_len = 1;
  d.latent_dim = 4;
  d.latent_tokens = 1;
  d.width = 32;
  d.heads = 2;
  d.blocks = 2;
  d.mlp_ratio = 2;
  d.time_freqs = 8;
  d.disp_layer = 1;
  d.phi_hidden = 64;
  return d;
}

TrainConfig experiment_config(Variant v) {
  TrainConfig tc = config_for(v, 1.0f, 0.0f);
  tc.beta = 0.0f;
  tc.adaptive_l2 = true;
  tc.adam.lr = 1e-3f;
  return tc;
}

void train_random_batches(FlowTrainer& tr, const Dataset& data, std::size_t steps, std::size_t batch,
                          std::uint64_t seed) {
  Rng rng = Rng(seed).split("batches");
  std::vector<std::size_t> idx(batch);
  for (std::size_t s = 0; s < steps; ++s) {
    for (auto& i : idx) i = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(data.size()) - 1));
    tr.step(data.gather_x(idx), data.gather_c(idx));
  }
}

Outcome multimodality() {
  Outcome out;
  const GmmSpec spec = ring_gmm_spec(8, 5.0f, 0.1f, 500, true, 11);
  const Dataset data = make_gmm_dataset(spec);
  std::vector<std::vector<float>> means;
  for (const auto& m : spec.modes) means.push_back(m.mean);
  const double radius = 3.0 * spec.modes[0].scale;
  const std::size_t steps = 15000, n = 1000, min_count = 5;

  int good = 0;
  std::string per_seed;
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    double cov[2] = {0, 0};
    for (int k = 0; k < 2; ++k) {
      const Variant v = k == 0 ? Variant::kVMF : Variant::kMF;
      TrainConfig tc = experiment_config(v);
      tc.cond_dropout = 0.0f;
      const auto t0 = Clock::now();
      FlowTrainer tr(gmm_dims(), tc, seed);
      train_random_batches(tr, data, steps, 64, seed);
      const double secs = seconds_since(t0);
      out.require(secs < 900.0, to_string(v) + " run under 15 min");
      std::vector<float> c;
      for (std::size_t i = 0; i < n; ++i) c.insert(c.end(), data.c[0].begin(), data.c[0].end());
      CatVelocityField field(tr.theta(), tr.variational());
      const auto res = sample_one_nfe(field, Tensor::from_data({n, 1, 8}, c), {n, 1, 2}, Rng(seed).split("eval"), 1.0f);
      std::vector<std::vector<float>> xs(n);
      for (std::size_t i = 0; i < n; ++i) xs[i] = {res.x.data()[2 * i], res.x.data()[2 * i + 1]};
      cov[k] = mode_coverage(xs, means, radius, min_count);
    }
    const bool ok = cov[0] >= 7.0 / 8.0 - 1e-12 && cov[0] >= cov[1];
    good += ok;
    per_seed += "seed " + std::to_string(seed) + ": VMF " + fmt("%.3f", cov[0]) + " MF " + fmt("%.3f", cov[1]) +
                (ok ? " ok" : " miss") + "; ";
  }
  out.require(good >= 2, "coverage on >= 2 of 3 seeds");
  out.note(per_seed + std::to_string(steps) + " steps, radius 3*scale, >= " + std::to_string(min_count) +
           " samples per mode");
  return out;
}

// ---------------------------------------------------------------- 8

struct BruteConditional {
  double similarity = 0, novelty = 0, diversity = 0, validity = 0;
};

double brute_cos(const std::vector<float>& a, const std::vector<float>& b) {
  long double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += static_cast<long double>(a[i]) * b[i];
    aa += static_cast<long double>(a[i]) * a[i];
    bb += static_cast<long double>(b[i]) * b[i];
  }
  if (aa == 0 && bb == 0) return 1.0;
  if (aa == 0 || bb == 0) return 0.0;
  return std::clamp(static_cast<double>(ab / std::sqrt(aa * bb)), 0.0, 1.0);
}

BruteConditional brute_conditional(const std::vector<std::vector<float>>& g, const std::vector<std::vector<float>>& r,
                                   const std::vector<std::uint8_t>& valid) {
  BruteConditional b;
  const double n = static_cast<double>(g.size());
  double pair_sum = 0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double f = brute_cos(g[i], r[i]);
    b.similarity += f >= 0.5;
    b.novelty += f < 0.8;
    b.validity += valid[i] != 0;
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (i == j || !valid[i] || !valid[j]) continue;
      pair_sum += 1.0 - brute_cos(g[i], g[j]);
      ++pairs;
    }
  }
  b.similarity *= 100.0 / n;
  b.novelty *= 100.0 / n;
  b.validity *= 100.0 / n;
  b.diversity = pairs ? 100.0 * pair_sum / static_cast<double>(pairs) : 0.0;
  return b;
}

Outcome toy_pipeline() {
  Outcome out;
  const ToySequenceSpec spec;
  const ToyCodec codec(spec);
  const Dataset train = make_toy_dataset(spec, 2000, 1);
  const Dataset test = make_toy_dataset(spec, 500, 2);
  ModelDims d;
  d.token_dim = spec.dim;
  d.sample_len = spec.length;
  d.cond_dim = spec.vocab;
  d.cond_len = 1;
  d.latent_dim = 8;
  d.latent_tokens = 1;
  d.width = 32;
  d.heads = 2;
  d.blocks = 2;
  d.mlp_ratio = 2;
  d.time_freqs = 8;
  d.disp_layer = 1;
  d.phi_hidden = 64;
  FlowTrainer tr(d, experiment_config(Variant::kVMF), 0);
  train_random_batches(tr, train, 3000, 64, 0);

  std::vector<std::size_t> all(test.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  CatVelocityField field(tr.theta(), true);
  const auto res = sample_one_nfe(field, test.gather_c(all), {all.size(), d.sample_len, d.token_dim}, Rng(7), 1.0f);
  std::vector<std::vector<float>> gen, ref;
  std::vector<std::uint8_t> valid;
  const std::size_t width = d.sample_len * d.token_dim;
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto latent = res.x.data().subspan(i * width, width);
    const bool finite = std::all_of(latent.begin(), latent.end(), [](float v) { return std::isfinite(v); });
    const auto tokens = codec.decode(latent);
    gen.push_back(token_histogram(tokens, spec.vocab));
    ref.push_back(test.c[i]);
    valid.push_back(finite && tokens.size() == spec.length);
  }
  const auto rep = conditional_metrics(gen, ref, valid, cosine_similarity, "cosine");
  out.require(rep.get("validity") == 100.0, "validity 100%");
  out.require(rep.get("similarity") >= 60.0, "similarity >= 60%");

  // Formula check on the first 20 samples.
  const std::vector<std::vector<float>> g20(gen.begin(), gen.begin() + 20), r20(ref.begin(), ref.begin() + 20);
  const std::vector<std::uint8_t> v20(valid.begin(), valid.begin() + 20);
  const auto sub = conditional_metrics(g20, r20, v20, cosine_similarity, "cosine");
  const auto want = brute_conditional(g20, r20, v20);
  const bool formulas = std::abs(sub.get("similarity") - want.similarity) < 1e-9 &&
                        std::abs(sub.get("novelty") - want.novelty) < 1e-9 &&
                        std::abs(sub.get("diversity") - want.diversity) < 1e-6 &&
                        std::abs(sub.get("validity") - want.validity) < 1e-9;
  out.require(formulas, "metric formulas match the brute-force oracle");
  out.note("similarity " + fmt("%.1f%%", rep.get("similarity")) + ", novelty " + fmt("%.1f%%", rep.get("novelty")) +
           ", diversity " + fmt("%.1f%%", rep.get("diversity")) + ", validity " + fmt("%.1f%%", rep.get("validity")) +
           " over 500 held-out conditions");
  return out;
}

// ---------------------------------------------------------------- 9

Outcome granger_calibration() {
  Outcome out;
  const auto t0 = Clock::now();
  std::size_t detected = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    Rng rng = Rng(91).split(trial);
    std::vector<double> x(500), y(500, 0.0);
    for (auto& v : x) v = rng.normal();
    for (std::size_t t = 1; t < 500; ++t) y[t] = 0.9 * x[t - 1] + 0.1 * rng.normal();
    detected += granger_test(x, y, 1).p_value < 1e-3;
  }
  std::size_t rejected = 0;
  const std::size_t trials = 1000;
  for (std::uint64_t trial = 0; trial < trials; ++trial) {
    Rng rng = Rng(92).split(trial);
    std::vector<double> x(200), y(200);
    for (auto& v : x) v = rng.normal();
    for (auto& v : y) v = rng.normal();
    rejected += granger_test(x, y, 2).p_value < 0.05;
  }
  const double rate = static_cast<double>(rejected) / trials;
  const double secs = seconds_since(t0);
  out.require(detected >= 95, "power >= 0.95");
  out.require(rate >= 0.03 && rate <= 0.07, "size within 5% +- 2%");
  out.require(secs < 60.0, "runtime < 60 s");
  out.note("power " + std::to_string(detected) + "/100, null rejection " + fmt("%.3f", rate) + ", " +
           fmt("%.2f s", secs));
  return out;
}

// ---------------------------------------------------------------- 10

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome reproducibility() {
  Outcome out;
  const fs::path dir = fs::temp_directory_path() / "vmflow_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);

  // Checkpoint round trip after some training.
  FlowTrainer tr(small_dims(), config_for(Variant::kVMFD), 101);
  Rng rng(102);
  for (int s = 0; s < 3; ++s) {
    const auto pb = oracle::random_batch(tr, 4, rng, s);
    tr.train_step(pb);
  }
  const auto tensors = tr.checkpoint_tensors();
  save_checkpoint(dir / "a.ckpt", tensors);
  const auto back = load_checkpoint(dir / "a.ckpt");
  out.require(encode_checkpoint(back) == encode_checkpoint(tensors), "checkpoint bytes");
  bool values = back.size() == tensors.size();
  for (std::size_t i = 0; values && i < tensors.size(); ++i)
    values = back[i].name == tensors[i].name && same_bits(back[i].tensor.data(), tensors[i].tensor.data());
  out.require(values, "checkpoint values bit-identical");
  FlowTrainer again(small_dims(), config_for(Variant::kVMFD), 999);
  again.load_checkpoint_tensors(back, true);
  bool reload = true;
  for (std::size_t i = 0; i < tr.params().size(); ++i)
    reload = reload && same_bits(tr.params().entries()[i].tensor.data(), again.params().entries()[i].tensor.data());
  out.require(reload && again.steps_taken() == 3, "reloaded trainer matches");

#ifdef VMFLOW_CLI_PATH
  auto run = [&](const std::string& args) {
    const std::string cmd = "cd '" + dir.string() + "' && '" VMFLOW_CLI_PATH "' " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  int rc = run("gen-data --kind toy --out data/toy.jsonl --count 64 --seed 5");
  const std::string common =
      " --dataset data/toy.jsonl --set width=16 --set heads=2 --set blocks=2 --set disp_layer=1 --set mlp_ratio=2 "
      "--set time_freqs=4 --set latent_dim=4 --set phi_hidden=16 --set batch_size=16 --set steps=20 --set seed=3";
  rc |= run("train --out runs/one" + common);
  rc |= run("train --out runs/two" + common);
  rc |= run("sample --run runs/one --num 50 --nfe 2");
  rc |= run("sample --run runs/two --num 50 --nfe 2");
  out.require(rc == 0, "CLI runs succeed");
  const std::string a = slurp(dir / "runs/one/samples.jsonl"), b = slurp(dir / "runs/two/samples.jsonl");
  out.require(!a.empty() && a == b, "samples.jsonl byte-identical");
  out.require(slurp(dir / "runs/one/checkpoints/final.ckpt") == slurp(dir / "runs/two/checkpoints/final.ckpt"),
              "checkpoints byte-identical");
  out.note("samples.jsonl " + std::to_string(a.size()) + " bytes identical across runs");
#else
  out.require(false, "CLI not built");
#endif
  fs::remove_all(dir);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "mask suite", mask_suite},
      {2, "JVP correctness", jvp_check},
      {3, "gradient correctness", grad_check},
      {4, "loss identities", loss_identities},
      {5, "special-case reductions", reductions},
      {6, "sampler algebra", sampler_algebra},
      {7, "multimodality (8-mode ring)", multimodality},
      {8, "toy conditional pipeline", toy_pipeline},
      {9, "Granger calibration", granger_calibration},
      {10, "reproducibility and persistence", reproducibility},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = seconds_since(t0);
    failed += !o.pass;
    std::printf("[%s] %2d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
