#include "vmflow/flow_train.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <json.hpp>

#include "vmflow/checkpoint.hpp"
#include "vmflow/error.hpp"
#include "vmflow/ops.hpp"

namespace vmflow {

VariantTraits variant_traits(Variant v) {
  switch (v) {
    case Variant::kMF: return {false, false, false};
    case Variant::kVMF: return {true, false, false};
    case Variant::kMFD: return {false, true, false};
    case Variant::kVMFD: return {true, true, false};
    case Variant::kFM: return {false, false, true};
    case Variant::kRFM: return {true, false, true};
  }
  return {};
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kMF: return "MF";
    case Variant::kVMF: return "VMF";
    case Variant::kMFD: return "MFD";
    case Variant::kVMFD: return "VMFD";
    case Variant::kFM: return "FM";
    case Variant::kRFM: return "RFM";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char ch) { return std::toupper(ch); });
  for (Variant v : {Variant::kMF, Variant::kVMF, Variant::kMFD, Variant::kVMFD, Variant::kFM, Variant::kRFM}) {
    if (to_string(v) == upper) return v;
  }
  throw Error(ErrorCode::kUnknownVariant, "unknown variant '" + std::string(name) + "'");
}

FlowBatch make_flow_batch(const Tensor& x, const Tensor& c, const Tensor& eps, std::vector<float> t,
                          std::vector<float> r) {
  if (x.rank() != 3 || eps.shape() != x.shape()) {
    throw Error(ErrorCode::kShapeMismatch, "flow batch: x " + shape_str(x.shape()) + " vs eps " + shape_str(eps.shape()));
  }
  const std::size_t batch = x.dim(0);
  if (t.size() != batch || r.size() != batch || c.rank() != 3 || c.dim(0) != batch) {
    throw Error(ErrorCode::kShapeMismatch, "flow batch: per-example sizes disagree with batch " + std::to_string(batch));
  }
  const std::size_t per = batch == 0 ? 0 : x.numel() / batch;
  std::vector<float> z(x.numel()), v(x.numel());
  const auto xs = x.data();
  const auto es = eps.data();
  for (std::size_t b = 0; b < batch; ++b) {
    if (!(r[b] <= t[b]) || r[b] < 0.0f || t[b] > 1.0f) {
      throw Error(ErrorCode::kInvalidArgument, "flow batch: need 0 <= r <= t <= 1");
    }
    for (std::size_t i = b * per; i < (b + 1) * per; ++i) {
      z[i] = (1.0f - t[b]) * xs[i] + t[b] * es[i];
      v[i] = es[i] - xs[i];
    }
  }
  FlowBatch out;
  out.x = x;
  out.c = c;
  out.eps = eps;
  out.z = Tensor::from_data(x.shape(), std::move(z));
  out.v = Tensor::from_data(x.shape(), std::move(v));
  out.t = std::move(t);
  out.r = std::move(r);
  return out;
}

std::vector<float> mean_flow_target(const FlowBatch& batch, std::span<const float> u_dot) {
  const auto v = batch.v.data();
  if (u_dot.size() != v.size()) {
    throw Error(ErrorCode::kShapeMismatch, "mean_flow_target: u_dot has " + std::to_string(u_dot.size()) +
                                               " entries, v has " + std::to_string(v.size()));
  }
  const std::size_t n = batch.batch();
  const std::size_t per = n == 0 ? 0 : v.size() / n;
  std::vector<float> target(v.size());
  for (std::size_t b = 0; b < n; ++b) {
    const float gap = batch.t[b] - batch.r[b];
    if (gap == 0.0f) {
      std::copy(v.begin() + static_cast<std::ptrdiff_t>(b * per), v.begin() + static_cast<std::ptrdiff_t>((b + 1) * per),
                target.begin() + static_cast<std::ptrdiff_t>(b * per));
      continue;
    }
    for (std::size_t i = b * per; i < (b + 1) * per; ++i) target[i] = v[i] - gap * u_dot[i];
  }
  return target;
}

std::string LossReport::to_json() const {
  nlohmann::json j = {{"l2", l2},       {"kl", kl},   {"dispersive", dispersive}, {"total", total},
                      {"alpha", alpha}, {"beta", beta}, {"tau", tau},             {"t_mean", t_mean},
                      {"r_mean", r_mean}};
  return j.dump();
}

FlowTrainer::FlowTrainer(const ModelDims& dims, const TrainConfig& config, std::uint64_t seed)
    : dims_(dims),
      config_(config),
      rng_(seed),
      init_rng_(rng_.split("init")),
      theta_(dims, init_rng_),
      phi_(dims, init_rng_),
      adam_(config.adam) {
  if (!(config_.tau > 0.0f)) throw Error(ErrorCode::kConfig, "train config: tau must be > 0");
  if (config_.time.p_equal < 0.0f || config_.time.p_equal > 1.0f) {
    throw Error(ErrorCode::kConfig, "train config: p_equal must lie in [0, 1]");
  }
  params_.merge(theta_.params());
  params_.merge(phi_.params());
}

bool FlowTrainer::variational() const {
  return variant_traits(config_.variant).variational && dims_.latent_tokens > 0;
}

PreparedBatch FlowTrainer::prepare(const Tensor& x, const Tensor& c, std::uint64_t step) const {
  const Shape xs{x.rank() == 3 ? x.dim(0) : 0, dims_.sample_len, dims_.token_dim};
  if (x.shape() != xs) {
    throw Error(ErrorCode::kShapeMismatch, "train: x has shape " + shape_str(x.shape()) + ", expected " + shape_str(xs));
  }
  const std::size_t batch = xs[0];
  Rng stream = rng_.split("step").split(step);

  Rng eps_rng = stream.split("eps");
  Tensor eps = Tensor::randn(x.shape(), eps_rng);

  TimeSampling sampling = config_.time;
  if (variant_traits(config_.variant).instantaneous_only) sampling.p_equal = 1.0f;
  Rng time_rng = stream.split("time");
  std::vector<float> t(batch), r(batch);
  for (std::size_t b = 0; b < batch; ++b) std::tie(t[b], r[b]) = sample_time_pair(sampling, time_rng);

  PreparedBatch out;
  out.flow = make_flow_batch(x, c, eps, std::move(t), std::move(r));

  Rng layout_rng = stream.split("layout");
  out.inference_layout = layout_rng.bernoulli(config_.inference_layout_prob);
  out.split = out.inference_layout ? single_group(dims_.sample_len)
                                   : split_with_decay(dims_.sample_len, config_.decay_factor, layout_rng);
  out.mask = build_mask(dims_.sample_len, dims_.cond_len, variational() ? dims_.latent_tokens : 0, out.split);

  Rng drop_rng = stream.split("drop");
  out.drop_condition.resize(batch);
  for (auto& d : out.drop_condition) d = drop_rng.bernoulli(config_.cond_dropout) ? 1 : 0;

  Rng reparam_rng = stream.split("reparam");
  out.reparam_noise = Tensor::randn({batch, dims_.latent_dim}, reparam_rng);
  Rng prior_rng = stream.split("prior");
  out.prior_h = Tensor::randn({batch, dims_.latent_dim}, prior_rng);
  return out;
}

FieldResult FlowTrainer::evaluate_field(const PreparedBatch& batch, const Tensor& z, const Tensor& r,
                                        const Tensor& t) const {
  const FlowBatch& fb = batch.flow;
  const std::size_t n = fb.batch();
  FieldResult out;
  ThetaInputs in;
  in.c = fb.c;
  in.drop_condition = batch.drop_condition;
  in.z = z;
  in.t = t;
  in.r = r;
  if (batch.mask.visible_len > 0) {
    NoGradGuard no_grad;
    in.x_p = ops::slice(fb.x, 1, 0, batch.mask.visible_len);
  }
  if (variational()) {
    out.phi = phi_.forward_with_noise(fb.c, fb.eps, fb.x, z, r, t, batch.reparam_noise);
    const Tensor& h = batch.inference_layout ? batch.prior_h : out.phi->h;
    in.h = ops::reshape(h, {n, dims_.latent_tokens, dims_.latent_dim});
  }
  out.theta = theta_.forward(in, batch.mask);
  return out;
}

LossTerms FlowTrainer::compute_loss(const PreparedBatch& batch, const std::vector<float>* fixed_target) const {
  const FlowBatch& fb = batch.flow;
  const std::size_t n = fb.batch();

  Tensor z = Tensor::from_data(fb.z.shape(), fb.z.to_vector());
  Tensor t = Tensor::from_data({n}, fb.t);
  Tensor r = Tensor::from_data({n}, fb.r);
  if (!fixed_target) {
    z.set_tangent(fb.v.to_vector());
    t.set_tangent(std::vector<float>(n, 1.0f));
  }

  LossTerms terms;
  terms.field = evaluate_field(batch, z, r, t);
  const Tensor& u = terms.field.theta.u;
  terms.target = fixed_target ? *fixed_target : mean_flow_target(fb, u.tangent());
  if (terms.target.size() != u.numel()) {
    throw Error(ErrorCode::kShapeMismatch, "train: target size does not match u");
  }

  const Tensor diff = ops::sub(u, Tensor::from_data(u.shape(), terms.target));
  const Tensor sq = ops::square(diff);
  if (config_.adaptive_l2) {
    const Tensor per_example = ops::mean_axis(ops::reshape(sq, {n, u.numel() / n}), 1);
    std::vector<float> w(n);
    for (std::size_t b = 0; b < n; ++b) {
      w[b] = 1.0f / std::pow(per_example.data()[b] + config_.adaptive_c, config_.adaptive_power);
    }
    terms.l2 = ops::mean(ops::mul(per_example, Tensor::from_data({n}, std::move(w))));
  } else {
    terms.l2 = ops::mean(sq);
  }
  terms.kl = variational() ? kl_loss(terms.field.phi->mu, terms.field.phi->log_var) : Tensor::scalar(0.0f);
  terms.dispersive = dispersive_loss(terms.field.theta.hidden, config_.tau);
  terms.total = ops::add(ops::add(terms.l2, ops::scale(terms.kl, config_.alpha)),
                         ops::scale(terms.dispersive, config_.beta));

  LossReport& rep = terms.report;
  rep.l2 = terms.l2.item();
  rep.kl = terms.kl.item();
  rep.dispersive = terms.dispersive.item();
  rep.total = terms.total.item();
  rep.alpha = config_.alpha;
  rep.beta = config_.beta;
  rep.tau = config_.tau;
  double ts = 0.0, rs = 0.0;
  for (std::size_t b = 0; b < n; ++b) {
    ts += fb.t[b];
    rs += fb.r[b];
  }
  rep.t_mean = n ? static_cast<float>(ts / static_cast<double>(n)) : 0.0f;
  rep.r_mean = n ? static_cast<float>(rs / static_cast<double>(n)) : 0.0f;
  return terms;
}

LossReport FlowTrainer::train_step(const PreparedBatch& batch) {
  LossTerms terms = compute_loss(batch);
  const LossReport& rep = terms.report;
  if (!std::isfinite(rep.total) || !std::isfinite(rep.l2) || !std::isfinite(rep.kl) ||
      !std::isfinite(rep.dispersive)) {
    throw Error(ErrorCode::kNonFinite, "train step " + std::to_string(steps_) + " aborted: " + rep.to_json());
  }
  params_.zero_grad();
  terms.total.backward();
  adam_.step(params_);
  ++steps_;
  return rep;
}

LossReport FlowTrainer::step(const Tensor& x, const Tensor& c) { return train_step(prepare(x, c, steps_)); }

std::vector<NamedTensor> FlowTrainer::checkpoint_tensors() const {
  std::vector<NamedTensor> out;
  for (const auto& e : params_.entries()) out.push_back({e.name, e.tensor.detach()});
  for (auto& s : adam_.state_tensors(params_)) out.push_back(std::move(s));
  out.push_back({"train/step", Tensor::from_data({1}, {static_cast<float>(steps_)})});
  return out;
}

void FlowTrainer::load_checkpoint_tensors(const std::vector<NamedTensor>& tensors, bool with_optimizer) {
  assign_params(params_, tensors);
  if (!with_optimizer) return;
  adam_.load_state(params_, tensors);
  auto it = std::find_if(tensors.begin(), tensors.end(), [](const NamedTensor& t) { return t.name == "train/step"; });
  if (it == tensors.end()) throw Error(ErrorCode::kFormat, "checkpoint: missing train/step");
  steps_ = static_cast<std::uint64_t>(it->tensor.item());
}

}  // namespace vmflow
