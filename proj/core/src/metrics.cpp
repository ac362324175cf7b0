#include "vmflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <set>

#include "vmflow/error.hpp"

namespace vmflow {
namespace {

double percent(std::size_t count, std::size_t total) {
  return total == 0 ? 0.0 : 100.0 * static_cast<double>(count) / static_cast<double>(total);
}

void finish(MetricReport& rep) {
  double sum = 0.0;
  for (const auto& m : rep.metrics) sum += m.second;
  rep.overall = rep.metrics.empty() ? 0.0 : sum / static_cast<double>(rep.metrics.size());
}

}  // namespace

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::kShapeMismatch, "cosine: length mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) return na == nb ? 1.0 : 0.0;
  return std::clamp(dot / std::sqrt(na * nb), 0.0, 1.0);
}

double MetricReport::get(const std::string& name) const {
  for (const auto& m : metrics) {
    if (m.first == name) return m.second;
  }
  throw Error(ErrorCode::kInvalidArgument, "metric '" + name + "' not in report");
}

std::string MetricReport::to_json() const {
  nlohmann::ordered_json j;
  for (const auto& m : metrics) j["metrics"][m.first] = m.second;
  j["overall"] = overall;
  j["n_samples"] = n_samples;
  j["similarity"] = similarity;
  for (const auto& t : thresholds) j["thresholds"][t.first] = t.second;
  return j.dump(2);
}

double diversity(const std::vector<std::vector<float>>& items, const SimilarityFn& sim) {
  if (items.size() < 2) return 0.0;
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (std::size_t j = i + 1; j < items.size(); ++j) {
      sum += 1.0 - sim(items[i], items[j]);
      ++pairs;
    }
  }
  return 100.0 * sum / static_cast<double>(pairs);
}

MetricReport conditional_metrics(const std::vector<std::vector<float>>& generated,
                                 const std::vector<std::vector<float>>& references,
                                 const std::vector<std::uint8_t>& valid, const SimilarityFn& sim,
                                 const std::string& sim_name, ConditionalThresholds thresholds) {
  const std::size_t n = generated.size();
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "conditional metrics: no generated samples");
  if (references.size() != n || valid.size() != n) {
    throw Error(ErrorCode::kShapeMismatch, "conditional metrics: generated, references and validity differ in size");
  }
  std::size_t similar = 0, novel = 0, n_valid = 0;
  std::vector<std::vector<float>> valid_items;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = sim(generated[i], references[i]);
    if (f >= thresholds.similar) ++similar;
    if (f < thresholds.novel) ++novel;
    if (valid[i]) {
      ++n_valid;
      valid_items.push_back(generated[i]);
    }
  }
  MetricReport rep;
  rep.metrics = {{"similarity", percent(similar, n)},
                 {"novelty", percent(novel, n)},
                 {"diversity", diversity(valid_items, sim)},
                 {"validity", percent(n_valid, n)}};
  rep.n_samples = n;
  rep.similarity = sim_name;
  rep.thresholds = {{"similar", thresholds.similar}, {"novel", thresholds.novel}};
  finish(rep);
  return rep;
}

double histogram_kl(const std::vector<double>& p_counts, const std::vector<double>& q_counts, double smoothing) {
  if (p_counts.size() != q_counts.size() || p_counts.empty()) {
    throw Error(ErrorCode::kShapeMismatch, "histogram_kl: bin counts differ or are empty");
  }
  double ps = 0.0, qs = 0.0;
  for (std::size_t i = 0; i < p_counts.size(); ++i) {
    ps += p_counts[i] + smoothing;
    qs += q_counts[i] + smoothing;
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < p_counts.size(); ++i) {
    const double p = (p_counts[i] + smoothing) / ps;
    const double q = (q_counts[i] + smoothing) / qs;
    kl += p * std::log(p / q);
  }
  return std::max(0.0, kl);
}

std::pair<std::vector<double>, std::vector<double>> joint_histograms(const std::vector<double>& a,
                                                                     const std::vector<double>& b,
                                                                     std::size_t bins) {
  if (bins == 0) throw Error(ErrorCode::kInvalidArgument, "histogram: need at least one bin");
  double lo = INFINITY, hi = -INFINITY;
  for (const auto* v : {&a, &b}) {
    for (double x : *v) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  std::vector<double> ha(bins, 0.0), hb(bins, 0.0);
  auto fill = [&](const std::vector<double>& v, std::vector<double>& h) {
    for (double x : v) {
      std::size_t k = 0;
      if (hi > lo) k = std::min(bins - 1, static_cast<std::size_t>((x - lo) / (hi - lo) * static_cast<double>(bins)));
      h[k] += 1.0;
    }
  };
  fill(a, ha);
  fill(b, hb);
  return {ha, hb};
}

MetricReport unconditional_metrics(const std::vector<std::string>& generated, const std::vector<std::string>& training,
                                   const std::vector<HistogramFeature>& features,
                                   const std::vector<std::uint8_t>& valid, std::size_t bins) {
  if (generated.empty() || training.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "unconditional metrics: empty generated or training set");
  }
  if (valid.size() != generated.size()) throw Error(ErrorCode::kShapeMismatch, "unconditional metrics: validity size");
  const std::set<std::string> distinct(generated.begin(), generated.end());
  const std::set<std::string> train(training.begin(), training.end());
  std::size_t novel = 0;
  for (const auto& g : generated) novel += train.count(g) == 0 ? 1 : 0;
  std::size_t n_valid = 0;
  for (auto v : valid) n_valid += v ? 1 : 0;

  MetricReport rep;
  rep.metrics = {{"uniqueness", percent(distinct.size(), generated.size())},
                 {"novelty", percent(novel, generated.size())}};
  if (!features.empty()) {
    double score = 0.0;
    for (const auto& f : features) {
      if (f.generated.empty() || f.training.empty()) {
        throw Error(ErrorCode::kInvalidArgument, "unconditional metrics: feature '" + f.name + "' is empty");
      }
      const auto [hg, ht] = joint_histograms(f.generated, f.training, bins);
      score += std::exp(-histogram_kl(hg, ht));
    }
    rep.metrics.emplace_back("kl_score", 100.0 * score / static_cast<double>(features.size()));
  }
  rep.metrics.emplace_back("validity", percent(n_valid, generated.size()));
  rep.n_samples = generated.size();
  rep.similarity = "exact-decoded-match";
  rep.thresholds = {{"bins", static_cast<double>(bins)}, {"smoothing", 1e-6}};
  finish(rep);
  return rep;
}

double mode_coverage(const std::vector<std::vector<float>>& samples, const std::vector<std::vector<float>>& means,
                     double radius, std::size_t min_count) {
  if (means.empty()) throw Error(ErrorCode::kInvalidArgument, "mode coverage: no modes");
  if (!(radius > 0.0)) throw Error(ErrorCode::kInvalidArgument, "mode coverage: radius must be > 0");
  std::size_t covered = 0;
  for (const auto& m : means) {
    std::size_t hits = 0;
    for (const auto& s : samples) {
      if (s.size() != m.size()) throw Error(ErrorCode::kShapeMismatch, "mode coverage: dim mismatch");
      double d2 = 0.0;
      for (std::size_t j = 0; j < m.size(); ++j) {
        const double diff = static_cast<double>(s[j]) - m[j];
        d2 += diff * diff;
      }
      if (d2 <= radius * radius) ++hits;
    }
    if (hits >= min_count) ++covered;
  }
  return static_cast<double>(covered) / static_cast<double>(means.size());
}

std::vector<TradeoffPoint> tradeoff_curve(const std::vector<std::vector<float>>& generated,
                                          const std::vector<std::vector<float>>& references,
                                          const SimilarityFn& sim, const std::vector<double>& thresholds) {
  const std::size_t n = generated.size();
  if (n == 0 || references.size() != n) throw Error(ErrorCode::kShapeMismatch, "tradeoff: sizes differ or empty");
  std::vector<double> f(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = sim(generated[i], references[i]);
  std::vector<TradeoffPoint> out;
  for (double thr : thresholds) {
    TradeoffPoint p;
    p.threshold = thr;
    std::vector<std::vector<float>> passing;
    std::size_t below = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (f[i] >= thr) {
        passing.push_back(generated[i]);
      } else {
        ++below;
      }
    }
    p.similarity = percent(passing.size(), n);
    p.novelty = percent(below, n);
    p.diversity = diversity(passing, sim);
    out.push_back(p);
  }
  return out;
}

std::string tradeoff_csv(const std::vector<TradeoffPoint>& curve) {
  std::string out = "threshold,similarity,novelty,diversity\n";
  char buf[128];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof buf, "%.4f,%.4f,%.4f,%.4f\n", p.threshold, p.similarity, p.novelty, p.diversity);
    out += buf;
  }
  return out;
}

}  // namespace vmflow
