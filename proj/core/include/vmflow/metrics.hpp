#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace vmflow {

using SimilarityFn = std::function<double(std::span<const float>, std::span<const float>)>;

// Cosine similarity clamped to [0, 1]. Two zero vectors count as identical;
// one zero vector against a non-zero one gives 0.
double cosine_similarity(std::span<const float> a, std::span<const float> b);

struct MetricReport {
  std::vector<std::pair<std::string, double>> metrics;  // percentages, in report order
  double overall = 0.0;
  std::size_t n_samples = 0;
  std::string similarity;
  std::vector<std::pair<std::string, double>> thresholds;

  double get(const std::string& name) const;
  std::string to_json() const;
};

struct ConditionalThresholds {
  double similar = 0.5;
  double novel = 0.8;
};

// generated[i] is compared against references[i]. valid[i] != 0 marks a
// decodable sample.
MetricReport conditional_metrics(const std::vector<std::vector<float>>& generated,
                                 const std::vector<std::vector<float>>& references,
                                 const std::vector<std::uint8_t>& valid, const SimilarityFn& sim,
                                 const std::string& sim_name, ConditionalThresholds thresholds = {});

// Mean pairwise (1 - f) over the given items, in percent. 0 for fewer than 2.
double diversity(const std::vector<std::vector<float>>& items, const SimilarityFn& sim);

// KL(p || q) in nats after adding `smoothing` to every bin and normalizing.
double histogram_kl(const std::vector<double>& p_counts, const std::vector<double>& q_counts,
                    double smoothing = 1e-6);
// Equal-width bins over the joint range of both samples.
std::pair<std::vector<double>, std::vector<double>> joint_histograms(const std::vector<double>& a,
                                                                     const std::vector<double>& b,
                                                                     std::size_t bins);

// One summary statistic observed on the generated and the training sets.
struct HistogramFeature {
  std::string name;
  std::vector<double> generated;
  std::vector<double> training;
};

// `generated` and `training` are canonical keys of decoded outputs.
MetricReport unconditional_metrics(const std::vector<std::string>& generated, const std::vector<std::string>& training,
                                   const std::vector<HistogramFeature>& features,
                                   const std::vector<std::uint8_t>& valid, std::size_t bins = 10);

// Fraction of modes with at least `min_count` samples within `radius`.
double mode_coverage(const std::vector<std::vector<float>>& samples, const std::vector<std::vector<float>>& means,
                     double radius, std::size_t min_count = 1);

struct TradeoffPoint {
  double threshold = 0.0;
  double similarity = 0.0;
  double novelty = 0.0;
  double diversity = 0.0;
};

// Similarity (f >= thr), novelty (f < thr) and diversity of the samples
// passing the similarity threshold, for each threshold.
std::vector<TradeoffPoint> tradeoff_curve(const std::vector<std::vector<float>>& generated,
                                          const std::vector<std::vector<float>>& references,
                                          const SimilarityFn& sim, const std::vector<double>& thresholds);
std::string tradeoff_csv(const std::vector<TradeoffPoint>& curve);

}  // namespace vmflow
