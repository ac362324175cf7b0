#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

namespace vmflow {

struct GrangerResult {
  double f_statistic = 0.0;
  double p_value = 1.0;
  std::size_t lags = 0;
  std::size_t n_observations = 0;  // rows of the regression
  double rss_restricted = 0.0;
  double rss_unrestricted = 0.0;
  double df_num = 0.0;
  double df_den = 0.0;
};

// I_x(a, b) by continued fraction.
double regularized_incomplete_beta(double a, double b, double x);
// P(F > f) for F ~ F(d1, d2).
double f_survival(double f, double d1, double d2);

// Does x Granger-cause y? Restricted model: y on an intercept and its own
// `max_lag` lags; unrestricted adds x's lags. Throws kDegenerate on a
// rank-deficient restricted design (constant y included) and
// kInvalidArgument on short or non-finite series.
GrangerResult granger_test(std::span<const double> x, std::span<const double> y, std::size_t max_lag);

inline constexpr std::array<double, 6> kCausalityBinEdges = {0.0, 0.001, 0.01, 0.05, 0.1, 1.0};

struct CausalityHistogram {
  std::array<std::size_t, 5> counts{};
  std::vector<double> min_p;  // per counted sample
  std::size_t samples = 0;
  std::size_t skipped_pairs = 0;
  std::size_t skipped_samples = 0;  // every pair failed
  std::size_t max_lag = 0;

  static std::size_t bin_of(double p);
  std::string to_json() const;
  std::string to_csv() const;
};

// latents[s][g] is the latent vector of group g in sample s. Each group's
// series is its vector read along the latent axis; every ordered pair of
// groups is tested and the sample's minimum p-value is binned.
CausalityHistogram latent_causality_report(const std::vector<std::vector<std::vector<double>>>& latents,
                                           std::size_t max_lag);

}  // namespace vmflow
