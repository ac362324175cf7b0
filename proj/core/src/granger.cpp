#include "vmflow/granger.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <limits>

#include "vmflow/error.hpp"

namespace vmflow {
namespace {

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_cf(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-15;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) return h;
  }
  throw Error(ErrorCode::kDegenerate, "incomplete beta: continued fraction did not converge");
}

struct Fit {
  double rss = 0.0;
  bool full_rank = true;
};

Fit least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  Eigen::MatrixXd gram = X.transpose() * X;
  Fit fit;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
  lu.setThreshold(1e-10);
  fit.full_rank = lu.rank() == gram.cols();
  const double ridge = 1e-8 * std::max(gram.diagonal().mean(), 1e-300);
  gram.diagonal().array() += ridge;
  const Eigen::VectorXd beta = gram.ldlt().solve(X.transpose() * y);
  fit.rss = (y - X * beta).squaredNorm();
  return fit;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw Error(ErrorCode::kInvalidArgument, "incomplete beta: a and b must be > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "incomplete beta: x outside [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double front =
      std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double f_survival(double f, double d1, double d2) {
  if (!(d1 > 0.0) || !(d2 > 0.0)) throw Error(ErrorCode::kInvalidArgument, "F survival: dof must be > 0");
  if (std::isnan(f)) throw Error(ErrorCode::kNonFinite, "F survival: NaN statistic");
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  return std::clamp(regularized_incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f)), 0.0, 1.0);
}

GrangerResult granger_test(std::span<const double> x, std::span<const double> y, std::size_t max_lag) {
  if (max_lag == 0) throw Error(ErrorCode::kInvalidArgument, "granger: max_lag must be >= 1");
  if (x.size() != y.size()) throw Error(ErrorCode::kInvalidArgument, "granger: series lengths differ");
  const std::size_t len = y.size();
  if (len < 3 * max_lag + 5) {
    throw Error(ErrorCode::kInvalidArgument, "granger: need at least " + std::to_string(3 * max_lag + 5) +
                                                 " observations, got " + std::to_string(len));
  }
  for (std::size_t i = 0; i < len; ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw Error(ErrorCode::kNonFinite, "granger: non-finite value");
  }
  // Intercept plus standardized inputs: same F as the raw series, better
  // conditioned when a series sits far from zero.
  auto standardize = [](std::span<const double> s) {
    double m = 0.0;
    for (double v : s) m += v;
    m /= static_cast<double>(s.size());
    double ss = 0.0;
    for (double v : s) ss += (v - m) * (v - m);
    const double sd = std::sqrt(ss / static_cast<double>(s.size()));
    std::vector<double> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) out[i] = sd > 0.0 ? (s[i] - m) / sd : 0.0;
    return out;
  };
  const std::vector<double> xs = standardize(x), ys = standardize(y);
  x = xs;
  y = ys;
  const std::size_t n = len - max_lag;
  const auto L = static_cast<Eigen::Index>(max_lag);
  const auto N = static_cast<Eigen::Index>(n);
  Eigen::VectorXd target(N);
  Eigen::MatrixXd restricted(N, 1 + L);
  Eigen::MatrixXd full(N, 1 + 2 * L);
  for (Eigen::Index row = 0; row < N; ++row) {
    const std::size_t tpos = static_cast<std::size_t>(row) + max_lag;
    target(row) = y[tpos];
    restricted(row, 0) = 1.0;
    full(row, 0) = 1.0;
    for (Eigen::Index k = 1; k <= L; ++k) {
      restricted(row, k) = y[tpos - static_cast<std::size_t>(k)];
      full(row, k) = y[tpos - static_cast<std::size_t>(k)];
      full(row, L + k) = x[tpos - static_cast<std::size_t>(k)];
    }
  }
  const double centered = (target.array() - target.mean()).square().sum();
  if (!(centered > 0.0)) throw Error(ErrorCode::kDegenerate, "granger: target series has zero variance");

  const Fit r = least_squares(restricted, target);
  if (!r.full_rank) throw Error(ErrorCode::kDegenerate, "granger: rank-deficient design matrix");
  const Fit u = least_squares(full, target);

  GrangerResult res;
  res.lags = max_lag;
  res.n_observations = n;
  res.df_num = static_cast<double>(max_lag);
  res.df_den = static_cast<double>(n) - 2.0 * static_cast<double>(max_lag) - 1.0;
  res.rss_restricted = r.rss;
  res.rss_unrestricted = std::min(u.rss, r.rss);
  if (res.rss_unrestricted <= 0.0) {
    res.f_statistic = res.rss_restricted > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  } else {
    res.f_statistic = std::max(0.0, ((res.rss_restricted - res.rss_unrestricted) / res.df_num) /
                                        (res.rss_unrestricted / res.df_den));
  }
  res.p_value = f_survival(res.f_statistic, res.df_num, res.df_den);
  return res;
}

std::size_t CausalityHistogram::bin_of(double p) {
  for (std::size_t b = 0; b + 1 < kCausalityBinEdges.size() - 1; ++b) {
    if (p < kCausalityBinEdges[b + 1]) return b;
  }
  return 4;
}

std::string CausalityHistogram::to_json() const {
  nlohmann::ordered_json j;
  j["bins"] = {"[0,0.001)", "[0.001,0.01)", "[0.01,0.05)", "[0.05,0.1)", "[0.1,1]"};
  j["counts"] = counts;
  j["samples"] = samples;
  j["skipped_pairs"] = skipped_pairs;
  j["skipped_samples"] = skipped_samples;
  j["max_lag"] = max_lag;
  std::size_t below = 0;
  for (double p : min_p) below += p < 0.1 ? 1 : 0;
  j["fraction_p_below_0.1"] = min_p.empty() ? 0.0 : static_cast<double>(below) / static_cast<double>(min_p.size());
  return j.dump(2);
}

std::string CausalityHistogram::to_csv() const {
  static const char* labels[] = {"[0,0.001)", "[0.001,0.01)", "[0.01,0.05)", "[0.05,0.1)", "[0.1,1]"};
  std::string out = "bin,count\n";
  for (std::size_t b = 0; b < counts.size(); ++b) out += std::string(labels[b]) + "," + std::to_string(counts[b]) + "\n";
  return out;
}

CausalityHistogram latent_causality_report(const std::vector<std::vector<std::vector<double>>>& latents,
                                           std::size_t max_lag) {
  CausalityHistogram hist;
  hist.max_lag = max_lag;
  for (const auto& sample : latents) {
    if (sample.size() < 2) throw Error(ErrorCode::kInvalidArgument, "causality: need at least 2 groups per sample");
    ++hist.samples;
    double best = 2.0;
    for (std::size_t a = 0; a < sample.size(); ++a) {
      for (std::size_t b = 0; b < sample.size(); ++b) {
        if (a == b) continue;
        try {
          best = std::min(best, granger_test(sample[a], sample[b], max_lag).p_value);
        } catch (const Error&) {
          ++hist.skipped_pairs;
        }
      }
    }
    if (best > 1.0) {
      ++hist.skipped_samples;
      continue;
    }
    hist.min_p.push_back(best);
    ++hist.counts[CausalityHistogram::bin_of(best)];
  }
  return hist;
}

}  // namespace vmflow
