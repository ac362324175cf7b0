#pragma once

#include <utility>

#include "vmflow/tensor.hpp"

namespace vmflow {

class Rng;

enum class TimeStrategy { kUniform, kLogNormal };

struct TimeSampling {
  TimeStrategy strategy = TimeStrategy::kUniform;
  float p_equal = 0.5f;  // probability of collapsing to r = t
  float lognormal_mean = -0.4f;
  float lognormal_std = 1.0f;
};

// Draws two times per the strategy, orders them so r <= t, then with
// probability p_equal sets r = t. Returns {t, r}.
std::pair<float, float> sample_time_pair(const TimeSampling& sampling, Rng& rng);

// 0.5 * sum_j (exp(log_var_j) + mu_j^2 - 1 - log_var_j), averaged over the
// leading batch axis ([B, J]; a rank-1 input is one example).
Tensor kl_loss(const Tensor& mu, const Tensor& log_var);

// log( (1/B^2) sum_{b1,b2} exp(-||z_b1 - z_b2||^2 / tau) ) over rows of
// reps [B, F]. Diagonal pairs are included.
Tensor dispersive_loss(const Tensor& reps, float tau);

}  // namespace vmflow
