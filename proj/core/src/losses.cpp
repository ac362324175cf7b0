#include "vmflow/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "graph.hpp"
#include "vmflow/error.hpp"
#include "vmflow/rng.hpp"

namespace vmflow {

using detail::Node;

std::pair<float, float> sample_time_pair(const TimeSampling& sampling, Rng& rng) {
  auto draw = [&]() -> float {
    if (sampling.strategy == TimeStrategy::kUniform) return rng.uniform();
    const double s = 1.0 / (1.0 + std::exp(-(sampling.lognormal_mean + sampling.lognormal_std * rng.normal())));
    return std::clamp(static_cast<float>(s), std::numeric_limits<float>::min(), std::nextafter(1.0f, 0.0f));
  };
  const float a = draw();
  const float b = draw();
  float t = std::max(a, b);
  float r = std::min(a, b);
  if (rng.bernoulli(sampling.p_equal)) r = t;
  return {t, r};
}

Tensor kl_loss(const Tensor& mu, const Tensor& log_var) {
  if (mu.shape() != log_var.shape()) {
    throw Error(ErrorCode::kShapeMismatch,
                "kl_loss: mu " + shape_str(mu.shape()) + " vs log_var " + shape_str(log_var.shape()));
  }
  for (float v : mu.data())
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFinite, "kl_loss: non-finite mu");
  for (float v : log_var.data())
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFinite, "kl_loss: non-finite log_var");
  const std::size_t batch = mu.rank() >= 2 ? mu.dim(0) : 1;
  const double inv_batch = batch == 0 ? 0.0 : 1.0 / static_cast<double>(batch);

  auto out = detail::make_op_node("kl_loss", {}, {mu, log_var});
  const auto m = mu.data();
  const auto lv = log_var.data();
  // expm1 keeps exp(x) - 1 - x >= 0 at tiny x.
  double total = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double x = lv[i];
    total += std::expm1(x) - x + static_cast<double>(m[i]) * m[i];
  }
  out->value[0] = static_cast<float>(0.5 * total * inv_batch);

  if (detail::any_tangent({mu, log_var})) {
    double t = 0.0;
    const auto tm = mu.tangent();
    const auto tl = log_var.tangent();
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (!tm.empty()) t += 2.0 * m[i] * tm[i];
      if (!tl.empty()) t += std::expm1(static_cast<double>(lv[i])) * tl[i];
    }
    out->tangent = {static_cast<float>(0.5 * t * inv_batch)};
  }
  if (out->requires_grad) {
    out->backward = [inv_batch](Node& self) {
      Node& nm = *self.inputs[0];
      Node& nl = *self.inputs[1];
      const double g = self.grad[0] * inv_batch;
      if (nm.requires_grad) {
        auto& gm = nm.grad_buffer();
        for (std::size_t i = 0; i < gm.size(); ++i) gm[i] += static_cast<float>(g * nm.value[i]);
      }
      if (nl.requires_grad) {
        auto& gl = nl.grad_buffer();
        for (std::size_t i = 0; i < gl.size(); ++i)
          gl[i] += static_cast<float>(0.5 * g * std::expm1(static_cast<double>(nl.value[i])));
      }
    };
  }
  return Tensor(std::move(out));
}

Tensor dispersive_loss(const Tensor& reps, float tau) {
  if (!(tau > 0.0f)) throw Error(ErrorCode::kInvalidArgument, "dispersive_loss: tau must be > 0");
  if (reps.rank() != 2 || reps.dim(0) == 0) {
    throw Error(ErrorCode::kShapeMismatch, "dispersive_loss: reps must be [B >= 1, F], got " + shape_str(reps.shape()));
  }
  const std::size_t batch = reps.dim(0);
  const std::size_t feat = reps.dim(1);
  const auto z = reps.data();

  // Softmax weights over all (b1, b2) of -D/tau. The diagonal term is the max
  // (D = 0), so shifting by 0 is already stable.
  std::vector<double> weights(batch * batch);
  double total = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    for (std::size_t j = 0; j < batch; ++j) {
      double d = 0.0;
      for (std::size_t k = 0; k < feat; ++k) {
        const double diff = static_cast<double>(z[i * feat + k]) - z[j * feat + k];
        d += diff * diff;
      }
      const double e = std::exp(-d / tau);
      weights[i * batch + j] = e;
      total += e;
    }
  }
  for (auto& w : weights) w /= total;

  auto out = detail::make_op_node("dispersive_loss", {}, {reps});
  const double b2 = static_cast<double>(batch) * static_cast<double>(batch);
  out->value[0] = static_cast<float>(std::log(total / b2));

  if (reps.has_tangent()) {
    const auto tz = reps.tangent();
    double t = 0.0;
    for (std::size_t i = 0; i < batch; ++i) {
      for (std::size_t j = 0; j < batch; ++j) {
        double dd = 0.0;
        for (std::size_t k = 0; k < feat; ++k) {
          dd += (static_cast<double>(z[i * feat + k]) - z[j * feat + k]) *
                (static_cast<double>(tz[i * feat + k]) - tz[j * feat + k]);
        }
        t += weights[i * batch + j] * (-2.0 / tau) * dd;
      }
    }
    out->tangent = {static_cast<float>(t)};
  }
  if (out->requires_grad) {
    out->backward = [weights = std::move(weights), batch, feat, tau](Node& self) {
      Node& in = *self.inputs[0];
      auto& gz = in.grad_buffer();
      const double g = self.grad[0];
      const auto& zv = in.value;
      for (std::size_t i = 0; i < batch; ++i) {
        for (std::size_t k = 0; k < feat; ++k) {
          double acc = 0.0;
          for (std::size_t j = 0; j < batch; ++j) {
            acc += weights[i * batch + j] * (static_cast<double>(zv[i * feat + k]) - zv[j * feat + k]);
          }
          gz[i * feat + k] += static_cast<float>(g * (-4.0 / tau) * acc);
        }
      }
    };
  }
  return Tensor(std::move(out));
}

}  // namespace vmflow
