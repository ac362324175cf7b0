#include "vmflow/var_encoder.hpp"

#include <cmath>
#include <string>

#include "vmflow/error.hpp"
#include "vmflow/ops.hpp"
#include "vmflow/rng.hpp"

namespace vmflow {

using namespace ops;

namespace {
void require_finite(const Tensor& t, const char* what) {
  for (float v : t.data()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFinite, std::string("phi: non-finite value in ") + what);
  }
}
}  // namespace

VarEncoder::VarEncoder(const ModelDims& dims, Rng& init_rng) : dims_(dims) {
  dims_.validate();
  Rng rng = init_rng.split("phi");
  const std::size_t in = input_width();
  const std::size_t hid = dims_.phi_hidden;
  const std::size_t lat = std::max<std::size_t>(dims_.latent_dim, 1);
  params_.add_uniform("phi/l1/w", {in, hid}, in, rng);
  params_.add_constant("phi/l1/b", {hid}, 0.0f);
  params_.add_uniform("phi/l2/w", {hid, hid}, hid, rng);
  params_.add_constant("phi/l2/b", {hid}, 0.0f);
  params_.add_uniform("phi/l3/w", {hid, 2 * lat}, hid, rng);
  params_.add_constant("phi/l3/b", {2 * lat}, 0.0f);
}

std::size_t VarEncoder::input_width() const {
  return dims_.cond_dim + 3 * dims_.sample_len * dims_.token_dim + 2;
}

VariationalOutput VarEncoder::forward(const Tensor& c, const Tensor& eps, const Tensor& x, const Tensor& z,
                                      const Tensor& r, const Tensor& t, Rng& rng) const {
  const std::size_t batch = z.defined() && z.rank() > 0 ? z.dim(0) : 0;
  return forward_with_noise(c, eps, x, z, r, t, Tensor::randn({batch, dims_.latent_dim}, rng));
}

VariationalOutput VarEncoder::forward_with_noise(const Tensor& c, const Tensor& eps, const Tensor& x,
                                                 const Tensor& z, const Tensor& r, const Tensor& t,
                                                 const Tensor& noise) const {
  const Shape token_shape{z.dim(0), dims_.sample_len, dims_.token_dim};
  const std::size_t batch = token_shape[0];
  if (eps.shape() != token_shape || x.shape() != token_shape || z.shape() != token_shape) {
    throw Error(ErrorCode::kShapeMismatch, "phi: eps/x/z must be " + shape_str(token_shape));
  }
  if (c.shape() != Shape{batch, dims_.cond_len, dims_.cond_dim}) {
    throw Error(ErrorCode::kShapeMismatch, "phi: condition has shape " + shape_str(c.shape()));
  }
  if (r.shape() != Shape{batch} || t.shape() != Shape{batch}) {
    throw Error(ErrorCode::kShapeMismatch, "phi: r and t must be [" + std::to_string(batch) + "]");
  }
  if (noise.shape() != Shape{batch, dims_.latent_dim}) {
    throw Error(ErrorCode::kShapeMismatch, "phi: reparameterization noise has shape " + shape_str(noise.shape()));
  }
  require_finite(c, "c");
  require_finite(eps, "eps");
  require_finite(x, "x");
  require_finite(z, "z");
  require_finite(r, "r");
  require_finite(t, "t");
  for (float v : t.data())
    if (v < 0.0f || v > 1.0f) throw Error(ErrorCode::kInvalidArgument, "phi: t outside [0, 1]");
  for (float v : r.data())
    if (v < 0.0f || v > 1.0f) throw Error(ErrorCode::kInvalidArgument, "phi: r outside [0, 1]");

  const std::size_t flat = dims_.sample_len * dims_.token_dim;
  const Tensor features = concat({mean_axis(c, 1), reshape(eps, {batch, flat}), reshape(x, {batch, flat}),
                                  reshape(z, {batch, flat}), reshape(t, {batch, 1}), reshape(r, {batch, 1})},
                                 1);
  const Tensor h1 = silu(add(matmul(features, params_.get("phi/l1/w")), params_.get("phi/l1/b")));
  const Tensor h2 = silu(add(matmul(h1, params_.get("phi/l2/w")), params_.get("phi/l2/b")));
  const Tensor stats = add(matmul(h2, params_.get("phi/l3/w")), params_.get("phi/l3/b"));

  VariationalOutput out;
  out.mu = slice(stats, 1, 0, dims_.latent_dim);
  out.log_var = clamp(slice(stats, 1, dims_.latent_dim, dims_.latent_dim), kLogVarMin, kLogVarMax);
  out.noise = noise;
  out.h = add(out.mu, mul(ops::exp(scale(out.log_var, 0.5f)), noise));
  return out;
}

}  // namespace vmflow
