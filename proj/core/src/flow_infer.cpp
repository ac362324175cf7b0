#include "vmflow/flow_infer.hpp"

#include <cmath>

#include "vmflow/error.hpp"
#include "vmflow/ops.hpp"

namespace vmflow {
namespace {

void check_finite(const Tensor& u) {
  for (float v : u.data()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFinite, "sampler: model produced a non-finite velocity");
  }
}

Tensor checked(VelocityField& field, const Tensor& cond, const Tensor& z, float r, float t, std::size_t& count) {
  Tensor u = field.velocity(cond, z, r, t);
  ++count;
  if (u.shape() != z.shape()) {
    throw Error(ErrorCode::kShapeMismatch, "sampler: velocity " + shape_str(u.shape()) + " vs state " +
                                               shape_str(z.shape()));
  }
  check_finite(u);
  return u;
}

Tensor guided(VelocityField& field, const Tensor& cond, const Tensor& z, float r, float t, float w,
              std::size_t& count) {
  if (!cond.defined() || w == 1.0f) return checked(field, cond, z, r, t, count);
  const Tensor u_cond = checked(field, cond, z, r, t, count);
  const Tensor u_uncond = checked(field, Tensor(), z, r, t, count);
  return guide(u_cond, u_uncond, w);
}

}  // namespace

Tensor guide(const Tensor& u_cond, const Tensor& u_uncond, float w) {
  if (u_cond.shape() != u_uncond.shape()) {
    throw Error(ErrorCode::kShapeMismatch, "guide: " + shape_str(u_cond.shape()) + " vs " +
                                               shape_str(u_uncond.shape()));
  }
  const auto a = u_cond.data();
  const auto b = u_uncond.data();
  std::vector<float> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = w * a[i] + (1.0f - w) * b[i];
  return Tensor::from_data(u_cond.shape(), std::move(out));
}

SampleResult sample_one_nfe(VelocityField& field, const Tensor& cond, const Shape& shape, const Rng& rng, float w) {
  NoGradGuard no_grad;
  Rng eps_rng = rng.split("eps");
  SampleResult res;
  res.eps = Tensor::randn(shape, eps_rng);
  field.begin(shape.empty() ? 0 : shape[0], rng);
  const Tensor u = guided(field, cond, res.eps, 0.0f, 1.0f, w, res.evaluations);
  const auto e = res.eps.data();
  const auto ud = u.data();
  std::vector<float> x(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) x[i] = e[i] - ud[i];
  res.x = Tensor::from_data(shape, std::move(x));
  return res;
}

SampleResult sample_multi_step(VelocityField& field, const Tensor& cond, const Shape& shape, const Rng& rng,
                               std::size_t steps, float w) {
  if (steps == 0) throw Error(ErrorCode::kInvalidArgument, "sampler: need at least one step");
  NoGradGuard no_grad;
  Rng eps_rng = rng.split("eps");
  SampleResult res;
  res.eps = Tensor::randn(shape, eps_rng);
  field.begin(shape.empty() ? 0 : shape[0], rng);
  std::vector<float> x = res.eps.to_vector();
  const float k_total = static_cast<float>(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    const float t = 1.0f - static_cast<float>(k) / k_total;
    const float r = k + 1 == steps ? 0.0f : 1.0f - static_cast<float>(k + 1) / k_total;
    const Tensor z = Tensor::from_data(shape, x);
    const Tensor u = guided(field, cond, z, r, t, w, res.evaluations);
    const float dt = t - r;
    const auto ud = u.data();
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= dt * ud[i];
  }
  res.x = Tensor::from_data(shape, std::move(x));
  return res;
}

SampleResult sample(VelocityField& field, const Tensor& cond, const Shape& shape, const SamplerConfig& config) {
  const Rng rng(config.seed);
  const Tensor c = config.conditional ? cond : Tensor();
  if (config.nfe == 1) return sample_one_nfe(field, c, shape, rng, config.guidance_w);
  return sample_multi_step(field, c, shape, rng, config.nfe, config.guidance_w);
}

CatVelocityField::CatVelocityField(const CatModel& theta, bool variational)
    : theta_(theta), variational_(variational && theta.dims().latent_tokens > 0) {
  const ModelDims& d = theta.dims();
  mask_ = build_mask(d.sample_len, d.cond_len, variational_ ? d.latent_tokens : 0, single_group(d.sample_len));
}

void CatVelocityField::begin(std::size_t batch, const Rng& rng) {
  h_ = Tensor();
  if (!variational_) return;
  const ModelDims& d = theta_.dims();
  Rng prior = rng.split("prior");
  h_ = Tensor::randn({batch, d.latent_tokens, d.latent_dim}, prior);
}

Tensor CatVelocityField::velocity(const Tensor& cond, const Tensor& z, float r, float t) {
  NoGradGuard no_grad;
  const std::size_t batch = z.dim(0);
  if (variational_ && (!h_.defined() || h_.dim(0) != batch)) {
    throw Error(ErrorCode::kInvalidArgument, "sampler: begin() must precede velocity()");
  }
  ThetaInputs in;
  in.c = cond;
  in.h = h_;
  in.z = z;
  in.t = Tensor::full({batch}, t);
  in.r = Tensor::full({batch}, r);
  ++evaluations_;
  return theta_.forward(in, mask_).u.detach();
}

}  // namespace vmflow
