#include "vmflow/cat_model.hpp"

#include <cmath>
#include <string>

#include "vmflow/error.hpp"
#include "vmflow/ops.hpp"
#include "vmflow/rng.hpp"

namespace vmflow {

using namespace ops;

void ModelDims::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kConfig, "model dims: " + what); };
  if (token_dim == 0 || sample_len == 0 || cond_dim == 0 || cond_len == 0) fail("token/cond sizes must be positive");
  if (latent_tokens > 1) fail("latent_tokens must be 0 or 1");
  if (latent_tokens > 0 && latent_dim == 0) fail("latent_dim must be positive");
  if (width == 0 || heads == 0 || width % heads != 0) fail("width must be a positive multiple of heads");
  if (blocks == 0 || mlp_ratio == 0 || time_freqs < 2) fail("blocks, mlp_ratio must be positive, time_freqs >= 2");
  if (!(max_time_freq >= 1.0f) || !std::isfinite(max_time_freq)) fail("max_time_freq must be finite and >= 1");
  if (disp_layer > blocks) fail("disp_layer exceeds block count");
  if (phi_hidden == 0) fail("phi_hidden must be positive");
}

namespace {
std::string block_name(std::size_t b, const char* name) {
  return "theta/block" + std::to_string(b) + "/" + name;
}

void check_time_range(const Tensor& t, const char* what) {
  for (float v : t.data()) {
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw Error(ErrorCode::kInvalidArgument, std::string("theta: ") + what + " = " + std::to_string(v) +
                                                   " outside [0, 1]");
    }
  }
}
}  // namespace

CatModel::CatModel(const ModelDims& dims, Rng& init_rng) : dims_(dims) {
  dims_.validate();
  const std::size_t w = dims_.width;
  const std::size_t hidden = w * dims_.mlp_ratio;
  Rng rng = init_rng.split("theta");

  params_.add_uniform("theta/cond_proj/w", {dims_.cond_dim, w}, dims_.cond_dim, rng);
  params_.add_constant("theta/cond_proj/b", {w}, 0.0f);
  // Present even without an h segment so theta's parameters do not depend on
  // the variant.
  params_.add_uniform("theta/latent_proj/w", {std::max<std::size_t>(dims_.latent_dim, 1), w},
                      std::max<std::size_t>(dims_.latent_dim, 1), rng);
  params_.add_constant("theta/latent_proj/b", {w}, 0.0f);
  params_.add_uniform("theta/token_proj/w", {dims_.token_dim, w}, dims_.token_dim, rng);
  params_.add_constant("theta/token_proj/b", {w}, 0.0f);
  params_.add(std::string("theta/segment_emb"), Tensor::randn({4, w}, rng, 0.02f, true));
  params_.add(std::string("theta/pos_emb"), Tensor::randn({dims_.sample_len, w}, rng, 0.02f, true));
  params_.add(std::string("theta/c_null"), Tensor::randn({dims_.cond_len, dims_.cond_dim}, rng, 1.0f, true));

  const std::size_t f = dims_.time_freqs;
  params_.add_uniform("theta/time/w1", {4 * f, w}, 4 * f, rng);
  params_.add_constant("theta/time/b1", {w}, 0.0f);
  params_.add_uniform("theta/time/w2", {w, w}, w, rng);
  params_.add_constant("theta/time/b2", {w}, 0.0f);

  for (std::size_t b = 0; b < dims_.blocks; ++b) {
    params_.add_constant(block_name(b, "ln1/g"), {w}, 1.0f);
    params_.add_constant(block_name(b, "ln1/b"), {w}, 0.0f);
    for (const char* proj : {"wq", "wk", "wv", "wo"}) params_.add_uniform(block_name(b, proj), {w, w}, w, rng);
    for (const char* bias : {"bq", "bk", "bv", "bo"}) params_.add_constant(block_name(b, bias), {w}, 0.0f);
    params_.add_constant(block_name(b, "ln2/g"), {w}, 1.0f);
    params_.add_constant(block_name(b, "ln2/b"), {w}, 0.0f);
    params_.add_uniform(block_name(b, "mlp/w1"), {w, hidden}, w, rng);
    params_.add_constant(block_name(b, "mlp/b1"), {hidden}, 0.0f);
    params_.add_uniform(block_name(b, "mlp/w2"), {hidden, w}, hidden, rng);
    params_.add_constant(block_name(b, "mlp/b2"), {w}, 0.0f);
  }
  params_.add_constant("theta/ln_f/g", {w}, 1.0f);
  params_.add_constant("theta/ln_f/b", {w}, 0.0f);
  params_.add_uniform("theta/head/w", {w, dims_.token_dim}, w, rng);
  params_.add_constant("theta/head/b", {dims_.token_dim}, 0.0f);

  // Geometric frequencies from 1 to max_time_freq rad per unit time.
  std::vector<float> fr(f);
  for (std::size_t k = 0; k < f; ++k) {
    fr[k] = static_cast<float>(std::exp(std::log(static_cast<double>(dims_.max_time_freq)) * static_cast<double>(k) / static_cast<double>(f - 1)));
  }
  freqs_ = Tensor::from_data({1, f}, std::move(fr));
}

const Tensor& CatModel::p(const char* name) const { return params_.get(std::string("theta/") + name); }

const Tensor& CatModel::p(std::size_t block, const char* name) const { return params_.get(block_name(block, name)); }

Tensor CatModel::embed_time(const Tensor& t, const Tensor& r) const {
  if (t.rank() != 1 || r.shape() != t.shape()) {
    throw Error(ErrorCode::kShapeMismatch, "embed_time: t and r must both be [B], got " + shape_str(t.shape()) +
                                               " and " + shape_str(r.shape()));
  }
  check_time_range(t, "t");
  check_time_range(r, "r");
  const std::size_t batch = t.dim(0);
  const Tensor tt = reshape(t, {batch, 1});
  const Tensor gap = reshape(sub(t, r), {batch, 1});
  const Tensor at = mul(tt, freqs_);
  const Tensor ag = mul(gap, freqs_);
  const Tensor feats = concat({ops::sin(at), ops::cos(at), ops::sin(ag), ops::cos(ag)}, 1);
  const Tensor hidden = silu(add(matmul(feats, p("time/w1")), p("time/b1")));
  return add(matmul(hidden, p("time/w2")), p("time/b2"));
}

Tensor CatModel::condition_tokens(const ThetaInputs& in, std::size_t batch) const {
  const Tensor& c_null = p("c_null");
  const Shape shape{batch, dims_.cond_len, dims_.cond_dim};
  if (!in.c.defined()) return add(Tensor::zeros(shape), c_null);
  if (in.c.shape() != shape) {
    throw Error(ErrorCode::kShapeMismatch, "theta: condition shape " + shape_str(in.c.shape()) + ", expected " +
                                               shape_str(shape));
  }
  if (in.drop_condition.empty()) return in.c;
  if (in.drop_condition.size() != batch) {
    throw Error(ErrorCode::kShapeMismatch, "theta: drop_condition has " + std::to_string(in.drop_condition.size()) +
                                               " flags for batch " + std::to_string(batch));
  }
  std::vector<float> keep(batch), drop(batch);
  bool any = false;
  for (std::size_t b = 0; b < batch; ++b) {
    drop[b] = in.drop_condition[b] ? 1.0f : 0.0f;
    keep[b] = 1.0f - drop[b];
    any = any || in.drop_condition[b];
  }
  if (!any) return in.c;
  return add(mul(in.c, Tensor::from_data({batch, 1, 1}, keep)),
             mul(Tensor::from_data({batch, 1, 1}, drop), c_null));
}

Tensor CatModel::block(std::size_t b, const Tensor& x, const AttentionMask& mask) const {
  const std::size_t w = dims_.width;
  const std::size_t heads = dims_.heads;
  const std::size_t dh = w / heads;
  const float inv_sqrt = 1.0f / std::sqrt(static_cast<float>(dh));

  const Tensor a = layer_norm(x, p(b, "ln1/g"), p(b, "ln1/b"));
  const Tensor q = add(matmul(a, p(b, "wq")), p(b, "bq"));
  const Tensor k = add(matmul(a, p(b, "wk")), p(b, "bk"));
  const Tensor v = add(matmul(a, p(b, "wv")), p(b, "bv"));
  std::vector<Tensor> head_out;
  head_out.reserve(heads);
  for (std::size_t hh = 0; hh < heads; ++hh) {
    const Tensor qh = slice(q, 2, hh * dh, dh);
    const Tensor kh = slice(k, 2, hh * dh, dh);
    const Tensor vh = slice(v, 2, hh * dh, dh);
    const Tensor weights = masked_softmax(scale(matmul(qh, kh, true), inv_sqrt), mask.blocked);
    head_out.push_back(matmul(weights, vh));
  }
  const Tensor attn = add(matmul(concat(head_out, 2), p(b, "wo")), p(b, "bo"));
  const Tensor x1 = add(x, attn);
  const Tensor m = layer_norm(x1, p(b, "ln2/g"), p(b, "ln2/b"));
  const Tensor ff = add(matmul(silu(add(matmul(m, p(b, "mlp/w1")), p(b, "mlp/b1"))), p(b, "mlp/w2")), p(b, "mlp/b2"));
  return add(x1, ff);
}

ThetaOutput CatModel::forward(const ThetaInputs& in, const AttentionMask& mask) const {
  if (!in.z.defined() || in.z.numel() == 0) throw Error(ErrorCode::kInvalidArgument, "theta: empty z segment");
  if (in.z.rank() != 3 || in.z.dim(2) != dims_.token_dim || in.z.dim(1) > dims_.sample_len) {
    throw Error(ErrorCode::kShapeMismatch, "theta: z has shape " + shape_str(in.z.shape()) + ", expected [B, <=" +
                                               std::to_string(dims_.sample_len) + ", " +
                                               std::to_string(dims_.token_dim) + "]");
  }
  const std::size_t batch = in.z.dim(0);
  const std::size_t ls = in.z.dim(1);
  const bool has_h = in.h.defined() && in.h.numel() > 0;
  const bool has_xp = in.x_p.defined() && in.x_p.numel() > 0;

  SequenceLayout layout;
  layout.cond_len = dims_.cond_len;
  layout.latent_len = has_h ? in.h.dim(1) : 0;
  layout.visible_len = has_xp ? in.x_p.dim(1) : 0;
  layout.sample_len = ls;
  if (mask.cond_len != layout.cond_len || mask.latent_len != layout.latent_len ||
      mask.visible_len != layout.visible_len || mask.sample_len != layout.sample_len) {
    throw Error(ErrorCode::kShapeMismatch,
                "theta: mask layout (c=" + std::to_string(mask.cond_len) + ", h=" + std::to_string(mask.latent_len) +
                    ", x_p=" + std::to_string(mask.visible_len) + ", z=" + std::to_string(mask.sample_len) +
                    ") does not match inputs (c=" + std::to_string(layout.cond_len) + ", h=" +
                    std::to_string(layout.latent_len) + ", x_p=" + std::to_string(layout.visible_len) +
                    ", z=" + std::to_string(layout.sample_len) + ")");
  }
  if (has_h && (in.h.rank() != 3 || in.h.dim(0) != batch || in.h.dim(2) != dims_.latent_dim)) {
    throw Error(ErrorCode::kShapeMismatch, "theta: h has shape " + shape_str(in.h.shape()));
  }
  if (has_xp && (in.x_p.rank() != 3 || in.x_p.dim(0) != batch || in.x_p.dim(2) != dims_.token_dim)) {
    throw Error(ErrorCode::kShapeMismatch, "theta: x_p has shape " + shape_str(in.x_p.shape()));
  }
  if (in.t.shape() != Shape{batch} || in.r.shape() != Shape{batch}) {
    throw Error(ErrorCode::kShapeMismatch, "theta: t and r must be [" + std::to_string(batch) + "]");
  }
  for (std::size_t b = 0; b < batch; ++b) {
    if (in.r.data()[b] > in.t.data()[b]) throw Error(ErrorCode::kInvalidArgument, "theta: r must not exceed t");
  }

  const Tensor& seg = p("segment_emb");
  const Tensor& pos = p("pos_emb");
  std::vector<Tensor> parts;
  parts.push_back(add(add(matmul(condition_tokens(in, batch), p("cond_proj/w")), p("cond_proj/b")), slice(seg, 0, 0, 1)));
  if (has_h) parts.push_back(add(add(matmul(in.h, p("latent_proj/w")), p("latent_proj/b")), slice(seg, 0, 1, 1)));
  if (has_xp) {
    const Tensor e = add(matmul(in.x_p, p("token_proj/w")), p("token_proj/b"));
    parts.push_back(add(add(e, slice(pos, 0, 0, layout.visible_len)), slice(seg, 0, 2, 1)));
  }
  {
    const Tensor e = add(matmul(in.z, p("token_proj/w")), p("token_proj/b"));
    const Tensor temb = reshape(embed_time(in.t, in.r), {batch, 1, dims_.width});
    parts.push_back(add(add(add(e, slice(pos, 0, 0, ls)), slice(seg, 0, 3, 1)), temb));
  }
  Tensor x = concat(parts, 1);

  ThetaOutput out;
  const std::size_t z0 = layout.sample_offset();
  for (std::size_t b = 0; b < dims_.blocks; ++b) {
    if (b == dims_.disp_layer) out.hidden = reshape(slice(x, 1, z0, ls), {batch, ls * dims_.width});
    x = block(b, x, mask);
  }
  if (dims_.disp_layer == dims_.blocks) out.hidden = reshape(slice(x, 1, z0, ls), {batch, ls * dims_.width});
  x = layer_norm(x, p("ln_f/g"), p("ln_f/b"));
  out.u = add(matmul(slice(x, 1, z0, ls), p("head/w")), p("head/b"));
  return out;
}

}  // namespace vmflow
