#include "vmflow/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "graph.hpp"
#include "vmflow/error.hpp"

namespace vmflow::ops {

using detail::Node;
using NodePtr = std::shared_ptr<Node>;
using RowMajor = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

namespace {

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw Error(ErrorCode::kShapeMismatch,
              std::string(op) + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

// ---------------------------------------------------------------------------
// Broadcasting

struct BroadcastPlan {
  Shape out;
  std::vector<std::size_t> stride_a;
  std::vector<std::size_t> stride_b;
  bool same = false;
};

std::vector<std::size_t> aligned_strides(const Shape& in, std::size_t rank) {
  std::vector<std::size_t> strides(rank, 0);
  std::size_t stride = 1;
  for (std::size_t k = 0; k < in.size(); ++k) {
    const std::size_t src = in.size() - 1 - k;
    const std::size_t dst = rank - 1 - k;
    strides[dst] = in[src] == 1 ? 0 : stride;
    stride *= in[src];
  }
  return strides;
}

BroadcastPlan plan_broadcast(const char* op, const Shape& a, const Shape& b) {
  BroadcastPlan plan;
  if (a == b) {
    plan.out = a;
    plan.same = true;
    return plan;
  }
  const std::size_t rank = std::max(a.size(), b.size());
  plan.out.assign(rank, 1);
  for (std::size_t k = 0; k < rank; ++k) {
    const std::size_t da = k < a.size() ? a[a.size() - 1 - k] : 1;
    const std::size_t db = k < b.size() ? b[b.size() - 1 - k] : 1;
    if (da != db && da != 1 && db != 1) shape_error(op, a, b);
    plan.out[rank - 1 - k] = da == 1 ? db : da;
  }
  plan.stride_a = aligned_strides(a, rank);
  plan.stride_b = aligned_strides(b, rank);
  return plan;
}

template <class F>
void for_each_broadcast(const BroadcastPlan& plan, F&& f) {
  const std::size_t total = shape_numel(plan.out);
  if (total == 0) return;
  if (plan.same) {
    for (std::size_t i = 0; i < total; ++i) f(i, i, i);
    return;
  }
  const std::size_t rank = plan.out.size();
  const std::size_t inner = plan.out[rank - 1];
  const std::size_t sa = plan.stride_a[rank - 1];
  const std::size_t sb = plan.stride_b[rank - 1];
  const std::size_t outer = total / inner;
  std::vector<std::size_t> idx(rank, 0);
  std::size_t oa = 0, ob = 0, io = 0;
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t j = 0; j < inner; ++j) f(io + j, oa + j * sa, ob + j * sb);
    io += inner;
    for (std::size_t d = rank - 1; d-- > 0;) {
      ++idx[d];
      oa += plan.stride_a[d];
      ob += plan.stride_b[d];
      if (idx[d] < plan.out[d]) break;
      oa -= plan.stride_a[d] * plan.out[d];
      ob -= plan.stride_b[d] * plan.out[d];
      idx[d] = 0;
    }
  }
}

// fa / fb return d(out)/d(a) and d(out)/d(b) given (a, b, out).
template <class Fwd, class Da, class Db>
Tensor binary_op(const char* name, const Tensor& a, const Tensor& b, Fwd fwd, Da fa, Db fb) {
  BroadcastPlan plan = plan_broadcast(name, a.shape(), b.shape());
  NodePtr out = detail::make_op_node(name, plan.out, {a, b});
  const auto& va = a.node()->value;
  const auto& vb = b.node()->value;
  auto& vo = out->value;
  for_each_broadcast(plan, [&](std::size_t io, std::size_t ia, std::size_t ib) { vo[io] = fwd(va[ia], vb[ib]); });

  if (detail::any_tangent({a, b})) {
    out->tangent.assign(vo.size(), 0.0f);
    const auto& ta = a.node()->tangent;
    const auto& tb = b.node()->tangent;
    auto& to = out->tangent;
    for_each_broadcast(plan, [&](std::size_t io, std::size_t ia, std::size_t ib) {
      float d = 0.0f;
      if (!ta.empty()) d += fa(va[ia], vb[ib], vo[io]) * ta[ia];
      if (!tb.empty()) d += fb(va[ia], vb[ib], vo[io]) * tb[ib];
      to[io] = d;
    });
  }

  if (out->requires_grad) {
    out->backward = [plan = std::move(plan), fa, fb](Node& self) {
      Node& na = *self.inputs[0];
      Node& nb = *self.inputs[1];
      const auto& g = self.grad;
      if (na.requires_grad) {
        auto& ga = na.grad_buffer();
        for_each_broadcast(plan, [&](std::size_t io, std::size_t ia, std::size_t ib) {
          ga[ia] += g[io] * fa(na.value[ia], nb.value[ib], self.value[io]);
        });
      }
      if (nb.requires_grad) {
        auto& gb = nb.grad_buffer();
        for_each_broadcast(plan, [&](std::size_t io, std::size_t ia, std::size_t ib) {
          gb[ib] += g[io] * fb(na.value[ia], nb.value[ib], self.value[io]);
        });
      }
    };
  }
  return Tensor(std::move(out));
}

// df returns d(out)/d(x) given (x, out).
template <class Fwd, class Df>
Tensor unary_op(const char* name, const Tensor& a, Fwd fwd, Df df) {
  NodePtr out = detail::make_op_node(name, a.shape(), {a});
  const auto& va = a.node()->value;
  auto& vo = out->value;
  for (std::size_t i = 0; i < va.size(); ++i) vo[i] = fwd(va[i]);
  if (a.has_tangent()) {
    const auto& ta = a.node()->tangent;
    out->tangent.resize(vo.size());
    for (std::size_t i = 0; i < va.size(); ++i) out->tangent[i] = df(va[i], vo[i]) * ta[i];
  }
  if (out->requires_grad) {
    out->backward = [df](Node& self) {
      Node& in = *self.inputs[0];
      auto& gi = in.grad_buffer();
      for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += self.grad[i] * df(in.value[i], self.value[i]);
    };
  }
  return Tensor(std::move(out));
}

float sigmoid(float x) { return 1.0f / (1.0f + std::exp(-x)); }

}  // namespace

// ---------------------------------------------------------------------------
// Elementwise

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op(
      "add", a, b, [](float x, float y) { return x + y; }, [](float, float, float) { return 1.0f; },
      [](float, float, float) { return 1.0f; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op(
      "sub", a, b, [](float x, float y) { return x - y; }, [](float, float, float) { return 1.0f; },
      [](float, float, float) { return -1.0f; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op(
      "mul", a, b, [](float x, float y) { return x * y; }, [](float, float y, float) { return y; },
      [](float x, float, float) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary_op(
      "div", a, b, [](float x, float y) { return x / y; }, [](float, float y, float) { return 1.0f / y; },
      [](float, float y, float out) { return -out / y; });
}

Tensor scale(const Tensor& a, float factor) {
  return unary_op(
      "scale", a, [factor](float x) { return factor * x; }, [factor](float, float) { return factor; });
}

Tensor add_scalar(const Tensor& a, float offset) {
  return unary_op(
      "add_scalar", a, [offset](float x) { return x + offset; }, [](float, float) { return 1.0f; });
}

Tensor neg(const Tensor& a) {
  return unary_op(
      "neg", a, [](float x) { return -x; }, [](float, float) { return -1.0f; });
}

Tensor square(const Tensor& a) {
  return unary_op(
      "square", a, [](float x) { return x * x; }, [](float x, float) { return 2.0f * x; });
}

Tensor exp(const Tensor& a) {
  return unary_op(
      "exp", a, [](float x) { return std::exp(x); }, [](float, float out) { return out; });
}

Tensor sin(const Tensor& a) {
  return unary_op(
      "sin", a, [](float x) { return std::sin(x); }, [](float x, float) { return std::cos(x); });
}

Tensor cos(const Tensor& a) {
  return unary_op(
      "cos", a, [](float x) { return std::cos(x); }, [](float x, float) { return -std::sin(x); });
}

Tensor tanh(const Tensor& a) {
  return unary_op(
      "tanh", a, [](float x) { return std::tanh(x); }, [](float, float out) { return 1.0f - out * out; });
}

Tensor silu(const Tensor& a) {
  return unary_op(
      "silu", a, [](float x) { return x * sigmoid(x); },
      [](float x, float) {
        const float s = sigmoid(x);
        return s * (1.0f + x * (1.0f - s));
      });
}

Tensor clamp(const Tensor& a, float lo, float hi) {
  if (!(lo <= hi)) throw Error(ErrorCode::kInvalidArgument, "clamp: lo must not exceed hi");
  return unary_op(
      "clamp", a, [lo, hi](float x) { return std::clamp(x, lo, hi); },
      [lo, hi](float x, float) { return (x >= lo && x <= hi) ? 1.0f : 0.0f; });
}

// ---------------------------------------------------------------------------
// Matrix product

Tensor matmul(const Tensor& a, const Tensor& b, bool transpose_b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() < 2 || sb.size() < 2) shape_error("matmul", sa, sb);
  const std::size_t m = sa[sa.size() - 2];
  const std::size_t k = sa[sa.size() - 1];
  const std::size_t bk = transpose_b ? sb[sb.size() - 1] : sb[sb.size() - 2];
  const std::size_t n = transpose_b ? sb[sb.size() - 2] : sb[sb.size() - 1];
  if (bk != k) shape_error("matmul", sa, sb);
  const bool shared = sb.size() == 2;
  if (!shared && (sb.size() != sa.size() || !std::equal(sa.begin(), sa.end() - 2, sb.begin()))) {
    shape_error("matmul", sa, sb);
  }
  const std::size_t batch = m * k == 0 ? 0 : a.numel() / (m * k);

  Shape out_shape(sa.begin(), sa.end() - 2);
  out_shape.push_back(m);
  out_shape.push_back(n);
  NodePtr out = detail::make_op_node("matmul", out_shape, {a, b});

  const auto em = static_cast<Eigen::Index>(m);
  const auto ek = static_cast<Eigen::Index>(k);
  const auto en = static_cast<Eigen::Index>(n);
  const auto b_rows = transpose_b ? en : ek;
  const auto b_cols = transpose_b ? ek : en;

  // out[i] (+)= lhs[i] * op(rhs[i]) over the batch.
  auto product = [&](const float* lhs, const float* rhs, float* dst, bool accumulate) {
    if (batch == 0 || n == 0) return;
    if (shared) {
      ConstMap A(lhs, em * static_cast<Eigen::Index>(batch), ek);
      ConstMap B(rhs, b_rows, b_cols);
      MutMap C(dst, em * static_cast<Eigen::Index>(batch), en);
      if (transpose_b) {
        if (accumulate) C.noalias() += A * B.transpose(); else C.noalias() = A * B.transpose();
      } else {
        if (accumulate) C.noalias() += A * B; else C.noalias() = A * B;
      }
      return;
    }
    for (std::size_t i = 0; i < batch; ++i) {
      ConstMap A(lhs + i * m * k, em, ek);
      ConstMap B(rhs + i * k * n, b_rows, b_cols);
      MutMap C(dst + i * m * n, em, en);
      if (transpose_b) {
        if (accumulate) C.noalias() += A * B.transpose(); else C.noalias() = A * B.transpose();
      } else {
        if (accumulate) C.noalias() += A * B; else C.noalias() = A * B;
      }
    }
  };

  product(a.data().data(), b.data().data(), out->value.data(), false);

  if (detail::any_tangent({a, b})) {
    out->tangent.assign(out->value.size(), 0.0f);
    if (a.has_tangent()) product(a.tangent().data(), b.data().data(), out->tangent.data(), true);
    if (b.has_tangent()) product(a.data().data(), b.tangent().data(), out->tangent.data(), true);
  }

  if (out->requires_grad) {
    out->backward = [=](Node& self) {
      Node& na = *self.inputs[0];
      Node& nb = *self.inputs[1];
      if (batch == 0) return;
      const auto rows = shared ? em * static_cast<Eigen::Index>(batch) : em;
      const std::size_t reps = shared ? 1 : batch;
      for (std::size_t i = 0; i < reps; ++i) {
        ConstMap G(self.grad.data() + i * m * n, rows, en);
        ConstMap A(na.value.data() + i * m * k, rows, ek);
        ConstMap B(nb.value.data() + (shared ? 0 : i * k * n), b_rows, b_cols);
        if (na.requires_grad) {
          MutMap GA(na.grad_buffer().data() + i * m * k, rows, ek);
          if (transpose_b) GA.noalias() += G * B; else GA.noalias() += G * B.transpose();
        }
        if (nb.requires_grad) {
          MutMap GB(nb.grad_buffer().data() + (shared ? 0 : i * k * n), b_rows, b_cols);
          if (transpose_b) GB.noalias() += G.transpose() * A; else GB.noalias() += A.transpose() * G;
        }
      }
    };
  }
  return Tensor(std::move(out));
}

// ---------------------------------------------------------------------------
// Attention softmax

Tensor masked_softmax(const Tensor& scores, std::span<const std::uint8_t> blocked) {
  const Shape& s = scores.shape();
  if (s.size() < 2) throw Error(ErrorCode::kShapeMismatch, "masked_softmax: need rank >= 2, got " + shape_str(s));
  const std::size_t r = s[s.size() - 2];
  const std::size_t c = s[s.size() - 1];
  if (blocked.size() != r * c) {
    throw Error(ErrorCode::kShapeMismatch, "masked_softmax: mask has " + std::to_string(blocked.size()) +
                                               " entries, scores are " + shape_str(s));
  }
  NodePtr out = detail::make_op_node("masked_softmax", s, {scores});
  const auto& x = scores.node()->value;
  auto& y = out->value;
  const std::size_t rows = c == 0 ? 0 : x.size() / c;
  for (std::size_t row = 0; row < rows; ++row) {
    const std::uint8_t* m = blocked.data() + (row % r) * c;
    const float* xr = x.data() + row * c;
    float* yr = y.data() + row * c;
    float mx = -std::numeric_limits<float>::infinity();
    for (std::size_t j = 0; j < c; ++j)
      if (!m[j]) mx = std::max(mx, xr[j]);
    if (mx == -std::numeric_limits<float>::infinity()) continue;  // fully blocked row
    float total = 0.0f;
    for (std::size_t j = 0; j < c; ++j) {
      yr[j] = m[j] ? 0.0f : std::exp(xr[j] - mx);
      total += yr[j];
    }
    const float inv = 1.0f / total;
    for (std::size_t j = 0; j < c; ++j) yr[j] *= inv;
  }

  if (scores.has_tangent()) {
    const auto& tx = scores.node()->tangent;
    out->tangent.assign(y.size(), 0.0f);
    for (std::size_t row = 0; row < rows; ++row) {
      const float* yr = y.data() + row * c;
      const float* tr = tx.data() + row * c;
      float dot = 0.0f;
      for (std::size_t j = 0; j < c; ++j) dot += yr[j] * tr[j];
      float* to = out->tangent.data() + row * c;
      for (std::size_t j = 0; j < c; ++j) to[j] = yr[j] * (tr[j] - dot);
    }
  }

  if (out->requires_grad) {
    out->backward = [rows, c](Node& self) {
      Node& in = *self.inputs[0];
      auto& gx = in.grad_buffer();
      for (std::size_t row = 0; row < rows; ++row) {
        const float* yr = self.value.data() + row * c;
        const float* gr = self.grad.data() + row * c;
        float dot = 0.0f;
        for (std::size_t j = 0; j < c; ++j) dot += yr[j] * gr[j];
        float* out_g = gx.data() + row * c;
        for (std::size_t j = 0; j < c; ++j) out_g[j] += yr[j] * (gr[j] - dot);
      }
    };
  }
  return Tensor(std::move(out));
}

// ---------------------------------------------------------------------------
// Layer norm

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps) {
  const Shape& s = x.shape();
  if (s.empty()) throw Error(ErrorCode::kShapeMismatch, "layer_norm: scalar input");
  const std::size_t w = s.back();
  if (gamma.shape() != Shape{w} || beta.shape() != Shape{w}) {
    shape_error("layer_norm", s, gamma.shape());
  }
  NodePtr out = detail::make_op_node("layer_norm", s, {x, gamma, beta});
  const std::size_t rows = w == 0 ? 0 : x.numel() / w;
  const auto& xv = x.node()->value;
  const auto& gv = gamma.node()->value;
  const auto& bv = beta.node()->value;
  std::vector<float> xhat(xv.size());
  std::vector<float> rstd(rows);
  const float inv_w = 1.0f / static_cast<float>(w);
  for (std::size_t row = 0; row < rows; ++row) {
    const float* xr = xv.data() + row * w;
    float mu = 0.0f;
    for (std::size_t j = 0; j < w; ++j) mu += xr[j];
    mu *= inv_w;
    float var = 0.0f;
    for (std::size_t j = 0; j < w; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var *= inv_w;
    const float rs = 1.0f / std::sqrt(var + eps);
    rstd[row] = rs;
    for (std::size_t j = 0; j < w; ++j) {
      const float h = (xr[j] - mu) * rs;
      xhat[row * w + j] = h;
      out->value[row * w + j] = h * gv[j] + bv[j];
    }
  }

  if (detail::any_tangent({x, gamma, beta})) {
    out->tangent.assign(out->value.size(), 0.0f);
    const auto& tx = x.node()->tangent;
    const auto& tg = gamma.node()->tangent;
    const auto& tb = beta.node()->tangent;
    for (std::size_t row = 0; row < rows; ++row) {
      const float* h = xhat.data() + row * w;
      float* to = out->tangent.data() + row * w;
      if (!tx.empty()) {
        const float* dx = tx.data() + row * w;
        float mean_dx = 0.0f, mean_hdx = 0.0f;
        for (std::size_t j = 0; j < w; ++j) {
          mean_dx += dx[j];
          mean_hdx += h[j] * dx[j];
        }
        mean_dx *= inv_w;
        mean_hdx *= inv_w;
        for (std::size_t j = 0; j < w; ++j) to[j] += rstd[row] * (dx[j] - mean_dx - h[j] * mean_hdx) * gv[j];
      }
      if (!tg.empty())
        for (std::size_t j = 0; j < w; ++j) to[j] += h[j] * tg[j];
      if (!tb.empty())
        for (std::size_t j = 0; j < w; ++j) to[j] += tb[j];
    }
  }

  if (out->requires_grad) {
    out->backward = [xhat = std::move(xhat), rstd = std::move(rstd), rows, w, inv_w](Node& self) {
      Node& nx = *self.inputs[0];
      Node& ng = *self.inputs[1];
      Node& nb = *self.inputs[2];
      const auto& g = self.grad;
      if (nx.requires_grad) {
        auto& gx = nx.grad_buffer();
        for (std::size_t row = 0; row < rows; ++row) {
          const float* h = xhat.data() + row * w;
          const float* gr = g.data() + row * w;
          float mean_gh = 0.0f, mean_ghh = 0.0f;
          for (std::size_t j = 0; j < w; ++j) {
            const float gh = gr[j] * ng.value[j];
            mean_gh += gh;
            mean_ghh += gh * h[j];
          }
          mean_gh *= inv_w;
          mean_ghh *= inv_w;
          for (std::size_t j = 0; j < w; ++j) {
            gx[row * w + j] += rstd[row] * (gr[j] * ng.value[j] - mean_gh - h[j] * mean_ghh);
          }
        }
      }
      if (ng.requires_grad) {
        auto& gg = ng.grad_buffer();
        for (std::size_t row = 0; row < rows; ++row)
          for (std::size_t j = 0; j < w; ++j) gg[j] += g[row * w + j] * xhat[row * w + j];
      }
      if (nb.requires_grad) {
        auto& gb = nb.grad_buffer();
        for (std::size_t row = 0; row < rows; ++row)
          for (std::size_t j = 0; j < w; ++j) gb[j] += g[row * w + j];
      }
    };
  }
  return Tensor(std::move(out));
}

// ---------------------------------------------------------------------------
// Layout ops

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw Error(ErrorCode::kInvalidArgument, "concat: no inputs");
  std::vector<Tensor> live;
  for (const auto& p : parts)
    if (p.defined() && p.numel() > 0) live.push_back(p);
  const Shape& ref = live.empty() ? parts.front().shape() : live.front().shape();
  if (axis >= ref.size()) throw Error(ErrorCode::kInvalidArgument, "concat: axis out of range for " + shape_str(ref));
  std::size_t total = 0;
  std::vector<std::size_t> lens;
  for (const auto& p : live) {
    const Shape& s = p.shape();
    if (s.size() != ref.size()) shape_error("concat", ref, s);
    for (std::size_t d = 0; d < s.size(); ++d)
      if (d != axis && s[d] != ref[d]) shape_error("concat", ref, s);
    lens.push_back(s[axis]);
    total += s[axis];
  }
  Shape out_shape = ref;
  out_shape[axis] = total;
  if (live.size() == 1) return live.front();

  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= ref[d];
  for (std::size_t d = axis + 1; d < ref.size(); ++d) inner *= ref[d];

  NodePtr out = detail::make_op_node("concat", out_shape, live);
  auto scatter = [&](auto source_of, std::vector<float>& dst) {
    std::size_t offset = 0;
    for (std::size_t p = 0; p < live.size(); ++p) {
      const float* src = source_of(p);
      const std::size_t chunk = lens[p] * inner;
      for (std::size_t o = 0; o < outer; ++o) {
        if (src) std::copy_n(src + o * chunk, chunk, dst.data() + o * total * inner + offset);
      }
      offset += chunk;
    }
  };
  scatter([&](std::size_t p) { return live[p].data().data(); }, out->value);
  if (detail::any_tangent(live)) {
    out->tangent.assign(out->value.size(), 0.0f);
    scatter([&](std::size_t p) { return live[p].has_tangent() ? live[p].tangent().data() : nullptr; },
            out->tangent);
  }
  if (out->requires_grad) {
    out->backward = [lens, outer, inner, total](Node& self) {
      std::size_t offset = 0;
      for (std::size_t p = 0; p < self.inputs.size(); ++p) {
        Node& in = *self.inputs[p];
        const std::size_t chunk = lens[p] * inner;
        if (in.requires_grad) {
          auto& gi = in.grad_buffer();
          for (std::size_t o = 0; o < outer; ++o) {
            const float* src = self.grad.data() + o * total * inner + offset;
            float* dst = gi.data() + o * chunk;
            for (std::size_t j = 0; j < chunk; ++j) dst[j] += src[j];
          }
        }
        offset += chunk;
      }
    };
  }
  return Tensor(std::move(out));
}

Tensor slice(const Tensor& a, std::size_t axis, std::size_t start, std::size_t length) {
  const Shape& s = a.shape();
  if (axis >= s.size() || start + length > s[axis]) {
    throw Error(ErrorCode::kShapeMismatch, "slice: range [" + std::to_string(start) + ", " +
                                               std::to_string(start + length) + ") on axis " +
                                               std::to_string(axis) + " out of bounds for " + shape_str(s));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= s[d];
  for (std::size_t d = axis + 1; d < s.size(); ++d) inner *= s[d];
  const std::size_t full = s[axis] * inner;
  const std::size_t chunk = length * inner;
  const std::size_t off = start * inner;
  Shape out_shape = s;
  out_shape[axis] = length;
  NodePtr out = detail::make_op_node("slice", out_shape, {a});
  auto gather = [&](const std::vector<float>& src, std::vector<float>& dst) {
    for (std::size_t o = 0; o < outer; ++o) std::copy_n(src.data() + o * full + off, chunk, dst.data() + o * chunk);
  };
  gather(a.node()->value, out->value);
  if (a.has_tangent()) {
    out->tangent.resize(out->value.size());
    gather(a.node()->tangent, out->tangent);
  }
  if (out->requires_grad) {
    out->backward = [outer, full, chunk, off](Node& self) {
      auto& gi = self.inputs[0]->grad_buffer();
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t j = 0; j < chunk; ++j) gi[o * full + off + j] += self.grad[o * chunk + j];
    };
  }
  return Tensor(std::move(out));
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) shape_error("reshape", a.shape(), shape);
  NodePtr out = detail::make_op_node("reshape", std::move(shape), {a});
  out->value = a.node()->value;
  if (a.has_tangent()) out->tangent = a.node()->tangent;
  if (out->requires_grad) {
    out->backward = [](Node& self) {
      auto& gi = self.inputs[0]->grad_buffer();
      for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += self.grad[i];
    };
  }
  return Tensor(std::move(out));
}

// ---------------------------------------------------------------------------
// Reductions

Tensor sum(const Tensor& a) {
  NodePtr out = detail::make_op_node("sum", {}, {a});
  float total = 0.0f;
  for (float v : a.data()) total += v;
  out->value[0] = total;
  if (a.has_tangent()) {
    float t = 0.0f;
    for (float v : a.tangent()) t += v;
    out->tangent = {t};
  }
  if (out->requires_grad) {
    out->backward = [](Node& self) {
      auto& gi = self.inputs[0]->grad_buffer();
      for (auto& g : gi) g += self.grad[0];
    };
  }
  return Tensor(std::move(out));
}

Tensor mean(const Tensor& a) {
  if (a.numel() == 0) throw Error(ErrorCode::kInvalidArgument, "mean: empty tensor");
  return scale(sum(a), 1.0f / static_cast<float>(a.numel()));
}

Tensor sum_axis(const Tensor& a, std::size_t axis, bool keepdim) {
  const Shape& s = a.shape();
  if (axis >= s.size()) throw Error(ErrorCode::kInvalidArgument, "sum_axis: axis out of range for " + shape_str(s));
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= s[d];
  for (std::size_t d = axis + 1; d < s.size(); ++d) inner *= s[d];
  const std::size_t len = s[axis];
  Shape out_shape = s;
  if (keepdim) out_shape[axis] = 1; else out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  NodePtr out = detail::make_op_node("sum_axis", out_shape, {a});
  auto reduce = [&](const std::vector<float>& src, std::vector<float>& dst) {
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t l = 0; l < len; ++l)
        for (std::size_t i = 0; i < inner; ++i) dst[o * inner + i] += src[(o * len + l) * inner + i];
  };
  reduce(a.node()->value, out->value);
  if (a.has_tangent()) {
    out->tangent.assign(out->value.size(), 0.0f);
    reduce(a.node()->tangent, out->tangent);
  }
  if (out->requires_grad) {
    out->backward = [outer, len, inner](Node& self) {
      auto& gi = self.inputs[0]->grad_buffer();
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t l = 0; l < len; ++l)
          for (std::size_t i = 0; i < inner; ++i) gi[(o * len + l) * inner + i] += self.grad[o * inner + i];
    };
  }
  return Tensor(std::move(out));
}

Tensor mean_axis(const Tensor& a, std::size_t axis, bool keepdim) {
  const std::size_t len = a.dim(axis);
  if (len == 0) throw Error(ErrorCode::kInvalidArgument, "mean_axis: empty axis");
  return scale(sum_axis(a, axis, keepdim), 1.0f / static_cast<float>(len));
}

}  // namespace vmflow::ops
