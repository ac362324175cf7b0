#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vmflow/tensor.hpp"

// The op set is exactly what the transformer, the encoder and the losses
// need. Every op propagates tangents (missing input tangents count as zero)
// and records a reverse-mode closure when an input requires grad.
namespace vmflow::ops {

// Elementwise binary ops follow numpy broadcasting.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& a, float factor);
Tensor add_scalar(const Tensor& a, float offset);
Tensor neg(const Tensor& a);
Tensor square(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor sin(const Tensor& a);
Tensor cos(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor silu(const Tensor& a);
// Derivative is zero outside [lo, hi].
Tensor clamp(const Tensor& a, float lo, float hi);

// a: [..., M, K]; b: [K, N] shared across the batch, or [..., K, N] with the
// same leading dims as a. With transpose_b, b is stored as [..., N, K].
Tensor matmul(const Tensor& a, const Tensor& b, bool transpose_b = false);

// Softmax over the last axis of scores [..., R, C]. `blocked` is an R x C
// row-major 0/1 mask shared by all leading dims; blocked entries get exactly
// zero weight. A row with every entry blocked yields all zeros.
Tensor masked_softmax(const Tensor& scores, std::span<const std::uint8_t> blocked);

// Normalizes over the last axis; gamma and beta have shape [W].
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps = 1e-5f);

// Zero-size inputs are skipped.
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor slice(const Tensor& a, std::size_t axis, std::size_t start, std::size_t length);
Tensor reshape(const Tensor& a, Shape shape);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor sum_axis(const Tensor& a, std::size_t axis, bool keepdim = false);
Tensor mean_axis(const Tensor& a, std::size_t axis, bool keepdim = false);

}  // namespace vmflow::ops

namespace vmflow {
inline Tensor operator+(const Tensor& a, const Tensor& b) { return ops::add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return ops::sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return ops::mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return ops::div(a, b); }
inline Tensor operator*(const Tensor& a, float s) { return ops::scale(a, s); }
inline Tensor operator*(float s, const Tensor& a) { return ops::scale(a, s); }
inline Tensor operator-(const Tensor& a) { return ops::neg(a); }
}  // namespace vmflow
