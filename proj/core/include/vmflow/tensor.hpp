#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace vmflow {

class Rng;

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {
struct Node;
}

// Dense row-major f32 tensor handle.
//
// A tensor carries its primal values, an optional tangent of the same shape
// (forward mode), and, for nodes that require gradients, a gradient
// accumulator filled by `backward()`. Handles are cheap to copy and share the
// underlying node. Values are immutable once an op has produced them; only
// leaves expose mutable data (the optimizer writes parameters in place).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, float value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<float> data, bool requires_grad = false);
  static Tensor scalar(float value);
  static Tensor randn(Shape shape, Rng& rng, float stddev = 1.0f, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;
  std::span<const float> data() const;
  std::vector<float> to_vector() const;
  float item() const;

  // Leaf-only mutable access.
  std::span<float> mutable_data();

  bool has_tangent() const;
  // Empty span when no tangent is attached.
  std::span<const float> tangent() const;
  // Seeds a forward-mode direction on a leaf. Throws on shape mismatch.
  Tensor& set_tangent(std::vector<float> tangent);
  void clear_tangent();

  bool requires_grad() const;
  bool is_leaf() const;
  // Accumulated gradient; zeros if nothing has been accumulated yet.
  std::span<const float> grad() const;
  void zero_grad();

  // Same values (and tangent), cut from the reverse-mode graph.
  Tensor detach() const;
  // Reverse pass from a scalar. Gradients add into every reachable leaf that
  // requires grad; tangent buffers are never touched.
  void backward() const;

  const char* op_name() const;
  detail::Node* node() const { return node_.get(); }
  const std::shared_ptr<detail::Node>& node_ptr() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

// Disables graph recording on this thread for its lifetime. Tangents are
// still propagated.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

}  // namespace vmflow
