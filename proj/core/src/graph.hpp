#pragma once

#include <functional>
#include <initializer_list>
#include <memory>
#include <vector>

#include "vmflow/tensor.hpp"

namespace vmflow::detail {

struct Node {
  Shape shape;
  std::vector<float> value;
  std::vector<float> tangent;  // empty: no tangent
  std::vector<float> grad;     // lazily allocated
  bool requires_grad = false;
  bool leaf = true;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  // Pushes self.grad into the inputs' grad buffers.
  std::function<void(Node& self)> backward;

  std::vector<float>& grad_buffer() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0f);
    return grad;
  }
  bool has_tangent() const { return !tangent.empty(); }
};

// Allocates an op output. Inputs are retained (and the output marked as
// requiring grad) only when grad mode is on and some input requires grad.
std::shared_ptr<Node> make_op_node(const char* op, Shape shape, const std::vector<Tensor>& inputs);

inline bool any_tangent(const std::vector<Tensor>& inputs) {
  for (const auto& t : inputs) {
    if (t.defined() && t.numel() > 0 && t.has_tangent()) return true;
  }
  return false;
}

}  // namespace vmflow::detail
