#include "vmflow/tensor.hpp"

#include <sstream>
#include <unordered_set>

#include "graph.hpp"
#include "vmflow/error.hpp"
#include "vmflow/rng.hpp"

namespace vmflow {

namespace {
thread_local bool g_grad_enabled = true;

std::shared_ptr<detail::Node> make_leaf(Shape shape, std::vector<float> data, bool requires_grad) {
  if (data.size() != shape_numel(shape)) {
    throw Error(ErrorCode::kShapeMismatch, "tensor: data length " + std::to_string(data.size()) +
                                               " does not match shape " + shape_str(shape));
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(data);
  node->requires_grad = requires_grad;
  return node;
}
}  // namespace

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace detail {
std::shared_ptr<Node> make_op_node(const char* op, Shape shape, const std::vector<Tensor>& inputs) {
  auto node = std::make_shared<Node>();
  node->op = op;
  node->leaf = false;
  node->value.assign(shape_numel(shape), 0.0f);
  node->shape = std::move(shape);
  if (g_grad_enabled) {
    bool needs = false;
    for (const auto& in : inputs) needs = needs || (in.defined() && in.requires_grad());
    if (needs) {
      node->requires_grad = true;
      node->inputs.reserve(inputs.size());
      for (const auto& in : inputs) node->inputs.push_back(in.node_ptr());
    }
  }
  return node;
}
}  // namespace detail

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const auto n = shape_numel(shape);
  return Tensor(make_leaf(std::move(shape), std::vector<float>(n, 0.0f), requires_grad));
}

Tensor Tensor::full(Shape shape, float value, bool requires_grad) {
  const auto n = shape_numel(shape);
  return Tensor(make_leaf(std::move(shape), std::vector<float>(n, value), requires_grad));
}

Tensor Tensor::from_data(Shape shape, std::vector<float> data, bool requires_grad) {
  return Tensor(make_leaf(std::move(shape), std::move(data), requires_grad));
}

Tensor Tensor::scalar(float value) { return from_data({}, {value}); }

Tensor Tensor::randn(Shape shape, Rng& rng, float stddev, bool requires_grad) {
  std::vector<float> data(shape_numel(shape));
  for (auto& v : data) v = stddev * rng.normal();
  return from_data(std::move(shape), std::move(data), requires_grad);
}

const Shape& Tensor::shape() const {
  if (!node_) throw Error(ErrorCode::kInvalidArgument, "tensor: undefined handle");
  return node_->shape;
}

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "tensor: axis " + std::to_string(axis) + " out of range for " + shape_str(s));
  }
  return s[axis];
}

std::size_t Tensor::numel() const { return node_ ? node_->value.size() : 0; }

std::span<const float> Tensor::data() const {
  if (!node_) return {};
  return node_->value;
}

std::vector<float> Tensor::to_vector() const {
  auto d = data();
  return {d.begin(), d.end()};
}

float Tensor::item() const {
  if (numel() != 1) {
    throw Error(ErrorCode::kShapeMismatch, "item: tensor of shape " + shape_str(shape()) + " is not a scalar");
  }
  return node_->value[0];
}

std::span<float> Tensor::mutable_data() {
  if (!node_ || !node_->leaf) {
    throw Error(ErrorCode::kInvalidArgument, "mutable_data: only leaf tensors are writable");
  }
  return node_->value;
}

bool Tensor::has_tangent() const { return node_ && node_->has_tangent(); }

std::span<const float> Tensor::tangent() const {
  if (!node_) return {};
  return node_->tangent;
}

Tensor& Tensor::set_tangent(std::vector<float> tangent) {
  if (!node_ || !node_->leaf) {
    throw Error(ErrorCode::kInvalidArgument, "set_tangent: only leaf tensors can be seeded");
  }
  if (tangent.size() != node_->value.size()) {
    throw Error(ErrorCode::kShapeMismatch, "set_tangent: tangent length " + std::to_string(tangent.size()) +
                                               " does not match shape " + shape_str(node_->shape));
  }
  node_->tangent = std::move(tangent);
  return *this;
}

void Tensor::clear_tangent() {
  if (node_) node_->tangent.clear();
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

bool Tensor::is_leaf() const { return node_ && node_->leaf; }

std::span<const float> Tensor::grad() const {
  if (!node_) return {};
  return node_->grad_buffer();
}

void Tensor::zero_grad() {
  if (node_) node_->grad.assign(node_->value.size(), 0.0f);
}

Tensor Tensor::detach() const {
  auto node = std::make_shared<detail::Node>();
  node->shape = shape();
  node->value = node_->value;
  node->tangent = node_->tangent;
  node->op = "detach";
  return Tensor(std::move(node));
}

void Tensor::backward() const {
  if (!node_) throw Error(ErrorCode::kInvalidArgument, "backward: undefined tensor");
  if (node_->value.size() != 1) {
    throw Error(ErrorCode::kShapeMismatch,
                "backward: loss must be a scalar, got shape " + shape_str(node_->shape));
  }
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::Node* child = node->inputs[next++].get();
      if (child && child->requires_grad && visited.insert(child).second) {
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  node_->grad_buffer()[0] += 1.0f;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(*node);
  }
}

const char* Tensor::op_name() const { return node_ ? node_->op : "undefined"; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

}  // namespace vmflow
