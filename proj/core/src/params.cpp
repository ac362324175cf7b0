#include "vmflow/params.hpp"

#include <cmath>

#include "vmflow/error.hpp"
#include "vmflow/rng.hpp"

namespace vmflow {

Tensor& ParamStore::add(std::string name, Tensor value) {
  if (contains(name)) throw Error(ErrorCode::kInvalidArgument, "param store: duplicate name '" + name + "'");
  if (!value.requires_grad()) {
    value = Tensor::from_data(value.shape(), value.to_vector(), true);
  }
  entries_.push_back({std::move(name), std::move(value)});
  return entries_.back().tensor;
}

Tensor& ParamStore::add_uniform(std::string name, Shape shape, std::size_t fan_in, Rng& rng) {
  const float bound = 1.0f / std::sqrt(static_cast<float>(std::max<std::size_t>(fan_in, 1)));
  std::vector<float> data(shape_numel(shape));
  for (auto& v : data) v = bound * (2.0f * rng.uniform() - 1.0f);
  return add(std::move(name), Tensor::from_data(std::move(shape), std::move(data), true));
}

Tensor& ParamStore::add_constant(std::string name, Shape shape, float value) {
  return add(std::move(name), Tensor::full(std::move(shape), value, true));
}

const Tensor& ParamStore::get(std::string_view name) const {
  for (const auto& e : entries_)
    if (e.name == name) return e.tensor;
  throw Error(ErrorCode::kInvalidArgument, "param store: no parameter named '" + std::string(name) + "'");
}

Tensor& ParamStore::get(std::string_view name) {
  return const_cast<Tensor&>(static_cast<const ParamStore&>(*this).get(name));
}

bool ParamStore::contains(std::string_view name) const {
  for (const auto& e : entries_)
    if (e.name == name) return true;
  return false;
}

std::size_t ParamStore::total_elements() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.tensor.numel();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& e : entries_) e.tensor.zero_grad();
}

ParamStore ParamStore::clone() const {
  ParamStore copy;
  for (const auto& e : entries_) {
    copy.entries_.push_back({e.name, Tensor::from_data(e.tensor.shape(), e.tensor.to_vector(), true)});
  }
  return copy;
}

void ParamStore::merge(const ParamStore& other) {
  for (const auto& e : other.entries_) add(e.name, e.tensor);
}

}  // namespace vmflow
