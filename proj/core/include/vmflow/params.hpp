#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "vmflow/tensor.hpp"

namespace vmflow {

class Rng;

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// Ordered, named set of trainable leaves. Names are unique and stable; they
// double as checkpoint keys ("theta/...", "phi/...").
class ParamStore {
 public:
  Tensor& add(std::string name, Tensor value);
  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) init.
  Tensor& add_uniform(std::string name, Shape shape, std::size_t fan_in, Rng& rng);
  Tensor& add_constant(std::string name, Shape shape, float value);

  const Tensor& get(std::string_view name) const;
  Tensor& get(std::string_view name);
  bool contains(std::string_view name) const;

  std::vector<NamedTensor>& entries() { return entries_; }
  const std::vector<NamedTensor>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t total_elements() const;

  void zero_grad();
  // Deep copy of values into fresh leaves.
  ParamStore clone() const;
  // Appends every entry of `other` (names must not collide).
  void merge(const ParamStore& other);

 private:
  std::vector<NamedTensor> entries_;
};

}  // namespace vmflow
