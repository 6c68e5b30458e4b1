// SPDX-License-Identifier: Apache-2.0
#include "mdcpe/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "mdcpe/error.hpp"

namespace mdcpe {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_size(shape_) != data_.size())
    throw ShapeError("tensor shape " + shape_string(shape_) + " does not hold " +
                     std::to_string(data_.size()) + " values");
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  return vector(std::vector<double>(values));
}

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor Tensor::reshaped(Shape shape) const { return Tensor(std::move(shape), data_); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

Tensor& ParamStore::add(const std::string& name, Shape shape) {
  add(name, Tensor(std::move(shape)));
  return entries_.at(name).value;
}

void ParamStore::add(const std::string& name, Tensor value) {
  if (entries_.contains(name))
    throw InvalidInput("duplicate parameter name '" + name + "'");
  Tensor grad(value.shape());
  entries_.emplace(name, Param{std::move(value), std::move(grad)});
}

bool ParamStore::contains(const std::string& name) const {
  return entries_.contains(name);
}

Param& ParamStore::at(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw InvalidInput("unknown parameter '" + name + "'");
  return it->second;
}

const Param& ParamStore::at(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw InvalidInput("unknown parameter '" + name + "'");
  return it->second;
}

void ParamStore::zero_grad() {
  for (auto& [name, p] : entries_) p.grad.fill(0.0);
}

void ParamStore::scale_grad(double factor) {
  for (auto& [name, p] : entries_)
    for (double& g : p.grad.values()) g *= factor;
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : entries_) n += p.value.size();
  return n;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, p] : entries_) out.push_back(name);
  return out;
}

bool ParamStore::same_values(const ParamStore& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  auto a = entries_.begin();
  auto b = other.entries_.begin();
  for (; a != entries_.end(); ++a, ++b) {
    if (a->first != b->first || !(a->second.value == b->second.value)) return false;
  }
  return true;
}

}  // namespace mdcpe
