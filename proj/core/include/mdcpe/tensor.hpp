// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace mdcpe {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  /// 1-D tensor from a list of values.
  static Tensor vector(std::initializer_list<double> values);
  static Tensor vector(std::vector<double> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  const std::vector<double>& storage() const noexcept { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // Bounds-unchecked multi-index access for rank 2..4.
  double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
  double& at(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double& at(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
    return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }
  double at(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
    return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }

  void fill(double v);
  /// Same data, new shape with identical element count.
  Tensor reshaped(Shape shape) const;
  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// A trainable tensor with its gradient accumulator.
struct Param {
  Tensor value;
  Tensor grad;
};

/// Named parameters in deterministic (lexicographic) order.
class ParamStore {
 public:
  /// Registers a zero-initialized parameter; throws InvalidInput on a
  /// duplicate name.
  Tensor& add(const std::string& name, Shape shape);
  void add(const std::string& name, Tensor value);

  bool contains(const std::string& name) const;
  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  Tensor& value(const std::string& name) { return at(name).value; }
  const Tensor& value(const std::string& name) const { return at(name).value; }
  Tensor& grad(const std::string& name) { return at(name).grad; }
  const Tensor& grad(const std::string& name) const { return at(name).grad; }

  void zero_grad();
  void scale_grad(double factor);
  std::size_t parameter_count() const;
  std::vector<std::string> names() const;

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  std::size_t size() const noexcept { return entries_.size(); }

  /// True when both stores hold the same names, shapes and bit-identical values.
  bool same_values(const ParamStore& other) const;

 private:
  std::map<std::string, Param> entries_;
};

}  // namespace mdcpe
