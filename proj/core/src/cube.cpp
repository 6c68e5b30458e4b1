// SPDX-License-Identifier: Apache-2.0
#include "mdcpe/cube.hpp"

#include <algorithm>
#include <string>

#include "mdcpe/error.hpp"

namespace mdcpe {

HyperCube::HyperCube(std::size_t height, std::size_t width, std::size_t bands, double fill)
    : height_(height), width_(width), bands_(bands), values_(height * width * bands, fill) {}

HyperCube::HyperCube(std::size_t height, std::size_t width, std::size_t bands,
                     std::vector<double> values)
    : height_(height), width_(width), bands_(bands), values_(std::move(values)) {
  if (values_.size() != height * width * bands)
    throw ShapeError("cube " + std::to_string(height) + "x" + std::to_string(width) +
                     "x" + std::to_string(bands) + " given " +
                     std::to_string(values_.size()) + " values");
}

LabelField::LabelField(std::size_t height, std::size_t width, std::uint16_t fill)
    : height_(height), width_(width), labels_(height * width, fill) {}

LabelField::LabelField(std::size_t height, std::size_t width,
                       std::vector<std::uint16_t> labels)
    : height_(height), width_(width), labels_(std::move(labels)) {
  if (labels_.size() != height * width)
    throw ShapeError("label field " + std::to_string(height) + "x" +
                     std::to_string(width) + " given " + std::to_string(labels_.size()) +
                     " labels");
}

int LabelField::max_label() const {
  if (labels_.empty()) return 0;
  return *std::max_element(labels_.begin(), labels_.end());
}

std::vector<std::size_t> LabelField::class_counts() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(max_label()) + 1, 0);
  for (auto l : labels_) ++counts[l];
  return counts;
}

}  // namespace mdcpe
