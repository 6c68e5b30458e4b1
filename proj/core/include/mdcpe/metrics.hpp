// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mdcpe/cube.hpp"

namespace mdcpe {

/// k x k counts; rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes = 0);
  ConfusionMatrix(std::size_t classes, std::vector<std::uint64_t> counts);

  std::size_t classes() const noexcept { return classes_; }
  std::uint64_t& at(std::size_t truth, std::size_t predicted) {
    return counts_[truth * classes_ + predicted];
  }
  std::uint64_t at(std::size_t truth, std::size_t predicted) const {
    return counts_[truth * classes_ + predicted];
  }
  std::uint64_t total() const;
  std::uint64_t row_sum(std::size_t truth) const;
  std::uint64_t col_sum(std::size_t predicted) const;
  std::uint64_t trace() const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t classes_;
  std::vector<std::uint64_t> counts_;
};

/// Pairs whose true label is 0 (background) are skipped. Labels are 1..k;
/// anything else throws InvalidClass, unequal lengths throw ShapeError.
ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted,
                          std::size_t classes);

// All three throw EmptyEvaluation on an empty matrix.
double overall_accuracy(const ConfusionMatrix& cm);
/// Mean recall over classes that have at least one true sample.
double average_accuracy(const ConfusionMatrix& cm);
/// (p_o - p_e) / (1 - p_e). When p_e == 1 the value is 1 for a perfect
/// matrix and 0 otherwise.
double kappa(const ConfusionMatrix& cm);
/// Recall per class; NaN for classes without true samples.
std::vector<double> per_class_accuracy(const ConfusionMatrix& cm);

/// "metric,value" CSV: OA, AA, Kappa, then class_<i> recalls, 6 decimals.
std::string metrics_csv(const ConfusionMatrix& cm);

using Rgb = std::array<std::uint8_t, 3>;

/// Distinct colors for classes 1..k; entry 0 is black.
std::vector<Rgb> default_palette(std::size_t classes);

/// Binary PPM (P6). palette[c] colors class c; class 0 is always black.
/// Throws InvalidConfig when a label has no palette entry.
std::string render_map(const LabelField& labels, std::span<const Rgb> palette);

}  // namespace mdcpe
