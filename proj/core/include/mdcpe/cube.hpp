// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mdcpe {

/// Pixel coordinate.
struct Pixel {
  std::size_t row = 0;
  std::size_t col = 0;
  friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

/// Pixel with a class label in 1..k.
struct LabeledPixel {
  Pixel pixel;
  int label = 0;
  friend bool operator==(const LabeledPixel&, const LabeledPixel&) = default;
};

/// H x W x B reflectance volume, band-fastest (pixel-interleaved) storage.
class HyperCube {
 public:
  HyperCube() = default;
  HyperCube(std::size_t height, std::size_t width, std::size_t bands, double fill = 0.0);
  HyperCube(std::size_t height, std::size_t width, std::size_t bands,
            std::vector<double> values);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t bands() const noexcept { return bands_; }
  std::size_t pixel_count() const noexcept { return height_ * width_; }

  double& at(std::size_t row, std::size_t col, std::size_t band) {
    return values_[(row * width_ + col) * bands_ + band];
  }
  double at(std::size_t row, std::size_t col, std::size_t band) const {
    return values_[(row * width_ + col) * bands_ + band];
  }
  std::span<const double> spectrum(std::size_t row, std::size_t col) const {
    return {values_.data() + (row * width_ + col) * bands_, bands_};
  }
  std::span<double> spectrum(std::size_t row, std::size_t col) {
    return {values_.data() + (row * width_ + col) * bands_, bands_};
  }
  std::span<const double> spectrum(Pixel p) const { return spectrum(p.row, p.col); }

  const std::vector<double>& values() const noexcept { return values_; }
  std::vector<double>& values() noexcept { return values_; }

  friend bool operator==(const HyperCube&, const HyperCube&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t bands_ = 0;
  std::vector<double> values_;
};

/// H x W class labels; 0 is background / unlabeled, classes are 1..k.
class LabelField {
 public:
  LabelField() = default;
  LabelField(std::size_t height, std::size_t width, std::uint16_t fill = 0);
  LabelField(std::size_t height, std::size_t width, std::vector<std::uint16_t> labels);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }

  std::uint16_t& at(std::size_t row, std::size_t col) { return labels_[row * width_ + col]; }
  std::uint16_t at(std::size_t row, std::size_t col) const {
    return labels_[row * width_ + col];
  }
  std::uint16_t at(Pixel p) const { return at(p.row, p.col); }

  int max_label() const;
  /// Number of pixels per class; index 0 counts background.
  std::vector<std::size_t> class_counts() const;

  const std::vector<std::uint16_t>& labels() const noexcept { return labels_; }

  friend bool operator==(const LabelField&, const LabelField&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<std::uint16_t> labels_;
};

}  // namespace mdcpe
