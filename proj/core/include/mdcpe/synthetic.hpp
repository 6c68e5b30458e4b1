// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mdcpe/cube.hpp"

namespace mdcpe {

enum class Geometry { Blocks, Stripes };

std::string to_string(Geometry geometry);
Geometry parse_geometry(const std::string& text);

struct SyntheticSpec {
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t bands = 16;
  std::size_t classes = 4;
  Geometry geometry = Geometry::Blocks;
  double scale = 1.0;        ///< magnitude of the class mean spectra
  double noise_sigma = 0.05;
  /// Relative class sizes; empty means equal. Blocks need equal ratios.
  std::vector<double> ratios;
};

struct SyntheticScene {
  HyperCube cube;
  LabelField labels;
  std::vector<std::vector<double>> means;  ///< mean spectrum of class i+1
};

/// Stripes: classes occupy consecutive row-major runs sized by `ratios`
/// (largest-remainder rounding, so counts are within 1 of the exact split).
/// Blocks: a rows x cols grid, rows = floor(sqrt(k)), cols = ceil(k / rows),
/// cell i labeled (i mod k) + 1. Every class mean is a seeded random walk
/// over bands; pixels add i.i.d. N(0, sigma^2) noise. Throws InvalidConfig
/// on impossible geometry.
SyntheticScene generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

/// Pixel count per class (index i = class i+1) for a stripes layout.
std::vector<std::size_t> stripe_counts(std::size_t pixels, const std::vector<double>& ratios);

}  // namespace mdcpe
