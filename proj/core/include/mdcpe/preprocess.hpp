// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mdcpe/cube.hpp"
#include "mdcpe/tensor.hpp"

namespace mdcpe {

/// Per-band min-max scaling to [0, 1] over all pixels. A constant band maps
/// to zero.
HyperCube minmax_normalize(const HyperCube& cube);

struct EigenDecomposition {
  std::vector<double> values;  ///< descending
  Tensor vectors;              ///< n x n, row i is the eigenvector of values[i]
  int sweeps = 0;
};

/// Cyclic Jacobi rotations on a symmetric n x n matrix. Sweeps until the
/// off-diagonal Frobenius norm drops below `tolerance` or `max_sweeps` is hit.
EigenDecomposition jacobi_eigen(const Tensor& symmetric, double tolerance = 1e-10,
                                int max_sweeps = 100);

struct PcaModel {
  std::vector<double> mean;                 ///< length B
  Tensor components;                        ///< p x B, orthonormal rows
  std::vector<double> explained_variance;   ///< length p, non-increasing
  double total_variance = 0.0;              ///< sum over all B eigenvalues

  std::size_t input_bands() const { return mean.size(); }
  std::size_t output_components() const { return explained_variance.size(); }
  double explained_ratio() const;
};

/// Keeps the smallest component count whose cumulative explained-variance
/// ratio reaches `variance_target` (in (0, 1]).
PcaModel pca_fit(const HyperCube& cube, double variance_target);
/// Keeps exactly `components` components (1..B).
PcaModel pca_fit_components(const HyperCube& cube, std::size_t components);

HyperCube pca_transform(const HyperCube& cube, const PcaModel& model);

/// size x size x p window centered on (row, col); coordinates outside the
/// image reflect about the edge without repeating it (-1 -> 1). Returned
/// shape is {size, size, p}. Throws InvalidConfig for an even size.
Tensor extract_patch(const HyperCube& cube, std::size_t row, std::size_t col,
                     std::size_t size);

/// Reflect an out-of-range index into [0, extent).
std::size_t reflect_index(std::ptrdiff_t index, std::size_t extent);

/// The pixel's bands in ascending order, chunked into steps of `group`
/// values; the final chunk is zero-padded. Shape {ceil(B/group), group}.
Tensor spectral_sequence(const HyperCube& cube, std::size_t row, std::size_t col,
                         std::size_t group);

struct SplitSpec {
  double labeled_fraction = 0.005;
  double validation_fraction = 0.015;
  std::uint64_t seed = 0;
};

/// Labeled, validation and test partition the ground truth; `unlabeled` is
/// every ground-truth pixel outside `labeled` and carries no labels.
struct DataSplit {
  std::vector<LabeledPixel> labeled;
  std::vector<LabeledPixel> validation;
  std::vector<LabeledPixel> test;
  std::vector<Pixel> unlabeled;
  int classes = 0;
};

/// Per-class seeded shuffle. Throws InsufficientClass when a class present
/// in 1..max_label has fewer than 3 pixels, InvalidConfig for bad fractions.
DataSplit split_data(const LabelField& ground_truth, const SplitSpec& spec);

/// Per-class sample counts used by split_data for a class of n pixels.
struct ClassQuota {
  std::size_t labeled = 0;
  std::size_t validation = 0;
  std::size_t test = 0;
};
ClassQuota class_quota(std::size_t n, const SplitSpec& spec);

}  // namespace mdcpe
