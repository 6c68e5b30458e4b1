// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "mdcpe/rng.hpp"
#include "mdcpe/rnn.hpp"
#include "mdcpe/tensor.hpp"

namespace mdcpe {

// Volumes are rank-4 tensors {maps, x, y, z} with z the spectral axis.
// Kernels are rank-5 tensors {out_maps, in_maps, kx, ky, kz}.

/// Valid 3-D cross-correlation followed by a sigmoid:
/// out[j](x,y,z) = sig(sum_m sum_h,l,d w[j][m](h,l,d) * in[m](x+h, y+l, z+d) + b[j]).
/// Throws ShapeError when the input is smaller than the kernel.
Tensor conv3d_forward(const Tensor& input, const Tensor& weight, const Tensor& bias);

/// Backward of conv3d_forward given its (sigmoid) output. Adds into
/// grad_weight / grad_bias; returns the input gradient when requested,
/// otherwise an empty tensor.
Tensor conv3d_backward(const Tensor& input, const Tensor& weight, const Tensor& output,
                       const Tensor& grad_output, Tensor& grad_weight, Tensor& grad_bias,
                       bool want_input_grad = true);

struct PoolResult {
  Tensor output;
  std::vector<std::size_t> argmax;  ///< flat input index per output element
};

/// Non-overlapping 2x2x2 max pooling per map; trailing partial windows pool
/// over the elements they have, so each extent n becomes ceil(n / 2). Ties
/// keep the first element in scan order.
PoolResult maxpool3d(const Tensor& input);
/// Routes each output gradient to its argmax input position.
Tensor maxpool3d_backward(const Tensor& grad_output, const std::vector<std::size_t>& argmax,
                          const Shape& input_shape);

struct CnnConfig {
  std::size_t patch = 15;     ///< spatial side, odd
  std::size_t channels = 3;   ///< spectral depth of the input (PCA components)
  std::size_t c1_maps = 8;
  std::size_t c2_maps = 16;
  std::array<std::size_t, 3> c1_kernel{5, 5, 5};
  std::array<std::size_t, 3> c2_kernel{3, 3, 3};
  std::size_t fc1 = 1024;
  std::size_t classes = 0;

  friend bool operator==(const CnnConfig&, const CnnConfig&) = default;
};

/// Derived layer extents. The spectral kernel depth is clamped to the depth
/// of the volume it slides over.
struct CnnGeometry {
  Shape input;
  Shape c1_kernel;  ///< {c1_maps, 1, kx, ky, kz}
  Shape c1_out;
  Shape p1_out;
  Shape c2_kernel;
  Shape c2_out;
  Shape p2_out;
  std::size_t flat = 0;

  /// Throws ShapeError when the patch is too small for the stack.
  static CnnGeometry compute(const CnnConfig& config);
};

/// C1 -> P1 -> C2 -> P2 -> flatten -> FC1 (sigmoid, dropout) -> FC2.
/// Parameter names: c1.{weight,bias}, c2.{weight,bias}, fc1.{weight,bias},
/// fc2.{weight,bias}.
class CnnModel {
 public:
  explicit CnnModel(CnnConfig config);
  CnnModel(CnnConfig config, SeededRng& rng);

  const CnnConfig& config() const noexcept { return config_; }
  const CnnGeometry& geometry() const noexcept { return geometry_; }
  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }

 private:
  CnnConfig config_;
  CnnGeometry geometry_;
  ParamStore params_;
};

struct CnnForward {
  Tensor input;
  Tensor c1_out;
  PoolResult p1;
  Tensor c2_out;
  PoolResult p2;
  std::vector<double> fc1_out;   ///< sigmoid activations before dropout
  std::vector<double> mask;      ///< 0 or 1/keep per unit; empty outside training
  std::vector<double> fc1_drop;  ///< fc1_out after the mask
  std::vector<double> logits;
};

/// `patch` has shape {patch, patch, channels}. Dropout with `dropout_rate` is
/// applied only when `training` is set, drawing the mask from `rng`.
CnnForward cnn_forward(const Tensor& patch, const CnnModel& model, bool training,
                       double dropout_rate, SeededRng* rng);
CnnForward cnn_forward(const Tensor& patch, const CnnGeometry& geometry,
                       const ParamStore& params, bool training, double dropout_rate,
                       SeededRng* rng);

void cnn_backward(const CnnForward& forward, std::span<const double> grad_logits,
                  ParamStore& params);

std::vector<double> cnn_predict(const Tensor& patch, const CnnModel& model);
std::vector<double> cnn_features(const Tensor& patch, const CnnModel& model);

struct CnnSample {
  Tensor patch;
  std::size_t target = 0;
};

/// Mini-batch SGD with a fresh dropout mask for every sample visit.
std::vector<double> cnn_train(CnnModel& model, std::span<const CnnSample> samples,
                              const TrainOptions& options, double dropout_rate,
                              SeededRng& rng);

}  // namespace mdcpe
