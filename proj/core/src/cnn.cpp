// SPDX-License-Identifier: Apache-2.0
#include "mdcpe/cnn.hpp"

#include <algorithm>
#include <string>

#include "mdcpe/error.hpp"
#include "mdcpe/numerics.hpp"
#include "train_loop.hpp"

namespace mdcpe {
namespace {

std::size_t half_up(std::size_t n) { return (n + 1) / 2; }

void check_conv_shapes(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  if (input.rank() != 4 || weight.rank() != 5)
    throw ShapeError("conv3d: input must be rank 4 and weight rank 5, got " +
                     shape_string(input.shape()) + " and " + shape_string(weight.shape()));
  if (weight.dim(1) != input.dim(0) || bias.size() != weight.dim(0))
    throw ShapeError("conv3d: weight " + shape_string(weight.shape()) +
                     " does not connect input " + shape_string(input.shape()));
  for (std::size_t a = 0; a < 3; ++a)
    if (input.dim(a + 1) < weight.dim(a + 2) || weight.dim(a + 2) == 0)
      throw ShapeError("conv3d: input " + shape_string(input.shape()) +
                       " smaller than kernel " + shape_string(weight.shape()));
}

}  // namespace

Tensor conv3d_forward(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  check_conv_shapes(input, weight, bias);
  const std::size_t in_maps = input.dim(0);
  const std::size_t ix = input.dim(1), iy = input.dim(2), iz = input.dim(3);
  const std::size_t out_maps = weight.dim(0);
  const std::size_t kx = weight.dim(2), ky = weight.dim(3), kz = weight.dim(4);
  const std::size_t ox = ix - kx + 1, oy = iy - ky + 1, oz = iz - kz + 1;

  Tensor out({out_maps, ox, oy, oz});
  const double* in = input.data();
  const double* w = weight.data();
  double* o = out.data();
  for (std::size_t n = 0; n < out_maps; ++n)
    for (std::size_t x = 0; x < ox; ++x)
      for (std::size_t y = 0; y < oy; ++y)
        for (std::size_t z = 0; z < oz; ++z) {
          double acc = bias[n];
          for (std::size_t m = 0; m < in_maps; ++m) {
            const double* wk = w + ((n * in_maps + m) * kx * ky * kz);
            const double* im = in + m * ix * iy * iz;
            for (std::size_t h = 0; h < kx; ++h)
              for (std::size_t l = 0; l < ky; ++l) {
                const double* row = im + ((x + h) * iy + (y + l)) * iz + z;
                const double* wrow = wk + (h * ky + l) * kz;
                for (std::size_t d = 0; d < kz; ++d) acc += wrow[d] * row[d];
              }
          }
          o[((n * ox + x) * oy + y) * oz + z] = sigmoid(acc);
        }
  return out;
}

Tensor conv3d_backward(const Tensor& input, const Tensor& weight, const Tensor& output,
                       const Tensor& grad_output, Tensor& grad_weight, Tensor& grad_bias,
                       bool want_input_grad) {
  check_conv_shapes(input, weight, grad_bias);
  if (output.shape() != grad_output.shape())
    throw ShapeError("conv3d_backward: gradient shape does not match output");
  const std::size_t in_maps = input.dim(0);
  const std::size_t ix = input.dim(1), iy = input.dim(2), iz = input.dim(3);
  const std::size_t out_maps = weight.dim(0);
  const std::size_t kx = weight.dim(2), ky = weight.dim(3), kz = weight.dim(4);
  const std::size_t ox = output.dim(1), oy = output.dim(2), oz = output.dim(3);

  Tensor grad_input;
  if (want_input_grad) grad_input = Tensor(input.shape());
  const double* in = input.data();
  const double* w = weight.data();
  double* gw = grad_weight.data();
  double* gi = want_input_grad ? grad_input.data() : nullptr;

  for (std::size_t n = 0; n < out_maps; ++n)
    for (std::size_t x = 0; x < ox; ++x)
      for (std::size_t y = 0; y < oy; ++y)
        for (std::size_t z = 0; z < oz; ++z) {
          const std::size_t oi = ((n * ox + x) * oy + y) * oz + z;
          const double s = output[oi];
          const double g = grad_output[oi] * s * (1.0 - s);
          if (g == 0.0) continue;
          grad_bias[n] += g;
          for (std::size_t m = 0; m < in_maps; ++m) {
            const std::size_t wbase = (n * in_maps + m) * kx * ky * kz;
            const std::size_t ibase = m * ix * iy * iz;
            for (std::size_t h = 0; h < kx; ++h)
              for (std::size_t l = 0; l < ky; ++l) {
                const std::size_t irow = ibase + ((x + h) * iy + (y + l)) * iz + z;
                const std::size_t wrow = wbase + (h * ky + l) * kz;
                for (std::size_t d = 0; d < kz; ++d) {
                  gw[wrow + d] += g * in[irow + d];
                  if (gi) gi[irow + d] += g * w[wrow + d];
                }
              }
          }
        }
  return grad_input;
}

PoolResult maxpool3d(const Tensor& input) {
  if (input.rank() != 4) throw ShapeError("maxpool3d: expected a rank-4 volume");
  const std::size_t maps = input.dim(0);
  const std::size_t ix = input.dim(1), iy = input.dim(2), iz = input.dim(3);
  const std::size_t ox = half_up(ix), oy = half_up(iy), oz = half_up(iz);
  PoolResult r{Tensor({maps, ox, oy, oz}), std::vector<std::size_t>(maps * ox * oy * oz)};
  std::size_t out_index = 0;
  for (std::size_t m = 0; m < maps; ++m)
    for (std::size_t x = 0; x < ox; ++x)
      for (std::size_t y = 0; y < oy; ++y)
        for (std::size_t z = 0; z < oz; ++z, ++out_index) {
          std::size_t best = ((m * ix + 2 * x) * iy + 2 * y) * iz + 2 * z;
          for (std::size_t a = 2 * x; a < std::min(2 * x + 2, ix); ++a)
            for (std::size_t b = 2 * y; b < std::min(2 * y + 2, iy); ++b)
              for (std::size_t c = 2 * z; c < std::min(2 * z + 2, iz); ++c) {
                const std::size_t idx = ((m * ix + a) * iy + b) * iz + c;
                if (input[idx] > input[best]) best = idx;
              }
          r.output[out_index] = input[best];
          r.argmax[out_index] = best;
        }
  return r;
}

Tensor maxpool3d_backward(const Tensor& grad_output, const std::vector<std::size_t>& argmax,
                          const Shape& input_shape) {
  if (grad_output.size() != argmax.size())
    throw InternalError("maxpool3d_backward: argmax cache does not match gradient");
  Tensor grad(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) grad[argmax[i]] += grad_output[i];
  return grad;
}

CnnGeometry CnnGeometry::compute(const CnnConfig& c) {
  if (c.patch == 0 || c.channels == 0 || c.c1_maps == 0 || c.c2_maps == 0 || c.fc1 == 0 ||
      c.classes == 0)
    throw InvalidConfig("cnn config: sizes must be positive");
  for (auto k : c.c1_kernel)
    if (k == 0) throw InvalidConfig("cnn config: kernel extents must be positive");
  for (auto k : c.c2_kernel)
    if (k == 0) throw InvalidConfig("cnn config: kernel extents must be positive");

  CnnGeometry g;
  g.input = {1, c.patch, c.patch, c.channels};
  const std::size_t k1z = std::min(c.c1_kernel[2], c.channels);
  if (c.patch < c.c1_kernel[0] || c.patch < c.c1_kernel[1])
    throw ShapeError("patch " + std::to_string(c.patch) + " smaller than the C1 kernel");
  g.c1_kernel = {c.c1_maps, 1, c.c1_kernel[0], c.c1_kernel[1], k1z};
  g.c1_out = {c.c1_maps, c.patch - c.c1_kernel[0] + 1, c.patch - c.c1_kernel[1] + 1,
              c.channels - k1z + 1};
  g.p1_out = {c.c1_maps, half_up(g.c1_out[1]), half_up(g.c1_out[2]), half_up(g.c1_out[3])};
  const std::size_t k2z = std::min(c.c2_kernel[2], g.p1_out[3]);
  if (g.p1_out[1] < c.c2_kernel[0] || g.p1_out[2] < c.c2_kernel[1])
    throw ShapeError("patch " + std::to_string(c.patch) +
                     " too small: pooled C1 output " + shape_string(g.p1_out) +
                     " cannot hold the C2 kernel");
  g.c2_kernel = {c.c2_maps, c.c1_maps, c.c2_kernel[0], c.c2_kernel[1], k2z};
  g.c2_out = {c.c2_maps, g.p1_out[1] - c.c2_kernel[0] + 1, g.p1_out[2] - c.c2_kernel[1] + 1,
              g.p1_out[3] - k2z + 1};
  g.p2_out = {c.c2_maps, half_up(g.c2_out[1]), half_up(g.c2_out[2]), half_up(g.c2_out[3])};
  g.flat = shape_size(g.p2_out);
  return g;
}

CnnModel::CnnModel(CnnConfig config)
    : config_(config), geometry_(CnnGeometry::compute(config_)) {
  params_.add("c1.weight", geometry_.c1_kernel);
  params_.add("c1.bias", {config_.c1_maps});
  params_.add("c2.weight", geometry_.c2_kernel);
  params_.add("c2.bias", {config_.c2_maps});
  params_.add("fc1.weight", {config_.fc1, geometry_.flat});
  params_.add("fc1.bias", {config_.fc1});
  params_.add("fc2.weight", {config_.classes, config_.fc1});
  params_.add("fc2.bias", {config_.classes});
}

CnnModel::CnnModel(CnnConfig config, SeededRng& rng) : CnnModel(config) {
  const auto& k1 = geometry_.c1_kernel;
  const auto& k2 = geometry_.c2_kernel;
  init_uniform_fan_in(params_.value("c1.weight"), k1[1] * k1[2] * k1[3] * k1[4], rng);
  init_uniform_fan_in(params_.value("c2.weight"), k2[1] * k2[2] * k2[3] * k2[4], rng);
  init_uniform_fan_in(params_.value("fc1.weight"), geometry_.flat, rng);
  init_uniform_fan_in(params_.value("fc2.weight"), config_.fc1, rng);
}

CnnForward cnn_forward(const Tensor& patch, const CnnGeometry& geometry,
                       const ParamStore& params, bool training, double dropout_rate,
                       SeededRng* rng) {
  const Shape expected{geometry.input[1], geometry.input[2], geometry.input[3]};
  if (patch.shape() != expected)
    throw ShapeError("cnn: patch " + shape_string(patch.shape()) + " but model expects " +
                     shape_string(expected));
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    throw InvalidConfig("dropout rate must lie in [0, 1)");

  CnnForward f;
  f.input = patch.reshaped(geometry.input);
  f.c1_out = conv3d_forward(f.input, params.value("c1.weight"), params.value("c1.bias"));
  f.p1 = maxpool3d(f.c1_out);
  f.c2_out = conv3d_forward(f.p1.output, params.value("c2.weight"), params.value("c2.bias"));
  f.p2 = maxpool3d(f.c2_out);
  f.fc1_out = linear(f.p2.output.values(), params.value("fc1.weight"), params.value("fc1.bias"));
  for (double& v : f.fc1_out) v = sigmoid(v);

  f.fc1_drop = f.fc1_out;
  if (training) {
    f.mask.assign(f.fc1_out.size(), 1.0);
    if (dropout_rate > 0.0) {
      if (rng == nullptr) throw InvalidInput("dropout in training mode needs an rng");
      const double keep_scale = 1.0 / (1.0 - dropout_rate);
      for (double& m : f.mask) m = rng->uniform() < dropout_rate ? 0.0 : keep_scale;
    }
    for (std::size_t i = 0; i < f.mask.size(); ++i) f.fc1_drop[i] *= f.mask[i];
  }
  f.logits = linear(f.fc1_drop, params.value("fc2.weight"), params.value("fc2.bias"));
  return f;
}

CnnForward cnn_forward(const Tensor& patch, const CnnModel& model, bool training,
                       double dropout_rate, SeededRng* rng) {
  return cnn_forward(patch, model.geometry(), model.params(), training, dropout_rate, rng);
}

void cnn_backward(const CnnForward& f, std::span<const double> grad_logits,
                  ParamStore& params) {
  if (f.logits.empty() || f.c1_out.empty() || f.fc1_out.empty())
    throw InternalError("cnn_backward called without forward caches");

  Param& fc2w = params.at("fc2.weight");
  Param& fc2b = params.at("fc2.bias");
  Param& fc1w = params.at("fc1.weight");
  Param& fc1b = params.at("fc1.bias");
  Param& c2w = params.at("c2.weight");
  Param& c2b = params.at("c2.bias");
  Param& c1w = params.at("c1.weight");
  Param& c1b = params.at("c1.bias");

  std::vector<double> d_fc1 = linear_backward(f.fc1_drop, grad_logits, fc2w.value, fc2w.grad,
                                              fc2b.grad);
  for (std::size_t i = 0; i < d_fc1.size(); ++i) {
    if (!f.mask.empty()) d_fc1[i] *= f.mask[i];
    d_fc1[i] *= f.fc1_out[i] * (1.0 - f.fc1_out[i]);
  }
  std::vector<double> d_flat =
      linear_backward(f.p2.output.values(), d_fc1, fc1w.value, fc1w.grad, fc1b.grad);

  const Tensor d_p2(f.p2.output.shape(), std::move(d_flat));
  const Tensor d_c2 = maxpool3d_backward(d_p2, f.p2.argmax, f.c2_out.shape());
  const Tensor d_p1 =
      conv3d_backward(f.p1.output, c2w.value, f.c2_out, d_c2, c2w.grad, c2b.grad, true);
  const Tensor d_c1 = maxpool3d_backward(d_p1, f.p1.argmax, f.c1_out.shape());
  conv3d_backward(f.input, c1w.value, f.c1_out, d_c1, c1w.grad, c1b.grad, false);
}

std::vector<double> cnn_features(const Tensor& patch, const CnnModel& model) {
  return cnn_forward(patch, model, false, 0.0, nullptr).logits;
}

std::vector<double> cnn_predict(const Tensor& patch, const CnnModel& model) {
  return softmax(cnn_features(patch, model));
}

std::vector<double> cnn_train(CnnModel& model, std::span<const CnnSample> samples,
                              const TrainOptions& options, double dropout_rate,
                              SeededRng& rng) {
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    throw InvalidConfig("dropout rate must lie in [0, 1)");
  const std::size_t classes = model.config().classes;
  for (const auto& s : samples)
    if (s.target >= classes)
      throw InvalidClass("training target " + std::to_string(s.target) + " outside [0, " +
                         std::to_string(classes) + ")");
  ParamStore& params = model.params();
  const CnnGeometry& geometry = model.geometry();
  return detail::minibatch_sgd(params, samples.size(), options, rng, [&](std::size_t i) {
    const CnnForward fwd =
        cnn_forward(samples[i].patch, geometry, params, true, dropout_rate, &rng);
    const CrossEntropy ce = cross_entropy(softmax(fwd.logits), samples[i].target);
    cnn_backward(fwd, ce.grad_logits, params);
    return ce.loss;
  });
}

}  // namespace mdcpe
