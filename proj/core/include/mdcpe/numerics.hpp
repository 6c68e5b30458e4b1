// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mdcpe/rng.hpp"
#include "mdcpe/tensor.hpp"

namespace mdcpe {

// Activations. Outputs are kept strictly inside the open ranges (0,1) and
// (-1,1) even where the exact value would round to the boundary.
double sigmoid(double x);
double tanh_act(double x);
Tensor sigmoid(const Tensor& x);
Tensor tanh_act(const Tensor& x);

/// Max-subtracted softmax.
std::vector<double> softmax(std::span<const double> logits);

/// Index of the largest value; the lowest index wins ties.
std::size_t argmax(std::span<const double> values);

inline constexpr double kProbabilityFloor = 1e-12;

struct CrossEntropy {
  double loss = 0.0;
  /// d loss / d logits = probs - one_hot(target).
  std::vector<double> grad_logits;
};

/// -log(probs[target]) with probs clamped to [1e-12, 1]. Throws InvalidClass
/// when target is outside [0, probs.size()).
CrossEntropy cross_entropy(std::span<const double> probs, std::size_t target);

/// y = W x + b for W of shape (out, in), x of length in, b of length out.
std::vector<double> linear(std::span<const double> x, const Tensor& weights,
                           const Tensor& bias);
/// Accumulates dW += dy x^T, db += dy; returns dx = W^T dy.
std::vector<double> linear_backward(std::span<const double> x,
                                    std::span<const double> grad_out,
                                    const Tensor& weights, Tensor& grad_weights,
                                    Tensor& grad_bias);

/// value -= learning_rate * grad for every entry, then zero the gradients.
/// Throws InvalidConfig for a non-positive learning rate.
void sgd_step(ParamStore& params, double learning_rate);

/// Uniform [-s, s] with s = sqrt(1 / fan_in).
void init_uniform_fan_in(Tensor& t, std::size_t fan_in, SeededRng& rng);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  std::size_t coordinates = 0;
};

/// Compares the gradients already stored in `params` against central
/// differences (f(t+eps) - f(t-eps)) / 2eps of `loss`, coordinate by
/// coordinate. Relative error is |a - n| / max(|a|, |n|, 1e-6). Parameter
/// values are restored before returning.
GradCheckResult gradient_check(const std::function<double(const ParamStore&)>& loss,
                               ParamStore& params, double epsilon);

}  // namespace mdcpe
