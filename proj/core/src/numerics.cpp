// SPDX-License-Identifier: Apache-2.0
#include "mdcpe/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mdcpe/error.hpp"

namespace mdcpe {
namespace {

constexpr double kBelowOne = 1.0 - 0x1.0p-53;
constexpr double kTiny = std::numeric_limits<double>::min();

}  // namespace

double sigmoid(double x) {
  double s;
  if (x >= 0.0) {
    s = 1.0 / (1.0 + std::exp(-x));
  } else {
    const double e = std::exp(x);
    s = e / (1.0 + e);
  }
  return std::clamp(s, kTiny, kBelowOne);
}

double tanh_act(double x) { return std::clamp(std::tanh(x), -kBelowOne, kBelowOne); }

Tensor sigmoid(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.values()) v = sigmoid(v);
  return out;
}

Tensor tanh_act(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.values()) v = tanh_act(v);
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

CrossEntropy cross_entropy(std::span<const double> probs, std::size_t target) {
  if (target >= probs.size())
    throw InvalidClass("target class " + std::to_string(target) +
                       " outside [0, " + std::to_string(probs.size()) + ")");
  CrossEntropy out;
  out.loss = -std::log(std::clamp(probs[target], kProbabilityFloor, 1.0));
  out.grad_logits.assign(probs.begin(), probs.end());
  out.grad_logits[target] -= 1.0;
  return out;
}

std::vector<double> linear(std::span<const double> x, const Tensor& weights,
                           const Tensor& bias) {
  if (weights.rank() != 2 || weights.dim(1) != x.size() ||
      bias.size() != weights.dim(0))
    throw ShapeError("linear: weights " + shape_string(weights.shape()) +
                     ", input " + std::to_string(x.size()) + ", bias " +
                     std::to_string(bias.size()));
  const std::size_t rows = weights.dim(0);
  const std::size_t cols = weights.dim(1);
  std::vector<double> y(rows);
  const double* w = weights.data();
  for (std::size_t i = 0; i < rows; ++i) {
    double acc = bias[i];
    const double* row = w + i * cols;
    for (std::size_t j = 0; j < cols; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
  return y;
}

std::vector<double> linear_backward(std::span<const double> x,
                                    std::span<const double> grad_out,
                                    const Tensor& weights, Tensor& grad_weights,
                                    Tensor& grad_bias) {
  const std::size_t rows = weights.dim(0);
  const std::size_t cols = weights.dim(1);
  if (x.size() != cols || grad_out.size() != rows)
    throw ShapeError("linear_backward: shape mismatch");
  std::vector<double> dx(cols, 0.0);
  const double* w = weights.data();
  double* gw = grad_weights.data();
  for (std::size_t i = 0; i < rows; ++i) {
    const double g = grad_out[i];
    if (g == 0.0) continue;
    grad_bias[i] += g;
    const double* row = w + i * cols;
    double* grow = gw + i * cols;
    for (std::size_t j = 0; j < cols; ++j) {
      grow[j] += g * x[j];
      dx[j] += g * row[j];
    }
  }
  return dx;
}

void sgd_step(ParamStore& params, double learning_rate) {
  if (!(learning_rate > 0.0))
    throw InvalidConfig("learning rate must be positive, got " +
                        std::to_string(learning_rate));
  for (auto& [name, p] : params) {
    double* v = p.value.data();
    const double* g = p.grad.data();
    for (std::size_t i = 0; i < p.value.size(); ++i) v[i] -= learning_rate * g[i];
    p.grad.fill(0.0);
  }
}

void init_uniform_fan_in(Tensor& t, std::size_t fan_in, SeededRng& rng) {
  const double s = std::sqrt(1.0 / static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  for (double& v : t.values()) v = rng.uniform(-s, s);
}

GradCheckResult gradient_check(const std::function<double(const ParamStore&)>& loss,
                               ParamStore& params, double epsilon) {
  GradCheckResult result;
  for (auto& [name, p] : params) {
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double saved = p.value[i];
      p.value[i] = saved + epsilon;
      const double up = loss(params);
      p.value[i] = saved - epsilon;
      const double down = loss(params);
      p.value[i] = saved;

      const double numeric = (up - down) / (2.0 * epsilon);
      const double analytic = p.grad[i];
      const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
      const double rel = std::abs(analytic - numeric) / scale;
      ++result.coordinates;
      if (rel > result.max_relative_error || !std::isfinite(rel)) {
        result.max_relative_error = rel;
        result.worst_parameter = name;
        result.worst_index = i;
      }
    }
  }
  return result;
}

}  // namespace mdcpe
