// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mdcpe/rng.hpp"
#include "mdcpe/tensor.hpp"

namespace mdcpe {

struct RnnConfig {
  std::size_t bands = 0;     ///< spectrum length B
  std::size_t group = 4;     ///< bands fed per recurrent step
  std::size_t hidden = 128;
  std::size_t fc1 = 128;
  std::size_t classes = 0;

  std::size_t steps() const { return (bands + group - 1) / group; }
  void validate() const;
  friend bool operator==(const RnnConfig&, const RnnConfig&) = default;
};

/// Read-only view of the six gate matrices of one GRU layer (no biases).
/// Input-to-hidden matrices are hidden x input, hidden-to-hidden are
/// hidden x hidden.
struct GruWeights {
  const Tensor& w_z;
  const Tensor& u_z;
  const Tensor& w_r;
  const Tensor& u_r;
  const Tensor& w;
  const Tensor& u;

  static GruWeights from(const ParamStore& params);
  std::size_t hidden() const { return u.dim(0); }
  std::size_t input() const { return w.dim(1); }
};

/// Everything one recurrent step needs for backpropagation.
struct GruStepCache {
  std::vector<double> x;
  std::vector<double> h_prev;
  std::vector<double> z;          ///< update gate
  std::vector<double> r;          ///< reset gate
  std::vector<double> candidate;  ///< tanh(W x + r * (U h_prev))
  std::vector<double> u_h;        ///< U h_prev
  std::vector<double> h;
};

/// z = sig(Wz x + Uz h), r = sig(Wr x + Ur h), c = tanh(W x + r * (U h)),
/// h' = z * h + (1 - z) * c.
GruStepCache gru_step(std::span<const double> x, std::span<const double> h_prev,
                      const GruWeights& layer);

/// GRU -> FC1 (tanh) -> FC2. Parameter names: gru.{W,U,Wz,Uz,Wr,Ur},
/// fc1.{weight,bias}, fc2.{weight,bias}.
class RnnModel {
 public:
  /// All-zero parameters.
  explicit RnnModel(RnnConfig config);
  /// Uniform fan-in initialization from `rng` (biases stay zero).
  RnnModel(RnnConfig config, SeededRng& rng);

  const RnnConfig& config() const noexcept { return config_; }
  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }

 private:
  RnnConfig config_;
  ParamStore params_;
};

struct RnnForward {
  std::vector<GruStepCache> steps;
  std::vector<double> fc1_out;  ///< tanh activations
  std::vector<double> logits;
};

/// `sequence` has shape {steps, group}. Throws InvalidInput when empty.
RnnForward rnn_forward(const Tensor& sequence, const RnnModel& model);
RnnForward rnn_forward(const Tensor& sequence, const ParamStore& params);

/// Full backpropagation through time; gradients are added into
/// model.params() grads. Throws InternalError without forward caches.
void rnn_backward(const RnnForward& forward, std::span<const double> grad_logits,
                  ParamStore& params);

/// Chunk a raw spectrum into the model's step layout (zero-padded).
Tensor rnn_sequence(std::span<const double> spectrum, const RnnConfig& config);

/// softmax(logits) for a raw B-length spectrum. Throws ShapeError on a
/// length mismatch.
std::vector<double> rnn_predict(std::span<const double> spectrum, const RnnModel& model);
/// FC2 logits for a raw B-length spectrum.
std::vector<double> rnn_features(std::span<const double> spectrum, const RnnModel& model);

struct RnnSample {
  Tensor sequence;
  std::size_t target = 0;  ///< 0-based class index
};

struct TrainOptions {
  std::size_t epochs = 100;
  double learning_rate = 0.01;
  std::size_t batch_size = 32;
};

/// Mini-batch SGD on the mean batch cross-entropy, reshuffling every epoch.
/// Returns the mean loss per epoch. A zero learning rate leaves the model
/// untouched.
std::vector<double> rnn_train(RnnModel& model, std::span<const RnnSample> samples,
                              const TrainOptions& options, SeededRng& rng);

}  // namespace mdcpe
