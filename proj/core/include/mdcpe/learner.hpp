// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mdcpe/cnn.hpp"
#include "mdcpe/cube.hpp"
#include "mdcpe/rnn.hpp"

namespace mdcpe {

/// One learner's view of a pixel: class probabilities, FC2 features and the
/// argmax class (0-based, lowest index on ties).
struct Prediction {
  std::vector<double> probs;
  std::vector<double> features;
  std::size_t cls = 0;
};

/// A classifier that sees pixels through its own view of the image. The
/// co-training engine talks to learners only through this interface, so
/// selection code never touches ground truth.
class Learner {
 public:
  virtual ~Learner() = default;

  virtual std::size_t classes() const = 0;
  virtual Prediction predict(Pixel pixel) const = 0;
  /// Continue training on `set` (labels 1..k); returns per-epoch mean loss.
  virtual std::vector<double> train(std::span<const LabeledPixel> set, SeededRng& rng) = 0;
  virtual const ParamStore& params() const = 0;
  virtual void restore(const ParamStore& params) = 0;
};

/// GRU learner over each pixel's (normalized) spectrum.
class SpectralLearner final : public Learner {
 public:
  SpectralLearner(const HyperCube& cube, RnnModel model, TrainOptions options);

  std::size_t classes() const override { return model_.config().classes; }
  Prediction predict(Pixel pixel) const override;
  std::vector<double> train(std::span<const LabeledPixel> set, SeededRng& rng) override;
  const ParamStore& params() const override { return model_.params(); }
  void restore(const ParamStore& params) override;

  const RnnModel& model() const noexcept { return model_; }

 private:
  const HyperCube& cube_;
  RnnModel model_;
  TrainOptions options_;
};

/// 3-D CNN learner over PCA-reduced neighborhood patches.
class SpatialLearner final : public Learner {
 public:
  SpatialLearner(const HyperCube& reduced, CnnModel model, TrainOptions options,
                 double dropout_rate);

  std::size_t classes() const override { return model_.config().classes; }
  Prediction predict(Pixel pixel) const override;
  std::vector<double> train(std::span<const LabeledPixel> set, SeededRng& rng) override;
  const ParamStore& params() const override { return model_.params(); }
  void restore(const ParamStore& params) override;

  const CnnModel& model() const noexcept { return model_; }

 private:
  const HyperCube& reduced_;
  CnnModel model_;
  TrainOptions options_;
  double dropout_rate_;
};

/// Copies values of every entry in `source` into `target`; names and shapes
/// must match exactly (InvalidInput otherwise).
void copy_param_values(const ParamStore& source, ParamStore& target);

}  // namespace mdcpe
