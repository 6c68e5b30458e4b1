// SPDX-License-Identifier: Apache-2.0
#include "mdcpe/learner.hpp"

#include <string>

#include "mdcpe/error.hpp"
#include "mdcpe/numerics.hpp"
#include "mdcpe/preprocess.hpp"

namespace mdcpe {
namespace {

Prediction from_logits(std::vector<double> logits) {
  Prediction p;
  p.probs = softmax(logits);
  p.cls = argmax(p.probs);
  p.features = std::move(logits);
  return p;
}

std::size_t target_of(const LabeledPixel& lp, std::size_t classes) {
  if (lp.label < 1 || static_cast<std::size_t>(lp.label) > classes)
    throw InvalidClass("label " + std::to_string(lp.label) + " outside 1.." +
                       std::to_string(classes));
  return static_cast<std::size_t>(lp.label - 1);
}

}  // namespace

void copy_param_values(const ParamStore& source, ParamStore& target) {
  if (source.size() != target.size())
    throw InvalidInput("parameter sets differ in size");
  for (const auto& [name, p] : source) {
    Param& dst = target.at(name);
    if (dst.value.shape() != p.value.shape())
      throw InvalidInput("parameter '" + name + "' has shape " +
                         shape_string(p.value.shape()) + ", expected " +
                         shape_string(dst.value.shape()));
    dst.value = p.value;
    dst.grad.fill(0.0);
  }
}

SpectralLearner::SpectralLearner(const HyperCube& cube, RnnModel model, TrainOptions options)
    : cube_(cube), model_(std::move(model)), options_(options) {
  if (cube_.bands() != model_.config().bands)
    throw ShapeError("spectral learner: cube has " + std::to_string(cube_.bands()) +
                     " bands, model expects " + std::to_string(model_.config().bands));
}

Prediction SpectralLearner::predict(Pixel pixel) const {
  return from_logits(rnn_features(cube_.spectrum(pixel), model_));
}

std::vector<double> SpectralLearner::train(std::span<const LabeledPixel> set, SeededRng& rng) {
  std::vector<RnnSample> samples;
  samples.reserve(set.size());
  for (const auto& lp : set)
    samples.push_back({rnn_sequence(cube_.spectrum(lp.pixel), model_.config()),
                       target_of(lp, classes())});
  return rnn_train(model_, samples, options_, rng);
}

void SpectralLearner::restore(const ParamStore& params) {
  copy_param_values(params, model_.params());
}

SpatialLearner::SpatialLearner(const HyperCube& reduced, CnnModel model, TrainOptions options,
                               double dropout_rate)
    : reduced_(reduced), model_(std::move(model)), options_(options),
      dropout_rate_(dropout_rate) {
  if (reduced_.bands() != model_.config().channels)
    throw ShapeError("spatial learner: cube has " + std::to_string(reduced_.bands()) +
                     " channels, model expects " + std::to_string(model_.config().channels));
}

Prediction SpatialLearner::predict(Pixel pixel) const {
  return from_logits(
      cnn_features(extract_patch(reduced_, pixel.row, pixel.col, model_.config().patch), model_));
}

std::vector<double> SpatialLearner::train(std::span<const LabeledPixel> set, SeededRng& rng) {
  std::vector<CnnSample> samples;
  samples.reserve(set.size());
  for (const auto& lp : set)
    samples.push_back({extract_patch(reduced_, lp.pixel.row, lp.pixel.col, model_.config().patch),
                       target_of(lp, classes())});
  return cnn_train(model_, samples, options_, dropout_rate_, rng);
}

void SpatialLearner::restore(const ParamStore& params) {
  copy_param_values(params, model_.params());
}

}  // namespace mdcpe
