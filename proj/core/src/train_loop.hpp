// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <numeric>
#include <vector>

#include "mdcpe/error.hpp"
#include "mdcpe/numerics.hpp"
#include "mdcpe/rnn.hpp"

namespace mdcpe::detail {

/// Shuffled mini-batch SGD. `step(index)` runs forward + backward for one
/// sample, accumulating into params grads, and returns its loss.
template <typename SampleStep>
std::vector<double> minibatch_sgd(ParamStore& params, std::size_t sample_count,
                                  const TrainOptions& options, SeededRng& rng,
                                  SampleStep&& step) {
  if (sample_count == 0) throw InvalidInput("training set is empty");
  if (options.learning_rate < 0.0) throw InvalidConfig("learning rate must not be negative");
  if (options.batch_size == 0) throw InvalidConfig("batch size must be positive");

  std::vector<std::size_t> order(sample_count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> history;
  history.reserve(options.epochs);
  params.zero_grad();
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < sample_count; start += options.batch_size) {
      const std::size_t stop = std::min(sample_count, start + options.batch_size);
      for (std::size_t i = start; i < stop; ++i) epoch_loss += step(order[i]);
      if (options.learning_rate > 0.0) {
        params.scale_grad(1.0 / static_cast<double>(stop - start));
        sgd_step(params, options.learning_rate);
      } else {
        params.zero_grad();
      }
    }
    history.push_back(epoch_loss / static_cast<double>(sample_count));
  }
  return history;
}

}  // namespace mdcpe::detail
