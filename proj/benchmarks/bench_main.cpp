// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "mdcpe/cnn.hpp"
#include "mdcpe/cotrain.hpp"
#include "mdcpe/numerics.hpp"
#include "mdcpe/rnn.hpp"

namespace {

mdcpe::Tensor random_tensor(const mdcpe::Shape& shape, mdcpe::SeededRng& rng) {
  mdcpe::Tensor t(shape);
  for (auto& v : t.values()) v = rng.uniform(-1.0, 1.0);
  return t;
}

void BM_Conv3dForward(benchmark::State& state) {
  mdcpe::SeededRng rng(1);
  const auto maps = static_cast<std::size_t>(state.range(0));
  const auto input = random_tensor({1, 15, 15, 3}, rng);
  const auto weight = random_tensor({maps, 1, 5, 5, 3}, rng);
  const mdcpe::Tensor bias({maps}, 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(mdcpe::conv3d_forward(input, weight, bias));
}
BENCHMARK(BM_Conv3dForward)->Arg(1)->Arg(8);

void BM_GruStep(benchmark::State& state) {
  mdcpe::SeededRng rng(2);
  const auto hidden = static_cast<std::size_t>(state.range(0));
  mdcpe::RnnModel model({16, 4, hidden, hidden, 4}, rng);
  const auto gru = mdcpe::GruWeights::from(model.params());
  const std::vector<double> x{0.1, 0.2, 0.3, 0.4};
  const std::vector<double> h(hidden, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(mdcpe::gru_step(x, h, gru));
}
BENCHMARK(BM_GruStep)->Arg(16)->Arg(128);

void BM_CnnTrainStep(benchmark::State& state) {
  mdcpe::SeededRng rng(3);
  mdcpe::CnnConfig config;
  config.classes = 4;
  mdcpe::CnnModel model(config, rng);
  const auto patch = random_tensor({15, 15, 3}, rng);
  const std::vector<double> grad{0.1, -0.1, 0.05, -0.05};
  for (auto _ : state) {
    const auto fwd = mdcpe::cnn_forward(patch, model, true, 0.3, &rng);
    mdcpe::cnn_backward(fwd, grad, model.params());
    model.params().zero_grad();
  }
}
BENCHMARK(BM_CnnTrainStep);

void BM_SeededKMeans(benchmark::State& state) {
  mdcpe::SeededRng rng(4);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<std::vector<double>> features(n, std::vector<double>(4));
  for (auto& f : features)
    for (auto& v : f) v = rng.uniform();
  const std::vector<std::vector<double>> anchors(features.begin(), features.begin() + 4);
  for (auto _ : state) benchmark::DoNotOptimize(mdcpe::seeded_kmeans(features, anchors, 4));
}
BENCHMARK(BM_SeededKMeans)->Arg(256)->Arg(4096);

}  // namespace

BENCHMARK_MAIN();
