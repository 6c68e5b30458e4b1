// SPDX-License-Identifier: Apache-2.0
#include "mdcpe/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mdcpe/error.hpp"
#include "mdcpe/rng.hpp"

namespace mdcpe {
namespace {

constexpr int kMeanAttempts = 64;

double rms_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s / static_cast<double>(a.size()));
}

std::vector<std::vector<double>> draw_means(const SyntheticSpec& spec, SeededRng& rng) {
  // Redraw walks that land too close to an earlier class.
  const double min_gap = 0.05 * spec.scale;
  std::vector<std::vector<double>> means;
  for (std::size_t c = 0; c < spec.classes; ++c) {
    std::vector<double> walk(spec.bands);
    for (int attempt = 0; attempt < kMeanAttempts; ++attempt) {
      double v = rng.uniform(0.2, 0.8) * spec.scale;
      for (auto& w : walk) {
        w = v;
        v += 0.1 * spec.scale * rng.normal();
      }
      const bool distinct = std::all_of(means.begin(), means.end(), [&](const auto& m) {
        return rms_distance(m, walk) >= min_gap;
      });
      if (distinct) break;
    }
    means.push_back(walk);
  }
  return means;
}

}  // namespace

std::string to_string(Geometry geometry) {
  return geometry == Geometry::Blocks ? "blocks" : "stripes";
}

Geometry parse_geometry(const std::string& text) {
  if (text == "blocks") return Geometry::Blocks;
  if (text == "stripes") return Geometry::Stripes;
  throw InvalidConfig("unknown geometry '" + text + "' (expected blocks or stripes)");
}

std::vector<std::size_t> stripe_counts(std::size_t pixels, const std::vector<double>& ratios) {
  const double total = std::accumulate(ratios.begin(), ratios.end(), 0.0);
  std::vector<std::size_t> counts(ratios.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    const double exact = static_cast<double>(pixels) * ratios[i] / total;
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[i];
    remainders.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < pixels; ++i, ++assigned) ++counts[remainders[i].second];
  return counts;
}

SyntheticScene generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  const std::size_t k = spec.classes;
  if (spec.height == 0 || spec.width == 0 || spec.bands == 0)
    throw InvalidConfig("synthetic scene needs positive H, W and B");
  if (k == 0 || k > 65535) throw InvalidConfig("synthetic scene needs 1..65535 classes");
  if (!(spec.noise_sigma >= 0.0)) throw InvalidConfig("noise sigma must be non-negative");
  if (!(spec.scale > 0.0)) throw InvalidConfig("spectrum scale must be positive");

  std::vector<double> ratios = spec.ratios.empty() ? std::vector<double>(k, 1.0) : spec.ratios;
  if (ratios.size() != k)
    throw InvalidConfig(std::to_string(ratios.size()) + " ratios for " + std::to_string(k) +
                        " classes");
  for (double r : ratios)
    if (!(r > 0.0) || !std::isfinite(r)) throw InvalidConfig("class ratios must be positive");

  LabelField labels(spec.height, spec.width);
  if (spec.geometry == Geometry::Stripes) {
    if (k > spec.height)
      throw InvalidConfig("stripes need k <= H (k=" + std::to_string(k) +
                          ", H=" + std::to_string(spec.height) + ")");
    const auto counts = stripe_counts(spec.height * spec.width, ratios);
    std::size_t p = 0;
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0)
        throw InvalidConfig("class " + std::to_string(c + 1) + " gets no pixels");
      for (std::size_t i = 0; i < counts[c]; ++i, ++p)
        labels.at(p / spec.width, p % spec.width) = static_cast<std::uint16_t>(c + 1);
    }
  } else {
    if (!std::all_of(ratios.begin(), ratios.end(), [&](double r) { return r == ratios[0]; }))
      throw InvalidConfig("block geometry needs equal class ratios");
    const auto rows = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(k))));
    const std::size_t cols = (k + rows - 1) / rows;
    if (rows > spec.height || cols > spec.width)
      throw InvalidConfig("a " + std::to_string(rows) + "x" + std::to_string(cols) +
                          " block grid does not fit " + std::to_string(spec.height) + "x" +
                          std::to_string(spec.width));
    for (std::size_t r = 0; r < spec.height; ++r)
      for (std::size_t c = 0; c < spec.width; ++c) {
        const std::size_t cell = (r * rows / spec.height) * cols + (c * cols / spec.width);
        labels.at(r, c) = static_cast<std::uint16_t>(cell % k + 1);
      }
  }

  SeededRng rng(seed);
  auto means = draw_means(spec, rng);
  HyperCube cube(spec.height, spec.width, spec.bands);
  for (std::size_t r = 0; r < spec.height; ++r)
    for (std::size_t c = 0; c < spec.width; ++c) {
      const auto& mean = means[labels.at(r, c) - 1];
      for (std::size_t b = 0; b < spec.bands; ++b)
        cube.at(r, c, b) = mean[b] + (spec.noise_sigma > 0 ? spec.noise_sigma * rng.normal() : 0.0);
    }
  return {std::move(cube), std::move(labels), std::move(means)};
}

}  // namespace mdcpe
