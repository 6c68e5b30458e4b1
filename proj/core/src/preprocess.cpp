// SPDX-License-Identifier: Apache-2.0
#include "mdcpe/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mdcpe/error.hpp"
#include "mdcpe/rng.hpp"

namespace mdcpe {

HyperCube minmax_normalize(const HyperCube& cube) {
  HyperCube out = cube;
  const std::size_t bands = cube.bands();
  if (cube.pixel_count() == 0) return out;
  std::vector<double> lo(bands, INFINITY), hi(bands, -INFINITY);
  for (std::size_t r = 0; r < cube.height(); ++r)
    for (std::size_t c = 0; c < cube.width(); ++c) {
      auto s = cube.spectrum(r, c);
      for (std::size_t b = 0; b < bands; ++b) {
        lo[b] = std::min(lo[b], s[b]);
        hi[b] = std::max(hi[b], s[b]);
      }
    }
  for (std::size_t r = 0; r < cube.height(); ++r)
    for (std::size_t c = 0; c < cube.width(); ++c) {
      auto s = out.spectrum(r, c);
      for (std::size_t b = 0; b < bands; ++b) {
        const double range = hi[b] - lo[b];
        s[b] = range > 0.0 ? std::clamp((s[b] - lo[b]) / range, 0.0, 1.0) : 0.0;
      }
    }
  return out;
}

EigenDecomposition jacobi_eigen(const Tensor& symmetric, double tolerance, int max_sweeps) {
  if (symmetric.rank() != 2 || symmetric.dim(0) != symmetric.dim(1))
    throw ShapeError("jacobi_eigen needs a square matrix, got " +
                     shape_string(symmetric.shape()));
  const std::size_t n = symmetric.dim(0);
  Tensor a = symmetric;
  Tensor v({n, n});
  for (std::size_t i = 0; i < n; ++i) v.at(i, i) = 1.0;

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s += a.at(i, j) * a.at(i, j);
    return std::sqrt(s);
  };

  EigenDecomposition out;
  while (out.sweeps < max_sweeps && off_norm() >= tolerance) {
    ++out.sweeps;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a.at(p, q);
        if (apq == 0.0) continue;
        const double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t r = 0; r < n; ++r) {
          const double arp = a.at(r, p), arq = a.at(r, q);
          a.at(r, p) = c * arp - s * arq;
          a.at(r, q) = s * arp + c * arq;
        }
        for (std::size_t r = 0; r < n; ++r) {
          const double apr = a.at(p, r), aqr = a.at(q, r);
          a.at(p, r) = c * apr - s * aqr;
          a.at(q, r) = s * apr + c * aqr;
        }
        a.at(p, q) = 0.0;
        a.at(q, p) = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
          const double vrp = v.at(r, p), vrq = v.at(r, q);
          v.at(r, p) = c * vrp - s * vrq;
          v.at(r, q) = s * vrp + c * vrq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a.at(i, i) > a.at(j, j); });
  out.values.resize(n);
  out.vectors = Tensor({n, n});
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t col = order[k];
    out.values[k] = a.at(col, col);
    // Sign convention: the largest-magnitude coordinate is positive.
    std::size_t lead = 0;
    for (std::size_t r = 1; r < n; ++r)
      if (std::abs(v.at(r, col)) > std::abs(v.at(lead, col))) lead = r;
    const double sign = v.at(lead, col) < 0.0 ? -1.0 : 1.0;
    for (std::size_t r = 0; r < n; ++r) out.vectors.at(k, r) = sign * v.at(r, col);
  }
  return out;
}

double PcaModel::explained_ratio() const {
  if (total_variance <= 0.0) return 1.0;
  return std::accumulate(explained_variance.begin(), explained_variance.end(), 0.0) /
         total_variance;
}

namespace {

struct FullPca {
  std::vector<double> mean;
  EigenDecomposition eig;
  double total = 0.0;
};

FullPca full_pca(const HyperCube& cube) {
  const std::size_t bands = cube.bands();
  if (bands == 0) throw ShapeError("pca_fit: cube has no bands");
  const std::size_t n = cube.pixel_count();
  if (n < 2) throw InvalidInput("pca_fit needs at least 2 pixels");

  FullPca out;
  out.mean.assign(bands, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t b = 0; b < bands; ++b) out.mean[b] += cube.values()[i * bands + b];
  for (double& m : out.mean) m /= static_cast<double>(n);

  Tensor cov({bands, bands});
  std::vector<double> centered(bands);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t b = 0; b < bands; ++b)
      centered[b] = cube.values()[i * bands + b] - out.mean[b];
    for (std::size_t p = 0; p < bands; ++p)
      for (std::size_t q = p; q < bands; ++q) cov.at(p, q) += centered[p] * centered[q];
  }
  const double denom = static_cast<double>(n - 1);
  for (std::size_t p = 0; p < bands; ++p)
    for (std::size_t q = p; q < bands; ++q) {
      cov.at(p, q) /= denom;
      cov.at(q, p) = cov.at(p, q);
    }

  out.eig = jacobi_eigen(cov);
  for (double& v : out.eig.values) v = std::max(v, 0.0);
  for (double v : out.eig.values) out.total += v;
  return out;
}

PcaModel truncate(FullPca full, std::size_t p) {
  const std::size_t bands = full.mean.size();
  PcaModel model;
  model.mean = std::move(full.mean);
  model.total_variance = full.total;
  model.explained_variance.assign(full.eig.values.begin(), full.eig.values.begin() + p);
  model.components = Tensor({p, bands});
  std::copy_n(full.eig.vectors.data(), p * bands, model.components.data());
  return model;
}

}  // namespace

PcaModel pca_fit(const HyperCube& cube, double variance_target) {
  if (!(variance_target > 0.0 && variance_target <= 1.0))
    throw InvalidConfig("pca variance target must be in (0, 1], got " +
                        std::to_string(variance_target));
  FullPca full = full_pca(cube);
  std::size_t p = 1;
  if (full.total > 0.0) {
    double cumulative = 0.0;
    for (p = 0; p < full.eig.values.size();) {
      cumulative += full.eig.values[p++];
      if (cumulative / full.total >= variance_target) break;
    }
  }
  return truncate(std::move(full), p);
}

PcaModel pca_fit_components(const HyperCube& cube, std::size_t components) {
  if (components == 0 || components > cube.bands())
    throw InvalidConfig("pca component count " + std::to_string(components) +
                        " outside [1, " + std::to_string(cube.bands()) + "]");
  return truncate(full_pca(cube), components);
}

HyperCube pca_transform(const HyperCube& cube, const PcaModel& model) {
  if (cube.bands() != model.input_bands())
    throw ShapeError("pca_transform: cube has " + std::to_string(cube.bands()) +
                     " bands, model expects " + std::to_string(model.input_bands()));
  const std::size_t bands = cube.bands();
  const std::size_t p = model.output_components();
  HyperCube out(cube.height(), cube.width(), p);
  std::vector<double> centered(bands);
  for (std::size_t r = 0; r < cube.height(); ++r)
    for (std::size_t c = 0; c < cube.width(); ++c) {
      auto s = cube.spectrum(r, c);
      for (std::size_t b = 0; b < bands; ++b) centered[b] = s[b] - model.mean[b];
      auto o = out.spectrum(r, c);
      for (std::size_t k = 0; k < p; ++k) {
        double acc = 0.0;
        for (std::size_t b = 0; b < bands; ++b) acc += model.components.at(k, b) * centered[b];
        o[k] = acc;
      }
    }
  return out;
}

std::size_t reflect_index(std::ptrdiff_t index, std::size_t extent) {
  if (extent == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (extent - 1));
  std::ptrdiff_t i = index % period;
  if (i < 0) i += period;
  if (i >= static_cast<std::ptrdiff_t>(extent)) i = period - i;
  return static_cast<std::size_t>(i);
}

Tensor extract_patch(const HyperCube& cube, std::size_t row, std::size_t col,
                     std::size_t size) {
  if (size == 0 || size % 2 == 0)
    throw InvalidConfig("patch size must be odd and positive, got " + std::to_string(size));
  if (row >= cube.height() || col >= cube.width())
    throw InvalidInput("patch center outside the image");
  const std::size_t bands = cube.bands();
  const auto half = static_cast<std::ptrdiff_t>(size / 2);
  Tensor patch({size, size, bands});
  for (std::size_t i = 0; i < size; ++i) {
    const std::size_t r = reflect_index(static_cast<std::ptrdiff_t>(row) - half +
                                            static_cast<std::ptrdiff_t>(i),
                                        cube.height());
    for (std::size_t j = 0; j < size; ++j) {
      const std::size_t c = reflect_index(static_cast<std::ptrdiff_t>(col) - half +
                                              static_cast<std::ptrdiff_t>(j),
                                          cube.width());
      auto s = cube.spectrum(r, c);
      std::copy(s.begin(), s.end(), &patch.at(i, j, 0));
    }
  }
  return patch;
}

Tensor spectral_sequence(const HyperCube& cube, std::size_t row, std::size_t col,
                         std::size_t group) {
  if (group == 0) throw InvalidConfig("band group must be positive");
  const std::size_t bands = cube.bands();
  const std::size_t steps = (bands + group - 1) / group;
  Tensor seq({steps, group});
  auto s = cube.spectrum(row, col);
  std::copy(s.begin(), s.end(), seq.data());
  return seq;
}

ClassQuota class_quota(std::size_t n, const SplitSpec& spec) {
  ClassQuota q;
  q.labeled = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(spec.labeled_fraction * static_cast<double>(n))));
  q.labeled = std::min(q.labeled, n - 2);
  q.validation = std::max<std::size_t>(
      1,
      static_cast<std::size_t>(std::llround(spec.validation_fraction * static_cast<double>(n))));
  q.validation = std::min(q.validation, n - q.labeled - 1);
  q.test = n - q.labeled - q.validation;
  return q;
}

DataSplit split_data(const LabelField& ground_truth, const SplitSpec& spec) {
  const bool fractions_ok = spec.labeled_fraction > 0.0 && spec.labeled_fraction < 1.0 &&
                            spec.validation_fraction > 0.0 &&
                            spec.validation_fraction < 1.0 &&
                            spec.labeled_fraction + spec.validation_fraction < 1.0;
  if (!fractions_ok)
    throw InvalidConfig("split fractions must lie in (0,1) and sum below 1");

  const int classes = ground_truth.max_label();
  std::vector<std::vector<Pixel>> members(static_cast<std::size_t>(classes) + 1);
  for (std::size_t r = 0; r < ground_truth.height(); ++r)
    for (std::size_t c = 0; c < ground_truth.width(); ++c)
      members[ground_truth.at(r, c)].push_back({r, c});

  DataSplit split;
  split.classes = classes;
  SeededRng rng(spec.seed);
  for (int cls = 1; cls <= classes; ++cls) {
    auto& pixels = members[static_cast<std::size_t>(cls)];
    if (pixels.size() < 3)
      throw InsufficientClass("class " + std::to_string(cls) + " has " +
                              std::to_string(pixels.size()) +
                              " ground-truth pixels; at least 3 are required");
    rng.shuffle(std::span<Pixel>(pixels));
    const ClassQuota q = class_quota(pixels.size(), spec);
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      const LabeledPixel lp{pixels[i], cls};
      if (i < q.labeled)
        split.labeled.push_back(lp);
      else if (i < q.labeled + q.validation)
        split.validation.push_back(lp);
      else
        split.test.push_back(lp);
    }
  }

  auto by_pixel = [](const LabeledPixel& a, const LabeledPixel& b) { return a.pixel < b.pixel; };
  std::sort(split.labeled.begin(), split.labeled.end(), by_pixel);
  std::sort(split.validation.begin(), split.validation.end(), by_pixel);
  std::sort(split.test.begin(), split.test.end(), by_pixel);

  // Everything in ground truth except the labeled set, row-major.
  std::size_t next = 0;
  for (std::size_t r = 0; r < ground_truth.height(); ++r)
    for (std::size_t c = 0; c < ground_truth.width(); ++c) {
      if (ground_truth.at(r, c) == 0) continue;
      const Pixel p{r, c};
      if (next < split.labeled.size() && split.labeled[next].pixel == p) {
        ++next;
        continue;
      }
      split.unlabeled.push_back(p);
    }
  return split;
}

}  // namespace mdcpe
