// SPDX-License-Identifier: Apache-2.0
#include "mdcpe/cotrain.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "mdcpe/error.hpp"
#include "mdcpe/numerics.hpp"

namespace mdcpe {
namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return d;
}

std::size_t nearest(std::span<const double> x, const std::vector<std::vector<double>>& centers) {
  std::size_t best = 0;
  double best_d = squared_distance(x, centers[0]);
  for (std::size_t c = 1; c < centers.size(); ++c) {
    const double d = squared_distance(x, centers[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

void check_aligned(const LearnerSnapshot& a, const LearnerSnapshot& b) {
  if (a.pixels != b.pixels || a.entries.size() != a.pixels.size() ||
      b.entries.size() != b.pixels.size())
    throw InternalError("learner snapshots are not aligned on the same pixels");
}

std::string join_counts(const std::vector<std::size_t>& counts) {
  std::string out;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(counts[i]);
  }
  return out;
}

LabeledPixel pseudo(Pixel p, std::size_t cls) { return {p, static_cast<int>(cls) + 1}; }

}  // namespace

std::pair<LearnerSnapshot, LearnerSnapshot> snapshot_unlabeled(const Learner& spectral,
                                                               const Learner& spatial,
                                                               std::span<const Pixel> pool) {
  LearnerSnapshot s1, s2;
  s1.pixels.assign(pool.begin(), pool.end());
  s2.pixels = s1.pixels;
  s1.entries.reserve(pool.size());
  s2.entries.reserve(pool.size());
  for (const Pixel& p : pool) {
    s1.entries.push_back(spectral.predict(p));
    s2.entries.push_back(spatial.predict(p));
  }
  return {std::move(s1), std::move(s2)};
}

std::vector<Agreement> agreement_set(const LearnerSnapshot& spectral,
                                     const LearnerSnapshot& spatial) {
  check_aligned(spectral, spatial);
  std::vector<Agreement> out;
  for (std::size_t i = 0; i < spectral.size(); ++i) {
    const auto& a = spectral.entries[i];
    const auto& b = spatial.entries[i];
    if (a.cls == b.cls) out.push_back({i, a.cls, a.probs[a.cls], b.probs[b.cls]});
  }
  return out;
}

std::vector<DiversityCandidate> diversity_labels(View target, const LearnerSnapshot& spectral,
                                                 const LearnerSnapshot& spatial) {
  check_aligned(spectral, spatial);
  std::vector<DiversityCandidate> out;
  std::vector<double> diff;
  for (std::size_t i = 0; i < spectral.size(); ++i) {
    const auto& p1 = spectral.entries[i];
    const auto& p2 = spatial.entries[i];
    if (p1.cls == p2.cls) continue;
    if (p1.probs.size() != p2.probs.size())
      throw InternalError("snapshots disagree on the class count");
    diff.resize(p1.probs.size());
    for (std::size_t c = 0; c < diff.size(); ++c)
      diff[c] = target == View::Spectral ? p2.probs[c] - p1.probs[c] : p1.probs[c] - p2.probs[c];
    const std::size_t cls = argmax(diff);
    out.push_back({i, cls, diff[cls]});
  }
  return out;
}

KMeansModel seeded_kmeans(std::span<const std::vector<double>> features,
                          std::span<const std::vector<double>> anchors, std::size_t classes,
                          int max_sweeps, double tolerance) {
  if (anchors.size() != classes)
    throw InvalidInput("k-means needs one anchor per class: got " +
                       std::to_string(anchors.size()) + " for " + std::to_string(classes) +
                       " classes");
  if (classes == 0) throw InvalidInput("k-means needs at least one class");
  const std::size_t dim = anchors[0].size();
  for (std::size_t c = 0; c < classes; ++c)
    if (anchors[c].empty() || anchors[c].size() != dim)
      throw InvalidInput("anchor for class " + std::to_string(c + 1) + " is missing or has the "
                         "wrong dimension");
  for (const auto& f : features)
    if (f.size() != dim) throw InvalidInput("feature dimension does not match the anchors");

  KMeansModel km;
  km.centers.assign(anchors.begin(), anchors.end());
  km.assignments.resize(features.size());
  auto assign = [&] {
    for (std::size_t i = 0; i < features.size(); ++i)
      km.assignments[i] = nearest(features[i], km.centers);
  };
  assign();
  if (features.empty()) return km;

  std::vector<std::vector<double>> sums(classes, std::vector<double>(dim));
  std::vector<std::size_t> counts(classes);
  while (km.sweeps < max_sweeps) {
    for (auto& s : sums) std::fill(s.begin(), s.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < features.size(); ++i) {
      const std::size_t c = km.assignments[i];
      ++counts[c];
      for (std::size_t d = 0; d < dim; ++d) sums[c][d] += features[i][d];
    }
    double movement = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      if (counts[c] == 0) continue;  // frozen
      for (double& s : sums[c]) s /= static_cast<double>(counts[c]);
      movement += std::sqrt(squared_distance(sums[c], km.centers[c]));
      km.centers[c] = sums[c];
    }
    ++km.sweeps;
    assign();
    if (movement < tolerance) break;
  }
  return km;
}

Selection select_updates(std::span<const Pixel> pixels, std::span<const Agreement> agreements,
                         std::span<const DiversityCandidate> diversity,
                         std::span<const std::size_t> assignments, std::size_t n_update,
                         std::size_t classes, View target) {
  if (assignments.size() != agreements.size() + diversity.size())
    throw InternalError("k-means assignments do not cover the candidate pool");

  Selection sel;
  sel.per_class.assign(classes, 0);
  sel.qualifying.assign(classes, 0);

  struct Ranked {
    std::size_t index;
    double score;
  };
  auto by_score = [](const Ranked& a, const Ranked& b) {
    return a.score != b.score ? a.score > b.score : a.index < b.index;
  };

  for (std::size_t c = 0; c < classes; ++c) {
    std::vector<Ranked> agreed, diverse;
    for (std::size_t i = 0; i < agreements.size(); ++i) {
      const auto& a = agreements[i];
      if (a.cls == c && assignments[i] == c)
        agreed.push_back({a.index, target == View::Spectral ? a.p_spectral : a.p_spatial});
    }
    for (std::size_t j = 0; j < diversity.size(); ++j) {
      const auto& d = diversity[j];
      if (d.cls == c && assignments[agreements.size() + j] == c) diverse.push_back({d.index, d.score});
    }
    std::sort(agreed.begin(), agreed.end(), by_score);
    std::sort(diverse.begin(), diverse.end(), by_score);
    sel.qualifying[c] = agreed.size() + diverse.size();

    for (const auto* list : {&agreed, &diverse})
      for (const Ranked& r : *list) {
        if (sel.per_class[c] == n_update) break;
        if (r.index >= pixels.size()) throw InternalError("candidate index outside the pool");
        sel.chosen.push_back(pseudo(pixels[r.index], c));
        ++sel.per_class[c];
      }
    if (sel.qualifying[c] < n_update)
      sel.warnings.push_back("class " + std::to_string(c + 1) + ": " +
                             std::to_string(sel.qualifying[c]) +
                             " qualifying candidates for a quota of " + std::to_string(n_update));
  }
  return sel;
}

DcpeUpdate dcpe_update(const Learner& spectral, const Learner& spatial,
                       std::span<const Pixel> unlabeled, std::size_t pool_size,
                       std::size_t count, std::size_t classes, SeededRng& rng) {
  DcpeUpdate out;
  if (pool_size >= unlabeled.size()) {
    out.subpool.assign(unlabeled.begin(), unlabeled.end());
  } else {
    std::vector<Pixel> shuffled(unlabeled.begin(), unlabeled.end());
    rng.shuffle(std::span<Pixel>(shuffled));
    out.subpool.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(pool_size));
    std::sort(out.subpool.begin(), out.subpool.end());
  }

  const auto [s1, s2] = snapshot_unlabeled(spectral, spatial, out.subpool);
  const std::vector<Agreement> agreed = agreement_set(s1, s2);

  auto pick = [&](View view) {
    struct Ranked {
      std::size_t index;
      std::size_t cls;
      double score;
    };
    auto by_score = [](const Ranked& a, const Ranked& b) {
      return a.score != b.score ? a.score > b.score : a.index < b.index;
    };
    std::vector<Ranked> a, d;
    for (const auto& g : agreed)
      a.push_back({g.index, g.cls, view == View::Spectral ? g.p_spectral : g.p_spatial});
    for (const auto& m : diversity_labels(view, s1, s2)) d.push_back({m.index, m.cls, m.score});
    std::sort(a.begin(), a.end(), by_score);
    std::sort(d.begin(), d.end(), by_score);

    Selection sel;
    sel.per_class.assign(classes, 0);
    sel.qualifying.assign(classes, 0);
    for (const auto* list : {&a, &d})
      for (const Ranked& r : *list) {
        ++sel.qualifying[r.cls];
        if (sel.chosen.size() < count) {
          sel.chosen.push_back(pseudo(out.subpool[r.index], r.cls));
          ++sel.per_class[r.cls];
        }
      }
    return sel;
  };
  out.spectral = pick(View::Spectral);
  out.spatial = pick(View::Spatial);
  return out;
}

CoDecision codecide(std::span<const double> p_spectral, std::span<const double> p_spatial) {
  if (p_spectral.size() != p_spatial.size())
    throw ShapeError("codecide: probability vectors of length " +
                     std::to_string(p_spectral.size()) + " and " +
                     std::to_string(p_spatial.size()));
  CoDecision d;
  d.combined.resize(p_spectral.size());
  for (std::size_t i = 0; i < d.combined.size(); ++i)
    d.combined[i] = p_spectral[i] * p_spatial[i];
  d.cls = argmax(d.combined);
  return d;
}

std::vector<int> codecide_pixels(const Learner& spectral, const Learner& spatial,
                                 std::span<const Pixel> pixels) {
  std::vector<int> labels;
  labels.reserve(pixels.size());
  for (const Pixel& p : pixels) {
    const CoDecision d = codecide(spectral.predict(p).probs, spatial.predict(p).probs);
    labels.push_back(static_cast<int>(d.cls) + 1);
  }
  return labels;
}

double codecision_accuracy(const Learner& spectral, const Learner& spatial,
                           std::span<const LabeledPixel> set) {
  if (set.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& lp : set) {
    const CoDecision d =
        codecide(spectral.predict(lp.pixel).probs, spatial.predict(lp.pixel).probs);
    if (static_cast<int>(d.cls) + 1 == lp.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(set.size());
}

std::string to_string(CoTrainMode mode) {
  switch (mode) {
    case CoTrainMode::Mdcpe:
      return "mdcpe";
    case CoTrainMode::Dcpe:
      return "dcpe";
    case CoTrainMode::Supervised:
      return "supervised";
  }
  return "?";
}

CoTrainMode parse_cotrain_mode(const std::string& text) {
  if (text == "mdcpe") return CoTrainMode::Mdcpe;
  if (text == "dcpe") return CoTrainMode::Dcpe;
  if (text == "supervised") return CoTrainMode::Supervised;
  throw InvalidConfig("unknown co-training mode '" + text + "' (mdcpe, dcpe, supervised)");
}

std::string IterationRecord::to_line() const {
  std::ostringstream os;
  os << "iteration=" << iteration << " s1=" << s1_size << " s2=" << s2_size
     << " du=" << du_size << " added1=" << join_counts(added_spectral)
     << " added2=" << join_counts(added_spatial) << " val_oa=" << std::fixed
     << std::setprecision(6) << validation_oa;
  return os.str();
}

void apply_updates(CoTrainState& state, std::span<const LabeledPixel> d1,
                   std::span<const LabeledPixel> d2) {
  std::vector<Pixel> removed;
  removed.reserve(d1.size() + d2.size());
  for (const auto* set : {&d1, &d2})
    for (const auto& lp : *set) {
      if (!std::binary_search(state.du.begin(), state.du.end(), lp.pixel))
        throw InternalError("selected pixel (" + std::to_string(lp.pixel.row) + ", " +
                            std::to_string(lp.pixel.col) + ") is not in the unlabeled pool");
      removed.push_back(lp.pixel);
    }
  std::sort(removed.begin(), removed.end());
  removed.erase(std::unique(removed.begin(), removed.end()), removed.end());

  state.s1.insert(state.s1.end(), d1.begin(), d1.end());
  state.s2.insert(state.s2.end(), d2.begin(), d2.end());
  std::vector<Pixel> remaining;
  remaining.reserve(state.du.size() - removed.size());
  std::set_difference(state.du.begin(), state.du.end(), removed.begin(), removed.end(),
                      std::back_inserter(remaining));
  state.du = std::move(remaining);
}

void verify_exclusion(const CoTrainState& state) {
  for (const auto* set : {&state.s1, &state.s2})
    for (const auto& lp : *set)
      if (std::binary_search(state.du.begin(), state.du.end(), lp.pixel))
        throw InternalError("pixel (" + std::to_string(lp.pixel.row) + ", " +
                            std::to_string(lp.pixel.col) +
                            ") is both labeled and in the unlabeled pool");
}

CoTrainResult cotrain_loop(Learner& spectral, Learner& spatial,
                           std::span<const LabeledPixel> labeled,
                           std::span<const Pixel> unlabeled,
                           std::span<const LabeledPixel> validation,
                           const CoTrainConfig& config, SeededRng& rng,
                           const IterationObserver& observer) {
  if (labeled.empty()) throw InvalidInput("co-training needs labeled data");
  if (validation.empty()) throw InvalidInput("co-training needs a validation set");
  const std::size_t classes = spectral.classes();
  if (spatial.classes() != classes)
    throw InvalidConfig("learners disagree on the class count");
  if (config.mode == CoTrainMode::Mdcpe && config.n_update == 0)
    throw InvalidConfig("cotrain.n_update must be positive");

  const std::size_t rounds = config.mode == CoTrainMode::Supervised ? 0 : config.max_iterations;
  const std::size_t dcpe_count = config.n_update * classes;
  const std::size_t dcpe_pool = config.dcpe_pool ? config.dcpe_pool : 10 * dcpe_count;

  // Anchor candidates per class come from the initial labeled set only.
  std::vector<std::vector<Pixel>> by_class(classes);
  for (const auto& lp : labeled) {
    if (lp.label < 1 || static_cast<std::size_t>(lp.label) > classes)
      throw InvalidClass("labeled pixel has class " + std::to_string(lp.label));
    by_class[static_cast<std::size_t>(lp.label - 1)].push_back(lp.pixel);
  }

  CoTrainResult result;
  CoTrainState& state = result.state;
  state.s1.assign(labeled.begin(), labeled.end());
  state.s2 = state.s1;
  state.du.assign(unlabeled.begin(), unlabeled.end());
  std::sort(state.du.begin(), state.du.end());
  state.du.erase(std::unique(state.du.begin(), state.du.end()), state.du.end());
  {
    std::vector<Pixel> seeds;
    for (const auto& lp : labeled) seeds.push_back(lp.pixel);
    std::sort(seeds.begin(), seeds.end());
    std::vector<Pixel> pool;
    std::set_difference(state.du.begin(), state.du.end(), seeds.begin(), seeds.end(),
                        std::back_inserter(pool));
    state.du = std::move(pool);
  }

  auto train_both = [&] {
    SeededRng r1 = rng.split();
    SeededRng r2 = rng.split();
    spectral.train(state.s1, r1);
    spatial.train(state.s2, r2);
  };

  auto finish_round = [&](IterationRecord record) {
    record.s1_size = state.s1.size();
    record.s2_size = state.s2.size();
    record.du_size = state.du.size();
    record.validation_oa = codecision_accuracy(spectral, spatial, validation);
    state.history.push_back(record.validation_oa);
    if (state.history.size() == 1 ||
        record.validation_oa > state.history[state.best_iteration]) {
      state.best_iteration = record.iteration;
      result.best_spectral = spectral.params();
      result.best_spatial = spatial.params();
    }
    state.records.push_back(record);
    if (observer) observer(state.records.back(), state);
  };

  train_both();
  {
    IterationRecord r;
    r.added_spectral.assign(classes, 0);
    r.added_spatial.assign(classes, 0);
    if (config.mode == CoTrainMode::Mdcpe && config.n_update * classes >= labeled.size())
      r.warnings.push_back("n_update x classes is not far below the labeled set size");
    finish_round(std::move(r));
  }

  for (std::size_t iteration = 1; iteration <= rounds && !state.du.empty(); ++iteration) {
    IterationRecord record;
    record.iteration = iteration;
    Selection d1, d2;

    if (config.mode == CoTrainMode::Mdcpe) {
      const auto [s1, s2] = snapshot_unlabeled(spectral, spatial, state.du);
      const std::vector<Agreement> agreed = agreement_set(s1, s2);
      const std::vector<DiversityCandidate> div1 = diversity_labels(View::Spectral, s1, s2);
      const std::vector<DiversityCandidate> div2 = diversity_labels(View::Spatial, s1, s2);

      std::vector<std::vector<double>> anchors1(classes), anchors2(classes);
      for (std::size_t c = 0; c < classes; ++c) {
        if (by_class[c].empty()) continue;  // seeded_kmeans reports the gap
        const Pixel o = by_class[c][rng.below(by_class[c].size())];
        anchors1[c] = spectral.predict(o).features;
        anchors2[c] = spatial.predict(o).features;
      }

      auto cluster_and_select = [&](View view, const LearnerSnapshot& own,
                                    const std::vector<DiversityCandidate>& div,
                                    const std::vector<std::vector<double>>& anchors) {
        std::vector<std::vector<double>> feats;
        feats.reserve(agreed.size() + div.size());
        for (const auto& a : agreed) feats.push_back(own.entries[a.index].features);
        for (const auto& d : div) feats.push_back(own.entries[d.index].features);
        const KMeansModel km = seeded_kmeans(feats, anchors, classes, config.kmeans_sweeps,
                                             config.kmeans_tolerance);
        return select_updates(own.pixels, agreed, div, km.assignments, config.n_update,
                              classes, view);
      };
      d1 = cluster_and_select(View::Spectral, s1, div1, anchors1);
      d2 = cluster_and_select(View::Spatial, s2, div2, anchors2);
    } else {
      DcpeUpdate up = dcpe_update(spectral, spatial, state.du, dcpe_pool, dcpe_count, classes, rng);
      d1 = std::move(up.spectral);
      d2 = std::move(up.spatial);
    }

    const std::size_t du_before = state.du.size();
    apply_updates(state, d1.chosen, d2.chosen);
    verify_exclusion(state);
    if (!(d1.chosen.empty() && d2.chosen.empty()) && state.du.size() >= du_before)
      throw InternalError("unlabeled pool did not shrink after a selection");

    record.added_spectral = d1.per_class;
    record.added_spatial = d2.per_class;
    record.qualifying_spectral = d1.qualifying;
    record.qualifying_spatial = d2.qualifying;
    for (auto& w : d1.warnings) record.warnings.push_back("spectral " + w);
    for (auto& w : d2.warnings) record.warnings.push_back("spatial " + w);

    train_both();
    finish_round(std::move(record));
  }

  spectral.restore(result.best_spectral);
  spatial.restore(result.best_spatial);
  return result;
}

}  // namespace mdcpe
