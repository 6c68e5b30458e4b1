// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mdcpe/cube.hpp"
#include "mdcpe/learner.hpp"
#include "mdcpe/rng.hpp"

namespace mdcpe {

/// Which learner a selection feeds: the spectral (GRU) one trains on S1,
/// the spatial (CNN) one on S2.
enum class View { Spectral, Spatial };

/// Predictions of one learner over a pool of unlabeled pixels, aligned with
/// `pixels`.
struct LearnerSnapshot {
  std::vector<Pixel> pixels;
  std::vector<Prediction> entries;

  std::size_t size() const noexcept { return pixels.size(); }
};

/// Predicts every pixel of `pool` with both learners.
std::pair<LearnerSnapshot, LearnerSnapshot> snapshot_unlabeled(const Learner& spectral,
                                                               const Learner& spatial,
                                                               std::span<const Pixel> pool);

/// A sample on which both learners agree.
struct Agreement {
  std::size_t index = 0;  ///< position in the snapshots
  std::size_t cls = 0;    ///< agreed class (0-based)
  double p_spectral = 0;  ///< P1 of the agreed class
  double p_spatial = 0;   ///< P2 of the agreed class
};

/// u_s = { x : L1(x) == L2(x) }. Throws InternalError for misaligned
/// snapshots.
std::vector<Agreement> agreement_set(const LearnerSnapshot& spectral,
                                     const LearnerSnapshot& spatial);

/// A disagreement sample labeled by class-probability diversity.
struct DiversityCandidate {
  std::size_t index = 0;
  std::size_t cls = 0;
  double score = 0;  ///< max_i of the probability difference
};

/// Over the samples where the learners disagree: for the spectral learner's
/// update set label = argmax(P2 - P1), for the spatial learner's
/// label = argmax(P1 - P2).
std::vector<DiversityCandidate> diversity_labels(View target, const LearnerSnapshot& spectral,
                                                 const LearnerSnapshot& spatial);

struct KMeansModel {
  std::vector<std::vector<double>> centers;  ///< center i belongs to class i
  std::vector<std::size_t> assignments;      ///< nearest center per feature
  int sweeps = 0;
};

/// Lloyd iterations starting from one anchor per class. A cluster that
/// loses all its points keeps its previous center. Stops once the summed
/// center movement falls below `tolerance` or after `max_sweeps`; the final
/// assignments are against the final centers. Throws InvalidInput when an
/// anchor is missing or dimensions disagree.
KMeansModel seeded_kmeans(std::span<const std::vector<double>> features,
                          std::span<const std::vector<double>> anchors, std::size_t classes,
                          int max_sweeps = 100, double tolerance = 1e-8);

struct Selection {
  std::vector<LabeledPixel> chosen;     ///< pseudo-labels in 1..k
  std::vector<std::size_t> per_class;   ///< added count per class
  std::vector<std::size_t> qualifying;  ///< eligible candidates per class
  std::vector<std::string> warnings;
};

/// Per-class quota selection. `assignments` covers the agreement samples
/// followed by the diversity samples, in that order. A candidate qualifies
/// for class c when its label is c and its k-means cluster is c. Up to
/// `n_update` per class are taken: agreement samples by the target learner's
/// probability of the agreed class, then diversity samples by score, both
/// descending.
Selection select_updates(std::span<const Pixel> pixels, std::span<const Agreement> agreements,
                         std::span<const DiversityCandidate> diversity,
                         std::span<const std::size_t> assignments, std::size_t n_update,
                         std::size_t classes, View target);

/// Result of one classic DCPE step.
struct DcpeUpdate {
  std::vector<Pixel> subpool;
  Selection spectral;
  Selection spatial;
};

/// Classic DCPE: predict a random sub-pool of `pool_size` pixels, then take
/// agreement samples followed by the most diverse samples, without any class
/// quota or clustering, up to `count` per learner.
DcpeUpdate dcpe_update(const Learner& spectral, const Learner& spatial,
                       std::span<const Pixel> unlabeled, std::size_t pool_size,
                       std::size_t count, std::size_t classes, SeededRng& rng);

struct CoDecision {
  std::size_t cls = 0;            ///< argmax of combined (0-based)
  std::vector<double> combined;   ///< P1 * P2, unnormalized
};

/// Throws ShapeError when the vectors differ in length.
CoDecision codecide(std::span<const double> p_spectral, std::span<const double> p_spatial);

/// Co-decision labels (1..k) for `pixels`.
std::vector<int> codecide_pixels(const Learner& spectral, const Learner& spatial,
                                 std::span<const Pixel> pixels);
/// Fraction of `set` whose co-decision label matches; 0 for an empty set.
double codecision_accuracy(const Learner& spectral, const Learner& spatial,
                           std::span<const LabeledPixel> set);

enum class CoTrainMode { Mdcpe, Dcpe, Supervised };

std::string to_string(CoTrainMode mode);
CoTrainMode parse_cotrain_mode(const std::string& text);

struct CoTrainConfig {
  std::size_t n_update = 5;
  std::size_t max_iterations = 5;
  CoTrainMode mode = CoTrainMode::Mdcpe;
  /// DCPE sub-pool size; 0 selects 10 x the per-iteration count.
  std::size_t dcpe_pool = 0;
  int kmeans_sweeps = 100;
  double kmeans_tolerance = 1e-8;
};

struct IterationRecord {
  std::size_t iteration = 0;
  std::size_t s1_size = 0;
  std::size_t s2_size = 0;
  std::size_t du_size = 0;
  std::vector<std::size_t> added_spectral;
  std::vector<std::size_t> added_spatial;
  std::vector<std::size_t> qualifying_spectral;
  std::vector<std::size_t> qualifying_spatial;
  std::vector<std::string> warnings;
  double validation_oa = 0.0;

  /// One structured log line, e.g.
  /// "iteration=1 s1=32 s2=32 du=900 added1=3,3 added2=3,3 val_oa=0.950000".
  std::string to_line() const;
};

struct CoTrainState {
  std::vector<LabeledPixel> s1;  ///< spectral learner's training set
  std::vector<LabeledPixel> s2;  ///< spatial learner's training set
  std::vector<Pixel> du;         ///< remaining unlabeled pool, sorted
  std::vector<double> history;   ///< validation OA per iteration (0 = pre-training)
  std::size_t best_iteration = 0;
  std::vector<IterationRecord> records;
};

/// S1 += D1, S2 += D2, Du -= D1 u D2. Throws InternalError, leaving the state
/// untouched, when a selected pixel is not in Du.
void apply_updates(CoTrainState& state, std::span<const LabeledPixel> d1,
                   std::span<const LabeledPixel> d2);

/// Throws InternalError when S1 or S2 intersects Du.
void verify_exclusion(const CoTrainState& state);

struct CoTrainResult {
  CoTrainState state;
  ParamStore best_spectral;
  ParamStore best_spatial;
};

using IterationObserver = std::function<void(const IterationRecord&, const CoTrainState&)>;

/// Pre-trains both learners on `labeled`, then alternates selection, update
/// and retraining for up to `max_iterations` rounds or until Du is empty,
/// scoring the co-decision on `validation` after each round. On return the
/// learners hold the parameters of the best-scoring round (earliest on ties),
/// which are also in the result.
CoTrainResult cotrain_loop(Learner& spectral, Learner& spatial,
                           std::span<const LabeledPixel> labeled,
                           std::span<const Pixel> unlabeled,
                           std::span<const LabeledPixel> validation,
                           const CoTrainConfig& config, SeededRng& rng,
                           const IterationObserver& observer = {});

}  // namespace mdcpe
