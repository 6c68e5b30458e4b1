// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "mdcpe/config.hpp"
#include "mdcpe/metrics.hpp"

namespace mdcpe {

struct ExperimentReport {
  ConfusionMatrix test_confusion;
  std::size_t best_iteration = 0;
  std::vector<double> history;  ///< validation OA per logged iteration
  std::size_t pca_components = 0;
  std::size_t labeled = 0, validation = 0, test = 0, unlabeled = 0;
  std::filesystem::path output_dir;
};

/// load -> normalize -> PCA -> split -> co-train -> co-decision on the test
/// split. Writes metrics.csv, iterations.log, classification_map.ppm,
/// best.ckpt and config.txt into the output directory. Throws the library
/// error types.
ExperimentReport run_experiment(const ExperimentConfig& config);

// Exit codes of run_experiment_main.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitFormat = 3;
inline constexpr int kExitInsufficientClass = 4;
inline constexpr int kExitInput = 5;

/// Runs the experiment and maps failures to one "error: ..." line on `err`
/// and a nonzero exit code.
int run_experiment_main(const ExperimentConfig& config, std::ostream& out, std::ostream& err);

}  // namespace mdcpe
