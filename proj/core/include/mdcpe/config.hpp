// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mdcpe/cotrain.hpp"

namespace mdcpe {

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "MDCPE_OUTPUT_DIR";

/// Experiment settings. Defaults are the values below; pca_components = 0
/// means "choose by pca_variance_target".
struct ExperimentConfig {
  std::string cube_path;
  std::string labels_path;
  std::uint64_t seed = 42;
  double labeled_fraction = 0.005;
  double validation_fraction = 0.015;
  double pca_variance_target = 0.99;
  std::size_t pca_components = 0;
  std::size_t patch_size = 15;
  std::size_t rnn_hidden = 128;
  std::size_t rnn_group = 4;
  std::size_t rnn_fc1 = 128;
  double rnn_lr = 0.001;
  std::size_t rnn_epochs = 100;
  double cnn_lr = 0.0003;
  std::size_t cnn_epochs = 100;
  double cnn_dropout = 0.3;
  std::size_t cnn_fc1 = 1024;
  std::size_t cnn_c1_maps = 8;
  std::size_t cnn_c2_maps = 16;
  std::size_t n_update = 5;
  std::size_t max_iterations = 5;
  CoTrainMode mode = CoTrainMode::Mdcpe;
  std::size_t dcpe_pool = 0;
  std::size_t batch_size = 32;
  std::string output_dir;  ///< empty: $MDCPE_OUTPUT_DIR, else "output"

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Every accepted key, in echo order.
const std::vector<std::string>& config_keys();

/// Sets one key from its textual value. Throws InvalidConfig for unknown
/// keys, unparsable values and out-of-range values.
void set_config_value(ExperimentConfig& config, const std::string& key,
                      const std::string& value);
/// Textual value of one key; doubles print in shortest round-trip form.
std::string get_config_value(const ExperimentConfig& config, const std::string& key);

/// Parses "key = value" lines over `base`. '#' starts a comment; blank lines
/// are ignored. Errors carry the line number.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path);
/// One "key = value" line per key; parse_config(echo) reproduces `config`.
std::string echo_config(const ExperimentConfig& config);

/// Throws InvalidConfig when settings are inconsistent (fractions, sizes).
void validate_config(const ExperimentConfig& config);

/// Output directory after applying the environment default.
std::filesystem::path resolve_output_dir(const ExperimentConfig& config);

}  // namespace mdcpe
