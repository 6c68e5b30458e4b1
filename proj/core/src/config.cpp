// SPDX-License-Identifier: Apache-2.0
#include "mdcpe/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <sstream>

#include "mdcpe/error.hpp"
#include "mdcpe/io.hpp"

namespace mdcpe {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end || !std::isfinite(v))
    throw InvalidConfig(key + ": '" + text + "' is not a number");
  return v;
}

std::uint64_t parse_count(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end)
    throw InvalidConfig(key + ": '" + text + "' is not a non-negative integer");
  return v;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general);
  return std::string(buf, ptr);
}

struct Field {
  std::string key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

Field text_field(std::string key, std::string ExperimentConfig::*m) {
  return {key, [m](ExperimentConfig& c, const std::string& v) { c.*m = v; },
          [m](const ExperimentConfig& c) { return c.*m; }};
}

Field double_field(std::string key, double ExperimentConfig::*m) {
  return {key, [m, key](ExperimentConfig& c, const std::string& v) { c.*m = parse_double(key, v); },
          [m](const ExperimentConfig& c) { return format_double(c.*m); }};
}

template <typename T>
Field count_field(std::string key, T ExperimentConfig::*m) {
  return {key,
          [m, key](ExperimentConfig& c, const std::string& v) {
            c.*m = static_cast<T>(parse_count(key, v));
          },
          [m](const ExperimentConfig& c) { return std::to_string(c.*m); }};
}

const std::vector<Field>& fields() {
  using C = ExperimentConfig;
  static const std::vector<Field> table = {
      text_field("cube_path", &C::cube_path),
      text_field("labels_path", &C::labels_path),
      count_field("seed", &C::seed),
      double_field("labeled_fraction", &C::labeled_fraction),
      double_field("validation_fraction", &C::validation_fraction),
      double_field("pca_variance_target", &C::pca_variance_target),
      count_field("pca_components", &C::pca_components),
      count_field("patch_size", &C::patch_size),
      count_field("rnn.hidden", &C::rnn_hidden),
      count_field("rnn.group", &C::rnn_group),
      count_field("rnn.fc1", &C::rnn_fc1),
      double_field("rnn.lr", &C::rnn_lr),
      count_field("rnn.epochs", &C::rnn_epochs),
      double_field("cnn.lr", &C::cnn_lr),
      count_field("cnn.epochs", &C::cnn_epochs),
      double_field("cnn.dropout", &C::cnn_dropout),
      count_field("cnn.fc1", &C::cnn_fc1),
      count_field("cnn.c1_maps", &C::cnn_c1_maps),
      count_field("cnn.c2_maps", &C::cnn_c2_maps),
      count_field("cotrain.n_update", &C::n_update),
      count_field("cotrain.max_iterations", &C::max_iterations),
      {"cotrain.mode",
       [](C& c, const std::string& v) { c.mode = parse_cotrain_mode(v); },
       [](const C& c) { return to_string(c.mode); }},
      count_field("cotrain.dcpe_pool", &C::dcpe_pool),
      count_field("batch_size", &C::batch_size),
      text_field("output_dir", &C::output_dir),
  };
  return table;
}

const Field& field(const std::string& key) {
  for (const auto& f : fields())
    if (f.key == key) return f;
  throw InvalidConfig("unknown key '" + key + "'");
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& f : fields()) out.push_back(f.key);
    return out;
  }();
  return keys;
}

void set_config_value(ExperimentConfig& config, const std::string& key,
                      const std::string& value) {
  field(key).set(config, value);
}

std::string get_config_value(const ExperimentConfig& config, const std::string& key) {
  return field(key).get(config);
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  std::istringstream in(text);
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidConfig("line " + std::to_string(line_no) + ": expected 'key = value'");
    try {
      set_config_value(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const InvalidConfig& e) {
      throw InvalidConfig("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_file(path));
}

std::string echo_config(const ExperimentConfig& config) {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(config) + "\n";
  return out;
}

void validate_config(const ExperimentConfig& c) {
  auto fail = [](const std::string& m) { throw InvalidConfig(m); };
  if (c.cube_path.empty()) fail("cube_path is required");
  if (c.labels_path.empty()) fail("labels_path is required");
  if (!(c.labeled_fraction > 0.0 && c.labeled_fraction < 1.0))
    fail("labeled_fraction must lie in (0, 1)");
  if (!(c.validation_fraction >= 0.0 && c.labeled_fraction + c.validation_fraction < 1.0))
    fail("validation_fraction must be >= 0 with labeled + validation < 1");
  if (c.pca_components == 0 && !(c.pca_variance_target > 0.0 && c.pca_variance_target <= 1.0))
    fail("pca_variance_target must lie in (0, 1]");
  if (c.patch_size == 0 || c.patch_size % 2 == 0) fail("patch_size must be odd");
  // 5x5 conv, pool, then 3x3 conv needs at least 9 pixels.
  if (c.patch_size < 9) fail("patch_size must be at least 9");
  if (c.rnn_hidden == 0 || c.rnn_group == 0 || c.rnn_fc1 == 0)
    fail("rnn sizes must be positive");
  if (c.cnn_fc1 == 0 || c.cnn_c1_maps == 0 || c.cnn_c2_maps == 0)
    fail("cnn sizes must be positive");
  if (!(c.rnn_lr > 0.0) || !(c.cnn_lr > 0.0)) fail("learning rates must be positive");
  if (!(c.cnn_dropout >= 0.0 && c.cnn_dropout < 1.0)) fail("cnn.dropout must lie in [0, 1)");
  if (c.batch_size == 0) fail("batch_size must be positive");
  if (c.n_update == 0) fail("cotrain.n_update must be positive");
}

std::filesystem::path resolve_output_dir(const ExperimentConfig& config) {
  if (!config.output_dir.empty()) return config.output_dir;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return "output";
}

}  // namespace mdcpe
