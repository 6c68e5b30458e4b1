// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <optional>

#include "mdcpe/config.hpp"
#include "mdcpe/error.hpp"
#include "mdcpe/experiment.hpp"
#include "mdcpe/io.hpp"
#include "mdcpe/metrics.hpp"
#include "mdcpe/synthetic.hpp"

namespace {

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const mdcpe::InvalidConfig& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return mdcpe::kExitConfig;
  } catch (const mdcpe::FormatError& e) {
    std::cerr << "error: format: " << e.what() << "\n";
    return mdcpe::kExitFormat;
  } catch (const mdcpe::InvalidInput& e) {
    std::cerr << "error: input: " << e.what() << "\n";
    return mdcpe::kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return mdcpe::kExitInternal;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Co-training of a spectral GRU and a spatial 3-D CNN for hyperspectral scenes"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run an experiment from a config file");
  std::string config_path;
  bool print_config = false;
  run->add_option("config", config_path, "key = value config file")->required();
  run->add_flag("--print-config", print_config, "Print the effective config and exit");
  std::map<std::string, std::optional<std::string>> overrides;
  for (const auto& key : mdcpe::config_keys())
    run->add_option("--" + key, overrides[key], "Overrides '" + key + "'");

  auto* gen = app.add_subcommand("generate", "Write a synthetic cube and label file");
  mdcpe::SyntheticSpec spec;
  std::string geometry = "blocks";
  std::uint64_t seed = 42;
  std::string out_prefix;
  gen->add_option("--height", spec.height)->capture_default_str();
  gen->add_option("--width", spec.width)->capture_default_str();
  gen->add_option("--bands", spec.bands)->capture_default_str();
  gen->add_option("--classes", spec.classes)->capture_default_str();
  gen->add_option("--geometry", geometry, "blocks or stripes")->capture_default_str();
  gen->add_option("--scale", spec.scale, "Mean spectrum scale")->capture_default_str();
  gen->add_option("--noise", spec.noise_sigma, "Gaussian noise sigma")->capture_default_str();
  gen->add_option("--ratios", spec.ratios, "Relative class sizes")->delimiter(',');
  gen->add_option("--seed", seed)->capture_default_str();
  gen->add_option("out", out_prefix, "Writes <out>.hsic and <out>.hsil")->required();

  auto* inspect = app.add_subcommand("inspect", "Summarize a cube, label or checkpoint file");
  std::string inspect_path;
  inspect->add_option("file", inspect_path)->required();

  auto* render = app.add_subcommand("render", "Render a label file as a PPM image");
  std::string labels_path, ppm_path;
  render->add_option("labels", labels_path)->required();
  render->add_option("out", ppm_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help and version requests report success; bad usage is a config error.
    const int code = app.exit(e);
    return code == 0 ? 0 : mdcpe::kExitConfig;
  }

  if (*run) {
    return guarded([&] {
      mdcpe::ExperimentConfig config = mdcpe::load_config(config_path);
      for (const auto& [key, value] : overrides)
        if (value) mdcpe::set_config_value(config, key, *value);
      if (print_config) {
        std::cout << mdcpe::echo_config(config);
        return mdcpe::kExitOk;
      }
      return mdcpe::run_experiment_main(config, std::cout, std::cerr);
    });
  }
  if (*gen) {
    return guarded([&] {
      spec.geometry = mdcpe::parse_geometry(geometry);
      const auto scene = mdcpe::generate_synthetic(spec, seed);
      mdcpe::save_cube(scene.cube, out_prefix + ".hsic");
      mdcpe::save_labels(scene.labels, out_prefix + ".hsil");
      std::cout << "wrote " << out_prefix << ".hsic and " << out_prefix << ".hsil\n";
      return mdcpe::kExitOk;
    });
  }
  if (*inspect) {
    return guarded([&] {
      std::cout << mdcpe::inspect_file(inspect_path) << "\n";
      return mdcpe::kExitOk;
    });
  }
  return guarded([&] {
    const auto labels = mdcpe::load_labels(labels_path);
    const auto palette = mdcpe::default_palette(labels.max_label());
    mdcpe::write_file(ppm_path, mdcpe::render_map(labels, palette));
    return mdcpe::kExitOk;
  });
}
