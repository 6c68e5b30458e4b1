// SPDX-License-Identifier: Apache-2.0
#include "mdcpe/experiment.hpp"

#include <ostream>

#include "mdcpe/cotrain.hpp"
#include "mdcpe/error.hpp"
#include "mdcpe/io.hpp"
#include "mdcpe/learner.hpp"
#include "mdcpe/preprocess.hpp"

namespace mdcpe {

ExperimentReport run_experiment(const ExperimentConfig& config) {
  validate_config(config);
  const HyperCube cube = load_cube(config.cube_path);
  const LabelField truth = load_labels(config.labels_path);
  if (cube.height() != truth.height() || cube.width() != truth.width())
    throw InvalidInput("cube is " + std::to_string(cube.height()) + "x" +
                       std::to_string(cube.width()) + " but labels are " +
                       std::to_string(truth.height()) + "x" + std::to_string(truth.width()));

  const HyperCube normalized = minmax_normalize(cube);
  const PcaModel pca = config.pca_components
                           ? pca_fit_components(normalized, config.pca_components)
                           : pca_fit(normalized, config.pca_variance_target);
  const HyperCube reduced = pca_transform(normalized, pca);

  const DataSplit split =
      split_data(truth, {config.labeled_fraction, config.validation_fraction, config.seed});
  const auto classes = static_cast<std::size_t>(split.classes);
  if (classes == 0) throw InsufficientClass("label file has no labeled pixels");

  SeededRng rng(config.seed);
  SeededRng init = rng.split();
  const RnnConfig rnn_cfg{cube.bands(), config.rnn_group, config.rnn_hidden, config.rnn_fc1,
                          classes};
  CnnConfig cnn_cfg;
  cnn_cfg.patch = config.patch_size;
  cnn_cfg.channels = pca.output_components();
  cnn_cfg.c1_maps = config.cnn_c1_maps;
  cnn_cfg.c2_maps = config.cnn_c2_maps;
  cnn_cfg.fc1 = config.cnn_fc1;
  cnn_cfg.classes = classes;

  SpectralLearner spectral(normalized, RnnModel(rnn_cfg, init),
                           {config.rnn_epochs, config.rnn_lr, config.batch_size});
  SpatialLearner spatial(reduced, CnnModel(cnn_cfg, init),
                         {config.cnn_epochs, config.cnn_lr, config.batch_size},
                         config.cnn_dropout);

  CoTrainConfig ct;
  ct.n_update = config.n_update;
  ct.max_iterations = config.max_iterations;
  ct.mode = config.mode;
  ct.dcpe_pool = config.dcpe_pool;

  const std::filesystem::path dir = resolve_output_dir(config);
  std::filesystem::create_directories(dir);

  std::string log;
  const CoTrainResult result =
      cotrain_loop(spectral, spatial, split.labeled, split.unlabeled, split.validation, ct, rng,
                   [&](const IterationRecord& record, const CoTrainState&) {
                     log += record.to_line() + "\n";
                     for (const auto& w : record.warnings)
                       log += "warning iteration=" + std::to_string(record.iteration) + " " +
                              w + "\n";
                   });
  log += "best_iteration=" + std::to_string(result.state.best_iteration) + "\n";

  std::vector<Pixel> test_pixels;
  std::vector<int> test_truth;
  for (const auto& lp : split.test) {
    test_pixels.push_back(lp.pixel);
    test_truth.push_back(lp.label);
  }
  const std::vector<int> test_pred = codecide_pixels(spectral, spatial, test_pixels);

  ExperimentReport report;
  report.test_confusion = confusion(test_truth, test_pred, classes);
  report.best_iteration = result.state.best_iteration;
  report.history = result.state.history;
  report.pca_components = pca.output_components();
  report.labeled = split.labeled.size();
  report.validation = split.validation.size();
  report.test = split.test.size();
  report.unlabeled = split.unlabeled.size();
  report.output_dir = dir;

  std::vector<Pixel> mapped;
  for (std::size_t r = 0; r < truth.height(); ++r)
    for (std::size_t c = 0; c < truth.width(); ++c)
      if (truth.at(r, c) != 0) mapped.push_back({r, c});
  const std::vector<int> mapped_pred = codecide_pixels(spectral, spatial, mapped);
  LabelField map(truth.height(), truth.width());
  for (std::size_t i = 0; i < mapped.size(); ++i)
    map.at(mapped[i].row, mapped[i].col) = static_cast<std::uint16_t>(mapped_pred[i]);

  Checkpoint ck;
  ck.rnn = rnn_cfg;
  ck.cnn = cnn_cfg;
  ck.spectral = result.best_spectral;
  ck.spatial = result.best_spatial;
  ck.pca = pca;
  ck.scalars["seed"] = std::to_string(config.seed);
  ck.scalars["mode"] = to_string(config.mode);
  ck.scalars["best_iteration"] = std::to_string(result.state.best_iteration);
  ck.scalars["iterations"] = std::to_string(result.state.records.size() - 1);
  ck.scalars["s1_size"] = std::to_string(result.state.s1.size());
  ck.scalars["s2_size"] = std::to_string(result.state.s2.size());
  ck.scalars["du_size"] = std::to_string(result.state.du.size());

  write_file(dir / "metrics.csv", metrics_csv(report.test_confusion));
  write_file(dir / "iterations.log", log);
  const auto palette = default_palette(classes);
  write_file(dir / "classification_map.ppm", render_map(map, palette));
  save_checkpoint(ck, dir / "best.ckpt");
  write_file(dir / "config.txt", echo_config(config));
  return report;
}

int run_experiment_main(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
  try {
    const ExperimentReport report = run_experiment(config);
    out << "OA " << overall_accuracy(report.test_confusion) << " AA "
        << average_accuracy(report.test_confusion) << " Kappa "
        << kappa(report.test_confusion) << " best_iteration " << report.best_iteration
        << " -> " << report.output_dir.string() << "\n";
    return kExitOk;
  } catch (const InvalidConfig& e) {
    err << "error: config: " << e.what() << "\n";
    return kExitConfig;
  } catch (const FormatError& e) {
    err << "error: format: " << e.what() << "\n";
    return kExitFormat;
  } catch (const InsufficientClass& e) {
    err << "error: insufficient class: " << e.what() << "\n";
    return kExitInsufficientClass;
  } catch (const InvalidInput& e) {
    err << "error: input: " << e.what() << "\n";
    return kExitInput;
  } catch (const ShapeError& e) {
    err << "error: input: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: input: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace mdcpe
