// SPDX-License-Identifier: Apache-2.0
// Prints one PASS/FAIL line per acceptance criterion; exits nonzero on any
// failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "mdcpe/cnn.hpp"
#include "mdcpe/config.hpp"
#include "mdcpe/cotrain.hpp"
#include "mdcpe/experiment.hpp"
#include "mdcpe/io.hpp"
#include "mdcpe/learner.hpp"
#include "mdcpe/metrics.hpp"
#include "mdcpe/numerics.hpp"
#include "mdcpe/preprocess.hpp"
#include "mdcpe/rnn.hpp"
#include "mdcpe/synthetic.hpp"

using namespace mdcpe;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

// Runs a criterion body; an escaping exception counts as a failure.
void criterion(int id, const std::function<std::string(bool&)>& body) {
  bool ok = true;
  std::string detail;
  try {
    detail = body(ok);
  } catch (const std::exception& e) {
    ok = false;
    detail = std::string("exception: ") + e.what();
  }
  report(id, ok, detail);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Tensor random_tensor(const Shape& shape, SeededRng& rng) {
  Tensor t(shape);
  for (auto& v : t.values()) v = rng.uniform(-1.0, 1.0);
  return t;
}

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// ---- 1: gradients -------------------------------------------------------

std::string gradient_suite(bool& ok) {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  SeededRng rng(101);
  for (std::size_t hidden : {2u, 4u})
    for (std::size_t steps : {1u, 3u, 8u}) {
      SeededRng init(hidden * 100 + steps);
      RnnModel model({steps * 2, 2, hidden, hidden, 3}, init);
      const Tensor seq = random_tensor({steps, 2}, rng);
      const std::size_t target = steps % 3;
      const auto f = rnn_forward(seq, model);
      rnn_backward(f, cross_entropy(softmax(f.logits), target).grad_logits, model.params());
      const auto r = gradient_check(
          [&](const ParamStore& p) {
            return cross_entropy(softmax(rnn_forward(seq, p).logits), target).loss;
          },
          model.params(), 1e-5);
      worst = std::max(worst, r.max_relative_error);
    }
  for (std::size_t maps : {1u, 2u}) {
    CnnConfig c;
    c.patch = 6;
    c.channels = 6;
    c.c1_maps = maps;
    c.c2_maps = maps;
    c.c1_kernel = {3, 3, 3};
    c.c2_kernel = {2, 2, 2};
    c.fc1 = 5;
    c.classes = 3;
    SeededRng init(300 + maps);
    CnnModel model(c, init);
    const Tensor patch = random_tensor({6, 6, 6}, rng);
    const auto& geometry = model.geometry();
    const auto f = cnn_forward(patch, model, false, 0.0, nullptr);
    cnn_backward(f, cross_entropy(softmax(f.logits), 1).grad_logits, model.params());
    const auto r = gradient_check(
        [&](const ParamStore& p) {
          const auto g = cnn_forward(patch, geometry, p, false, 0.0, nullptr);
          return cross_entropy(softmax(g.logits), 1).loss;
        },
        model.params(), 1e-5);
    worst = std::max(worst, r.max_relative_error);
  }
  const double elapsed = seconds_since(t0);
  ok = worst < 1e-4 && elapsed < 60.0;
  return "max relative error " + fmt("%.3e", worst) + " (< 1e-4), " + fmt("%.2f", elapsed) +
         " s (< 60 s)";
}

// ---- 2: convolution and pooling oracles ---------------------------------

Tensor conv_oracle(const Tensor& in, const Tensor& w, const Tensor& b) {
  const std::size_t M = in.dim(0), X = in.dim(1), Y = in.dim(2), Z = in.dim(3);
  const std::size_t J = w.dim(0), KX = w.dim(2), KY = w.dim(3), KZ = w.dim(4);
  Tensor out({J, X - KX + 1, Y - KY + 1, Z - KZ + 1});
  for (std::size_t j = 0; j < J; ++j)
    for (std::size_t x = 0; x + KX <= X; ++x)
      for (std::size_t y = 0; y + KY <= Y; ++y)
        for (std::size_t z = 0; z + KZ <= Z; ++z) {
          double s = b[j];
          for (std::size_t m = 0; m < M; ++m)
            for (std::size_t h = 0; h < KX; ++h)
              for (std::size_t l = 0; l < KY; ++l)
                for (std::size_t d = 0; d < KZ; ++d)
                  s += w[(((j * M + m) * KX + h) * KY + l) * KZ + d] *
                       in.at(m, x + h, y + l, z + d);
          out.at(j, x, y, z) = sig(s);
        }
  return out;
}

Tensor pool_oracle(const Tensor& in) {
  const std::size_t M = in.dim(0), X = in.dim(1), Y = in.dim(2), Z = in.dim(3);
  Tensor out({M, (X + 1) / 2, (Y + 1) / 2, (Z + 1) / 2});
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t x = 0; x < out.dim(1); ++x)
      for (std::size_t y = 0; y < out.dim(2); ++y)
        for (std::size_t z = 0; z < out.dim(3); ++z) {
          double best = -INFINITY;
          for (std::size_t a = 2 * x; a < std::min(2 * x + 2, X); ++a)
            for (std::size_t c = 2 * y; c < std::min(2 * y + 2, Y); ++c)
              for (std::size_t d = 2 * z; d < std::min(2 * z + 2, Z); ++d)
                best = std::max(best, in.at(m, a, c, d));
          out.at(m, x, y, z) = best;
        }
  return out;
}

std::string conv_oracle_check(bool& ok) {
  SeededRng rng(202);
  const std::size_t kernels[] = {1, 3, 5};
  double worst = 0.0;
  bool pool_exact = true;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 1 + rng.below(3), j = 1 + rng.below(3);
    const std::size_t kx = kernels[rng.below(3)], ky = kernels[rng.below(3)],
                      kz = kernels[rng.below(3)];
    const Tensor in =
        random_tensor({m, kx + rng.below(5), ky + rng.below(5), kz + rng.below(5)}, rng);
    const Tensor w = random_tensor({j, m, kx, ky, kz}, rng);
    const Tensor b = random_tensor({j}, rng);
    const Tensor got = conv3d_forward(in, w, b), want = conv_oracle(in, w, b);
    if (got.shape() != want.shape()) {
      ok = false;
      return "shape mismatch on trial " + std::to_string(trial);
    }
    for (std::size_t i = 0; i < got.size(); ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
    pool_exact = pool_exact && maxpool3d(got).output == pool_oracle(got);
  }
  ok = worst <= 1e-12 && pool_exact;
  return "50 configs, conv max |diff| " + fmt("%.3e", worst) + " (<= 1e-12), pool " +
         (pool_exact ? "exact" : "MISMATCH");
}

// ---- 3: GRU ----------------------------------------------------------------

std::string gru_checks(bool& ok) {
  // Two units, one input, every weight 0.1, h_prev = (0.5, -0.5), x = 1.
  RnnModel model({1, 1, 2, 2, 2});
  for (auto& [name, p] : model.params()) p.value.fill(0.1);
  const std::vector<double> x{1.0}, h{0.5, -0.5};
  const auto step = gru_step(x, h, GruWeights::from(model.params()));
  double worst = 0.0;
  for (std::size_t i = 0; i < 2; ++i) {
    const double az = 0.1 * x[0] + 0.1 * h[0] + 0.1 * h[1];
    const double ar = az;
    const double uh = 0.1 * h[0] + 0.1 * h[1];
    const double z = sig(az), r = sig(ar);
    const double c = std::tanh(0.1 * x[0] + r * uh);
    worst = std::max(worst, std::abs(step.h[i] - (z * h[i] + (1 - z) * c)));
  }
  SeededRng rng(303);
  std::size_t violations = 0;
  double max_abs = 0.0;
  for (int draw = 0; draw < 10000; ++draw) {
    RnnModel m({6, 2, 3, 3, 2});
    for (auto& [name, p] : m.params())
      for (auto& v : p.value.values()) v = rng.uniform(-5.0, 5.0);
    Tensor seq({3, 2});
    for (auto& v : seq.values()) v = rng.uniform(-3.0, 3.0);
    for (const auto& s : rnn_forward(seq, m).steps)
      for (double v : s.h) {
        max_abs = std::max(max_abs, std::abs(v));
        violations += std::abs(v) > 1.0;
      }
  }
  ok = worst <= 1e-12 && violations == 0;
  return "hand case |diff| " + fmt("%.3e", worst) + " (<= 1e-12), 10000 draws max |h| " +
         fmt("%.6f", max_abs) + " (<= 1)";
}

// ---- 4: co-decision ------------------------------------------------------

std::string codecision_checks(bool& ok) {
  SeededRng rng(404);
  std::size_t changed = 0, neutral_mismatch = 0;
  for (int pair = 0; pair < 1000; ++pair) {
    const std::size_t k = 2 + rng.below(15);
    std::vector<double> p1(k), p2(k);
    for (auto& v : p1) v = rng.uniform(0.01, 1.0);
    for (auto& v : p2) v = rng.uniform(0.01, 1.0);
    const auto base = codecide(p1, p2);
    const double a = std::exp(rng.uniform(-5.0, 5.0)), b = std::exp(rng.uniform(-5.0, 5.0));
    std::vector<double> q1 = p1, q2 = p2;
    for (auto& v : q1) v *= a;
    for (auto& v : q2) v *= b;
    changed += codecide(q1, p2).cls != base.cls;
    changed += codecide(p1, q2).cls != base.cls;
    changed += codecide(q1, q2).cls != base.cls;
    // Multiplying by a uniform vector must leave the other learner's choice as is.
    const std::vector<double> uniform(k, 1.0 / static_cast<double>(k));
    neutral_mismatch += codecide(p1, uniform).cls != argmax(p1);
    neutral_mismatch += codecide(uniform, p2).cls != argmax(p2);
  }
  ok = changed == 0 && neutral_mismatch == 0;
  return "1000 pairs, argmax changes under rescaling " + std::to_string(changed) +
         ", uniform-factor mismatches " + std::to_string(neutral_mismatch);
}

// ---- 5 and 6: balance, exclusion, monotonicity ----------------------------

struct ImbalancedScene {
  SyntheticScene synth;
  HyperCube normalized;
  HyperCube reduced;
  DataSplit split;
};

ImbalancedScene imbalanced_scene() {
  SyntheticSpec spec;
  spec.height = 22;
  spec.width = 20;
  spec.bands = 8;
  spec.classes = 2;
  spec.geometry = Geometry::Stripes;
  spec.ratios = {10, 1};
  spec.noise_sigma = 0.05;
  ImbalancedScene s{generate_synthetic(spec, 505), {}, {}, {}};
  s.normalized = minmax_normalize(s.synth.cube);
  s.reduced = pca_transform(s.normalized, pca_fit_components(s.normalized, 2));
  s.split = split_data(s.synth.labels, {0.1, 0.05, 506});
  return s;
}

struct LearnerPair {
  SpectralLearner spectral;
  SpatialLearner spatial;
};

LearnerPair make_pair(const ImbalancedScene& s) {
  SeededRng rng(507);
  CnnConfig cc;
  cc.patch = 9;
  cc.channels = 2;
  cc.c1_maps = 2;
  cc.c2_maps = 2;
  cc.fc1 = 16;
  cc.classes = 2;
  RnnModel rnn({8, 4, 6, 6, 2}, rng);
  CnnModel cnn(cc, rng);
  return {SpectralLearner(s.normalized, rnn, {40, 0.2, 4}),
          SpatialLearner(s.reduced, cnn, {200, 0.2, 4}, 0.0)};
}

std::string join(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

double stddev(const std::vector<std::size_t>& v) {
  const double mean =
      std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double acc = 0.0;
  for (auto x : v) acc += (static_cast<double>(x) - mean) * (static_cast<double>(x) - mean);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

// Asserts exclusion and strict |Du| decrease after every round.
struct LoopWatch {
  std::size_t last_du;
  std::size_t rounds = 0;
  std::size_t exclusion_failures = 0;
  std::size_t monotone_failures = 0;

  void operator()(const IterationRecord& rec, const CoTrainState& st) {
    ++rounds;
    try {
      verify_exclusion(st);
    } catch (const std::exception&) {
      ++exclusion_failures;
    }
    std::size_t added = 0;
    for (auto a : rec.added_spectral) added += a;
    for (auto a : rec.added_spatial) added += a;
    if (added > 0 ? st.du.size() >= last_du : st.du.size() > last_du) ++monotone_failures;
    last_du = st.du.size();
  }
};

LoopWatch mdcpe_watch{0};
LoopWatch dcpe_watch{0};

std::string balance_check(bool& ok) {
  const auto scene = imbalanced_scene();
  const auto counts = scene.synth.labels.class_counts();
  const std::size_t n_update = 3;
  CoTrainConfig cfg;
  cfg.n_update = n_update;
  cfg.max_iterations = 3;

  auto mdcpe = make_pair(scene);
  std::vector<IterationRecord> records;
  mdcpe_watch.last_du = scene.split.unlabeled.size();
  SeededRng rng(508);
  cotrain_loop(mdcpe.spectral, mdcpe.spatial, scene.split.labeled, scene.split.unlabeled,
               scene.split.validation, cfg, rng,
               [&](const IterationRecord& rec, const CoTrainState& st) {
                 mdcpe_watch(rec, st);
                 if (rec.iteration > 0) records.push_back(rec);
               });

  std::ostringstream detail;
  detail << "pool " << counts[1] << ":" << counts[2] << ", n_update " << n_update << "; MDCPE";
  bool premise = records.size() == 3;
  bool balanced = true;
  for (const auto& rec : records) {
    for (const auto* pair : {&rec.qualifying_spectral, &rec.qualifying_spatial})
      for (auto q : *pair) premise = premise && q >= n_update;
    for (const auto* added : {&rec.added_spectral, &rec.added_spatial}) {
      for (auto a : *added) balanced = balanced && a == n_update;
      balanced = balanced && stddev(*added) == 0.0;
    }
    detail << " it" << rec.iteration << " added1=" << join(rec.added_spectral)
           << " added2=" << join(rec.added_spatial) << " (qualifying "
           << join(rec.qualifying_spectral) << "/" << join(rec.qualifying_spatial) << ")";
  }

  cfg.mode = CoTrainMode::Dcpe;
  auto dcpe = make_pair(scene);
  dcpe_watch.last_du = scene.split.unlabeled.size();
  SeededRng dcpe_rng(508);
  std::vector<std::size_t> histogram(2, 0);
  detail << "; DCPE";
  cotrain_loop(dcpe.spectral, dcpe.spatial, scene.split.labeled, scene.split.unlabeled,
               scene.split.validation, cfg, dcpe_rng,
               [&](const IterationRecord& rec, const CoTrainState& st) {
                 dcpe_watch(rec, st);
                 if (rec.iteration == 0) return;
                 for (std::size_t c = 0; c < 2; ++c)
                   histogram[c] += rec.added_spectral[c] + rec.added_spatial[c];
                 detail << " it" << rec.iteration << " added1=" << join(rec.added_spectral)
                        << " added2=" << join(rec.added_spatial) << " (std "
                        << fmt("%.3f", stddev(rec.added_spectral)) << "/"
                        << fmt("%.3f", stddev(rec.added_spatial)) << ")";
               });
  detail << " histogram=" << join(histogram) << " std " << fmt("%.3f", stddev(histogram));
  if (!premise) detail << "; premise (>= n_update qualifying per class) not met";
  ok = premise && balanced;
  return detail.str();
}

std::string exclusion_check(bool& ok) {
  ok = mdcpe_watch.rounds == 4 && dcpe_watch.rounds == 4 &&
       mdcpe_watch.exclusion_failures + dcpe_watch.exclusion_failures == 0 &&
       mdcpe_watch.monotone_failures + dcpe_watch.monotone_failures == 0;
  return "rounds checked " + std::to_string(mdcpe_watch.rounds + dcpe_watch.rounds) +
         ", exclusion failures " +
         std::to_string(mdcpe_watch.exclusion_failures + dcpe_watch.exclusion_failures) +
         ", |Du| not decreasing " +
         std::to_string(mdcpe_watch.monotone_failures + dcpe_watch.monotone_failures);
}

// ---- 7: metrics ----------------------------------------------------------

std::string metrics_check(bool& ok) {
  SeededRng rng(707);
  double worst = 0.0;
  std::size_t kappa_above = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + rng.below(9);
    std::vector<std::uint64_t> counts(k * k);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j)
        counts[i * k + j] = rng.below(i == j ? 200 : 40) + (i == j);
    const ConfusionMatrix cm(k, counts);
    double n = 0, diag = 0, aa = 0, chance = 0;
    for (std::size_t i = 0; i < k; ++i) {
      double row = 0, col = 0;
      for (std::size_t j = 0; j < k; ++j) {
        row += static_cast<double>(counts[i * k + j]);
        col += static_cast<double>(counts[j * k + i]);
      }
      n += row;
      diag += static_cast<double>(counts[i * k + i]);
      aa += static_cast<double>(counts[i * k + i]) / row;
      chance += row * col;
    }
    const double oa = diag / n;
    aa /= static_cast<double>(k);
    const double pe = chance / (n * n);
    const double kp = (oa - pe) / (1 - pe);
    worst = std::max({worst, std::abs(overall_accuracy(cm) - oa),
                      std::abs(average_accuracy(cm) - aa), std::abs(kappa(cm) - kp)});
    kappa_above += kappa(cm) > overall_accuracy(cm);
  }
  ok = worst <= 1e-12 && kappa_above == 0;
  return "200 matrices, max |diff| " + fmt("%.3e", worst) + " (<= 1e-12), kappa > OA on " +
         std::to_string(kappa_above);
}

// ---- 8: PCA --------------------------------------------------------------

std::string pca_check(bool& ok) {
  const std::size_t bands = 12, h = 20, w = 20;
  SeededRng rng(808);
  std::vector<std::vector<double>> basis(3, std::vector<double>(bands));
  for (auto& s : basis)
    for (auto& v : s) v = rng.uniform(-1.0, 1.0);
  HyperCube cube(h, w, bands);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) {
      const double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1), d = rng.uniform(-1, 1);
      for (std::size_t k = 0; k < bands; ++k)
        cube.at(r, c, k) = a * basis[0][k] + b * basis[1][k] + d * basis[2][k] +
                           1e-3 * rng.normal();
    }
  const auto model = pca_fit(cube, 0.99);
  const auto full = pca_fit_components(cube, bands);
  double ortho = 0.0;
  for (std::size_t i = 0; i < bands; ++i)
    for (std::size_t j = 0; j < bands; ++j) {
      double dot = 0;
      for (std::size_t k = 0; k < bands; ++k)
        dot += full.components.at(i, k) * full.components.at(j, k);
      ortho = std::max(ortho, std::abs(dot - (i == j ? 1.0 : 0.0)));
    }
  const auto projected = pca_transform(cube, full);
  double recon = 0.0;
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c)
      for (std::size_t k = 0; k < bands; ++k) {
        double v = full.mean[k];
        for (std::size_t p = 0; p < bands; ++p)
          v += projected.at(r, c, p) * full.components.at(p, k);
        recon = std::max(recon, std::abs(v - cube.at(r, c, k)));
      }
  ok = model.output_components() == 3 && ortho <= 1e-8 && recon <= 1e-8;
  return "components at 0.99: " + std::to_string(model.output_components()) +
         " (want 3), orthonormality " + fmt("%.3e", ortho) + ", reconstruction " +
         fmt("%.3e", recon) + " (<= 1e-8)";
}

// ---- 9 and 10: desk-scale run --------------------------------------------

fs::path desk_dir() { return fs::temp_directory_path() / "mdcpe_acceptance"; }

ExperimentConfig desk_config(const std::string& out) {
  ExperimentConfig c;
  c.cube_path = (desk_dir() / "scene.hsic").string();
  c.labels_path = (desk_dir() / "scene.hsil").string();
  c.seed = 7;
  c.labeled_fraction = 0.02;
  c.validation_fraction = 0.05;
  c.n_update = 3;
  c.max_iterations = 3;
  c.batch_size = 4;
  c.rnn_lr = 0.05;
  c.cnn_lr = 0.05;
  c.output_dir = (desk_dir() / out).string();
  return c;
}

std::vector<double> logged_history(const std::string& log) {
  std::vector<double> out;
  std::istringstream in(log);
  std::string line;
  while (std::getline(in, line)) {
    const auto at = line.find("val_oa=");
    if (line.rfind("iteration=", 0) == 0 && at != std::string::npos)
      out.push_back(std::stod(line.substr(at + 7)));
  }
  return out;
}

std::string desk_run(bool& ok) {
  fs::remove_all(desk_dir());
  fs::create_directories(desk_dir());
  SyntheticSpec spec;  // 32 x 32, 16 bands, 4 classes, blocks
  spec.noise_sigma = 0.05;
  const auto scene = generate_synthetic(spec, 7);
  save_cube(scene.cube, desk_dir() / "scene.hsic");
  save_labels(scene.labels, desk_dir() / "scene.hsil");

  const auto t0 = std::chrono::steady_clock::now();
  const auto report = run_experiment(desk_config("first"));
  const double elapsed = seconds_since(t0);
  const double oa = overall_accuracy(report.test_confusion);
  const auto history = logged_history(read_file(desk_dir() / "first" / "iterations.log"));
  const std::size_t logged_best = history.empty() ? 0 : argmax(history);
  const bool csv = fs::exists(desk_dir() / "first" / "metrics.csv");
  ok = elapsed < 300.0 && oa >= 0.95 && csv && history.size() == report.history.size() &&
       report.best_iteration == logged_best;
  std::string hist;
  for (double v : history) hist += (hist.empty() ? "" : ",") + fmt("%.4f", v);
  return fmt("%.1f", elapsed) + " s (< 300 s), test OA " + fmt("%.4f", oa) +
         " (>= 0.95), logged val OA [" + hist + "], best_iteration " +
         std::to_string(report.best_iteration) + " vs argmax " + std::to_string(logged_best);
}

std::string determinism(bool& ok) {
  run_experiment(desk_config("second"));
  const bool metrics = read_file(desk_dir() / "first" / "metrics.csv") ==
                       read_file(desk_dir() / "second" / "metrics.csv");
  const bool log = read_file(desk_dir() / "first" / "iterations.log") ==
                   read_file(desk_dir() / "second" / "iterations.log");
  ok = metrics && log;
  return std::string("metrics.csv ") + (metrics ? "identical" : "DIFFERS") + ", iterations.log " +
         (log ? "identical" : "DIFFERS");
}

// ---- 11: configuration round trip ----------------------------------------

std::string config_round_trip(bool& ok) {
  struct Setting {
    const char* batch;
    const char* rnn_lr;
    const char* cnn_lr;
    const char* dropout;
    const char* n_update;
  };
  const Setting settings[] = {{"32", "0.001", "0.0003", "0.3", "7"},
                              {"32", "0.003", "0.0001", "0.3", "3"},
                              {"64", "0.001", "0.0001", "0.4", "5"}};
  std::size_t checked = 0, mismatched = 0;
  for (const auto& s : settings) {
    const std::pair<const char*, const char*> lines[] = {{"batch_size", s.batch},
                                                         {"rnn.lr", s.rnn_lr},
                                                         {"cnn.lr", s.cnn_lr},
                                                         {"cnn.dropout", s.dropout},
                                                         {"cotrain.n_update", s.n_update}};
    std::string text;
    for (const auto& [key, value] : lines) text += std::string(key) + " = " + value + "\n";
    const auto parsed = parse_config(text);
    const std::string echo = echo_config(parsed);
    for (const auto& [key, value] : lines) {
      ++checked;
      if (echo.find(std::string(key) + " = " + value + "\n") == std::string::npos) ++mismatched;
    }
    mismatched += !(parse_config(echo) == parsed);
  }
  ok = mismatched == 0;
  return std::to_string(checked) + " values echoed, mismatches " + std::to_string(mismatched);
}

}  // namespace

int main() {
  criterion(1, gradient_suite);
  criterion(2, conv_oracle_check);
  criterion(3, gru_checks);
  criterion(4, codecision_checks);
  criterion(5, balance_check);
  criterion(6, exclusion_check);
  criterion(7, metrics_check);
  criterion(8, pca_check);
  criterion(9, desk_run);
  criterion(10, determinism);
  criterion(11, config_round_trip);
  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
