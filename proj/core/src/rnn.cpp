// SPDX-License-Identifier: Apache-2.0
#include "mdcpe/rnn.hpp"

#include <algorithm>
#include <string>

#include "mdcpe/error.hpp"
#include "mdcpe/numerics.hpp"
#include "train_loop.hpp"

namespace mdcpe {
namespace {

// y += M v for M of shape (rows, cols).
void matvec_add(const Tensor& m, std::span<const double> v, std::span<double> y) {
  const std::size_t rows = m.dim(0), cols = m.dim(1);
  const double* data = m.data();
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = data + i * cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) acc += row[j] * v[j];
    y[i] += acc;
  }
}

// y += M^T g, and dM += g v^T.
void matvec_backward(const Tensor& m, std::span<const double> v, std::span<const double> g,
                     Tensor& dm, std::span<double> y) {
  const std::size_t rows = m.dim(0), cols = m.dim(1);
  const double* data = m.data();
  double* grad = dm.data();
  for (std::size_t i = 0; i < rows; ++i) {
    const double gi = g[i];
    if (gi == 0.0) continue;
    const double* row = data + i * cols;
    double* grow = grad + i * cols;
    for (std::size_t j = 0; j < cols; ++j) {
      grow[j] += gi * v[j];
      y[j] += gi * row[j];
    }
  }
}

void register_params(ParamStore& p, const RnnConfig& c) {
  p.add("gru.Wz", {c.hidden, c.group});
  p.add("gru.Uz", {c.hidden, c.hidden});
  p.add("gru.Wr", {c.hidden, c.group});
  p.add("gru.Ur", {c.hidden, c.hidden});
  p.add("gru.W", {c.hidden, c.group});
  p.add("gru.U", {c.hidden, c.hidden});
  p.add("fc1.weight", {c.fc1, c.hidden});
  p.add("fc1.bias", {c.fc1});
  p.add("fc2.weight", {c.classes, c.fc1});
  p.add("fc2.bias", {c.classes});
}

}  // namespace

void RnnConfig::validate() const {
  if (bands == 0 || group == 0 || hidden == 0 || fc1 == 0 || classes == 0)
    throw InvalidConfig("rnn config: bands, group, hidden, fc1 and classes must be positive");
}

GruWeights GruWeights::from(const ParamStore& params) {
  return GruWeights{params.value("gru.Wz"), params.value("gru.Uz"), params.value("gru.Wr"),
                    params.value("gru.Ur"), params.value("gru.W"),  params.value("gru.U")};
}

GruStepCache gru_step(std::span<const double> x, std::span<const double> h_prev,
                      const GruWeights& layer) {
  const std::size_t hidden = layer.hidden();
  if (x.size() != layer.input() || h_prev.size() != hidden ||
      layer.w_z.dim(1) != x.size() || layer.w_r.dim(1) != x.size() ||
      layer.u_z.dim(1) != hidden || layer.u_r.dim(1) != hidden)
    throw ShapeError("gru_step: input " + std::to_string(x.size()) + ", hidden " +
                     std::to_string(h_prev.size()) + " do not match layer " +
                     shape_string(layer.w.shape()));

  GruStepCache c;
  c.x.assign(x.begin(), x.end());
  c.h_prev.assign(h_prev.begin(), h_prev.end());
  c.z.assign(hidden, 0.0);
  c.r.assign(hidden, 0.0);
  c.u_h.assign(hidden, 0.0);
  c.candidate.assign(hidden, 0.0);
  c.h.assign(hidden, 0.0);

  matvec_add(layer.w_z, x, c.z);
  matvec_add(layer.u_z, h_prev, c.z);
  matvec_add(layer.w_r, x, c.r);
  matvec_add(layer.u_r, h_prev, c.r);
  matvec_add(layer.u, h_prev, c.u_h);
  matvec_add(layer.w, x, c.candidate);
  for (std::size_t i = 0; i < hidden; ++i) {
    c.z[i] = sigmoid(c.z[i]);
    c.r[i] = sigmoid(c.r[i]);
    c.candidate[i] = tanh_act(c.candidate[i] + c.r[i] * c.u_h[i]);
    c.h[i] = c.z[i] * h_prev[i] + (1.0 - c.z[i]) * c.candidate[i];
  }
  return c;
}

RnnModel::RnnModel(RnnConfig config) : config_(config) {
  config_.validate();
  register_params(params_, config_);
}

RnnModel::RnnModel(RnnConfig config, SeededRng& rng) : RnnModel(config) {
  const auto& c = config_;
  for (const char* name : {"gru.Wz", "gru.Wr", "gru.W"})
    init_uniform_fan_in(params_.value(name), c.group, rng);
  for (const char* name : {"gru.Uz", "gru.Ur", "gru.U"})
    init_uniform_fan_in(params_.value(name), c.hidden, rng);
  init_uniform_fan_in(params_.value("fc1.weight"), c.hidden, rng);
  init_uniform_fan_in(params_.value("fc2.weight"), c.fc1, rng);
}

RnnForward rnn_forward(const Tensor& sequence, const ParamStore& params) {
  if (sequence.rank() != 2 || sequence.dim(0) == 0)
    throw InvalidInput("rnn_forward: empty sequence");
  const GruWeights gru = GruWeights::from(params);
  const std::size_t steps = sequence.dim(0);
  const std::size_t group = sequence.dim(1);

  RnnForward out;
  out.steps.reserve(steps);
  std::vector<double> h(gru.hidden(), 0.0);
  for (std::size_t t = 0; t < steps; ++t) {
    out.steps.push_back(gru_step({sequence.data() + t * group, group}, h, gru));
    h = out.steps.back().h;
  }
  out.fc1_out = linear(h, params.value("fc1.weight"), params.value("fc1.bias"));
  for (double& v : out.fc1_out) v = tanh_act(v);
  out.logits = linear(out.fc1_out, params.value("fc2.weight"), params.value("fc2.bias"));
  return out;
}

RnnForward rnn_forward(const Tensor& sequence, const RnnModel& model) {
  return rnn_forward(sequence, model.params());
}

void rnn_backward(const RnnForward& forward, std::span<const double> grad_logits,
                  ParamStore& params) {
  if (forward.steps.empty() || forward.fc1_out.empty())
    throw InternalError("rnn_backward called without forward caches");

  Param& fc2w = params.at("fc2.weight");
  Param& fc2b = params.at("fc2.bias");
  Param& fc1w = params.at("fc1.weight");
  Param& fc1b = params.at("fc1.bias");

  std::vector<double> d_fc1 =
      linear_backward(forward.fc1_out, grad_logits, fc2w.value, fc2w.grad, fc2b.grad);
  for (std::size_t i = 0; i < d_fc1.size(); ++i)
    d_fc1[i] *= 1.0 - forward.fc1_out[i] * forward.fc1_out[i];
  std::vector<double> dh =
      linear_backward(forward.steps.back().h, d_fc1, fc1w.value, fc1w.grad, fc1b.grad);

  Param& wz = params.at("gru.Wz");
  Param& uz = params.at("gru.Uz");
  Param& wr = params.at("gru.Wr");
  Param& ur = params.at("gru.Ur");
  Param& w = params.at("gru.W");
  Param& u = params.at("gru.U");

  const std::size_t hidden = dh.size();
  std::vector<double> d_z(hidden), d_r(hidden), d_a(hidden), d_ru(hidden);
  std::vector<double> dh_prev(hidden);
  std::vector<double> dx_unused(w.value.dim(1));
  for (auto step = forward.steps.rbegin(); step != forward.steps.rend(); ++step) {
    const GruStepCache& c = *step;
    for (std::size_t i = 0; i < hidden; ++i) {
      const double z = c.z[i], r = c.r[i], cand = c.candidate[i];
      dh_prev[i] = dh[i] * z;
      // Candidate pre-activation a = W x + r * (U h_prev).
      d_a[i] = dh[i] * (1.0 - z) * (1.0 - cand * cand);
      d_ru[i] = d_a[i] * r;
      d_r[i] = d_a[i] * c.u_h[i] * r * (1.0 - r);
      d_z[i] = dh[i] * (c.h_prev[i] - cand) * z * (1.0 - z);
    }
    std::fill(dx_unused.begin(), dx_unused.end(), 0.0);
    matvec_backward(w.value, c.x, d_a, w.grad, dx_unused);
    matvec_backward(u.value, c.h_prev, d_ru, u.grad, dh_prev);
    matvec_backward(wz.value, c.x, d_z, wz.grad, dx_unused);
    matvec_backward(uz.value, c.h_prev, d_z, uz.grad, dh_prev);
    matvec_backward(wr.value, c.x, d_r, wr.grad, dx_unused);
    matvec_backward(ur.value, c.h_prev, d_r, ur.grad, dh_prev);
    dh.swap(dh_prev);
  }
}

Tensor rnn_sequence(std::span<const double> spectrum, const RnnConfig& config) {
  if (spectrum.size() != config.bands)
    throw ShapeError("spectrum has " + std::to_string(spectrum.size()) +
                     " bands, model expects " + std::to_string(config.bands));
  Tensor seq({config.steps(), config.group});
  std::copy(spectrum.begin(), spectrum.end(), seq.data());
  return seq;
}

std::vector<double> rnn_features(std::span<const double> spectrum, const RnnModel& model) {
  return rnn_forward(rnn_sequence(spectrum, model.config()), model).logits;
}

std::vector<double> rnn_predict(std::span<const double> spectrum, const RnnModel& model) {
  return softmax(rnn_features(spectrum, model));
}

std::vector<double> rnn_train(RnnModel& model, std::span<const RnnSample> samples,
                              const TrainOptions& options, SeededRng& rng) {
  ParamStore& params = model.params();
  const std::size_t classes = model.config().classes;
  for (const auto& s : samples)
    if (s.target >= classes)
      throw InvalidClass("training target " + std::to_string(s.target) + " outside [0, " +
                         std::to_string(classes) + ")");
  return detail::minibatch_sgd(params, samples.size(), options, rng, [&](std::size_t i) {
    const RnnForward fwd = rnn_forward(samples[i].sequence, params);
    const CrossEntropy ce = cross_entropy(softmax(fwd.logits), samples[i].target);
    rnn_backward(fwd, ce.grad_logits, params);
    return ce.loss;
  });
}

}  // namespace mdcpe
