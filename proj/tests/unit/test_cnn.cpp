// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "mdcpe/cnn.hpp"
#include "mdcpe/error.hpp"
#include "mdcpe/numerics.hpp"

using namespace mdcpe;

namespace {

Tensor random_tensor(const Shape& shape, SeededRng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(shape);
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

Tensor conv_oracle(const Tensor& in, const Tensor& w, const Tensor& b) {
  const std::size_t M = in.dim(0), X = in.dim(1), Y = in.dim(2), Z = in.dim(3);
  const std::size_t J = w.dim(0), KX = w.dim(2), KY = w.dim(3), KZ = w.dim(4);
  const std::size_t OX = X - KX + 1, OY = Y - KY + 1, OZ = Z - KZ + 1;
  Tensor out({J, OX, OY, OZ});
  for (std::size_t j = 0; j < J; ++j)
    for (std::size_t x = 0; x < OX; ++x)
      for (std::size_t y = 0; y < OY; ++y)
        for (std::size_t z = 0; z < OZ; ++z) {
          double s = b[j];
          for (std::size_t m = 0; m < M; ++m)
            for (std::size_t h = 0; h < KX; ++h)
              for (std::size_t l = 0; l < KY; ++l)
                for (std::size_t d = 0; d < KZ; ++d)
                  s += w[(((j * M + m) * KX + h) * KY + l) * KZ + d] *
                       in.at(m, x + h, y + l, z + d);
          out.at(j, x, y, z) = 1.0 / (1.0 + std::exp(-s));
        }
  return out;
}

Tensor pool_oracle(const Tensor& in) {
  const std::size_t M = in.dim(0), X = in.dim(1), Y = in.dim(2), Z = in.dim(3);
  const std::size_t OX = (X + 1) / 2, OY = (Y + 1) / 2, OZ = (Z + 1) / 2;
  Tensor out({M, OX, OY, OZ});
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t x = 0; x < OX; ++x)
      for (std::size_t y = 0; y < OY; ++y)
        for (std::size_t z = 0; z < OZ; ++z) {
          double best = -INFINITY;
          for (std::size_t a = 2 * x; a < std::min(2 * x + 2, X); ++a)
            for (std::size_t c = 2 * y; c < std::min(2 * y + 2, Y); ++c)
              for (std::size_t d = 2 * z; d < std::min(2 * z + 2, Z); ++d)
                best = std::max(best, in.at(m, a, c, d));
          out.at(m, x, y, z) = best;
        }
  return out;
}

CnnConfig tiny_config(std::size_t maps) {
  CnnConfig c;
  c.patch = 6;
  c.channels = 6;
  c.c1_maps = maps;
  c.c2_maps = maps;
  c.c1_kernel = {3, 3, 3};
  c.c2_kernel = {2, 2, 2};
  c.fc1 = 5;
  c.classes = 3;
  return c;
}

}  // namespace

TEST(Conv3d, UnitKernelIsElementwiseSigmoid) {
  SeededRng rng(1);
  const Tensor in = random_tensor({1, 3, 3, 2}, rng);
  const Tensor out = conv3d_forward(in, Tensor({1, 1, 1, 1, 1}, 1.0), Tensor({1}));
  for (std::size_t i = 0; i < in.size(); ++i) EXPECT_EQ(out[i], sigmoid(in[i]));
}

TEST(Conv3d, ZeroKernelGivesHalf) {
  SeededRng rng(2);
  const Tensor out =
      conv3d_forward(random_tensor({2, 4, 4, 4}, rng), Tensor({3, 2, 3, 3, 3}), Tensor({3}));
  EXPECT_EQ(out.shape(), (Shape{3, 2, 2, 2}));
  for (double v : out.values()) EXPECT_EQ(v, 0.5);
}

TEST(Conv3d, MatchesNestedLoopOracle) {
  SeededRng rng(3);
  const Tensor in = random_tensor({1, 8, 8, 8}, rng);
  const Tensor w = random_tensor({2, 1, 3, 3, 3}, rng);
  const Tensor b = random_tensor({2}, rng);
  const Tensor got = conv3d_forward(in, w, b), want = conv_oracle(in, w, b);
  ASSERT_EQ(got.shape(), want.shape());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
}

TEST(Conv3d, RandomConfigurationsMatchOracle) {
  SeededRng rng(4);
  const std::size_t kernels[] = {1, 3, 5};
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 1 + rng.below(3), j = 1 + rng.below(3);
    const std::size_t kx = kernels[rng.below(3)], ky = kernels[rng.below(3)],
                      kz = kernels[rng.below(3)];
    const Tensor in = random_tensor({m, kx + rng.below(4), ky + rng.below(4), kz + rng.below(4)}, rng);
    const Tensor w = random_tensor({j, m, kx, ky, kz}, rng);
    const Tensor b = random_tensor({j}, rng);
    const Tensor got = conv3d_forward(in, w, b), want = conv_oracle(in, w, b);
    for (std::size_t i = 0; i < got.size(); ++i) ASSERT_NEAR(got[i], want[i], 1e-12);
  }
}

TEST(Conv3d, InputSmallerThanKernel) {
  EXPECT_THROW(conv3d_forward(Tensor({1, 2, 4, 4}), Tensor({1, 1, 3, 3, 3}), Tensor({1})),
               ShapeError);
  EXPECT_THROW(conv3d_forward(Tensor({2, 4, 4, 4}), Tensor({1, 1, 3, 3, 3}), Tensor({1})),
               ShapeError);
}

TEST(Conv3d, BackwardGradientCheck) {
  SeededRng rng(5);
  for (std::size_t maps : {1u, 2u}) {
    const Tensor in = random_tensor({maps, 6, 6, 6}, rng);
    const Tensor target = random_tensor({maps, 4, 4, 4}, rng);
    ParamStore ps;
    ps.add("w", random_tensor({maps, maps, 3, 3, 3}, rng, -0.3, 0.3));
    ps.add("b", random_tensor({maps}, rng));
    auto loss = [&](const ParamStore& p) {
      const Tensor out = conv3d_forward(in, p.value("w"), p.value("b"));
      double s = 0.0;
      for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * target[i];
      return s;
    };
    const Tensor out = conv3d_forward(in, ps.value("w"), ps.value("b"));
    conv3d_backward(in, ps.value("w"), out, target, ps.grad("w"), ps.grad("b"));
    EXPECT_LT(gradient_check(loss, ps, 1e-5).max_relative_error, 1e-6);
  }
}

TEST(Conv3d, InputGradientMatchesFiniteDifferences) {
  SeededRng rng(6);
  const Tensor w = random_tensor({2, 1, 3, 3, 3}, rng);
  const Tensor b = random_tensor({2}, rng);
  ParamStore ps;
  ps.add("x", random_tensor({1, 5, 5, 4}, rng));
  const Tensor target = random_tensor({2, 3, 3, 2}, rng);
  auto loss = [&](const ParamStore& p) {
    const Tensor out = conv3d_forward(p.value("x"), w, b);
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * target[i];
    return s;
  };
  const Tensor out = conv3d_forward(ps.value("x"), w, b);
  Tensor gw(w.shape()), gb(b.shape());
  ps.grad("x") = conv3d_backward(ps.value("x"), w, out, target, gw, gb);
  EXPECT_LT(gradient_check(loss, ps, 1e-5).max_relative_error, 1e-6);
}

TEST(MaxPool, ConstantVolume) {
  const auto r = maxpool3d(Tensor({1, 4, 4, 4}, 2.5));
  for (double v : r.output.values()) EXPECT_EQ(v, 2.5);
}

TEST(MaxPool, SingleSpike) {
  Tensor in({1, 2, 2, 2});
  in.at(0, 1, 0, 1) = 9.0;
  const auto r = maxpool3d(in);
  EXPECT_EQ(r.output.shape(), (Shape{1, 1, 1, 1}));
  EXPECT_EQ(r.output[0], 9.0);
}

TEST(MaxPool, PartialWindowsMatchOracle) {
  SeededRng rng(7);
  const Tensor in = random_tensor({2, 5, 5, 4}, rng);
  const auto r = maxpool3d(in);
  EXPECT_EQ(r.output.shape(), (Shape{2, 3, 3, 2}));
  EXPECT_EQ(r.output, pool_oracle(in));
  for (std::size_t i = 0; i < r.output.size(); ++i) EXPECT_EQ(in[r.argmax[i]], r.output[i]);
}

TEST(MaxPool, BackwardConservesGradient) {
  SeededRng rng(8);
  const Tensor in = random_tensor({2, 5, 4, 3}, rng);
  const auto r = maxpool3d(in);
  const Tensor g = random_tensor(r.output.shape(), rng);
  const Tensor back = maxpool3d_backward(g, r.argmax, in.shape());
  double gs = 0.0, bs = 0.0;
  for (double v : g.values()) gs += v;
  for (double v : back.values()) bs += v;
  EXPECT_NEAR(gs, bs, 1e-12);
  std::size_t nonzero = 0;
  for (double v : back.values()) nonzero += v != 0.0;
  EXPECT_EQ(nonzero, r.output.size());
}

TEST(CnnGeometry, DefaultStack) {
  CnnConfig c;
  c.classes = 4;
  const auto g = CnnGeometry::compute(c);
  EXPECT_EQ(g.c1_kernel, (Shape{8, 1, 5, 5, 3}));
  EXPECT_EQ(g.c1_out, (Shape{8, 11, 11, 1}));
  EXPECT_EQ(g.p1_out, (Shape{8, 6, 6, 1}));
  EXPECT_EQ(g.c2_kernel, (Shape{16, 8, 3, 3, 1}));
  EXPECT_EQ(g.c2_out, (Shape{16, 4, 4, 1}));
  EXPECT_EQ(g.p2_out, (Shape{16, 2, 2, 1}));
  EXPECT_EQ(g.flat, 64u);
}

TEST(CnnGeometry, PatchTooSmall) {
  CnnConfig c;
  c.patch = 7;
  c.classes = 2;
  EXPECT_THROW(CnnGeometry::compute(c), ShapeError);
}

TEST(CnnForward, ZeroModelUniform) {
  CnnConfig c = tiny_config(1);
  CnnModel model(c);
  SeededRng rng(9);
  const auto p = cnn_predict(random_tensor({6, 6, 6}, rng), model);
  for (double v : p) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(CnnForward, FeaturesAndProbabilitiesConsistent) {
  SeededRng rng(10);
  CnnModel model(tiny_config(2), rng);
  const Tensor patch = random_tensor({6, 6, 6}, rng);
  const auto p = cnn_predict(patch, model);
  const auto f = cnn_features(patch, model);
  const auto sf = softmax(f);
  double sum = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(sf[i], p[i], 1e-12);
    sum += p[i];
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(CnnForward, PatchShapeMismatch) {
  SeededRng rng(10);
  CnnModel model(tiny_config(1), rng);
  EXPECT_THROW(cnn_predict(Tensor({6, 6, 5}), model), ShapeError);
}

TEST(Dropout, InferenceIsIdentityAndRepeatable) {
  SeededRng rng(11);
  CnnModel model(tiny_config(2), rng);
  const Tensor patch = random_tensor({6, 6, 6}, rng);
  const auto a = cnn_forward(patch, model, false, 0.3, &rng);
  const auto b = cnn_forward(patch, model, false, 0.3, &rng);
  EXPECT_EQ(a.logits, b.logits);
  EXPECT_EQ(a.fc1_drop, a.fc1_out);
  EXPECT_TRUE(a.mask.empty());
}

TEST(Dropout, RateZeroMatchesInference) {
  SeededRng rng(12);
  CnnModel model(tiny_config(2), rng);
  const Tensor patch = random_tensor({6, 6, 6}, rng);
  EXPECT_EQ(cnn_forward(patch, model, true, 0.0, &rng).logits,
            cnn_forward(patch, model, false, 0.0, nullptr).logits);
}

TEST(Dropout, MaskRateAndReproducibility) {
  CnnConfig c;
  c.patch = 9;
  c.channels = 1;
  c.classes = 2;
  SeededRng init(13);
  CnnModel model(c, init);
  SeededRng rng(14);
  const Tensor patch = random_tensor({9, 9, 1}, rng);
  SeededRng r1(99), r2(99);
  const auto a = cnn_forward(patch, model, true, 0.3, &r1);
  const auto b = cnn_forward(patch, model, true, 0.3, &r2);
  EXPECT_EQ(a.mask, b.mask);
  std::size_t zeroed = 0;
  for (double m : a.mask) {
    EXPECT_TRUE(m == 0.0 || std::abs(m - 1.0 / 0.7) < 1e-15);
    zeroed += m == 0.0;
  }
  EXPECT_EQ(a.mask.size(), 1024u);
  EXPECT_GE(zeroed, 307u - 44u);
  EXPECT_LE(zeroed, 307u + 44u);
}

TEST(Dropout, BadRateRejected) {
  SeededRng rng(15);
  CnnModel model(tiny_config(1), rng);
  const Tensor patch({6, 6, 6});
  EXPECT_THROW(cnn_forward(patch, model, true, 1.0, &rng), InvalidConfig);
  EXPECT_THROW(cnn_forward(patch, model, true, -0.1, &rng), InvalidConfig);
}

TEST(CnnBackward, ZeroUpstreamGivesZeroGradients) {
  SeededRng rng(16);
  CnnModel model(tiny_config(2), rng);
  const auto f = cnn_forward(random_tensor({6, 6, 6}, rng), model, false, 0.0, nullptr);
  cnn_backward(f, std::vector<double>(3, 0.0), model.params());
  for (const auto& [name, p] : model.params())
    for (double g : p.grad.values()) EXPECT_EQ(g, 0.0);
}

TEST(CnnBackward, GradientCheckTinyNet) {
  for (std::size_t maps : {1u, 2u}) {
    SeededRng rng(17 + maps);
    CnnModel model(tiny_config(maps), rng);
    const Tensor patch = random_tensor({6, 6, 6}, rng);
    const auto& geometry = model.geometry();
    auto loss = [&](const ParamStore& p) {
      const auto f = cnn_forward(patch, geometry, p, false, 0.0, nullptr);
      return cross_entropy(softmax(f.logits), 2).loss;
    };
    const auto f = cnn_forward(patch, model, false, 0.0, nullptr);
    cnn_backward(f, cross_entropy(softmax(f.logits), 2).grad_logits, model.params());
    const auto r = gradient_check(loss, model.params(), 1e-5);
    EXPECT_LT(r.max_relative_error, 1e-4) << "maps " << maps << " worst " << r.worst_parameter;
  }
}

TEST(CnnBackward, GradientCheckWithFixedDropoutMask) {
  SeededRng rng(20);
  CnnModel model(tiny_config(2), rng);
  const Tensor patch = random_tensor({6, 6, 6}, rng);
  const auto& geometry = model.geometry();
  auto loss = [&](const ParamStore& p) {
    SeededRng mask_rng(5);
    const auto f = cnn_forward(patch, geometry, p, true, 0.4, &mask_rng);
    return cross_entropy(softmax(f.logits), 0).loss;
  };
  SeededRng mask_rng(5);
  const auto f = cnn_forward(patch, model, true, 0.4, &mask_rng);
  cnn_backward(f, cross_entropy(softmax(f.logits), 0).grad_logits, model.params());
  EXPECT_LT(gradient_check(loss, model.params(), 1e-5).max_relative_error, 1e-4);
}

namespace {

// Horizontal versus vertical stripes with random phase and noise.
std::vector<CnnSample> texture_samples(SeededRng& rng) {
  std::vector<CnnSample> samples;
  for (int i = 0; i < 12; ++i)
    for (std::size_t cls = 0; cls < 2; ++cls) {
      Tensor patch({9, 9, 1});
      const std::size_t phase = rng.below(2);
      for (std::size_t x = 0; x < 9; ++x)
        for (std::size_t y = 0; y < 9; ++y) {
          const std::size_t axis = cls == 0 ? x : y;
          patch.at(x, y, 0) = ((axis + phase) % 2 ? 1.0 : 0.0) + 0.05 * rng.normal();
        }
      samples.push_back({patch, cls});
    }
  return samples;
}

CnnConfig texture_config() {
  CnnConfig c;
  c.patch = 9;
  c.channels = 1;
  c.c1_maps = 4;
  c.c2_maps = 4;
  c.fc1 = 32;
  c.classes = 2;
  return c;
}

}  // namespace

TEST(CnnTrain, DisjointTexturesReachFullAccuracy) {
  SeededRng rng(21);
  CnnModel model(texture_config(), rng);
  const auto samples = texture_samples(rng);
  const auto losses = cnn_train(model, samples, {200, 0.5, 4}, 0.0, rng);
  EXPECT_LT(losses.back(), losses.front());
  for (const auto& s : samples) EXPECT_EQ(argmax(cnn_predict(s.patch, model)), s.target);
}

TEST(CnnTrain, ZeroLearningRateLeavesModel) {
  SeededRng rng(22);
  CnnModel model(texture_config(), rng);
  const auto before = model.params();
  cnn_train(model, texture_samples(rng), {3, 0.0, 4}, 0.3, rng);
  EXPECT_TRUE(model.params().same_values(before));
}

TEST(CnnTrain, Deterministic) {
  SeededRng ia(23), ib(23);
  CnnModel a(texture_config(), ia), b(texture_config(), ib);
  SeededRng ds(1);
  const auto samples = texture_samples(ds);
  SeededRng ra(2), rb(2);
  cnn_train(a, samples, {3, 0.1, 4}, 0.3, ra);
  cnn_train(b, samples, {3, 0.1, 4}, 0.3, rb);
  EXPECT_TRUE(a.params().same_values(b.params()));
}

TEST(CnnTrain, DocumentedDropoutRatesAccepted) {
  SeededRng rng(24);
  CnnModel model(texture_config(), rng);
  const auto samples = texture_samples(rng);
  for (double rate : {0.3, 0.3, 0.4}) EXPECT_NO_THROW(cnn_train(model, samples, {1, 0.01, 8}, rate, rng));
}
