// Copyright 2026 The pamkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "gradcheck.hpp"
#include "pam/nn/model.hpp"

namespace pam::nn {
namespace {

using testing::random_var;

// Plain nested-vector reimplementation of both forward passes for a single
// example, sharing nothing with the tape ops.
using Planes = std::vector<std::vector<std::vector<double>>>;  // [c][h][w]

Planes conv_relu(const Planes& in, const Node<double>& w, const Node<double>& b, int top, int left, bool relu) {
  const int c = static_cast<int>(in.size()), h = static_cast<int>(in[0].size()), wd = static_cast<int>(in[0][0].size());
  const int o = w.shape[0], kh = w.shape[2], kw = w.shape[3];
  Planes out(static_cast<std::size_t>(o), std::vector<std::vector<double>>(static_cast<std::size_t>(h), std::vector<double>(static_cast<std::size_t>(wd))));
  for (int oc = 0; oc < o; ++oc)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < wd; ++x) {
        double acc = b.value[oc];
        for (int ic = 0; ic < c; ++ic)
          for (int ky = 0; ky < kh; ++ky)
            for (int kx = 0; kx < kw; ++kx) {
              const int iy = y + ky - top, ix = x + kx - left;
              if (iy >= 0 && iy < h && ix >= 0 && ix < wd)
                acc += w.value[((oc * c + ic) * kh + ky) * kw + kx] * in[ic][iy][ix];
            }
        out[oc][y][x] = relu ? std::max(acc, 0.0) : acc;
      }
  return out;
}

Planes to_planes(const RowMatrixXd& m) {
  Planes p(1, std::vector<std::vector<double>>(static_cast<std::size_t>(m.rows())));
  for (Eigen::Index r = 0; r < m.rows(); ++r) p[0][r].assign(m.row(r).data(), m.row(r).data() + m.cols());
  return p;
}

std::vector<double> detector_reference(const ModelParams<double>& m, const RowMatrixXd& input, int blocks, int layers) {
  Planes f = to_planes(input);
  for (int b = 0; b < blocks; ++b) {
    for (int l = 0; l < layers; ++l) {
      const std::string base = "block" + std::to_string(b) + ".conv" + std::to_string(l);
      Planes y = conv_relu(f, *m.param(base + ".weight"), *m.param(base + ".bias"), 1, 1, true);
      f.insert(f.end(), y.begin(), y.end());
    }
    if (b + 1 < blocks) {
      for (auto& plane : f) {
        std::vector<std::vector<double>> pooled(plane.size() / 2, std::vector<double>(plane[0].size() / 2));
        for (std::size_t y = 0; y < pooled.size(); ++y)
          for (std::size_t x = 0; x < pooled[0].size(); ++x)
            pooled[y][x] = 0.25 * (plane[2 * y][2 * x] + plane[2 * y][2 * x + 1] + plane[2 * y + 1][2 * x] +
                                   plane[2 * y + 1][2 * x + 1]);
        plane = pooled;
      }
    }
  }
  const Node<double>& hw = *m.param("head.weight");
  const Node<double>& hb = *m.param("head.bias");
  std::vector<double> logits(2);
  for (int k = 0; k < 2; ++k) {
    double acc = hb.value[k];
    for (std::size_t c = 0; c < f.size(); ++c) {
      double mean = 0.0;
      for (const auto& row : f[c])
        for (double v : row) mean += v;
      mean /= static_cast<double>(f[c].size() * f[c][0].size());
      acc += hw.value[static_cast<Eigen::Index>(k * f.size() + c)] * mean;
    }
    logits[static_cast<std::size_t>(k)] = acc;
  }
  return logits;
}

TEST(Detector, ForwardMatchesStraightlineReference) {
  const auto m = make_detector<double>(3);
  const RowMatrixXd input = RowMatrixXd::Random(16, 11);
  Tape<double> tape(false);
  auto x = make_var<double>({1, 1, 16, 11}, Eigen::Map<const Vec<double>>(input.data(), input.size()));
  auto logits = detector_logits(tape, m, x);
  const std::vector<double> want = detector_reference(m, input, 2, 3);
  EXPECT_NEAR(logits->value[0], want[0], 1e-10);
  EXPECT_NEAR(logits->value[1], want[1], 1e-10);
}

TEST(Detector, ParameterCountFollowsDenseGrowth) {
  // Layer l of a dense block sees in + l * growth channels.
  const DetectorConfig cfg;
  std::int64_t want = 0;
  int channels = 1;
  for (int b = 0; b < cfg.blocks; ++b)
    for (int l = 0; l < cfg.layers_per_block; ++l, channels += cfg.growth)
      want += static_cast<std::int64_t>(cfg.growth) * channels * 9 + cfg.growth;
  want += 2 * channels + 2;
  EXPECT_EQ(make_detector<float>(0).parameter_count(), want);
  EXPECT_EQ(want, 9220);
}

TEST(Detector, ProbabilitiesSumToOne) {
  const auto m = make_detector<double>(4);
  auto x = random_var({3, 1, 64, 47}, 5);
  Tape<double> tape(false);
  const RowMatrix<double> p = softmax_rows(*detector_logits(tape, m, x));
  ASSERT_EQ(p.rows(), 3);
  for (Eigen::Index r = 0; r < 3; ++r) EXPECT_NEAR(p.row(r).sum(), 1.0, 1e-6);
}

TEST(Detector, ZeroInputAndZeroHeadGiveUniformOutput) {
  const auto m = make_detector<double>(6, {}, InitKind::kZero);
  auto x = zeros<double>({2, 1, 64, 47});
  Tape<double> tape(false);
  const RowMatrix<double> p = softmax_rows(*detector_logits(tape, m, x));
  for (Eigen::Index r = 0; r < 2; ++r) {
    EXPECT_DOUBLE_EQ(p(r, 0), 0.5);
    EXPECT_DOUBLE_EQ(p(r, 1), 0.5);
  }
}

TEST(Detector, RejectsMultiChannelInput) {
  const auto m = make_detector<double>(1);
  Tape<double> tape;
  EXPECT_THROW(detector_logits(tape, m, random_var({1, 2, 8, 8}, 1)), InvalidArgument);
}

TEST(Detector, KaimingScaleFollowsFanIn) {
  const auto m = make_detector<double>(9);
  const Node<double>& w = *m.param("block1.conv2.weight");  // fan-in 41 * 9
  const double var = w.value.squaredNorm() / static_cast<double>(w.value.size());
  EXPECT_NEAR(var, 2.0 / (41 * 9), 0.25 * 2.0 / (41 * 9));
  EXPECT_EQ(m.param("block0.conv0.bias")->value, Vec<double>::Zero(8));
}

std::vector<std::vector<double>> segmenter_reference(const ModelParams<double>& m, const RowMatrixXd& input) {
  Planes h;
  if (m.arch == "segmenter") {
    const Node<double>& w = *m.param("freq.weight");
    Planes f = conv_relu(to_planes(input), w, *m.param("freq.bias"), 0, (w.shape[3] - 1) / 2, true);
    // Projection over every (filter, band) pair of a frame.
    const Node<double>& p = *m.param("freq_proj.weight");
    const Node<double>& pb = *m.param("freq_proj.bias");
    const int filters = p.shape[0], bands = p.shape[3];
    h.assign(filters, std::vector<std::vector<double>>(input.rows(), std::vector<double>(1)));
    for (int o = 0; o < filters; ++o)
      for (Eigen::Index t = 0; t < input.rows(); ++t) {
        double acc = pb.value[o];
        for (int c = 0; c < filters; ++c)
          for (int band = 0; band < bands; ++band) acc += p.value[(o * filters + c) * bands + band] * f[c][t][band];
        h[o][t][0] = std::max(acc, 0.0);
      }
  } else {
    for (Eigen::Index band = 0; band < input.cols(); ++band) {
      std::vector<std::vector<double>> plane;
      for (Eigen::Index t = 0; t < input.rows(); ++t) plane.push_back({input(t, band)});
      h.push_back(plane);
    }
  }
  for (const char* layer : {"temporal0", "temporal1"}) {
    const Node<double>& w = *m.param(std::string(layer) + ".weight");
    h = conv_relu(h, w, *m.param(std::string(layer) + ".bias"), w.shape[2] - 1, 0, true);
  }
  h = conv_relu(h, *m.param("head.weight"), *m.param("head.bias"), 0, 0, false);
  std::vector<std::vector<double>> logits(input.rows(), std::vector<double>(2));
  for (Eigen::Index t = 0; t < input.rows(); ++t)
    for (int k = 0; k < 2; ++k) logits[t][k] = h[k][t][0];
  return logits;
}

class SegmenterForward : public ::testing::TestWithParam<bool> {};

TEST_P(SegmenterForward, MatchesStraightlineReference) {
  SegmenterConfig cfg;
  cfg.frequency_conv = GetParam();
  const auto m = make_segmenter<double>(47, 8, cfg);
  const RowMatrixXd input = RowMatrixXd::Random(64, 47);
  Tape<double> tape(false);
  auto x = make_var<double>({1, 1, 64, 47}, Eigen::Map<const Vec<double>>(input.data(), input.size()));
  auto logits = segmenter_logits(tape, m, x);
  ASSERT_EQ(logits->shape, (Shape{1, 2, 64, 1}));
  const auto want = segmenter_reference(m, input);
  for (int t = 0; t < 64; ++t)
    for (int k = 0; k < 2; ++k) EXPECT_NEAR(logits->value[k * 64 + t], want[t][k], 1e-10) << t << "," << k;
}

INSTANTIATE_TEST_SUITE_P(Variants, SegmenterForward, ::testing::Bool());

TEST(Segmenter, FrontEndHas25FiltersAndPerFrameOutput) {
  const auto m = make_segmenter<double>(47, 1);
  EXPECT_EQ(m.param("freq.weight")->shape[0], 25);
  auto x = random_var({1, 1, 64, 47}, 2);
  Tape<double> tape(false);
  const RowMatrix<double> p = softmax_rows(*segmenter_logits(tape, m, x));
  ASSERT_EQ(p.rows(), 64);
  ASSERT_EQ(p.cols(), 2);
  for (Eigen::Index r = 0; r < 64; ++r) EXPECT_NEAR(p.row(r).sum(), 1.0, 1e-12);
}

TEST(Segmenter, OutputAtFrameTDependsOnlyOnFramesUpToT) {
  const auto m = make_segmenter<double>(47, 3);
  auto x = random_var({1, 1, 64, 47}, 4);
  Tape<double> tape(false);
  const Vec<double> before = segmenter_logits(tape, m, x)->value;
  x->value.tail(10 * 47).setRandom();
  const Vec<double> after = segmenter_logits(tape, m, x)->value;
  for (int k = 0; k < 2; ++k) EXPECT_EQ(before.segment(k * 64, 54), after.segment(k * 64, 54));
}

TEST(Segmenter, AblationRejectsWrongBandCount) {
  SegmenterConfig cfg;
  cfg.frequency_conv = false;
  const auto m = make_segmenter<double>(47, 1, cfg);
  Tape<double> tape;
  EXPECT_THROW(segmenter_logits(tape, m, random_var({1, 1, 64, 40}, 1)), InvalidArgument);
}

TEST(ModelParams, CastRoundTripsAndKeepsNames) {
  const auto m = make_detector<float>(1);
  const auto d = m.cast<double>();
  EXPECT_EQ(d.specs.size(), m.specs.size());
  for (std::size_t i = 0; i < m.values.size(); ++i) EXPECT_EQ(d.values[i]->value.cast<float>(), m.values[i]->value);
  EXPECT_THROW(m.param("nope"), InvalidArgument);
}

TEST(ModelParams, ValidateCatchesShapeDrift) {
  auto m = make_detector<float>(1);
  m.values[0] = make_var<float>({1}, Vec<float>::Zero(1));
  EXPECT_THROW(m.validate(), InvalidArgument);
}

// -- SGD -------------------------------------------------------------------

TEST(Sgd, WithoutMomentumOrDecayIsPlainGradientStep) {
  auto p = make_var<double>({2}, Vec<double>{{1.0, -2.0}}, true);
  p->grad_buffer() = Vec<double>{{0.5, 0.25}};
  std::vector<Vec<double>> velocity;
  sgd_step<double>(std::vector<Var<double>>{p}, velocity, {0.1, 0.0, 0.0});
  EXPECT_DOUBLE_EQ(p->value[0], 1.0 - 0.05);
  EXPECT_DOUBLE_EQ(p->value[1], -2.0 - 0.025);
}

TEST(Sgd, QuadraticTraceMatchesScalarRecurrence) {
  // f(w) = w^2 / 2 so grad = w.
  auto p = make_var<double>({1}, Vec<double>::Constant(1, 1.0), true);
  std::vector<Var<double>> params{p};
  std::vector<Vec<double>> velocity;
  double w = 1.0, v = 0.0;
  std::vector<double> trace;
  for (int step = 0; step < 5; ++step) {
    p->grad_buffer()[0] = p->value[0];
    sgd_step<double>(params, velocity, {0.1, 0.9, 0.0});
    v = 0.9 * v + w;
    w -= 0.1 * v;
    EXPECT_NEAR(p->value[0], w, 1e-15);
    trace.push_back(p->value[0]);
  }
  const std::vector<double> frozen{0.9, 0.72, 0.486, 0.2268, -0.02916};
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(trace[i], frozen[i], 1e-12);
}

TEST(Sgd, WeightDecayAloneShrinksMagnitudeMonotonically) {
  auto p = make_var<double>({3}, Vec<double>{{3.0, -1.0, 0.5}}, true);
  std::vector<Var<double>> params{p};
  std::vector<Vec<double>> velocity;
  double prev = p->value.norm();
  for (int i = 0; i < 50; ++i) {
    p->zero_grad();
    sgd_step<double>(params, velocity, {0.1, 0.9, 1e-2});
    const double now = p->value.norm();
    EXPECT_LT(now, prev);
    prev = now;
  }
}

TEST(Sgd, GradientVanishesAtConvexMinimum) {
  // Affine model on overlapping classes: strictly convex with a finite minimum.
  RowMatrixXd x(8, 2);
  x << 0, 0, 1, 0, 0, 1, 1, 1, 0.5, 0.2, 0.3, 0.9, 0.8, 0.4, 0.6, 0.6;
  const std::vector<int> y{0, 1, 0, 1, 1, 0, 0, 1};
  auto input = make_var<double>({8, 2}, Eigen::Map<const Vec<double>>(x.data(), 16));
  auto w = make_var<double>({2, 2}, Vec<double>::Zero(4), true);
  auto b = make_var<double>({2}, Vec<double>::Zero(2), true);
  std::vector<Var<double>> params{w, b};
  std::vector<Vec<double>> velocity;
  double norm = 0.0;
  for (int it = 0; it < 5000; ++it) {
    w->zero_grad();
    b->zero_grad();
    Tape<double> tape;
    tape.backward(softmax_cross_entropy<double>(tape, linear(tape, input, w, b), y));
    norm = std::sqrt(w->grad.squaredNorm() + b->grad.squaredNorm());
    sgd_step<double>(params, velocity, {0.5, 0.9, 0.0});
  }
  EXPECT_LT(norm, 1e-6);
}

}  // namespace
}  // namespace pam::nn
