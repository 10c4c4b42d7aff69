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

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "pam/bitalloc.hpp"
#include "pam/nn/model.hpp"
#include "pam/nn/ops.hpp"
#include "pam/rng.hpp"

// Central finite-difference checks in 64-bit mode, shared by the unit suite
// and the acceptance binary.

namespace pam::testing {

using nn::Tape;
using nn::Var;
using nn::Vec;

inline constexpr double kGradRelTol = 1e-4;
inline constexpr double kGradAbsFloor = 1e-6;
inline constexpr double kFdStep = 1e-4;

inline bool grad_close(double analytic, double numeric, double rel = kGradRelTol,
                       double abs_floor = kGradAbsFloor) {
  const double d = std::abs(analytic - numeric);
  return d <= abs_floor || d <= rel * std::max(std::abs(analytic), std::abs(numeric));
}

inline Vec<double> random_normal(Eigen::Index n, std::uint64_t seed, double stddev = 1.0) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, stddev);
  Vec<double> v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

inline Var<double> random_var(nn::Shape shape, std::uint64_t seed, double stddev = 1.0) {
  const auto n = nn::numel(shape);
  return nn::make_var<double>(std::move(shape), random_normal(n, seed, stddev), true);
}

/// sum(y (.) r) for a fixed random r, so every output coordinate reaches the
/// scalar with a distinct weight.
inline Var<double> probe(Tape<double>& tape, const Var<double>& y, std::uint64_t seed) {
  Vec<double> r = random_normal(y->value.size(), seed);
  Vec<double> out(1);
  out[0] = y->value.dot(r);
  return tape.record({1}, std::move(out), y->requires_grad,
                     [y, r](nn::Node<double>& o) { y->grad_buffer() += o.grad[0] * r; });
}

struct GradReport {
  long checked = 0;
  long failed = 0;
  double worst_abs = 0.0;
  std::string worst;  ///< "<var>[<index>] analytic=<a> numeric=<n>" of the largest miss

  bool ok() const { return checked > 0 && failed == 0; }
};

using Build = std::function<Var<double>(Tape<double>&)>;
using Wrt = std::vector<std::pair<std::string, Var<double>>>;

/// Compares backward() of `build` against central differences for every
/// coordinate of each variable in `wrt` (or `max_coords` sampled ones).
inline GradReport check_gradients(const Build& build, const Wrt& wrt, int max_coords = 0,
                                  std::uint64_t seed = 0, double step = kFdStep) {
  for (const auto& [name, v] : wrt) v->zero_grad();
  {
    Tape<double> tape;
    tape.backward(build(tape));
  }
  GradReport report;
  Rng rng(seed);
  for (const auto& [name, v] : wrt) {
    const Vec<double> analytic =
        v->grad.size() == v->value.size() ? v->grad : Vec<double>::Zero(v->value.size());
    std::vector<Eigen::Index> coords(static_cast<std::size_t>(v->value.size()));
    for (Eigen::Index i = 0; i < v->value.size(); ++i) coords[static_cast<std::size_t>(i)] = i;
    if (max_coords > 0 && coords.size() > static_cast<std::size_t>(max_coords)) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(static_cast<std::size_t>(max_coords));
    }
    for (Eigen::Index i : coords) {
      const double saved = v->value[i];
      auto eval = [&](double x) {
        v->value[i] = x;
        Tape<double> tape(false);
        return build(tape)->value[0];
      };
      const double numeric = (eval(saved + step) - eval(saved - step)) / (2.0 * step);
      v->value[i] = saved;
      ++report.checked;
      const double miss = std::abs(analytic[i] - numeric);
      if (!grad_close(analytic[i], numeric)) ++report.failed;
      if (miss > report.worst_abs) {
        report.worst_abs = miss;
        report.worst = name + "[" + std::to_string(i) + "] analytic=" + std::to_string(analytic[i]) +
                       " numeric=" + std::to_string(numeric);
      }
    }
  }
  return report;
}

inline Wrt model_wrt(const nn::ModelParams<double>& m) {
  Wrt out;
  for (std::size_t i = 0; i < m.specs.size(); ++i) out.emplace_back(m.specs[i].name, m.values[i]);
  return out;
}

struct GradCase {
  std::string name;
  std::function<GradReport()> run;
};

/// One case per differentiable operation plus the two models and the joint
/// allocation loss. Inputs are small and randomized from fixed seeds.
inline std::vector<GradCase> gradient_cases() {
  std::vector<GradCase> cases;
  auto conv_case = [&](std::string name, nn::Shape xs, nn::Shape ws, nn::Padding pad) {
    cases.push_back({std::move(name), [=] {
                       auto x = random_var(xs, 11);
                       auto w = random_var(ws, 12, 0.5);
                       auto b = random_var({ws[0]}, 13);
                       return check_gradients(
                           [=](Tape<double>& t) { return probe(t, nn::conv2d(t, x, w, b, pad), 14); },
                           {{"x", x}, {"w", w}, {"b", b}});
                     }});
  };
  conv_case("conv2d_same_3x3", {2, 3, 5, 6}, {4, 3, 3, 3}, nn::same_padding(3, 3));
  conv_case("conv2d_same_even_2x4", {2, 2, 4, 5}, {3, 2, 2, 4}, nn::same_padding(2, 4));
  conv_case("conv2d_causal_time", {2, 3, 9, 1}, {2, 3, 7, 1}, nn::causal_padding(7));
  conv_case("conv2d_frequency", {2, 1, 4, 12}, {3, 1, 1, 9}, nn::same_padding(1, 9));
  conv_case("conv2d_valid_1x1", {3, 4, 5, 1}, {2, 4, 1, 1}, nn::Padding{});

  cases.push_back({"relu", [] {
                     auto x = random_var({2, 3, 4, 5}, 21);
                     return check_gradients([=](Tape<double>& t) { return probe(t, nn::relu(t, x), 22); },
                                            {{"x", x}});
                   }});
  cases.push_back({"concat_channels", [] {
                     auto a = random_var({2, 1, 3, 4}, 31);
                     auto b = random_var({2, 3, 3, 4}, 32);
                     return check_gradients(
                         [=](Tape<double>& t) { return probe(t, nn::concat_channels<double>(t, {a, b, a}), 33); },
                         {{"a", a}, {"b", b}});
                   }});
  cases.push_back({"avg_pool2_odd", [] {
                     auto x = random_var({2, 3, 5, 7}, 41);
                     return check_gradients([=](Tape<double>& t) { return probe(t, nn::avg_pool2(t, x), 42); },
                                            {{"x", x}});
                   }});
  cases.push_back({"global_avg_pool", [] {
                     auto x = random_var({2, 3, 4, 5}, 51);
                     return check_gradients(
                         [=](Tape<double>& t) { return probe(t, nn::global_avg_pool(t, x), 52); }, {{"x", x}});
                   }});
  cases.push_back({"linear", [] {
                     auto x = random_var({3, 5}, 61);
                     auto w = random_var({2, 5}, 62);
                     auto b = random_var({2}, 63);
                     return check_gradients(
                         [=](Tape<double>& t) { return probe(t, nn::linear(t, x, w, b), 64); },
                         {{"x", x}, {"w", w}, {"b", b}});
                   }});
  cases.push_back({"bands_to_channels", [] {
                     auto x = random_var({2, 1, 4, 5}, 81);
                     return check_gradients(
                         [=](Tape<double>& t) { return probe(t, nn::bands_to_channels(t, x), 82); }, {{"x", x}});
                   }});
  cases.push_back({"noise_channel", [] {
                     auto x = random_var({2, 1, 4, 5}, 91);
                     auto lambda = random_var({5}, 92);
                     const Vec<double> beta = random_normal(40, 93);
                     return check_gradients(
                         [=](Tape<double>& t) { return probe(t, nn::noise_channel(t, x, lambda, beta), 94); },
                         {{"x", x}, {"lambda", lambda}});
                   }});
  cases.push_back({"noise_channel_floor", [] {
                     auto x = random_var({2, 1, 3, 4}, 101);
                     // Two bands well above the floor, two well below it.
                     auto lambda = nn::make_var<double>({4}, Vec<double>{{0.5, -1.5, -4.0, -3.2}}, true);
                     const Vec<double> beta = random_normal(24, 102);
                     return check_gradients(
                         [=](Tape<double>& t) {
                           return probe(t, nn::noise_channel(t, x, lambda, beta, -2.0), 103);
                         },
                         {{"x", x}, {"lambda", lambda}});
                   }});
  cases.push_back({"sum_scale_add", [] {
                     auto a = random_var({3, 4}, 111);
                     auto b = random_var({3, 4}, 112);
                     return check_gradients(
                         [=](Tape<double>& t) {
                           return nn::add(t, nn::sum(t, nn::scale(t, nn::add(t, a, b), 2.5)), probe(t, a, 113));
                         },
                         {{"a", a}, {"b", b}});
                   }});
  cases.push_back({"softmax_cross_entropy", [] {
                     auto z = random_var({4, 3}, 121, 2.0);
                     const std::vector<int> y{0, 2, 1, 2};
                     return check_gradients(
                         [=](Tape<double>& t) { return nn::softmax_cross_entropy<double>(t, z, y); }, {{"z", z}});
                   }});
  cases.push_back({"softmax_cross_entropy_per_frame", [] {
                     auto z = random_var({2, 2, 5, 1}, 131, 2.0);
                     const std::vector<int> y{0, 1, 1, 0, 1, 1, 1, 0, 0, 0};
                     return check_gradients(
                         [=](Tape<double>& t) { return nn::softmax_cross_entropy<double>(t, z, y); }, {{"z", z}});
                   }});
  cases.push_back({"detector", [] {
                     nn::DetectorConfig arch;
                     arch.growth = 3;
                     auto m = nn::make_detector<double>(141, arch);
                     auto x = random_var({2, 1, 8, 6}, 142);
                     const std::vector<int> y{1, 0};
                     Wrt wrt = model_wrt(m);
                     wrt.emplace_back("input", x);
                     return check_gradients(
                         [=](Tape<double>& t) {
                           return nn::softmax_cross_entropy<double>(t, nn::detector_logits(t, m, x), y);
                         },
                         wrt, 40, 143);
                   }});
  auto segmenter_case = [&](std::string name, bool freq) {
    cases.push_back({std::move(name), [=] {
                       nn::SegmenterConfig arch{freq, 4, 3, 3, 3};
                       auto m = nn::make_segmenter<double>(7, 151, arch);
                       auto x = random_var({2, 1, 6, 7}, 152);
                       const std::vector<int> y{0, 0, 1, 1, 1, 0, 1, 1, 0, 0, 0, 1};
                       Wrt wrt = model_wrt(m);
                       wrt.emplace_back("input", x);
                       return check_gradients(
                           [=](Tape<double>& t) {
                             return nn::softmax_cross_entropy<double>(t, nn::segmenter_logits(t, m, x), y);
                           },
                           wrt, 40, 153);
                     }});
  };
  segmenter_case("segmenter", true);
  segmenter_case("segmenter_nofreq", false);
  cases.push_back({"joint_loss", [] {
                     nn::DetectorConfig arch;
                     arch.growth = 3;
                     auto m = nn::make_detector<double>(161, arch);
                     auto x = random_var({2, 1, 8, 6}, 162);
                     x->requires_grad = false;
                     auto lambda = nn::make_var<double>({6}, Vec<double>{{0.3, -0.4, 1.1, 0.0, -2.5, 0.7}}, true);
                     const Vec<double> beta = random_normal(96, 163);
                     const std::vector<int> y{0, 1};
                     Wrt wrt = model_wrt(m);
                     wrt.emplace_back("lambda", lambda);
                     return check_gradients(
                         [=](Tape<double>& t) {
                           return bitalloc::joint_loss<double>(t, m, lambda, x, y, beta, 0.3, -2.0);
                         },
                         wrt, 40, 164);
                   }});
  return cases;
}

}  // namespace pam::testing
