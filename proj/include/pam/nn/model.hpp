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

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pam/nn/ops.hpp"
#include "pam/rng.hpp"

namespace pam::nn {

enum class InitKind { kKaiming, kZero };

struct ParamSpec {
  std::string name;
  Shape shape;
  int fan_in = 1;
  bool bias = false;
};

inline constexpr int kNoCall = 0;
inline constexpr int kCall = 1;

/// Named parameter store plus the architecture it belongs to. Parameter
/// order follows `specs`; momentum buffers are aligned with it.
template <typename Scalar>
struct ModelParams {
  std::string arch;
  std::vector<ParamSpec> specs;
  std::vector<Var<Scalar>> values;
  std::vector<Vec<Scalar>> momentum;
  /// Hash of the input representation the model was trained on.
  std::string pipeline_fingerprint;

  const Var<Scalar>& param(const std::string& name) const {
    for (std::size_t i = 0; i < specs.size(); ++i) {
      if (specs[i].name == name) return values[i];
    }
    throw InvalidArgument("model: no parameter named '" + name + "'");
  }

  std::int64_t parameter_count() const {
    std::int64_t total = 0;
    for (const auto& s : specs) total += numel(s.shape);
    return total;
  }

  void zero_grad() {
    for (auto& v : values) v->zero_grad();
  }

  /// Checks that every declared parameter exists with the declared shape.
  void validate() const {
    if (values.size() != specs.size()) throw InvalidArgument("model: parameter count mismatch");
    for (std::size_t i = 0; i < specs.size(); ++i) {
      if (values[i]->shape != specs[i].shape) {
        throw InvalidArgument("model: parameter '" + specs[i].name + "' has shape " +
                              shape_string(values[i]->shape) + ", expected " +
                              shape_string(specs[i].shape));
      }
    }
  }

  template <typename Other>
  ModelParams<Other> cast() const {
    ModelParams<Other> out;
    out.arch = arch;
    out.specs = specs;
    out.pipeline_fingerprint = pipeline_fingerprint;
    for (const auto& v : values) {
      out.values.push_back(make_var<Other>(v->shape, v->value.template cast<Other>(), true));
    }
    return out;
  }
};

template <typename Scalar>
ModelParams<Scalar> instantiate(std::string arch, std::vector<ParamSpec> specs, std::uint64_t seed,
                                InitKind head_init = InitKind::kKaiming) {
  ModelParams<Scalar> m;
  m.arch = std::move(arch);
  m.specs = std::move(specs);
  Rng rng(seed);
  std::normal_distribution<double> normal;
  for (std::size_t i = 0; i < m.specs.size(); ++i) {
    const auto& s = m.specs[i];
    Vec<Scalar> v = Vec<Scalar>::Zero(numel(s.shape));
    const bool head = s.name.rfind("head", 0) == 0;
    if (!s.bias && !(head && head_init == InitKind::kZero)) {
      // Kaiming (He) normal for ReLU layers; the linear head uses gain 1.
      const double stddev = std::sqrt((head ? 1.0 : 2.0) / s.fan_in);
      for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = static_cast<Scalar>(stddev * normal(rng));
    }
    m.values.push_back(make_var<Scalar>(s.shape, std::move(v), true));
  }
  return m;
}

// -- Detector ----------------------------------------------------------------
//
// Two dense blocks of 3x3 convolutions. Each layer sees the concatenation of
// the block input and every earlier layer's output and adds `growth` channels.
// A 2x2 average pool sits between blocks; global average pooling and an
// affine head produce the two class logits.

struct DetectorConfig {
  int blocks = 2;
  int layers_per_block = 3;
  int growth = 8;
  int kernel = 3;
};

std::vector<ParamSpec> detector_specs(const DetectorConfig& cfg = {});

template <typename Scalar>
ModelParams<Scalar> make_detector(std::uint64_t seed, const DetectorConfig& cfg = {},
                                  InitKind head_init = InitKind::kKaiming) {
  return instantiate<Scalar>("detector", detector_specs(cfg), seed, head_init);
}

/// Number of conv layers in detector block `block` (0 when absent).
int detector_layer_count(const std::vector<ParamSpec>& specs, int block);

/// x: [N, 1, T, F] -> logits [N, 2].
template <typename Scalar>
Var<Scalar> detector_logits(Tape<Scalar>& tape, const ModelParams<Scalar>& m, const Var<Scalar>& x) {
  detail::require(x->shape.size() == 4 && x->shape[1] == 1, "detector: input must be [N,1,T,F]");
  int blocks = 0;
  while (detector_layer_count(m.specs, blocks) > 0) ++blocks;
  Var<Scalar> features = x;
  for (int block = 0; block < blocks; ++block) {
    const int layers = detector_layer_count(m.specs, block);
    for (int layer = 0; layer < layers; ++layer) {
      const std::string base = "block" + std::to_string(block) + ".conv" + std::to_string(layer);
      const Var<Scalar>& w = m.param(base + ".weight");
      const Padding pad = same_padding(w->shape[2], w->shape[3]);
      Var<Scalar> y = relu(tape, conv2d(tape, features, w, m.param(base + ".bias"), pad));
      features = concat_channels<Scalar>(tape, {features, y});
    }
    if (block + 1 < blocks) features = avg_pool2(tape, features);
  }
  Var<Scalar> pooled = global_avg_pool(tape, features);
  return linear(tape, pooled, m.param("head.weight"), m.param("head.bias"));
}

// -- Segmenter ---------------------------------------------------------------
//
// Frequency front end: a 1-D convolution along the band axis with 25 filters,
// applied to every frame, then a learned projection of all (filter, band)
// responses of the frame down to 25 features. The ablation feeds the raw band
// vector instead. Both continue with two causal temporal convolutions and a
// per-frame affine layer.

struct SegmenterConfig {
  bool frequency_conv = true;
  int freq_filters = 25;
  int freq_kernel = 9;
  int hidden = 16;
  int temporal_kernel = 7;
};

std::vector<ParamSpec> segmenter_specs(int n_bands, const SegmenterConfig& cfg = {});

template <typename Scalar>
ModelParams<Scalar> make_segmenter(int n_bands, std::uint64_t seed, const SegmenterConfig& cfg = {}) {
  return instantiate<Scalar>(cfg.frequency_conv ? "segmenter" : "segmenter_nofreq",
                             segmenter_specs(n_bands, cfg), seed);
}

/// x: [N, 1, T, F] -> logits [N, 2, T, 1].
template <typename Scalar>
Var<Scalar> segmenter_logits(Tape<Scalar>& tape, const ModelParams<Scalar>& m, const Var<Scalar>& x) {
  detail::require(x->shape.size() == 4 && x->shape[1] == 1, "segmenter: input must be [N,1,T,F]");
  Var<Scalar> h;
  if (m.arch == "segmenter") {
    const Var<Scalar>& w = m.param("freq.weight");
    h = relu(tape, conv2d(tape, x, w, m.param("freq.bias"), same_padding(1, w->shape[3])));
    const Var<Scalar>& p = m.param("freq_proj.weight");
    if (p->shape[3] != h->shape[3]) throw InvalidArgument("segmenter: input band count mismatch");
    h = relu(tape, conv2d(tape, h, p, m.param("freq_proj.bias"), Padding{}));
  } else {
    h = bands_to_channels(tape, x);
  }
  for (const char* layer : {"temporal0", "temporal1"}) {
    const std::string base(layer);
    const Var<Scalar>& w = m.param(base + ".weight");
    if (w->shape[1] != h->shape[1]) throw InvalidArgument("segmenter: input band count mismatch");
    h = relu(tape, conv2d(tape, h, w, m.param(base + ".bias"), causal_padding(w->shape[2])));
  }
  return conv2d(tape, h, m.param("head.weight"), m.param("head.bias"), Padding{});
}

/// Dispatches on `m.arch`. Detector logits are [N, 2]; segmenter logits are
/// [N, 2, T, 1].
template <typename Scalar>
Var<Scalar> forward_logits(Tape<Scalar>& tape, const ModelParams<Scalar>& m, const Var<Scalar>& x) {
  if (m.arch == "detector") return detector_logits(tape, m, x);
  if (m.arch == "segmenter" || m.arch == "segmenter_nofreq") return segmenter_logits(tape, m, x);
  throw InvalidArgument("model: unknown architecture '" + m.arch + "'");
}

// -- Optimizer ---------------------------------------------------------------

struct SgdConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-4;
};

/// v <- momentum * v + grad + weight_decay * p;  p <- p - lr * v.
/// Parameters without a gradient buffer are treated as having zero gradient.
template <typename Scalar>
void sgd_step(std::span<const Var<Scalar>> params, std::vector<Vec<Scalar>>& velocity,
              const SgdConfig& cfg) {
  if (velocity.size() != params.size()) {
    velocity.clear();
    for (const auto& p : params) velocity.push_back(Vec<Scalar>::Zero(p->value.size()));
  }
  const auto mom = static_cast<Scalar>(cfg.momentum);
  const auto wd = static_cast<Scalar>(cfg.weight_decay);
  const auto lr = static_cast<Scalar>(cfg.learning_rate);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Node<Scalar>& p = *params[i];
    Vec<Scalar>& v = velocity[i];
    if (v.size() != p.value.size()) throw InvalidArgument("sgd: velocity shape mismatch");
    v *= mom;
    if (p.grad.size() == p.value.size()) v += p.grad;
    if (wd != Scalar(0)) v += wd * p.value;
    p.value -= lr * v;
  }
}

}  // namespace pam::nn
