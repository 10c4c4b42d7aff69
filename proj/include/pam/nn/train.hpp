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

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "pam/nn/model.hpp"
#include "pam/types.hpp"

namespace pam::nn {

struct TrainConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;
  int batch_size = 64;
  double weight_decay = 1e-4;
  int epochs = 20;
  std::uint64_t seed = 0;
  /// Learning rate is multiplied by `lr_decay` once validation loss has not
  /// improved by at least `plateau_min_delta` for `plateau_patience` epochs.
  int plateau_patience = 3;
  double plateau_min_delta = 1e-3;
  double lr_decay = 0.1;
  /// Share of the training clips held out for the plateau schedule.
  double validation_fraction = 0.1;
  /// Random time-crop augmentation: zero padding on each side of the clip.
  int crop_pad = 8;
  bool random_crop = true;
  /// Rescales the model gradient to at most this global L2 norm before each
  /// step; 0 disables clipping.
  double grad_clip_norm = 1.0;

  void validate() const;
  SgdConfig sgd() const { return {learning_rate, momentum, weight_decay}; }
};

/// Model inputs (already normalized, and compressed when applicable) with
/// clip labels and per-frame labels.
struct ClipSet {
  std::vector<Spectrogram> inputs;
  std::vector<int> labels;
  std::vector<std::vector<bool>> frame_labels;

  std::size_t size() const { return inputs.size(); }
  bool empty() const { return inputs.empty(); }
  /// Throws unless all inputs share one shape and label vectors line up.
  void validate() const;
  ClipSet subset(std::span<const std::size_t> indices) const;
  int frames() const { return empty() ? 0 : static_cast<int>(inputs.front().frames()); }
  int bands() const { return empty() ? 0 : static_cast<int>(inputs.front().bands()); }
};

struct EpochStats {
  int epoch = 0;
  double learning_rate = 0.0;
  double train_loss = 0.0;  ///< mean cross-entropy over training batches
  double penalty = 0.0;     ///< mean extra loss term (0 for plain training)
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainResult {
  ModelParams<float> model;
  std::vector<EpochStats> history;
};

/// Optional extensions of the training loop used by joint allocation
/// training. `transform` maps a batch of inputs to what the model sees and is
/// applied to training and validation batches alike; `penalty` is added to
/// the training loss; `extra_params` are optimized alongside the model
/// without weight decay.
struct FitHooks {
  std::function<Var<float>(Tape<float>&, const Var<float>&, std::uint64_t)> transform;
  std::function<Var<float>(Tape<float>&)> penalty;
  std::vector<Var<float>> extra_params;
  std::function<void(const EpochStats&)> on_epoch;
};

/// Mini-batch SGD on `model` in place. Per-frame targets are used when the
/// model is a segmenter, clip labels otherwise. Deterministic given cfg.seed.
std::vector<EpochStats> fit(ModelParams<float>& model, const ClipSet& train, const TrainConfig& cfg,
                            const FitHooks& hooks = {});

/// Detector trained from a Kaiming initialization seeded by cfg.seed.
TrainResult train_classifier(const ClipSet& train, const TrainConfig& cfg,
                             const DetectorConfig& arch = {});

TrainResult train_segmenter(const ClipSet& train, const TrainConfig& cfg,
                            const SegmenterConfig& arch = {});

/// Per-clip probability of the call class.
std::vector<double> predict(const ModelParams<float>& model, std::span<const Spectrogram> inputs,
                            int batch_size = 64);
double predict(const ModelParams<float>& model, const Spectrogram& input);

/// Per-frame class probabilities, frames x 2 (column 1 is the call class).
RowMatrixXd segment(const ModelParams<float>& model, const Spectrogram& input);

/// Mean cross-entropy and accuracy of `model` on `data` without augmentation.
struct LossAccuracy {
  double loss = 0.0;
  double accuracy = 0.0;
};
LossAccuracy evaluate_loss(const ModelParams<float>& model, const ClipSet& data,
                           const FitHooks& hooks = {}, std::uint64_t seed = 0, int batch_size = 64);

/// Packs spectrograms into a [N, 1, T, F] tensor.
Var<float> batch_tensor(std::span<const Spectrogram> inputs);

}  // namespace pam::nn
