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

#include "pam/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pam/dsp.hpp"
#include "pam/rng.hpp"

namespace pam::nn {
namespace {

bool is_segmenter(const ModelParams<float>& m) {
  return m.arch == "segmenter" || m.arch == "segmenter_nofreq";
}

// Frame label j of the crop window starting at `offset` in the padded clip.
int cropped_frame_label(const std::vector<bool>& labels, int pad, int offset, int j) {
  const int src = j + offset - pad;
  if (src < 0 || src >= static_cast<int>(labels.size())) return kNoCall;
  return labels[static_cast<std::size_t>(src)] ? kCall : kNoCall;
}

struct Batch {
  Var<float> x;
  std::vector<int> targets;
};

// offsets[i] < 0 means no crop for example i.
Batch make_batch(const ClipSet& data, std::span<const std::size_t> idx, std::span<const int> offsets,
                 int pad, bool per_frame) {
  std::vector<Spectrogram> inputs;
  inputs.reserve(idx.size());
  Batch b;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const std::size_t i = idx[k];
    const int off = offsets.empty() ? -1 : offsets[k];
    inputs.push_back(off < 0 ? data.inputs[i] : dsp::crop_at(data.inputs[i], pad, off));
    if (per_frame) {
      const auto& fl = data.frame_labels[i];
      for (int j = 0; j < data.frames(); ++j) {
        b.targets.push_back(off < 0 ? (fl[static_cast<std::size_t>(j)] ? kCall : kNoCall)
                                    : cropped_frame_label(fl, pad, off, j));
      }
    } else {
      b.targets.push_back(data.labels[i]);
    }
  }
  b.x = batch_tensor(inputs);
  return b;
}

// Number of correct argmax predictions over all positions of the logits.
int count_correct(const Node<float>& logits, std::span<const int> targets) {
  const RowMatrix<float> probs = softmax_rows(logits);
  int correct = 0;
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    Eigen::Index arg;
    probs.row(r).maxCoeff(&arg);
    if (arg == targets[static_cast<std::size_t>(r)]) ++correct;
  }
  return correct;
}

void clip_grad_norm(std::span<const Var<float>> params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (p->grad.size() == p->value.size()) sq += p->grad.cast<double>().squaredNorm();
  }
  const double norm = std::sqrt(sq);
  if (norm <= max_norm) return;
  const auto factor = static_cast<float>(max_norm / norm);
  for (const auto& p : params) {
    if (p->grad.size() == p->value.size()) p->grad *= factor;
  }
}

// Deterministic stratified hold-out: `fraction` of each class goes to val.
void split_validation(const ClipSet& data, double fraction, std::uint64_t seed,
                      std::vector<std::size_t>& train_idx, std::vector<std::size_t>& val_idx) {
  train_idx.clear();
  val_idx.clear();
  for (int cls : {kNoCall, kCall}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data.labels[i] == cls) members.push_back(i);
    }
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(cls)));
    std::shuffle(members.begin(), members.end(), rng);
    const auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(members.size())));
    val_idx.insert(val_idx.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_val));
    train_idx.insert(train_idx.end(), members.begin() + static_cast<std::ptrdiff_t>(n_val), members.end());
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(val_idx.begin(), val_idx.end());
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0)) throw InvalidArgument("train: learning_rate must be > 0");
  if (!(momentum >= 0 && momentum < 1)) throw InvalidArgument("train: momentum must be in [0, 1)");
  if (batch_size < 1) throw InvalidArgument("train: batch_size must be >= 1");
  if (!(weight_decay >= 0)) throw InvalidArgument("train: weight_decay must be >= 0");
  if (epochs < 1) throw InvalidArgument("train: epochs must be >= 1");
  if (plateau_patience < 1) throw InvalidArgument("train: plateau_patience must be >= 1");
  if (!(lr_decay > 0 && lr_decay <= 1)) throw InvalidArgument("train: lr_decay must be in (0, 1]");
  if (!(validation_fraction >= 0 && validation_fraction < 1)) {
    throw InvalidArgument("train: validation_fraction must be in [0, 1)");
  }
  if (crop_pad < 0) throw InvalidArgument("train: crop_pad must be >= 0");
  if (!(grad_clip_norm >= 0)) throw InvalidArgument("train: grad_clip_norm must be >= 0");
}

void ClipSet::validate() const {
  if (labels.size() != inputs.size()) throw InvalidArgument("clipset: label count mismatch");
  if (!frame_labels.empty() && frame_labels.size() != inputs.size()) {
    throw InvalidArgument("clipset: frame label count mismatch");
  }
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].frames() != frames() || inputs[i].bands() != bands()) {
      throw InvalidArgument("clipset: inputs must share one shape");
    }
    if (labels[i] != kNoCall && labels[i] != kCall) throw InvalidArgument("clipset: label must be 0 or 1");
    if (!frame_labels.empty() && frame_labels[i].size() != static_cast<std::size_t>(frames())) {
      throw InvalidArgument("clipset: frame labels must have one entry per frame");
    }
  }
}

ClipSet ClipSet::subset(std::span<const std::size_t> indices) const {
  ClipSet out;
  for (std::size_t i : indices) {
    out.inputs.push_back(inputs.at(i));
    out.labels.push_back(labels.at(i));
    if (!frame_labels.empty()) out.frame_labels.push_back(frame_labels.at(i));
  }
  return out;
}

Var<float> batch_tensor(std::span<const Spectrogram> inputs) {
  if (inputs.empty()) throw InvalidArgument("batch: no inputs");
  const auto t = static_cast<int>(inputs.front().frames());
  const auto f = static_cast<int>(inputs.front().bands());
  const auto n = static_cast<int>(inputs.size());
  Vec<float> v(static_cast<Eigen::Index>(n) * t * f);
  for (int i = 0; i < n; ++i) {
    const Spectrogram& s = inputs[static_cast<std::size_t>(i)];
    if (s.frames() != t || s.bands() != f) throw InvalidArgument("batch: inputs must share one shape");
    MatRef<float>(v.data() + static_cast<std::ptrdiff_t>(i) * t * f, t, f) = s.data.cast<float>();
  }
  return make_var<float>({n, 1, t, f}, std::move(v));
}

LossAccuracy evaluate_loss(const ModelParams<float>& model, const ClipSet& data, const FitHooks& hooks,
                           std::uint64_t seed, int batch_size) {
  if (data.empty()) throw InvalidArgument("evaluate: empty data");
  const bool per_frame = is_segmenter(model);
  double loss = 0.0;
  long correct = 0, positions = 0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0, b = 0; start < data.size(); start += static_cast<std::size_t>(batch_size), ++b) {
    idx.clear();
    for (std::size_t i = start; i < std::min(data.size(), start + static_cast<std::size_t>(batch_size)); ++i) {
      idx.push_back(i);
    }
    Tape<float> tape(false);
    Batch batch = make_batch(data, idx, {}, 0, per_frame);
    Var<float> x = hooks.transform ? hooks.transform(tape, batch.x, derive_seed(seed, b)) : batch.x;
    Var<float> logits = forward_logits(tape, model, x);
    Var<float> ce = softmax_cross_entropy<float>(tape, logits, batch.targets);
    loss += static_cast<double>(ce->value[0]) * static_cast<double>(batch.targets.size());
    correct += count_correct(*logits, batch.targets);
    positions += static_cast<long>(batch.targets.size());
  }
  return {loss / static_cast<double>(positions), static_cast<double>(correct) / static_cast<double>(positions)};
}

std::vector<EpochStats> fit(ModelParams<float>& model, const ClipSet& train, const TrainConfig& cfg,
                            const FitHooks& hooks) {
  cfg.validate();
  if (train.empty()) throw InvalidArgument("train: empty training split");
  train.validate();
  model.validate();
  const bool per_frame = is_segmenter(model);
  if (per_frame && train.frame_labels.empty()) throw InvalidArgument("train: segmenter needs frame labels");

  std::vector<std::size_t> train_idx, val_idx;
  split_validation(train, cfg.validation_fraction, derive_seed(cfg.seed, "validation"), train_idx, val_idx);
  if (train_idx.empty()) throw InvalidArgument("train: validation hold-out leaves no training clips");
  const ClipSet val = train.subset(val_idx);

  std::vector<Var<float>> params = model.values;
  std::vector<Vec<float>>& velocity = model.momentum;
  std::vector<Vec<float>> extra_velocity;

  SgdConfig sgd = cfg.sgd();
  double best_val = std::numeric_limits<double>::infinity();
  int stale = 0;
  long step = 0;
  std::vector<EpochStats> history;
  const std::uint64_t shuffle_seed = derive_seed(cfg.seed, "shuffle");
  const std::uint64_t crop_seed = derive_seed(cfg.seed, "crop");
  const std::uint64_t noise_seed = derive_seed(cfg.seed, "noise");
  const std::uint64_t val_noise_seed = derive_seed(cfg.seed, "validation-noise");

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<std::size_t> order = train_idx;
    Rng rng(derive_seed(shuffle_seed, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);

    EpochStats stats;
    stats.epoch = epoch;
    stats.learning_rate = sgd.learning_rate;
    double loss_sum = 0.0, penalty_sum = 0.0;
    long correct = 0, positions = 0, batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::span<const std::size_t> idx(order.data() + start, end - start);
      std::vector<int> offsets;
      if (cfg.random_crop) {
        for (std::size_t i : idx) {
          const std::uint64_t s = derive_seed(crop_seed, static_cast<std::uint64_t>(epoch) * train.size() + i);
          offsets.push_back(dsp::random_crop_offset(cfg.crop_pad, s));
        }
      }
      Batch batch = make_batch(train, idx, offsets, cfg.crop_pad, per_frame);

      Tape<float> tape;
      Var<float> x = hooks.transform
                         ? hooks.transform(tape, batch.x, derive_seed(noise_seed, static_cast<std::uint64_t>(step)))
                         : batch.x;
      Var<float> logits = forward_logits(tape, model, x);
      Var<float> loss = softmax_cross_entropy<float>(tape, logits, batch.targets);
      loss_sum += loss->value[0];
      if (hooks.penalty) {
        Var<float> p = hooks.penalty(tape);
        penalty_sum += p->value[0];
        loss = add(tape, loss, p);
      }
      correct += count_correct(*logits, batch.targets);
      positions += static_cast<long>(batch.targets.size());

      model.zero_grad();
      for (const auto& p : hooks.extra_params) p->zero_grad();
      tape.backward(loss);
      if (cfg.grad_clip_norm > 0) clip_grad_norm(params, cfg.grad_clip_norm);
      sgd_step<float>(params, velocity, sgd);
      if (!hooks.extra_params.empty()) {
        SgdConfig extra = sgd;
        extra.weight_decay = 0.0;
        sgd_step<float>(hooks.extra_params, extra_velocity, extra);
      }
      ++step;
      ++batches;
    }
    stats.train_loss = loss_sum / static_cast<double>(batches);
    stats.penalty = penalty_sum / static_cast<double>(batches);
    stats.train_accuracy = static_cast<double>(correct) / static_cast<double>(positions);

    if (!val.empty()) {
      const LossAccuracy v = evaluate_loss(model, val, hooks, val_noise_seed, cfg.batch_size);
      stats.val_loss = v.loss;
      stats.val_accuracy = v.accuracy;
      if (stats.val_loss < best_val - cfg.plateau_min_delta) {
        best_val = stats.val_loss;
        stale = 0;
      } else if (++stale >= cfg.plateau_patience) {
        sgd.learning_rate *= cfg.lr_decay;
        stale = 0;
      }
    }
    history.push_back(stats);
    if (hooks.on_epoch) hooks.on_epoch(stats);
  }
  return history;
}

TrainResult train_classifier(const ClipSet& train, const TrainConfig& cfg, const DetectorConfig& arch) {
  if (train.empty()) throw InvalidArgument("train: empty training split");
  TrainResult r{make_detector<float>(derive_seed(cfg.seed, "init"), arch), {}};
  r.history = fit(r.model, train, cfg);
  return r;
}

TrainResult train_segmenter(const ClipSet& train, const TrainConfig& cfg, const SegmenterConfig& arch) {
  if (train.empty()) throw InvalidArgument("train: empty training split");
  TrainResult r{make_segmenter<float>(train.bands(), derive_seed(cfg.seed, "init"), arch), {}};
  r.history = fit(r.model, train, cfg);
  return r;
}

std::vector<double> predict(const ModelParams<float>& model, std::span<const Spectrogram> inputs,
                            int batch_size) {
  if (model.arch != "detector") throw InvalidArgument("predict: model is not a detector");
  std::vector<double> scores;
  scores.reserve(inputs.size());
  for (std::size_t start = 0; start < inputs.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t n = std::min(inputs.size() - start, static_cast<std::size_t>(batch_size));
    Tape<float> tape(false);
    Var<float> logits = detector_logits(tape, model, batch_tensor(inputs.subspan(start, n)));
    const RowMatrix<float> probs = softmax_rows(*logits);
    for (Eigen::Index r = 0; r < probs.rows(); ++r) scores.push_back(probs(r, kCall));
  }
  return scores;
}

double predict(const ModelParams<float>& model, const Spectrogram& input) {
  return predict(model, std::span<const Spectrogram>(&input, 1)).front();
}

RowMatrixXd segment(const ModelParams<float>& model, const Spectrogram& input) {
  if (!is_segmenter(model)) throw InvalidArgument("segment: model is not a segmenter");
  Tape<float> tape(false);
  Var<float> logits = segmenter_logits(tape, model, batch_tensor(std::span<const Spectrogram>(&input, 1)));
  return softmax_rows(*logits).cast<double>();
}

}  // namespace pam::nn
