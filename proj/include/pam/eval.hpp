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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pam/bitalloc.hpp"
#include "pam/codec.hpp"
#include "pam/dsp.hpp"
#include "pam/nn/svm.hpp"
#include "pam/nn/train.hpp"
#include "pam/synth.hpp"

namespace pam::eval {

// -- Input pipeline ----------------------------------------------------------

/// Normalized model inputs for both splits plus everything needed to apply
/// the same transformation elsewhere. Normalization statistics and the
/// fixed-point scale come from the training split only.
struct PreparedData {
  dsp::StftConfig stft;
  dsp::NormStats norm;
  double scale = 1.0;
  std::vector<double> band_freqs_hz;
  nn::ClipSet train;
  nn::ClipSet test;
  RowMatrixXd mfcc_train;  ///< one pooled MFCC vector per training clip
  RowMatrixXd mfcc_test;
};

PreparedData prepare(const synth::DatasetSplit& ds, const dsp::StftConfig& stft = {});

/// STFT plus normalization of one waveform with precomputed statistics.
Spectrogram spectrogram_input(const Waveform& w, const PreparedData& pipeline);

/// Every input passed through float_to_fixed -> encode -> decode.
nn::ClipSet compress(const nn::ClipSet& data, const codec::AllocationPlan& plan, double scale);

/// Hash identifying the input representation: STFT geometry, normalization
/// statistics, fixed-point scale and (if any) the per-band bit widths.
std::string pipeline_fingerprint(const PreparedData& data, const std::optional<codec::AllocationPlan>& plan);

// -- Detection metrics -------------------------------------------------------

struct Confusion {
  long tp = 0, fp = 0, tn = 0, fn = 0;
  long total() const { return tp + fp + tn + fn; }
  double precision() const { return tp + fp == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp); }
  double recall() const { return tp + fn == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn); }
  double accuracy() const { return total() == 0 ? 0.0 : static_cast<double>(tp + tn) / static_cast<double>(total()); }
};

/// Scores at or above `threshold` are predicted positive.
Confusion confusion_at(std::span<const double> scores, std::span<const int> labels, double threshold);

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;  ///< at threshold 0.5
  double recall = 0.0;
  Confusion confusion;
  std::vector<double> scores;
  std::vector<int> labels;

  static Metrics from_scores(std::vector<double> scores, std::vector<int> labels, double threshold = 0.5);
};

/// Scores the test split. With a plan, inputs are compressed first. A model
/// whose recorded fingerprint differs from the evaluation pipeline is
/// rejected.
Metrics evaluate_detector(const nn::ModelParams<float>& model, const PreparedData& data,
                          const std::optional<codec::AllocationPlan>& plan = std::nullopt);

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

/// One point per distinct score, ordered by increasing threshold, so recall
/// is non-increasing. Needs at least one positive and one negative label.
std::vector<PrPoint> pr_curve(std::span<const double> scores, std::span<const int> labels);

/// Trapezoidal area under precision as a function of recall.
double pr_auc(const std::vector<PrPoint>& curve);

std::string pr_csv(const std::vector<PrPoint>& curve);

// -- Baselines ---------------------------------------------------------------

/// Standardized pooled-MFCC features and a linear SVM; returns test metrics
/// with the SVM decision values squashed through a logistic as scores.
Metrics evaluate_mfcc_svm(const PreparedData& data, const nn::SvmConfig& cfg = {});

// -- Segmentation ------------------------------------------------------------

struct SegmentationMetrics {
  double accuracy = 0.0;  ///< per-frame, over all test frames
  Confusion confusion;
  std::optional<double> ablation_accuracy;
};

SegmentationMetrics evaluate_segmenter(const nn::ModelParams<float>& model, const nn::ClipSet& test,
                                       const nn::ModelParams<float>* ablation = nullptr);

// -- Rate-accuracy sweep -----------------------------------------------------

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;  ///< sample standard deviation, 0 for one value
};
Summary summarize(std::span<const double> values);

struct RateAccuracyConfig {
  std::vector<int> budgets{235, 329, 423};
  std::vector<codec::AllocationMethod> methods{codec::AllocationMethod::kLearned, codec::AllocationMethod::kHuman,
                                               codec::AllocationMethod::kUniform};
  int n_seeds = 5;
  std::uint64_t seed = 0;
  int floor = codec::kMinBits;
  nn::TrainConfig train;
  bitalloc::AllocTrainConfig alloc;
  /// Also trains and scores an uncompressed detector per seed.
  bool include_uncompressed = true;
  int threads = 1;

  void validate(int n_bands) const;
};

/// One trained-and-scored detector.
struct RunRecord {
  std::string method;  ///< "learned", "human", "uniform" or "uncompressed"
  int budget = 0;      ///< 0 for uncompressed
  int seed_index = 0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double compression_ratio = 1.0;
  std::vector<int> bits;
};

struct RateAccuracyRow {
  codec::AllocationMethod method = codec::AllocationMethod::kUniform;
  int budget = 0;
  Summary accuracy;
  std::vector<double> per_seed;
  double compression_ratio = 1.0;
};

struct RateAccuracyResult {
  std::vector<RunRecord> runs;  ///< ordered by (method, budget, seed)
  std::vector<RateAccuracyRow> rows;
  std::vector<double> uncompressed;     ///< per seed, empty when not requested
  std::vector<Eigen::VectorXd> lambdas;  ///< learned lambda per seed, empty without the learned method

  const RateAccuracyRow& row(codec::AllocationMethod method, int budget) const;
  const RunRecord& run(const std::string& method, int budget, int seed_index) const;
};

/// Seeds for seed index i derive from derive_seed(cfg.seed, i); every method
/// at that index trains its detector from the same initialization and
/// shuffling stream. Jobs run on cfg.threads workers and are merged by key.
RateAccuracyResult rate_accuracy_table(const PreparedData& data, const RateAccuracyConfig& cfg);

/// method,budget,seed,accuracy,precision,recall,compression_ratio
std::string runs_csv(const RateAccuracyResult& result);
/// Mean +- std per (method, budget) with the compression ratio.
std::string render_table(const RateAccuracyResult& result);

/// Plan for a named method at a budget; `lambda` is required for the learned method.
codec::AllocationPlan make_plan(codec::AllocationMethod method, int budget, const PreparedData& data,
                                const std::optional<Eigen::VectorXd>& lambda, int floor = codec::kMinBits);

/// Detector trained on (optionally compressed) training inputs with its
/// fingerprint recorded.
nn::TrainResult train_detector(const PreparedData& data, const std::optional<codec::AllocationPlan>& plan,
                               const nn::TrainConfig& cfg);

}  // namespace pam::eval
