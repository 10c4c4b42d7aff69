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
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pam/codec.hpp"
#include "pam/nn/model.hpp"
#include "pam/nn/train.hpp"

namespace pam::bitalloc {

using nn::Tape;
using nn::Var;
using nn::Vec;

struct AllocTrainConfig {
  double mu = 1e-7;
  double lambda_init = 2.0;
  /// Noise scale saturates at exp(-lambda_floor); lambda keeps moving below
  /// it but no longer affects the classifier.
  double lambda_floor = -6.0;
  nn::TrainConfig train;

  void validate() const;
};

/// Standard-normal noise of the given length, deterministic in `seed`.
template <typename Scalar>
Vec<Scalar> standard_normal(Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal;
  Vec<Scalar> v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = static_cast<Scalar>(normal(rng));
  return v;
}

/// x + exp(-lambda) (.) beta with fresh standard-normal beta drawn from `seed`.
Spectrogram noise_channel(const Spectrogram& x, const Eigen::VectorXd& lambda, std::uint64_t seed);

/// Mean cross-entropy of `model` on the noised batch plus mu * sum(lambda).
/// `beta` has the size of `x`; `targets` follows softmax_cross_entropy.
template <typename Scalar>
Var<Scalar> joint_loss(Tape<Scalar>& tape, const nn::ModelParams<Scalar>& model, const Var<Scalar>& lambda,
                       const Var<Scalar>& x, std::span<const int> targets, const Vec<Scalar>& beta, double mu,
                       Scalar lambda_floor = -std::numeric_limits<Scalar>::infinity()) {
  if (!(mu >= 0)) throw InvalidArgument("joint_loss: mu must be >= 0");
  Var<Scalar> noisy = nn::noise_channel(tape, x, lambda, beta, lambda_floor);
  Var<Scalar> ce = nn::softmax_cross_entropy(tape, nn::forward_logits(tape, model, noisy), targets);
  return nn::add(tape, ce, nn::scale(tape, nn::sum(tape, lambda), static_cast<Scalar>(mu)));
}

struct AllocEpoch {
  nn::EpochStats stats;  ///< train_loss is the classification term, penalty is mu * sum(lambda)
  double mean_lambda = 0.0;
  double sum_lambda = 0.0;
};

struct AllocResult {
  Eigen::VectorXd lambda;
  nn::ModelParams<float> model;
  std::vector<AllocEpoch> history;
};

/// Joint SGD on the detector weights and lambda with fresh noise every batch.
/// When `warm_start` is given the detector starts from a copy of it.
AllocResult train_allocation(const nn::ClipSet& train, const AllocTrainConfig& cfg,
                             const nn::ModelParams<float>* warm_start = nullptr);

/// Floor bits everywhere, then the remaining budget apportioned by largest
/// remainder on max(lambda - min(lambda), 0) + 1e-9, capped at 32 bits.
codec::AllocationPlan lambda_to_allocation(const Eigen::VectorXd& lambda, int budget,
                                           int floor = codec::kMinBits);

/// band_index,center_freq_hz,lambda,bits_at_<B>... one row per band.
std::string lambda_csv(const Eigen::VectorXd& lambda, const std::vector<double>& band_freqs_hz,
                       const std::vector<int>& budgets);

/// Parses the lambda column back out of lambda_csv output.
Eigen::VectorXd parse_lambda_csv(const std::string& text);

}  // namespace pam::bitalloc
