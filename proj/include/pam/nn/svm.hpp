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
#include <span>

#include "pam/types.hpp"

namespace pam::nn {

/// Per-dimension z-score fitted on a training matrix (one row per example).
/// Constant dimensions keep unit scale so they map to zero.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;

  static Standardizer fit(const RowMatrixXd& features);
  RowMatrixXd apply(const RowMatrixXd& features) const;
};

struct SvmConfig {
  double regularization = 1e-3;  ///< L2 weight on 0.5 * |w|^2
  int iterations = 2000;
  double step = 1.0;  ///< initial step; iteration t uses step / sqrt(t)
};

/// Linear decision function w.x + b; class 1 when positive.
struct LinearSvm {
  Eigen::VectorXd weights;
  double bias = 0.0;

  double decision(const Eigen::VectorXd& x) const { return weights.dot(x) + bias; }
  int predict(const Eigen::VectorXd& x) const { return decision(x) > 0 ? 1 : 0; }
  /// Primal objective 0.5 * reg * |w|^2 + mean hinge loss, labels in {0, 1}.
  double objective(const RowMatrixXd& features, std::span<const int> labels, double regularization) const;
};

/// Full-batch hinge-loss subgradient descent with L2 regularization on w
/// (the bias is unregularized). Returns the iterate with the lowest primal
/// objective. Labels are {0, 1}.
LinearSvm mfcc_svm_train(const RowMatrixXd& features, std::span<const int> labels, const SvmConfig& cfg = {});

}  // namespace pam::nn
