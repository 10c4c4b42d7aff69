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

#include "pam/nn/svm.hpp"

#include <cmath>
#include <limits>

namespace pam::nn {

Standardizer Standardizer::fit(const RowMatrixXd& features) {
  if (features.rows() == 0) throw InvalidArgument("standardizer: no rows");
  Standardizer s;
  s.mean = features.colwise().mean().transpose();
  s.stddev = ((features.rowwise() - s.mean.transpose()).array().square().colwise().mean().sqrt()).transpose();
  for (Eigen::Index j = 0; j < s.stddev.size(); ++j) {
    if (!(s.stddev[j] > 0)) s.stddev[j] = 1.0;
  }
  return s;
}

RowMatrixXd Standardizer::apply(const RowMatrixXd& features) const {
  if (features.cols() != mean.size()) throw InvalidArgument("standardizer: dimension mismatch");
  return ((features.rowwise() - mean.transpose()).array().rowwise() / stddev.transpose().array()).matrix();
}

double LinearSvm::objective(const RowMatrixXd& features, std::span<const int> labels,
                            double regularization) const {
  const Eigen::VectorXd margins = (features * weights).array() + bias;
  double hinge = 0.0;
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const double y = labels[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
    hinge += std::max(0.0, 1.0 - y * margins[i]);
  }
  return 0.5 * regularization * weights.squaredNorm() + hinge / static_cast<double>(features.rows());
}

LinearSvm mfcc_svm_train(const RowMatrixXd& features, std::span<const int> labels, const SvmConfig& cfg) {
  const Eigen::Index n = features.rows();
  if (n == 0) throw InvalidArgument("svm: no training examples");
  if (static_cast<std::size_t>(n) != labels.size()) throw InvalidArgument("svm: label count mismatch");
  if (!(cfg.regularization > 0) || cfg.iterations < 1 || !(cfg.step > 0)) {
    throw InvalidArgument("svm: regularization, iterations and step must be positive");
  }
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int l = labels[static_cast<std::size_t>(i)];
    if (l != 0 && l != 1) throw InvalidArgument("svm: labels must be 0 or 1");
    y[i] = l == 1 ? 1.0 : -1.0;
  }

  LinearSvm cur{Eigen::VectorXd::Zero(features.cols()), 0.0};
  LinearSvm best = cur;
  double best_obj = cur.objective(features, labels, cfg.regularization);
  for (int t = 1; t <= cfg.iterations; ++t) {
    const Eigen::VectorXd margins = ((features * cur.weights).array() + cur.bias) * y.array();
    Eigen::VectorXd active = (margins.array() < 1.0).cast<double>() * y.array();
    const Eigen::VectorXd gw = cfg.regularization * cur.weights - features.transpose() * active / static_cast<double>(n);
    const double gb = -active.sum() / static_cast<double>(n);
    const double eta = cfg.step / std::sqrt(static_cast<double>(t));
    cur.weights -= eta * gw;
    cur.bias -= eta * gb;
    const double obj = cur.objective(features, labels, cfg.regularization);
    if (obj < best_obj) {
      best_obj = obj;
      best = cur;
    }
  }
  return best;
}

}  // namespace pam::nn
