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

#include "pam/bitalloc.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "pam/rng.hpp"

namespace pam::bitalloc {

void AllocTrainConfig::validate() const {
  if (!(mu >= 0)) throw InvalidArgument("alloc: mu must be >= 0");
  if (!std::isfinite(lambda_init)) throw InvalidArgument("alloc: lambda_init must be finite");
  if (!(lambda_floor < lambda_init)) throw InvalidArgument("alloc: lambda_floor must be below lambda_init");
  train.validate();
}

Spectrogram noise_channel(const Spectrogram& x, const Eigen::VectorXd& lambda, std::uint64_t seed) {
  if (lambda.size() != x.bands()) throw InvalidArgument("noise_channel: lambda length must equal band count");
  const Vec<double> beta = standard_normal<double>(x.data.size(), seed);
  Spectrogram out = x;
  out.data += Eigen::Map<const RowMatrixXd>(beta.data(), x.frames(), x.bands()) *
              (-lambda.array()).exp().matrix().asDiagonal();
  return out;
}

AllocResult train_allocation(const nn::ClipSet& train, const AllocTrainConfig& cfg,
                             const nn::ModelParams<float>* warm_start) {
  cfg.validate();
  if (train.empty()) throw InvalidArgument("alloc: empty training split");
  const int bands = train.bands();
  AllocResult result;
  if (warm_start) {
    result.model = warm_start->cast<float>();
  } else {
    result.model = nn::make_detector<float>(derive_seed(cfg.train.seed, "init"));
  }
  const Var<float> lambda =
      nn::make_var<float>({bands}, Vec<float>::Constant(bands, static_cast<float>(cfg.lambda_init)), true);
  const auto floor = static_cast<float>(cfg.lambda_floor);
  const auto mu = static_cast<float>(cfg.mu);

  nn::FitHooks hooks;
  hooks.transform = [&](Tape<float>& tape, const Var<float>& x, std::uint64_t seed) {
    return nn::noise_channel(tape, x, lambda, standard_normal<float>(x->value.size(), seed), floor);
  };
  hooks.penalty = [&](Tape<float>& tape) { return nn::scale(tape, nn::sum(tape, lambda), mu); };
  hooks.extra_params = {lambda};
  hooks.on_epoch = [&](const nn::EpochStats& s) {
    const double total = lambda->value.cast<double>().sum();
    result.history.push_back({s, total / bands, total});
  };
  nn::fit(result.model, train, cfg.train, hooks);
  result.lambda = lambda->value.cast<double>();
  return result;
}

codec::AllocationPlan lambda_to_allocation(const Eigen::VectorXd& lambda, int budget, int floor) {
  const auto f = static_cast<int>(lambda.size());
  if (f == 0) throw InvalidArgument("lambda_to_allocation: empty lambda");
  if (!lambda.allFinite()) throw InvalidArgument("lambda_to_allocation: lambda must be finite");
  if (floor < 1 || floor > codec::kMaxBits) throw InvalidArgument("lambda_to_allocation: floor out of range");
  if (budget < floor * f) {
    throw InvalidArgument("lambda_to_allocation: budget " + std::to_string(budget) + " is below floor x bands (" +
                          std::to_string(floor * f) + ")");
  }
  if (budget > codec::kMaxBits * f) throw InvalidArgument("lambda_to_allocation: budget exceeds 32 bits per band");
  const double lo = lambda.minCoeff();
  std::vector<double> weights(static_cast<std::size_t>(f));
  for (int i = 0; i < f; ++i) weights[static_cast<std::size_t>(i)] = std::max(lambda[i] - lo, 0.0) + 1e-9;
  const std::vector<int> caps(static_cast<std::size_t>(f), codec::kMaxBits - floor);
  std::vector<int> extra = codec::apportion(weights, budget - floor * f, caps);
  codec::AllocationPlan plan;
  plan.bits.resize(static_cast<std::size_t>(f));
  for (int i = 0; i < f; ++i) plan.bits[static_cast<std::size_t>(i)] = floor + extra[static_cast<std::size_t>(i)];
  plan.lambda = lambda;
  plan.budget = budget;
  plan.method = codec::AllocationMethod::kLearned;
  plan.floor = floor;
  plan.validate();
  return plan;
}

std::string lambda_csv(const Eigen::VectorXd& lambda, const std::vector<double>& band_freqs_hz,
                       const std::vector<int>& budgets) {
  if (band_freqs_hz.size() != static_cast<std::size_t>(lambda.size())) {
    throw InvalidArgument("lambda_csv: one frequency per band required");
  }
  std::vector<codec::AllocationPlan> plans;
  for (int b : budgets) plans.push_back(lambda_to_allocation(lambda, b));
  std::ostringstream os;
  os << "band_index,center_freq_hz,lambda";
  for (int b : budgets) os << ",bits_at_" << b;
  os << '\n' << std::setprecision(17);
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    os << i << ',' << band_freqs_hz[static_cast<std::size_t>(i)] << ',' << lambda[i];
    for (const auto& p : plans) os << ',' << p.bits[static_cast<std::size_t>(i)];
    os << '\n';
  }
  return os.str();
}

Eigen::VectorXd parse_lambda_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<double> values;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      if (line.rfind("band_index,center_freq_hz,lambda", 0) != 0) throw FormatError("lambda csv: bad header");
      header = false;
      continue;
    }
    std::istringstream row(line);
    std::string index, freq, lam;
    if (!std::getline(row, index, ',') || !std::getline(row, freq, ',') || !std::getline(row, lam, ',')) {
      throw FormatError("lambda csv: malformed row '" + line + "'");
    }
    try {
      if (std::stoul(index) != values.size()) throw FormatError("lambda csv: band indices must be consecutive");
      values.push_back(std::stod(lam));
    } catch (const std::logic_error&) {
      throw FormatError("lambda csv: malformed row '" + line + "'");
    }
  }
  if (values.empty()) throw FormatError("lambda csv: no rows");
  return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace pam::bitalloc
