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

#include "pam/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "pam/rng.hpp"

namespace pam::eval {
namespace {

// Runs fn(0..n-1) on up to `threads` workers. The first exception thrown by
// any job is rethrown after all workers stop.
template <typename Fn>
void run_jobs(std::size_t n, int threads, Fn fn) {
  const auto workers = static_cast<std::size_t>(std::clamp(threads, 1, static_cast<int>(std::max<std::size_t>(n, 1))));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

void hash_double(std::ostringstream& os, double v) { os << std::hexfloat << v << ';'; }

int argmax_class(const RowMatrixXd& probs, Eigen::Index row) {
  return probs(row, nn::kCall) > probs(row, nn::kNoCall) ? nn::kCall : nn::kNoCall;
}

}  // namespace

// -- Input pipeline ----------------------------------------------------------

PreparedData prepare(const synth::DatasetSplit& ds, const dsp::StftConfig& stft) {
  if (ds.train.empty() || ds.test.empty()) throw InvalidArgument("prepare: both splits must be non-empty");
  PreparedData out;
  out.stft = stft;
  std::vector<Spectrogram> raw_train;
  std::vector<std::vector<bool>> train_frames;
  for (const auto& clip : ds.train) {
    raw_train.push_back(dsp::stft(clip.waveform, stft));
    train_frames.push_back(clip.frame_labels);
  }
  out.norm = dsp::compute_norm_stats(raw_train, train_frames);
  out.band_freqs_hz = raw_train.front().band_freqs_hz;

  auto fill = [&](const std::vector<synth::LabeledClip>& clips, nn::ClipSet& set, RowMatrixXd& mfcc,
                  const std::vector<Spectrogram>* raw) {
    dsp::MfccConfig mcfg;
    mcfg.stft = stft;
    for (std::size_t i = 0; i < clips.size(); ++i) {
      const auto& clip = clips[i];
      set.inputs.push_back(dsp::normalize(raw ? (*raw)[i] : dsp::stft(clip.waveform, stft), out.norm));
      set.labels.push_back(clip.clip_label ? nn::kCall : nn::kNoCall);
      set.frame_labels.push_back(clip.frame_labels);
      const Eigen::VectorXd feat = dsp::mfcc_features(clip.waveform, mcfg);
      if (i == 0) mfcc.resize(static_cast<Eigen::Index>(clips.size()), feat.size());
      mfcc.row(static_cast<Eigen::Index>(i)) = feat.transpose();
    }
    set.validate();
  };
  fill(ds.train, out.train, out.mfcc_train, &raw_train);
  fill(ds.test, out.test, out.mfcc_test, nullptr);
  out.scale = codec::percentile_scale(out.train.inputs);
  return out;
}

Spectrogram spectrogram_input(const Waveform& w, const PreparedData& pipeline) {
  return dsp::normalize(dsp::stft(w, pipeline.stft), pipeline.norm);
}

nn::ClipSet compress(const nn::ClipSet& data, const codec::AllocationPlan& plan, double scale) {
  plan.validate();
  nn::ClipSet out = data;
  for (auto& s : out.inputs) s = codec::round_trip(s, plan, scale);
  return out;
}

std::string pipeline_fingerprint(const PreparedData& data, const std::optional<codec::AllocationPlan>& plan) {
  std::ostringstream os;
  os << "stft:" << data.stft.sample_rate << ',' << data.stft.window << ',' << data.stft.hop << ',';
  hash_double(os, data.stft.band_lo_hz);
  hash_double(os, data.stft.band_hi_hz);
  os << "norm:";
  for (Eigen::Index i = 0; i < data.norm.noise_mean.size(); ++i) hash_double(os, data.norm.noise_mean[i]);
  hash_double(os, data.norm.median_call_intensity);
  os << "plan:";
  if (plan) {
    hash_double(os, static_cast<float>(data.scale));
    for (int b : plan->bits) os << b << ',';
  } else {
    os << "none";
  }
  std::ostringstream hex;
  hex << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(os.str());
  return hex.str();
}

// -- Detection metrics -------------------------------------------------------

Confusion confusion_at(std::span<const double> scores, std::span<const int> labels, double threshold) {
  if (scores.size() != labels.size()) throw InvalidArgument("confusion: score/label count mismatch");
  Confusion c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    const bool pos = labels[i] == nn::kCall;
    if (pred && pos) ++c.tp;
    else if (pred) ++c.fp;
    else if (pos) ++c.fn;
    else ++c.tn;
  }
  return c;
}

Metrics Metrics::from_scores(std::vector<double> scores, std::vector<int> labels, double threshold) {
  Metrics m;
  m.confusion = confusion_at(scores, labels, threshold);
  m.accuracy = m.confusion.accuracy();
  m.precision = m.confusion.precision();
  m.recall = m.confusion.recall();
  m.scores = std::move(scores);
  m.labels = std::move(labels);
  return m;
}

Metrics evaluate_detector(const nn::ModelParams<float>& model, const PreparedData& data,
                          const std::optional<codec::AllocationPlan>& plan) {
  if (!model.pipeline_fingerprint.empty() && model.pipeline_fingerprint != pipeline_fingerprint(data, plan)) {
    throw InvalidArgument("evaluate: model was trained on a different input pipeline");
  }
  const nn::ClipSet test = plan ? compress(data.test, *plan, data.scale) : data.test;
  return Metrics::from_scores(nn::predict(model, test.inputs), test.labels);
}

std::vector<PrPoint> pr_curve(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw InvalidArgument("pr_curve: score/label count mismatch");
  const auto positives = std::count(labels.begin(), labels.end(), nn::kCall);
  if (positives == 0 || positives == static_cast<long>(labels.size())) {
    throw InvalidArgument("pr_curve: need at least one positive and one negative label");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  // Sweep thresholds from high to low; each distinct score admits its ties.
  std::vector<PrPoint> curve;
  long tp = 0, fp = 0;
  for (std::size_t k = 0; k < order.size();) {
    const double t = scores[order[k]];
    for (; k < order.size() && scores[order[k]] == t; ++k) {
      if (labels[order[k]] == nn::kCall) ++tp;
      else ++fp;
    }
    curve.push_back({t, static_cast<double>(tp) / static_cast<double>(tp + fp),
                     static_cast<double>(tp) / static_cast<double>(positives)});
  }
  std::reverse(curve.begin(), curve.end());
  return curve;
}

double pr_auc(const std::vector<PrPoint>& curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    area += (curve[i - 1].recall - curve[i].recall) * 0.5 * (curve[i - 1].precision + curve[i].precision);
  }
  return area;
}

std::string pr_csv(const std::vector<PrPoint>& curve) {
  std::ostringstream os;
  os << "threshold,precision,recall\n" << std::setprecision(10);
  for (const auto& p : curve) os << p.threshold << ',' << p.precision << ',' << p.recall << '\n';
  return os.str();
}

// -- Baselines ---------------------------------------------------------------

Metrics evaluate_mfcc_svm(const PreparedData& data, const nn::SvmConfig& cfg) {
  const nn::Standardizer z = nn::Standardizer::fit(data.mfcc_train);
  const nn::LinearSvm svm = nn::mfcc_svm_train(z.apply(data.mfcc_train), data.train.labels, cfg);
  const RowMatrixXd test = z.apply(data.mfcc_test);
  std::vector<double> scores;
  for (Eigen::Index i = 0; i < test.rows(); ++i) {
    scores.push_back(1.0 / (1.0 + std::exp(-svm.decision(test.row(i).transpose()))));
  }
  return Metrics::from_scores(std::move(scores), data.test.labels);
}

// -- Segmentation ------------------------------------------------------------

SegmentationMetrics evaluate_segmenter(const nn::ModelParams<float>& model, const nn::ClipSet& test,
                                       const nn::ModelParams<float>* ablation) {
  if (test.empty() || test.frame_labels.size() != test.size()) {
    throw InvalidArgument("evaluate_segmenter: test set needs frame labels");
  }
  auto frame_confusion = [&](const nn::ModelParams<float>& m) {
    Confusion c;
    for (std::size_t i = 0; i < test.size(); ++i) {
      const RowMatrixXd probs = nn::segment(m, test.inputs[i]);
      for (Eigen::Index t = 0; t < probs.rows(); ++t) {
        const bool pred = argmax_class(probs, t) == nn::kCall;
        const bool pos = test.frame_labels[i][static_cast<std::size_t>(t)];
        if (pred && pos) ++c.tp;
        else if (pred) ++c.fp;
        else if (pos) ++c.fn;
        else ++c.tn;
      }
    }
    return c;
  };
  SegmentationMetrics out;
  out.confusion = frame_confusion(model);
  out.accuracy = out.confusion.accuracy();
  if (ablation) out.ablation_accuracy = frame_confusion(*ablation).accuracy();
  return out;
}

// -- Rate-accuracy sweep -----------------------------------------------------

Summary summarize(std::span<const double> values) {
  Summary s;
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

void RateAccuracyConfig::validate(int n_bands) const {
  if (budgets.empty() || methods.empty()) throw InvalidArgument("rate_accuracy: budgets and methods must be non-empty");
  if (n_seeds < 1) throw InvalidArgument("rate_accuracy: n_seeds must be >= 1");
  if (floor < 1 || floor > codec::kMaxBits) throw InvalidArgument("rate_accuracy: floor must be in [1, 32]");
  for (int b : budgets) {
    if (b < floor * n_bands || b > codec::kMaxBits * n_bands) {
      throw InvalidArgument("rate_accuracy: budget " + std::to_string(b) + " outside [" +
                            std::to_string(floor * n_bands) + ", " + std::to_string(codec::kMaxBits * n_bands) + "]");
    }
  }
  train.validate();
  alloc.validate();
}

const RateAccuracyRow& RateAccuracyResult::row(codec::AllocationMethod method, int budget) const {
  for (const auto& r : rows) {
    if (r.method == method && r.budget == budget) return r;
  }
  throw InvalidArgument("rate_accuracy: no row for " + codec::to_string(method) + " at " + std::to_string(budget));
}

const RunRecord& RateAccuracyResult::run(const std::string& method, int budget, int seed_index) const {
  for (const auto& r : runs) {
    if (r.method == method && r.budget == budget && r.seed_index == seed_index) return r;
  }
  throw InvalidArgument("rate_accuracy: no run for " + method);
}

codec::AllocationPlan make_plan(codec::AllocationMethod method, int budget, const PreparedData& data,
                                const std::optional<Eigen::VectorXd>& lambda, int floor) {
  switch (method) {
    case codec::AllocationMethod::kLearned:
      if (!lambda) throw InvalidArgument("make_plan: learned allocation needs lambda");
      return bitalloc::lambda_to_allocation(*lambda, budget, floor);
    case codec::AllocationMethod::kHuman:
      return codec::human_allocation(data.band_freqs_hz, budget, floor);
    case codec::AllocationMethod::kUniform:
      return codec::uniform_allocation(static_cast<int>(data.band_freqs_hz.size()), budget, floor);
  }
  throw InvalidArgument("make_plan: unknown method");
}

nn::TrainResult train_detector(const PreparedData& data, const std::optional<codec::AllocationPlan>& plan,
                               const nn::TrainConfig& cfg) {
  nn::TrainResult r = plan ? nn::train_classifier(compress(data.train, *plan, data.scale), cfg)
                           : nn::train_classifier(data.train, cfg);
  r.model.pipeline_fingerprint = pipeline_fingerprint(data, plan);
  return r;
}

RateAccuracyResult rate_accuracy_table(const PreparedData& data, const RateAccuracyConfig& cfg) {
  const int n_bands = static_cast<int>(data.band_freqs_hz.size());
  cfg.validate(n_bands);
  const bool learned = std::find(cfg.methods.begin(), cfg.methods.end(), codec::AllocationMethod::kLearned) !=
                       cfg.methods.end();
  auto seed_of = [&](int s) { return derive_seed(cfg.seed, static_cast<std::uint64_t>(s)); };

  RateAccuracyResult result;
  if (learned) {
    result.lambdas.resize(static_cast<std::size_t>(cfg.n_seeds));
    run_jobs(static_cast<std::size_t>(cfg.n_seeds), cfg.threads, [&](std::size_t s) {
      bitalloc::AllocTrainConfig acfg = cfg.alloc;
      acfg.train.seed = derive_seed(seed_of(static_cast<int>(s)), "alloc");
      result.lambdas[s] = bitalloc::train_allocation(data.train, acfg).lambda;
    });
  }

  struct Job {
    std::optional<codec::AllocationMethod> method;
    int budget;
    int seed_index;
  };
  std::vector<Job> jobs;
  for (auto m : cfg.methods) {
    for (int b : cfg.budgets) {
      for (int s = 0; s < cfg.n_seeds; ++s) jobs.push_back({m, b, s});
    }
  }
  if (cfg.include_uncompressed) {
    for (int s = 0; s < cfg.n_seeds; ++s) jobs.push_back({std::nullopt, 0, s});
  }
  result.runs.resize(jobs.size());
  run_jobs(jobs.size(), cfg.threads, [&](std::size_t j) {
    const Job& job = jobs[j];
    std::optional<codec::AllocationPlan> plan;
    if (job.method) {
      std::optional<Eigen::VectorXd> lam;
      if (*job.method == codec::AllocationMethod::kLearned) lam = result.lambdas[static_cast<std::size_t>(job.seed_index)];
      plan = make_plan(*job.method, job.budget, data, lam, cfg.floor);
    }
    nn::TrainConfig tcfg = cfg.train;
    tcfg.seed = derive_seed(seed_of(job.seed_index), "detector");
    const nn::TrainResult trained = train_detector(data, plan, tcfg);
    const Metrics m = evaluate_detector(trained.model, data, plan);
    RunRecord& r = result.runs[j];
    r.method = job.method ? codec::to_string(*job.method) : "uncompressed";
    r.budget = job.budget;
    r.seed_index = job.seed_index;
    r.accuracy = m.accuracy;
    r.precision = m.precision;
    r.recall = m.recall;
    r.compression_ratio = codec::compression_ratio(
        plan ? *plan : codec::uniform_allocation(n_bands, codec::kMaxBits * n_bands), data.stft);
    if (plan) r.bits = plan->bits;
  });

  for (auto m : cfg.methods) {
    for (int b : cfg.budgets) {
      RateAccuracyRow row;
      row.method = m;
      row.budget = b;
      for (int s = 0; s < cfg.n_seeds; ++s) {
        const RunRecord& r = result.run(codec::to_string(m), b, s);
        row.per_seed.push_back(r.accuracy);
        row.compression_ratio = r.compression_ratio;
      }
      row.accuracy = summarize(row.per_seed);
      result.rows.push_back(std::move(row));
    }
  }
  if (cfg.include_uncompressed) {
    for (int s = 0; s < cfg.n_seeds; ++s) result.uncompressed.push_back(result.run("uncompressed", 0, s).accuracy);
  }
  return result;
}

std::string runs_csv(const RateAccuracyResult& result) {
  std::ostringstream os;
  os << "method,budget,seed,accuracy,precision,recall,compression_ratio\n" << std::setprecision(10);
  for (const auto& r : result.runs) {
    os << r.method << ',' << r.budget << ',' << r.seed_index << ',' << r.accuracy << ',' << r.precision << ','
       << r.recall << ',' << r.compression_ratio << '\n';
  }
  return os.str();
}

std::string render_table(const RateAccuracyResult& result) {
  std::ostringstream os;
  os << std::left << std::setw(14) << "method" << std::right << std::setw(8) << "budget" << std::setw(10)
     << "ratio" << std::setw(20) << "accuracy (%)" << '\n';
  os << std::fixed;
  for (const auto& r : result.rows) {
    std::ostringstream acc;
    acc << std::fixed << std::setprecision(2) << 100.0 * r.accuracy.mean << " +- " << 100.0 * r.accuracy.stddev;
    os << std::left << std::setw(14) << codec::to_string(r.method) << std::right << std::setw(8) << r.budget
       << std::setw(10) << std::setprecision(2) << r.compression_ratio << std::setw(20) << acc.str() << '\n';
  }
  if (!result.uncompressed.empty()) {
    const Summary s = summarize(result.uncompressed);
    std::ostringstream acc;
    acc << std::fixed << std::setprecision(2) << 100.0 * s.mean << " +- " << 100.0 * s.stddev;
    const RunRecord& first = result.run("uncompressed", 0, 0);
    os << std::left << std::setw(14) << "uncompressed" << std::right << std::setw(8) << "-" << std::setw(10)
       << std::setprecision(2) << first.compression_ratio << std::setw(20) << acc.str() << '\n';
  }
  return os.str();
}

}  // namespace pam::eval
