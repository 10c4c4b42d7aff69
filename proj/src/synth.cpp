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

#include "pam/synth.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "pam/rng.hpp"

namespace pam::synth {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require(bool ok, const std::string& message) {
  if (!ok) throw InvalidArgument(message);
}

void require_param(const BackgroundSpec& spec, const std::string& key, double fallback, double lo,
                   double hi) {
  const double v = spec.param(key, fallback);
  require(v >= lo && v <= hi, to_string(spec.kind) + "." + key + " outside [" +
                                  std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

double rms(const Eigen::VectorXd& x) {
  return x.size() == 0 ? 0.0 : std::sqrt(x.squaredNorm() / static_cast<double>(x.size()));
}

void scale_to_rms(Eigen::VectorXd& x, double level) {
  const double r = rms(x);
  if (r > 0.0) x *= level / r;
}

// Gaussian noise with a 1/f power spectrum and unit RMS.
Eigen::VectorXd pink_noise(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> normal;
  // Power-of-two length keeps the FFT fast; the tail is discarded.
  std::size_t len = 1;
  while (len < static_cast<std::size_t>(n)) len *= 2;
  std::vector<double> white(len);
  for (auto& v : white) v = normal(rng);
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, white);
  const auto m = spec.size();
  spec[0] = 0.0;
  for (std::size_t k = 1; k < m; ++k) {
    const double bin = static_cast<double>(std::min(k, m - k));
    spec[k] /= std::sqrt(bin);
  }
  std::vector<double> out;
  fft.inv(out, spec);
  Eigen::VectorXd x = Eigen::Map<Eigen::VectorXd>(out.data(), n);
  scale_to_rms(x, 1.0);
  return x;
}

// Low-pass filtered noise in roughly [-1, 1], used for slow frequency jitter.
Eigen::VectorXd smooth_walk(Eigen::Index n, double cutoff_hz, int sample_rate, Rng& rng) {
  std::normal_distribution<double> normal;
  const double alpha = 1.0 - std::exp(-kTwoPi * cutoff_hz / sample_rate);
  Eigen::VectorXd out(n);
  double state = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    state += alpha * (normal(rng) - state);
    out[i] = state;
  }
  const double peak = out.cwiseAbs().maxCoeff();
  if (peak > 0.0) out /= peak;
  return out;
}

void add_harmonic_burst(Eigen::VectorXd& x, Eigen::Index begin, Eigen::Index len, double f0,
                        int n_harmonics, double amplitude, int sample_rate, Rng& rng) {
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  std::vector<double> phases(static_cast<std::size_t>(n_harmonics));
  for (auto& p : phases) p = phase(rng);
  for (Eigen::Index i = 0; i < len && begin + i < x.size(); ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    const double env = 0.5 - 0.5 * std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(len));
    double v = 0.0;
    for (int k = 1; k <= n_harmonics; ++k) {
      v += std::sin(kTwoPi * k * f0 * t + phases[static_cast<std::size_t>(k - 1)]) / k;
    }
    x[begin + i] += amplitude * env * v;
  }
}

Eigen::VectorXd wind(const BackgroundSpec& spec, Eigen::Index n, int fs, Rng& rng) {
  const double gust_rate = spec.param("gust_rate_hz", 0.15);
  const double gust_depth = spec.param("gust_depth", 0.5);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  const double phi = phase(rng);
  Eigen::VectorXd x = pink_noise(n, rng);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    x[i] *= 1.0 + gust_depth * std::sin(kTwoPi * gust_rate * t + phi);
  }
  return x;
}

Eigen::VectorXd engine(const BackgroundSpec& spec, Eigen::Index n, int fs, Rng& rng) {
  const double f0 = spec.param("fundamental_hz", 30.0);
  const int harmonics = static_cast<int>(spec.param("n_harmonics", 4.0));
  const double jitter = spec.param("jitter", 0.01);
  const double floor = spec.param("floor", 0.3);
  const Eigen::VectorXd walk = smooth_walk(n, 0.5, fs, rng);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  std::vector<double> phases(static_cast<std::size_t>(harmonics));
  for (auto& p : phases) p = phase(rng);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  double base_phase = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double v = 0.0;
    for (int k = 1; k <= harmonics; ++k) {
      v += std::sin(k * base_phase + phases[static_cast<std::size_t>(k - 1)]) / k;
    }
    x[i] = v;
    base_phase += kTwoPi * f0 * (1.0 + jitter * walk[i]) / fs;
  }
  scale_to_rms(x, 1.0);
  if (floor > 0.0) x += floor * pink_noise(n, rng);
  return x;
}

Eigen::VectorXd croc(const BackgroundSpec& spec, Eigen::Index n, int fs, Rng& rng) {
  const double f0 = spec.param("fundamental_hz", 45.0);
  const double rate = spec.param("burst_rate_hz", 0.2);
  const int harmonics = static_cast<int>(spec.param("n_harmonics", 3.0));
  const double floor = spec.param("floor", 0.3);
  const double clip_s = static_cast<double>(n) / fs;
  std::poisson_distribution<int> count_dist(rate * clip_s);
  const int count = std::max(1, count_dist(rng));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  for (int b = 0; b < count; ++b) {
    const double dur_s = 0.3 + 0.6 * unit(rng);
    const auto len = static_cast<Eigen::Index>(std::round(dur_s * fs));
    const auto begin =
        static_cast<Eigen::Index>(unit(rng) * static_cast<double>(std::max<Eigen::Index>(n - len, 1)));
    const double f = f0 * (0.9 + 0.2 * unit(rng));
    add_harmonic_burst(x, begin, len, f, harmonics, 0.5 + unit(rng), fs, rng);
  }
  scale_to_rms(x, 1.0);
  if (floor > 0.0) x += floor * pink_noise(n, rng);
  return x;
}

Eigen::VectorXd rain(const BackgroundSpec& spec, Eigen::Index n, int fs, Rng& rng) {
  const double rate = spec.param("drop_rate_hz", 20.0);
  const double floor = spec.param("floor", 0.3);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  const double clip_s = static_cast<double>(n) / fs;
  std::poisson_distribution<int> count_dist(rate * clip_s);
  const int drops = count_dist(rng);
  const double decay = std::exp(-1000.0 / (5.0 * fs));  // ~5 ms
  for (int d = 0; d < drops; ++d) {
    const auto at = static_cast<Eigen::Index>(unit(rng) * static_cast<double>(n));
    double amp = normal(rng);
    for (Eigen::Index i = at; i < n && std::abs(amp) > 1e-4; ++i) {
      x[i] += amp;
      amp *= -decay;
    }
  }
  scale_to_rms(x, 1.0);
  Eigen::VectorXd hiss(n);
  for (Eigen::Index i = 0; i < n; ++i) hiss[i] = normal(rng);
  x += floor * hiss;
  return x;
}

}  // namespace

std::string to_string(BackgroundKind kind) {
  switch (kind) {
    case BackgroundKind::kBroadbandWind: return "broadband_wind";
    case BackgroundKind::kEngineHarmonic: return "engine_harmonic";
    case BackgroundKind::kCrocBurst: return "croc_burst";
    case BackgroundKind::kRain: return "rain";
    case BackgroundKind::kSilence: return "silence";
  }
  return "unknown";
}

BackgroundKind background_kind_from_string(const std::string& name) {
  for (auto k : {BackgroundKind::kBroadbandWind, BackgroundKind::kEngineHarmonic,
                 BackgroundKind::kCrocBurst, BackgroundKind::kRain, BackgroundKind::kSilence}) {
    if (to_string(k) == name) return k;
  }
  throw InvalidArgument("unknown background kind '" + name + "'");
}

double BackgroundSpec::param(const std::string& key, double fallback) const {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

void validate(const RumbleSpec& spec, int sample_rate) {
  require(sample_rate >= 1000, "sample rate must be >= 1000 Hz");
  require(spec.fundamental_hz >= 8.0 && spec.fundamental_hz <= 34.0,
          "rumble fundamental must lie in [8, 34] Hz");
  require(spec.duration_s >= 2.0 && spec.duration_s <= 8.0,
          "rumble duration must lie in [2, 8] s");
  require(spec.n_harmonics >= 1, "rumble needs at least one harmonic");
  require(spec.harmonic_rolloff > 0.0, "harmonic rolloff must be positive");
  require(spec.fm_depth >= 0.0 && spec.fm_depth <= 0.15, "fm depth must lie in [0, 0.15]");
  require(spec.fm_rate_hz > 0.0, "fm rate must be positive");
  require(spec.amplitude > 0.0, "amplitude must be positive");
  require(spec.onset_s >= 0.0, "onset must be non-negative");
  require(spec.n_harmonics * spec.fundamental_hz * (1.0 + spec.fm_depth) < sample_rate / 2.0,
          "top harmonic reaches Nyquist");
}

void validate(const BackgroundSpec& spec) {
  require(spec.level >= 0.0, "background level must be non-negative");
  switch (spec.kind) {
    case BackgroundKind::kBroadbandWind:
      require_param(spec, "gust_rate_hz", 0.15, 0.01, 2.0);
      require_param(spec, "gust_depth", 0.5, 0.0, 1.0);
      break;
    case BackgroundKind::kEngineHarmonic:
      require_param(spec, "fundamental_hz", 30.0, 20.0, 60.0);
      require_param(spec, "n_harmonics", 4.0, 1.0, 12.0);
      require_param(spec, "jitter", 0.01, 0.0, 0.1);
      require_param(spec, "floor", 0.3, 0.0, 1.0);
      break;
    case BackgroundKind::kCrocBurst:
      require_param(spec, "fundamental_hz", 45.0, 20.0, 120.0);
      require_param(spec, "burst_rate_hz", 0.2, 0.01, 2.0);
      require_param(spec, "n_harmonics", 3.0, 1.0, 8.0);
      require_param(spec, "floor", 0.3, 0.0, 1.0);
      break;
    case BackgroundKind::kRain:
      require_param(spec, "drop_rate_hz", 20.0, 0.0, 200.0);
      require_param(spec, "floor", 0.3, 0.0, 1.0);
      break;
    case BackgroundKind::kSilence:
      break;
  }
}

Waveform gen_rumble(const RumbleSpec& spec, int sample_rate, std::uint64_t seed) {
  validate(spec, sample_rate);
  Rng rng(seed);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  const double fm_phase = phase(rng);
  std::vector<double> phases(static_cast<std::size_t>(spec.n_harmonics));
  for (auto& p : phases) p = phase(rng);

  const auto n = static_cast<Eigen::Index>(std::llround(spec.duration_s * sample_rate));
  const auto ramp = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::llround(0.1 * n)));
  const double f0 = spec.fundamental_hz;
  const double fm_term = spec.fm_depth * f0 / (kTwoPi * spec.fm_rate_hz);

  Waveform out;
  out.sample_rate = sample_rate;
  out.samples.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    // Integral of f0 * (1 + d sin(2 pi r t + phi)) from 0 to t.
    const double cycles =
        f0 * t - fm_term * (std::cos(kTwoPi * spec.fm_rate_hz * t + fm_phase) - std::cos(fm_phase));
    double v = 0.0;
    for (int k = 1; k <= spec.n_harmonics; ++k) {
      v += std::pow(static_cast<double>(k), -spec.harmonic_rolloff) *
           std::sin(kTwoPi * k * cycles + phases[static_cast<std::size_t>(k - 1)]);
    }
    double env = 1.0;
    if (i < ramp) {
      env = 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(i) / static_cast<double>(ramp));
    } else if (i >= n - ramp) {
      env = 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(n - 1 - i) /
                                 static_cast<double>(ramp));
    }
    out.samples[i] = static_cast<float>(spec.amplitude * env * v);
  }
  return out;
}

Waveform gen_background(const BackgroundSpec& spec, Eigen::Index n_samples, int sample_rate,
                        std::uint64_t seed) {
  require(n_samples > 0, "background needs at least one sample");
  validate(spec);
  if (spec.kind == BackgroundKind::kEngineHarmonic) {
    const double top = spec.param("fundamental_hz", 30.0) * spec.param("n_harmonics", 4.0) * 1.1;
    require(top < sample_rate / 2.0, "engine harmonics reach Nyquist");
  }
  if (spec.kind == BackgroundKind::kCrocBurst) {
    const double top = spec.param("fundamental_hz", 45.0) * spec.param("n_harmonics", 3.0) * 1.1;
    require(top < sample_rate / 2.0, "croc harmonics reach Nyquist");
  }
  Rng rng(seed);
  Eigen::VectorXd x;
  switch (spec.kind) {
    case BackgroundKind::kSilence: x = Eigen::VectorXd::Zero(n_samples); break;
    case BackgroundKind::kBroadbandWind: x = wind(spec, n_samples, sample_rate, rng); break;
    case BackgroundKind::kEngineHarmonic: x = engine(spec, n_samples, sample_rate, rng); break;
    case BackgroundKind::kCrocBurst: x = croc(spec, n_samples, sample_rate, rng); break;
    case BackgroundKind::kRain: x = rain(spec, n_samples, sample_rate, rng); break;
  }
  if (spec.kind != BackgroundKind::kSilence) scale_to_rms(x, spec.level);
  Waveform out;
  out.sample_rate = sample_rate;
  out.samples = x.cast<float>();
  return out;
}

std::vector<bool> frame_labels_from_supports(const std::vector<RumbleSupport>& supports,
                                             const FrameGeometry& geometry) {
  std::vector<bool> labels(static_cast<std::size_t>(geometry.frames), false);
  for (int i = 0; i < geometry.frames; ++i) {
    const std::int64_t lo = static_cast<std::int64_t>(i) * geometry.hop;
    const std::int64_t hi = lo + geometry.window;
    for (const auto& s : supports) {
      if (s.begin < hi && lo < s.end) {
        labels[static_cast<std::size_t>(i)] = true;
        break;
      }
    }
  }
  return labels;
}

LabeledClip gen_clip(const std::vector<RumbleSpec>& rumbles, const BackgroundSpec& background,
                     double snr_db, int sample_rate, std::uint64_t seed,
                     const FrameGeometry& geometry) {
  const Eigen::Index n = geometry.samples();
  LabeledClip clip;
  clip.background = background.kind;
  clip.snr_db = snr_db;

  Eigen::VectorXd calls = Eigen::VectorXd::Zero(n);
  std::vector<bool> covered(static_cast<std::size_t>(n), false);
  for (std::size_t j = 0; j < rumbles.size(); ++j) {
    const auto& spec = rumbles[j];
    validate(spec, sample_rate);
    const auto begin = static_cast<std::int64_t>(std::llround(spec.onset_s * sample_rate));
    const auto len = static_cast<std::int64_t>(std::llround(spec.duration_s * sample_rate));
    require(begin + len <= n, "rumble " + std::to_string(j) + " extends past the clip end");
    const Waveform w = gen_rumble(spec, sample_rate, derive_seed(seed, j));
    calls.segment(begin, len) += w.samples.cast<double>();
    std::fill(covered.begin() + begin, covered.begin() + begin + len, true);
    clip.rumbles.push_back({begin, begin + len});
  }

  const Waveform bg = gen_background(background, n, sample_rate, derive_seed(seed, "background"));
  Eigen::VectorXd mix = bg.samples.cast<double>();
  if (!rumbles.empty()) {
    double call_energy = 0.0;
    double bg_energy = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!covered[static_cast<std::size_t>(i)]) continue;
      call_energy += calls[i] * calls[i];
      bg_energy += mix[i] * mix[i];
    }
    double gain = 1.0;
    if (bg_energy > 0.0 && call_energy > 0.0) {
      gain = std::pow(10.0, snr_db / 20.0) * std::sqrt(bg_energy / call_energy);
    }
    mix += gain * calls;
  }

  clip.waveform.sample_rate = sample_rate;
  clip.waveform.samples = mix.cast<float>();
  clip.frame_labels = frame_labels_from_supports(clip.rumbles, geometry);
  clip.clip_label = std::any_of(clip.frame_labels.begin(), clip.frame_labels.end(),
                                [](bool b) { return b; });
  return clip;
}

ClipRecipe draw_recipe(const DatasetConfig& config, bool positive, std::uint64_t clip_seed) {
  Rng rng(derive_seed(clip_seed, "recipe"));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  ClipRecipe recipe;
  const double clip_s = static_cast<double>(config.geometry.samples()) / config.sample_rate;
  if (positive) {
    // 1 rumble most of the time, occasionally overlapping choruses.
    const double u = unit(rng);
    int count = u < 0.6 ? 1 : (u < 0.9 ? 2 : 3);
    count = std::min(count, std::max(1, config.max_rumbles));
    for (int j = 0; j < count; ++j) {
      RumbleSpec r;
      r.fundamental_hz = uniform(8.0, 34.0);
      r.duration_s = uniform(2.0, 8.0);
      r.n_harmonics = 1 + static_cast<int>(unit(rng) * 4.0);
      r.harmonic_rolloff = uniform(0.5, 1.5);
      r.fm_depth = uniform(0.0, 0.15);
      r.fm_rate_hz = uniform(0.1, 0.5);
      r.amplitude = uniform(0.5, 1.0);
      // Keep the sample-rounded end inside the clip.
      r.onset_s = uniform(0.0, clip_s - r.duration_s - 2.0 / config.sample_rate);
      recipe.rumbles.push_back(r);
    }
  }

  static constexpr BackgroundKind kKinds[] = {BackgroundKind::kBroadbandWind,
                                              BackgroundKind::kEngineHarmonic,
                                              BackgroundKind::kCrocBurst, BackgroundKind::kRain};
  auto& bg = recipe.background;
  bg.kind = kKinds[static_cast<int>(unit(rng) * 4.0) % 4];
  bg.level = config.level_lo * std::pow(config.level_hi / config.level_lo, unit(rng));
  switch (bg.kind) {
    case BackgroundKind::kBroadbandWind:
      bg.params["gust_rate_hz"] = uniform(0.05, 0.5);
      bg.params["gust_depth"] = uniform(0.2, 0.8);
      break;
    case BackgroundKind::kEngineHarmonic:
      bg.params["fundamental_hz"] = uniform(20.0, 60.0);
      bg.params["n_harmonics"] = 3.0;
      bg.params["jitter"] = uniform(0.0, 0.05);
      bg.params["floor"] = uniform(0.2, 0.6);
      break;
    case BackgroundKind::kCrocBurst:
      bg.params["fundamental_hz"] = uniform(25.0, 80.0);
      bg.params["burst_rate_hz"] = uniform(0.1, 0.4);
      bg.params["n_harmonics"] = 3.0;
      bg.params["floor"] = uniform(0.2, 0.6);
      break;
    case BackgroundKind::kRain:
      bg.params["drop_rate_hz"] = uniform(5.0, 60.0);
      bg.params["floor"] = uniform(0.2, 0.6);
      break;
    case BackgroundKind::kSilence:
      break;
  }
  recipe.snr_db = positive ? uniform(config.snr_lo_db, config.snr_hi_db) : 0.0;
  return recipe;
}

DatasetSplit build_dataset(const DatasetConfig& config, std::uint64_t seed) {
  require(config.n_clips > 0, "dataset needs at least one clip");
  require(config.train_fraction >= 0.0 && config.train_fraction <= 1.0,
          "train fraction must lie in [0, 1]");
  require(config.snr_lo_db <= config.snr_hi_db, "snr range is empty");

  const int n_pos = config.n_clips / 2;
  const int n_neg = config.n_clips - n_pos;

  std::vector<LabeledClip> pos;
  std::vector<LabeledClip> neg;
  for (int i = 0; i < config.n_clips; ++i) {
    const bool positive = i < n_pos;
    const std::uint64_t clip_seed = derive_seed(seed, static_cast<std::uint64_t>(i));
    const ClipRecipe r = draw_recipe(config, positive, clip_seed);
    LabeledClip clip = gen_clip(r.rumbles, r.background, r.snr_db, config.sample_rate,
                                derive_seed(clip_seed, "clip"), config.geometry);
    (positive ? pos : neg).push_back(std::move(clip));
  }

  // Stratified uniform split: shuffle each class, cut at the same fraction.
  Rng rng(derive_seed(seed, "split"));
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);
  const auto n_pos_train = static_cast<std::size_t>(std::llround(config.train_fraction * n_pos));
  const auto n_neg_train = static_cast<std::size_t>(std::llround(config.train_fraction * n_neg));

  DatasetSplit split;
  split.sample_rate = config.sample_rate;
  split.geometry = config.geometry;
  for (std::size_t i = 0; i < pos.size(); ++i) {
    (i < n_pos_train ? split.train : split.test).push_back(std::move(pos[i]));
  }
  for (std::size_t i = 0; i < neg.size(); ++i) {
    (i < n_neg_train ? split.train : split.test).push_back(std::move(neg[i]));
  }
  std::shuffle(split.train.begin(), split.train.end(), rng);
  std::shuffle(split.test.begin(), split.test.end(), rng);
  return split;
}

}  // namespace pam::synth
