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

#include "pam/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "pam/rng.hpp"

namespace pam::dsp {

void StftConfig::validate() const {
  if (sample_rate <= 0 || window <= 0 || hop <= 0) {
    throw InvalidArgument("stft: sample rate, window and hop must be positive");
  }
  if (hop > window) throw InvalidArgument("stft: hop must not exceed window");
  if (band_hi_hz > sample_rate / 2.0) throw InvalidArgument("stft: band_hi above Nyquist");
  if (band_lo_hz >= band_hi_hz) throw InvalidArgument("stft: empty band range");
}

std::vector<int> StftConfig::selected_bins() const {
  std::vector<int> bins;
  for (int k = 0; k <= window / 2; ++k) {
    const double f = k * bin_hz();
    if (f >= band_lo_hz && f < band_hi_hz) bins.push_back(k);
  }
  return bins;
}

Eigen::VectorXd hann_window(int n) {
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  return w;
}

RowMatrixXd stft_full(const Waveform& w, const StftConfig& cfg) {
  cfg.validate();
  if (w.size() < cfg.window) throw InvalidArgument("stft: waveform shorter than one window");
  const Eigen::Index frames = (w.size() - cfg.window) / cfg.hop + 1;
  const int n_bins = cfg.window / 2 + 1;
  const Eigen::VectorXd win = hann_window(cfg.window);

  RowMatrixXd out(frames, n_bins);
  Eigen::FFT<double> fft;
  std::vector<double> frame(static_cast<std::size_t>(cfg.window));
  std::vector<std::complex<double>> spec;
  for (Eigen::Index t = 0; t < frames; ++t) {
    const Eigen::Index base = t * cfg.hop;
    for (int i = 0; i < cfg.window; ++i) {
      frame[static_cast<std::size_t>(i)] = static_cast<double>(w.samples[base + i]) * win[i];
    }
    fft.fwd(spec, frame);
    for (int k = 0; k < n_bins; ++k) out(t, k) = std::abs(spec[static_cast<std::size_t>(k)]);
  }
  return out;
}

Spectrogram stft(const Waveform& w, const StftConfig& cfg) {
  const RowMatrixXd full = stft_full(w, cfg);
  const std::vector<int> bins = cfg.selected_bins();
  Spectrogram s;
  s.data.resize(full.rows(), static_cast<Eigen::Index>(bins.size()));
  for (std::size_t j = 0; j < bins.size(); ++j) {
    s.data.col(static_cast<Eigen::Index>(j)) = full.col(bins[j]);
    s.band_freqs_hz.push_back(bins[j] * cfg.bin_hz());
  }
  for (Eigen::Index t = 0; t < full.rows(); ++t) {
    s.frame_times_s.push_back(static_cast<double>(t * cfg.hop) / cfg.sample_rate);
  }
  return s;
}

NormStats compute_norm_stats(std::span<const Spectrogram> spectrograms,
                             std::span<const std::vector<bool>> frame_labels) {
  if (spectrograms.size() != frame_labels.size()) {
    throw InvalidArgument("norm stats: spectrogram/label count mismatch");
  }
  if (spectrograms.empty()) throw InvalidArgument("norm stats: empty training set");
  const Eigen::Index bands = spectrograms.front().bands();
  Eigen::VectorXd noise_sum = Eigen::VectorXd::Zero(bands);
  std::int64_t n_neg = 0;
  std::vector<double> call_means;
  for (std::size_t i = 0; i < spectrograms.size(); ++i) {
    const auto& s = spectrograms[i];
    const auto& labels = frame_labels[i];
    if (s.bands() != bands || static_cast<std::size_t>(s.frames()) != labels.size()) {
      throw InvalidArgument("norm stats: inconsistent shapes");
    }
    for (Eigen::Index t = 0; t < s.frames(); ++t) {
      if (labels[static_cast<std::size_t>(t)]) {
        call_means.push_back(s.data.row(t).mean());
      } else {
        noise_sum += s.data.row(t).transpose();
        ++n_neg;
      }
    }
  }
  if (call_means.empty()) throw InvalidArgument("norm stats: no positive frames in training set");
  if (n_neg == 0) throw InvalidArgument("norm stats: no negative frames in training set");

  NormStats stats;
  stats.noise_mean = noise_sum / static_cast<double>(n_neg);
  std::sort(call_means.begin(), call_means.end());
  const std::size_t m = call_means.size();
  stats.median_call_intensity =
      m % 2 == 1 ? call_means[m / 2] : 0.5 * (call_means[m / 2 - 1] + call_means[m / 2]);
  if (!(stats.median_call_intensity > 0.0)) {
    throw InvalidArgument("norm stats: median call intensity is not positive");
  }
  return stats;
}

Spectrogram normalize(const Spectrogram& s, const NormStats& stats) {
  if (!(stats.median_call_intensity > 0.0)) throw InvalidArgument("normalize: median must be > 0");
  if (stats.noise_mean.size() != s.bands()) throw InvalidArgument("normalize: band mismatch");
  Spectrogram out = s;
  out.data = (s.data.rowwise() - stats.noise_mean.transpose()) / stats.median_call_intensity;
  return out;
}

Spectrogram denormalize(const Spectrogram& s, const NormStats& stats) {
  if (stats.noise_mean.size() != s.bands()) throw InvalidArgument("denormalize: band mismatch");
  Spectrogram out = s;
  out.data = (s.data * stats.median_call_intensity).rowwise() + stats.noise_mean.transpose();
  return out;
}

Spectrogram crop_at(const Spectrogram& s, int pad, int offset) {
  if (pad < 0 || offset < 0 || offset > 2 * pad) throw InvalidArgument("crop: offset out of range");
  const Eigen::Index frames = s.frames();
  Spectrogram out = s;
  out.data.setZero();
  for (Eigen::Index t = 0; t < frames; ++t) {
    const Eigen::Index src = t + offset - pad;
    if (src >= 0 && src < frames) out.data.row(t) = s.data.row(src);
  }
  return out;
}

int random_crop_offset(int pad, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<int> dist(0, 2 * pad);
  return dist(rng);
}

Spectrogram random_crop(const Spectrogram& s, int pad, std::uint64_t seed, int expected_frames) {
  if (s.frames() != expected_frames) {
    throw InvalidArgument("random_crop: expected " + std::to_string(expected_frames) + " frames");
  }
  return crop_at(s, pad, random_crop_offset(pad, seed));
}

namespace {

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

}  // namespace

RowMatrixXd mel_filterbank(const MfccConfig& cfg) {
  const int n_bins = cfg.stft.window / 2 + 1;
  const double bin_hz = cfg.stft.bin_hz();
  const double mel_lo = hz_to_mel(cfg.f_lo_hz);
  const double mel_hi = hz_to_mel(cfg.f_hi_hz);
  std::vector<double> edges(static_cast<std::size_t>(cfg.n_filters + 2));
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                      static_cast<double>(cfg.n_filters + 1));
  }
  RowMatrixXd fb = RowMatrixXd::Zero(cfg.n_filters, n_bins);
  for (int m = 0; m < cfg.n_filters; ++m) {
    const double lo = edges[static_cast<std::size_t>(m)];
    const double mid = edges[static_cast<std::size_t>(m + 1)];
    const double hi = edges[static_cast<std::size_t>(m + 2)];
    for (int k = 0; k < n_bins; ++k) {
      const double f = k * bin_hz;
      if (f > lo && f < hi) fb(m, k) = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
    }
  }
  return fb;
}

RowMatrixXd mfcc_frames(const Waveform& w, const MfccConfig& cfg) {
  const RowMatrixXd mag = stft_full(w, cfg.stft);
  const RowMatrixXd fb = mel_filterbank(cfg);
  const RowMatrixXd log_energy =
      ((mag.array().square().matrix() * fb.transpose()).array() + 1e-10).log().matrix();

  // Orthonormal DCT-II basis, n_coeffs x n_filters.
  const int m = cfg.n_filters;
  RowMatrixXd dct(cfg.n_coeffs, m);
  for (int n = 0; n < cfg.n_coeffs; ++n) {
    const double norm = n == 0 ? std::sqrt(1.0 / m) : std::sqrt(2.0 / m);
    for (int j = 0; j < m; ++j) dct(n, j) = norm * std::cos(std::numbers::pi * n * (j + 0.5) / m);
  }
  return log_energy * dct.transpose();
}

Eigen::VectorXd pool_mfcc(const RowMatrixXd& frames) {
  if (frames.rows() < 2) throw InvalidArgument("mfcc: need at least two frames");
  const Eigen::Index c = frames.cols();
  const Eigen::VectorXd mean = frames.colwise().mean().transpose();
  const Eigen::VectorXd var =
      (frames.rowwise() - mean.transpose()).array().square().colwise().mean().transpose();
  const RowMatrixXd diff = frames.bottomRows(frames.rows() - 1) - frames.topRows(frames.rows() - 1);
  const Eigen::VectorXd delta = diff.colwise().mean().transpose();
  Eigen::VectorXd out(3 * c);
  out << mean, var, delta;
  return out;
}

Eigen::VectorXd mfcc_features(const Waveform& w, const MfccConfig& cfg) {
  cfg.stft.validate();
  if (w.size() < cfg.stft.window + cfg.stft.hop) {
    throw InvalidArgument("mfcc: waveform shorter than two frames");
  }
  return pool_mfcc(mfcc_frames(w, cfg));
}

}  // namespace pam::dsp
