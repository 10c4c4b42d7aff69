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
#include <vector>

#include "pam/types.hpp"

namespace pam::dsp {

struct StftConfig {
  int sample_rate = 1000;
  int window = 512;
  int hop = 384;
  double band_lo_hz = 8.0;
  double band_hi_hz = 100.0;

  void validate() const;
  double bin_hz() const { return static_cast<double>(sample_rate) / window; }
  /// FFT bins whose center frequency lies in [band_lo_hz, band_hi_hz).
  std::vector<int> selected_bins() const;
  double frame_rate() const { return static_cast<double>(sample_rate) / hop; }
};

/// Periodic Hann window of length n.
Eigen::VectorXd hann_window(int n);

/// Magnitude STFT over all window/2 + 1 non-negative frequency bins, no band
/// selection. Frame count is floor((len - window) / hop) + 1.
RowMatrixXd stft_full(const Waveform& w, const StftConfig& cfg = {});

/// Band-limited magnitude spectrogram (64 x 47 for a standard clip).
Spectrogram stft(const Waveform& w, const StftConfig& cfg = {});

struct NormStats {
  Eigen::VectorXd noise_mean;          ///< per band, over negative frames
  double median_call_intensity = 1.0;  ///< median over positive frames of frame mean
};

/// Per-band mean over frames labelled negative, and the median of the mean
/// magnitude of frames labelled positive. `frame_labels[i]` must have one
/// entry per row of `spectrograms[i]`.
NormStats compute_norm_stats(std::span<const Spectrogram> spectrograms,
                             std::span<const std::vector<bool>> frame_labels);

/// (s - noise_mean) / median_call_intensity, broadcast over frames.
Spectrogram normalize(const Spectrogram& s, const NormStats& stats);
Spectrogram denormalize(const Spectrogram& s, const NormStats& stats);

/// Zero-pads the time axis by `pad` on both sides and returns the 64-frame
/// window starting at `offset` in [0, 2 * pad].
Spectrogram crop_at(const Spectrogram& s, int pad, int offset);

/// crop_at with offset drawn uniformly from [0, 2 * pad] using `seed`.
Spectrogram random_crop(const Spectrogram& s, int pad, std::uint64_t seed, int expected_frames = 64);
int random_crop_offset(int pad, std::uint64_t seed);

struct MfccConfig {
  StftConfig stft;
  int n_filters = 20;
  double f_lo_hz = 0.0;
  double f_hi_hz = 500.0;
  int n_coeffs = 13;
};

/// n_filters x (window/2 + 1) triangular mel filterbank.
RowMatrixXd mel_filterbank(const MfccConfig& cfg);

/// Per-frame MFCCs (frames x n_coeffs): log mel energies of the power
/// spectrum followed by an orthonormal DCT-II.
RowMatrixXd mfcc_frames(const Waveform& w, const MfccConfig& cfg = {});

/// Concatenation of per-coefficient mean, variance and mean first difference.
Eigen::VectorXd pool_mfcc(const RowMatrixXd& frames);

/// 39-dim clip descriptor (with default config).
Eigen::VectorXd mfcc_features(const Waveform& w, const MfccConfig& cfg = {});

}  // namespace pam::dsp
