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
#include <map>
#include <string>
#include <vector>

#include "pam/types.hpp"

namespace pam::synth {

/// One elephant-like rumble: a frequency-modulated harmonic stack under a
/// raised-cosine envelope.
struct RumbleSpec {
  double fundamental_hz = 20.0;  ///< [8, 34]
  double duration_s = 4.0;       ///< [2, 8]
  int n_harmonics = 3;
  double harmonic_rolloff = 1.0;  ///< a_k ~ k^-rolloff
  double fm_depth = 0.05;         ///< [0, 0.15], fractional
  double fm_rate_hz = 0.3;
  double amplitude = 1.0;
  double onset_s = 0.0;
};

/// Throws InvalidArgument when a field is out of range or the top harmonic
/// (including FM excursion) reaches Nyquist at `sample_rate`.
void validate(const RumbleSpec& spec, int sample_rate);

enum class BackgroundKind { kBroadbandWind, kEngineHarmonic, kCrocBurst, kRain, kSilence };

std::string to_string(BackgroundKind kind);
BackgroundKind background_kind_from_string(const std::string& name);

/// Background soundscape. `level` is the RMS of the generated signal.
///
/// Recognised params (defaults in parentheses):
///   broadband_wind : gust_rate_hz (0.15) in [0.01, 2], gust_depth (0.5) in [0, 1]
///   engine_harmonic: fundamental_hz (30) in [20, 60], n_harmonics (4) in [1, 12],
///                    jitter (0.01) in [0, 0.1], floor (0.3) in [0, 1]
///   croc_burst     : fundamental_hz (45) in [20, 120], burst_rate_hz (0.2) in [0.01, 2],
///                    n_harmonics (3) in [1, 8], floor (0.3) in [0, 1]
///   rain           : drop_rate_hz (20) in [0, 200], floor (0.3) in [0, 1]
struct BackgroundSpec {
  BackgroundKind kind = BackgroundKind::kBroadbandWind;
  double level = 1.0;
  std::map<std::string, double> params;

  double param(const std::string& key, double fallback) const;
};

void validate(const BackgroundSpec& spec);

/// Placement of a rumble inside a clip, in samples.
struct RumbleSupport {
  std::int64_t begin = 0;
  std::int64_t end = 0;  ///< exclusive
};

struct LabeledClip {
  Waveform waveform;
  std::vector<bool> frame_labels;
  bool clip_label = false;
  // Generator metadata; not serialized.
  std::vector<RumbleSupport> rumbles;
  BackgroundKind background = BackgroundKind::kSilence;
  double snr_db = 0.0;
};

Waveform gen_rumble(const RumbleSpec& spec, int sample_rate, std::uint64_t seed);

Waveform gen_background(const BackgroundSpec& spec, Eigen::Index n_samples, int sample_rate,
                        std::uint64_t seed);

/// Mixes rumbles into a background so that, over the samples covered by any
/// rumble, RMS(rumbles) / RMS(background) equals `snr_db`. With a silent
/// background the rumbles are left at their own amplitude.
LabeledClip gen_clip(const std::vector<RumbleSpec>& rumbles, const BackgroundSpec& background,
                     double snr_db, int sample_rate, std::uint64_t seed,
                     const FrameGeometry& geometry = {});

/// frame_labels[i] is true iff [i*hop, i*hop + window) intersects any support.
std::vector<bool> frame_labels_from_supports(const std::vector<RumbleSupport>& supports,
                                             const FrameGeometry& geometry);

struct DatasetConfig {
  int n_clips = 2000;
  double train_fraction = 0.5;
  double snr_lo_db = -5.0;
  double snr_hi_db = 20.0;
  int sample_rate = 1000;
  int max_rumbles = 3;
  double level_lo = 0.3;  ///< background RMS drawn log-uniformly in [level_lo, level_hi]
  double level_hi = 3.0;
  FrameGeometry geometry;
};

struct DatasetSplit {
  int sample_rate = 1000;
  FrameGeometry geometry;
  std::vector<LabeledClip> train;
  std::vector<LabeledClip> test;
};

/// Balanced positive/negative clips, stratified into train/test. Clip i is
/// generated from derive_seed(seed, i), so clips are independent of each other.
DatasetSplit build_dataset(const DatasetConfig& config, std::uint64_t seed);

/// Draws the random description of clip `index` (exposed for tests).
struct ClipRecipe {
  std::vector<RumbleSpec> rumbles;
  BackgroundSpec background;
  double snr_db = 0.0;
};
ClipRecipe draw_recipe(const DatasetConfig& config, bool positive, std::uint64_t clip_seed);

}  // namespace pam::synth
