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

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <map>
#include <numbers>

#include "pam/dsp.hpp"
#include "pam/rng.hpp"
#include "pam/synth.hpp"

namespace pam::dsp {
namespace {

constexpr double kPi = std::numbers::pi;

Waveform sinusoid(double hz, Eigen::Index n, double amplitude = 1.0) {
  Waveform w;
  w.samples.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) w.samples[i] = static_cast<float>(amplitude * std::sin(2 * kPi * hz * i / 1000.0));
  return w;
}

Waveform noise(Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<float> normal;
  Waveform w;
  w.samples.resize(n);
  for (auto& v : w.samples) v = normal(rng);
  return w;
}

TEST(Stft, StandardClipIs64By47) {
  const Spectrogram s = stft(noise(24704, 1));
  EXPECT_EQ(s.frames(), 64);
  EXPECT_EQ(s.bands(), 47);
  EXPECT_EQ(s.band_freqs_hz.size(), 47u);
  EXPECT_GE(s.band_freqs_hz.front(), 8.0);
  EXPECT_LT(s.band_freqs_hz.back(), 100.0);
  EXPECT_DOUBLE_EQ(s.frame_times_s[1], 0.384);
}

TEST(Stft, BandSelectionKeepsBinsFiveThroughFiftyOne) {
  // Centers k * 1000 / 512 Hz: bin 4 is 7.8 Hz, bin 52 is 101.6 Hz.
  const std::vector<int> bins = StftConfig{}.selected_bins();
  ASSERT_EQ(bins.size(), 47u);
  EXPECT_EQ(bins.front(), 5);
  EXPECT_EQ(bins.back(), 51);
}

TEST(Stft, ZeroWaveformGivesZeroSpectrogram) {
  Waveform w;
  w.samples = Eigen::VectorXf::Zero(24704);
  EXPECT_EQ(stft(w).data, RowMatrixXd::Zero(64, 47));
}

TEST(Stft, SinusoidPeaksInItsBandEveryFrame) {
  const Spectrogram s = stft(sinusoid(50.0, 24704));
  const int want = static_cast<int>(std::floor(50.0 / (1000.0 / 512) + 0.5)) - 5;
  for (Eigen::Index t = 0; t < s.frames(); ++t) {
    Eigen::Index arg;
    s.data.row(t).maxCoeff(&arg);
    EXPECT_EQ(arg, want) << "frame " << t;
  }
}

TEST(Stft, FrameCountFormulaAndShortInputError) {
  EXPECT_EQ(stft_full(noise(512, 2)).rows(), 1);
  EXPECT_EQ(stft_full(noise(512 + 383, 2)).rows(), 1);
  EXPECT_EQ(stft_full(noise(512 + 384, 2)).rows(), 2);
  EXPECT_THROW(stft(noise(511, 2)), InvalidArgument);
}

TEST(Stft, ParsevalHoldsPerFrame) {
  const Waveform w = noise(24704, 3);
  const RowMatrixXd mag = stft_full(w);
  const Eigen::VectorXd win = hann_window(512);
  for (Eigen::Index t = 0; t < mag.rows(); ++t) {
    double time_energy = 0.0;
    for (int i = 0; i < 512; ++i) time_energy += std::pow(w.samples[t * 384 + i] * win[i], 2);
    // One-sided spectrum: interior bins stand for two conjugate bins.
    double freq_energy = mag(t, 0) * mag(t, 0) + mag(t, 256) * mag(t, 256);
    for (int k = 1; k < 256; ++k) freq_energy += 2.0 * mag(t, k) * mag(t, k);
    EXPECT_NEAR(freq_energy / 512.0, time_energy, 1e-6 * time_energy);
  }
}

TEST(Stft, LinearInPositiveAmplitude) {
  const Waveform w = noise(24704, 4);
  Waveform scaled = w;
  scaled.samples *= 4.0f;  // power of two keeps float scaling exact
  EXPECT_LT((stft(scaled).data - 4.0 * stft(w).data).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Stft, ConfigValidation) {
  StftConfig cfg;
  cfg.hop = 600;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.band_hi_hz = 600;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
}

TEST(HannWindow, PeriodicForm) {
  const Eigen::VectorXd w = hann_window(8);
  EXPECT_DOUBLE_EQ(w[0], 0.0);
  EXPECT_DOUBLE_EQ(w[4], 1.0);
  EXPECT_NEAR(w[2], 0.5, 1e-15);
}

// -- Normalization -----------------------------------------------------------

Spectrogram constant(int frames, int bands, double v) {
  Spectrogram s;
  s.data = RowMatrixXd::Constant(frames, bands, v);
  return s;
}

TEST(NormStats, MedianOfTwoPositiveFrames) {
  Spectrogram s = constant(3, 2, 0.0);
  s.data.row(1).setConstant(2.0);
  s.data.row(2).setConstant(4.0);
  const std::vector<Spectrogram> specs{s};
  const std::vector<std::vector<bool>> labels{{false, true, true}};
  const NormStats st = compute_norm_stats(specs, labels);
  EXPECT_DOUBLE_EQ(st.median_call_intensity, 3.0);
  EXPECT_EQ(st.noise_mean, Eigen::VectorXd::Zero(2));
}

TEST(NormStats, MatchesBruteForceOverSyntheticDataset) {
  synth::DatasetConfig cfg;
  cfg.n_clips = 30;
  const synth::DatasetSplit ds = synth::build_dataset(cfg, 5);
  std::vector<Spectrogram> specs;
  std::vector<std::vector<bool>> labels;
  for (const auto& c : ds.train) {
    specs.push_back(stft(c.waveform));
    labels.push_back(c.frame_labels);
  }
  const NormStats st = compute_norm_stats(specs, labels);

  Eigen::VectorXd sum = Eigen::VectorXd::Zero(47);
  double count = 0;
  std::multimap<double, int> call_means;  // ordered container, separate from the library's sort
  for (std::size_t i = 0; i < specs.size(); ++i)
    for (int t = 0; t < 64; ++t) {
      if (labels[i][static_cast<std::size_t>(t)]) {
        call_means.emplace(specs[i].data.row(t).sum() / 47.0, t);
      } else {
        sum += specs[i].data.row(t).transpose();
        count += 1;
      }
    }
  auto it = call_means.begin();
  std::advance(it, (call_means.size() - 1) / 2);
  const double lo = it->first;
  const double median = call_means.size() % 2 ? lo : 0.5 * (lo + std::next(it)->first);
  EXPECT_LT((st.noise_mean - sum / count).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_NEAR(st.median_call_intensity, median, 1e-12 * median);
}

TEST(NormStats, NoPositiveFramesIsAnError) {
  const std::vector<Spectrogram> specs{constant(2, 2, 1.0)};
  const std::vector<std::vector<bool>> labels{{false, false}};
  EXPECT_THROW(compute_norm_stats(specs, labels), InvalidArgument);
}

TEST(Normalize, NoiseMeanInputMapsToZero) {
  NormStats st{Eigen::VectorXd{{1.0, 2.0, 3.0}}, 5.0};
  Spectrogram s;
  s.data = st.noise_mean.transpose().replicate(4, 1);
  EXPECT_EQ(normalize(s, st).data, RowMatrixXd::Zero(4, 3));
}

TEST(Normalize, UnitStatsAreIdentityAndInverseRestores) {
  Spectrogram s;
  s.data = RowMatrixXd::Random(6, 3).cwiseAbs();
  EXPECT_EQ(normalize(s, {Eigen::VectorXd::Zero(3), 1.0}).data, s.data);
  const NormStats st{Eigen::VectorXd{{0.3, 0.1, 2.0}}, 0.7};
  const RowMatrixXd back = denormalize(normalize(s, st), st).data;
  EXPECT_LT(((back - s.data).array() / s.data.array().abs().max(1e-12)).abs().maxCoeff(), 1e-6);
  EXPECT_THROW(normalize(s, {Eigen::VectorXd::Zero(3), 0.0}), InvalidArgument);
}

// -- Random crop -------------------------------------------------------------

Spectrogram ramp() {
  Spectrogram s;
  s.data.resize(64, 3);
  for (int t = 0; t < 64; ++t) s.data.row(t).setConstant(t + 1.0);
  return s;
}

TEST(Crop, CenteredOffsetIsIdentity) { EXPECT_EQ(crop_at(ramp(), 8, 8).data, ramp().data); }

TEST(Crop, OffsetZeroShowsLeadingPadding) {
  const Spectrogram c = crop_at(ramp(), 8, 0);
  EXPECT_EQ(c.data.topRows(8), RowMatrixXd::Zero(8, 3));
  EXPECT_EQ(c.data.row(8), ramp().data.row(0));
  EXPECT_EQ(crop_at(ramp(), 8, 16).data.bottomRows(8), RowMatrixXd::Zero(8, 3));
}

TEST(Crop, OffsetsUniformOverSeventeenValues) {
  std::vector<int> counts(17, 0);
  for (std::uint64_t seed = 0; seed < 10000; ++seed) ++counts[static_cast<std::size_t>(random_crop_offset(8, seed))];
  for (int c : counts) EXPECT_NEAR(c / 10000.0, 1.0 / 17.0, 0.01);
}

TEST(Crop, RandomCropIsDeterministicAndChecksFrameCount) {
  EXPECT_EQ(random_crop(ramp(), 8, 3).data, random_crop(ramp(), 8, 3).data);
  Spectrogram short_clip = ramp();
  short_clip.data.conservativeResize(60, 3);
  EXPECT_THROW(random_crop(short_clip, 8, 3), InvalidArgument);
  EXPECT_THROW(crop_at(ramp(), 8, 17), InvalidArgument);
}

// -- MFCC --------------------------------------------------------------------

// Naive DFT, mel filterbank from the HTK mel formula, and orthonormal DCT-II.
RowMatrixXd reference_mfcc_frames(const Waveform& w) {
  const int n = 512, hop = 384, bins = 257, filters = 20, coeffs = 13;
  auto mel = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
  auto inv = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
  std::vector<double> edge(filters + 2);
  for (int i = 0; i < filters + 2; ++i) edge[static_cast<std::size_t>(i)] = inv(mel(500.0) * i / (filters + 1));
  const Eigen::Index frames = (w.size() - n) / hop + 1;
  RowMatrixXd out(frames, coeffs);
  for (Eigen::Index t = 0; t < frames; ++t) {
    std::vector<double> power(bins);
    for (int k = 0; k < bins; ++k) {
      std::complex<double> acc = 0;
      for (int i = 0; i < n; ++i) {
        const double x = w.samples[t * hop + i] * (0.5 - 0.5 * std::cos(2 * kPi * i / n));
        acc += x * std::polar(1.0, -2 * kPi * k * i / n);
      }
      power[static_cast<std::size_t>(k)] = std::norm(acc);
    }
    std::vector<double> logmel(filters);
    for (int m = 0; m < filters; ++m) {
      double e = 0;
      for (int k = 0; k < bins; ++k) {
        const double f = k * 1000.0 / n, lo = edge[m], mid = edge[m + 1], hi = edge[m + 2];
        if (f > lo && f < hi) e += power[k] * (f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid));
      }
      logmel[static_cast<std::size_t>(m)] = std::log(e + 1e-10);
    }
    for (int c = 0; c < coeffs; ++c) {
      double acc = 0;
      for (int m = 0; m < filters; ++m) acc += logmel[m] * std::cos(kPi * c * (m + 0.5) / filters);
      out(t, c) = acc * std::sqrt((c == 0 ? 1.0 : 2.0) / filters);
    }
  }
  return out;
}

TEST(Mfcc, MeanBlockMatchesReferenceFrames) {
  const Waveform w = noise(24704, 6);
  const RowMatrixXd ref = reference_mfcc_frames(w);
  const Eigen::VectorXd feats = mfcc_features(w);
  ASSERT_EQ(feats.size(), 39);
  const Eigen::VectorXd mean = ref.colwise().mean().transpose();
  EXPECT_LT((feats.head(13) - mean).cwiseAbs().maxCoeff(), 1e-8);
  const RowMatrixXd diff = ref.bottomRows(ref.rows() - 1) - ref.topRows(ref.rows() - 1);
  EXPECT_LT((feats.tail(13) - diff.colwise().mean().transpose()).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Mfcc, SteadySignalHasZeroVarianceAndDerivative) {
  // 125 Hz completes exactly 48 cycles per hop, so every frame is identical.
  const Eigen::VectorXd feats = mfcc_features(sinusoid(125.0, 24704));
  EXPECT_LT(feats.segment(13, 13).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT(feats.tail(13).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Mfcc, LengthIs39AndNeedsTwoFrames) {
  EXPECT_EQ(mfcc_features(noise(900, 7)).size(), 39);
  EXPECT_THROW(mfcc_features(noise(895, 7)), InvalidArgument);
  EXPECT_THROW(pool_mfcc(RowMatrixXd::Zero(1, 13)), InvalidArgument);
}

TEST(MelFilterbank, TrianglesPeakAtOneAndCoverRange) {
  const RowMatrixXd fb = mel_filterbank({});
  ASSERT_EQ(fb.rows(), 20);
  ASSERT_EQ(fb.cols(), 257);
  for (Eigen::Index m = 0; m < fb.rows(); ++m) {
    EXPECT_GT(fb.row(m).maxCoeff(), 0.5);
    EXPECT_LE(fb.row(m).maxCoeff(), 1.0);
    EXPECT_GE(fb.row(m).minCoeff(), 0.0);
  }
  EXPECT_NEAR(fb.col(256).sum(), 0.0, 1e-12);  // 500 Hz is the upper edge
}

}  // namespace
}  // namespace pam::dsp
