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
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace pam {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrixXd = RowMatrix<double>;
using RowMatrixXf = RowMatrix<float>;
using RowMatrixXi = RowMatrix<std::int32_t>;

/// Mono audio at a fixed sample rate.
struct Waveform {
  Eigen::VectorXf samples;
  int sample_rate = 1000;

  Eigen::Index size() const { return samples.size(); }
};

/// Frame geometry shared by the generator (for labels) and the STFT.
struct FrameGeometry {
  int window = 512;
  int hop = 384;
  int frames = 64;

  int samples() const { return (frames - 1) * hop + window; }
};

/// Time x frequency magnitude matrix. Rows are frames, columns are bands.
struct Spectrogram {
  RowMatrixXd data;
  std::vector<double> frame_times_s;
  std::vector<double> band_freqs_hz;

  Eigen::Index frames() const { return data.rows(); }
  Eigen::Index bands() const { return data.cols(); }
};

/// Base class for all library errors. `what()` carries a human-readable
/// message; subclasses add a machine-checkable code where callers need one.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or violated precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed file or stream contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace pam
