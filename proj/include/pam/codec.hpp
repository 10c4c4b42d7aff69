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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pam/dsp.hpp"
#include "pam/types.hpp"

namespace pam::codec {

inline constexpr int kMinBits = 5;
inline constexpr int kMaxBits = 32;
inline constexpr std::int64_t kFullScale = 2147483647;  // 2^31 - 1

enum class AllocationMethod { kLearned, kHuman, kUniform };
std::string to_string(AllocationMethod m);
AllocationMethod allocation_method_from_string(const std::string& name);

/// Per-band bit widths. `lambda` is kept when the plan came from a learned
/// vector. `floor` is the minimum width enforced when the plan was built.
struct AllocationPlan {
  std::vector<int> bits;
  std::optional<Eigen::VectorXd> lambda;
  int budget = 0;
  AllocationMethod method = AllocationMethod::kUniform;
  int floor = kMinBits;

  /// Throws InvalidArgument unless every width is in [floor, 32] and they sum
  /// to `budget`.
  void validate() const;
};

struct IntSpectrogram {
  RowMatrixXi data;
  float scale = 1.0f;
};

// -- Quantization ------------------------------------------------------------

/// round(clamp(x / scale, -1, 1) * (2^31 - 1)). The scale is rounded to f32
/// first so that the wire header reproduces it exactly.
IntSpectrogram float_to_fixed(const Spectrogram& s, double scale);

/// Inverse mapping q / (2^31 - 1) * scale. Shape metadata is left empty.
RowMatrixXd fixed_to_float(const IntSpectrogram& x);

/// Keeps the sign and the b - 1 most significant magnitude bits, rounding
/// toward zero. b = 32 is the identity; b = 1 yields 0.
std::int32_t truncate(std::int32_t v, int bits);

// -- Wire format -------------------------------------------------------------
//
//   "PAMC" | version u8 | t u16 | f u16 | scale f32 | bits f x u8 | payload
//
// Payload is band-major then time-major; each value contributes its top
// bits[i] bits, MSB first, and the stream is zero-padded to a byte boundary.
// Multi-byte integers are little-endian.

inline constexpr std::uint8_t kWireVersion = 1;

struct EncodedBlock {
  std::uint8_t version = kWireVersion;
  std::uint16_t frames = 0;
  std::uint16_t bands = 0;
  float scale = 1.0f;
  std::vector<std::uint8_t> bits;
  std::vector<std::uint8_t> payload;

  std::size_t payload_bits() const;
  std::vector<std::uint8_t> serialize() const;
};

enum class DecodeErrc {
  kTruncatedHeader,
  kBadMagic,
  kVersionMismatch,
  kBadBitWidth,
  kTruncatedPayload,
  kTrailingBytes,
};
std::string to_string(DecodeErrc code);

class DecodeError : public FormatError {
 public:
  DecodeError(DecodeErrc code, const std::string& detail);
  DecodeErrc code() const { return code_; }

 private:
  DecodeErrc code_;
};

EncodedBlock encode(const IntSpectrogram& x, const AllocationPlan& plan);

/// Unpacks the payload with the low bits zero-filled.
IntSpectrogram decode_fixed(const EncodedBlock& e);
Spectrogram decode(const EncodedBlock& e);

/// Parses a serialized block. Every malformed input maps to a DecodeError.
EncodedBlock parse(std::span<const std::uint8_t> bytes);

/// float_to_fixed -> encode -> decode for one spectrogram.
Spectrogram round_trip(const Spectrogram& s, const AllocationPlan& plan, double scale);

// -- Allocation baselines ----------------------------------------------------

/// Largest-remainder apportionment of `total` units over `weights`, with each
/// share capped at `caps[i]`. Overflow above a cap is re-apportioned over the
/// remaining bands. Ties go to the lower index. Non-positive weight sums are
/// treated as uniform.
std::vector<int> apportion(const std::vector<double>& weights, int total,
                           const std::vector<int>& caps);

/// Absolute threshold of hearing in dB SPL (Terhardt's approximation).
double absolute_threshold_db(double freq_hz);

AllocationPlan human_allocation(const std::vector<double>& band_freqs_hz, int budget,
                                int floor = kMinBits);

AllocationPlan uniform_allocation(int n_bands, int budget, int floor = kMinBits);

/// Bits per second of the raw 32-bit float signal divided by the bits per
/// second of the encoded stream (header overhead excluded).
double compression_ratio(const AllocationPlan& plan, const dsp::StftConfig& cfg = {});

/// Scale used by float_to_fixed: 99.9th percentile of |x| over the given
/// spectrograms.
double percentile_scale(std::span<const Spectrogram> spectrograms, double percentile = 99.9);

}  // namespace pam::codec
