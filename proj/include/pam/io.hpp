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
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pam/synth.hpp"
#include "pam/types.hpp"

namespace pam::io {

// Little-endian primitives over a byte vector.
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v);
void put_f32(std::vector<std::uint8_t>& out, float v);
void put_string(std::vector<std::uint8_t>& out, const std::string& s);  // u32 length + bytes

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  std::uint8_t u8();
  std::uint32_t u32();
  float f32();
  std::string string();
  void bytes(std::size_t n, std::uint8_t* dst);
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const;
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

// Dataset file:
//   "PAMDS1" | sample_rate u32 | clip_count u32 | frame_count u32 | samples_per_clip u32
//   per clip: samples f32 x samples_per_clip | 64-byte frame-label bitmap | clip label u8
// The bitmap stores frame i in bit (i % 8) of byte (i / 8), zero-padded.
inline constexpr std::size_t kLabelBitmapBytes = 64;

std::vector<std::uint8_t> serialize_clips(const std::vector<synth::LabeledClip>& clips,
                                          int sample_rate, const FrameGeometry& geometry);

struct ClipFile {
  int sample_rate = 0;
  int frames = 0;
  int samples_per_clip = 0;
  std::vector<synth::LabeledClip> clips;
};
ClipFile parse_clips(std::span<const std::uint8_t> bytes);

/// clip_id,clip_label,frame_labels
std::string labels_csv(const std::vector<synth::LabeledClip>& clips);

// Spectrogram file: "SPEC" | t u32 | f u32 | reserved u32 | f32 row-major data.
std::vector<std::uint8_t> serialize_spectrogram(const Spectrogram& s);
Spectrogram parse_spectrogram(std::span<const std::uint8_t> bytes);

/// f32 conversion that never shrinks magnitude, so a value written from a
/// decoded block re-quantizes to the same truncation cell (for cells wider
/// than the f32 rounding error).
float to_f32_outward(double x);

}  // namespace pam::io
