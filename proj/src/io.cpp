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

#include "pam/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

namespace pam::io {
namespace {

constexpr char kDatasetMagic[6] = {'P', 'A', 'M', 'D', 'S', '1'};
constexpr char kSpecMagic[4] = {'S', 'P', 'E', 'C'};

}  // namespace

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, float v) {
  std::uint32_t raw;
  std::memcpy(&raw, &v, sizeof raw);
  put_u32(out, raw);
}

void put_string(std::vector<std::uint8_t>& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

void ByteReader::need(std::size_t n) const {
  if (bytes_.size() - pos_ < n) throw FormatError("unexpected end of data");
}

std::uint8_t ByteReader::u8() {
  need(1);
  return bytes_[pos_++];
}

std::uint32_t ByteReader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
  pos_ += 4;
  return v;
}

float ByteReader::f32() {
  const std::uint32_t raw = u32();
  float v;
  std::memcpy(&v, &raw, sizeof v);
  return v;
}

std::string ByteReader::string() {
  const std::uint32_t n = u32();
  need(n);
  std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
  pos_ += n;
  return s;
}

void ByteReader::bytes(std::size_t n, std::uint8_t* dst) {
  need(n);
  std::memcpy(dst, bytes_.data() + pos_, n);
  pos_ += n;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}

std::vector<std::uint8_t> serialize_clips(const std::vector<synth::LabeledClip>& clips,
                                          int sample_rate, const FrameGeometry& geometry) {
  if (geometry.frames > static_cast<int>(kLabelBitmapBytes * 8)) {
    throw InvalidArgument("dataset: too many frames for the label bitmap");
  }
  const auto n_samples = static_cast<std::size_t>(geometry.samples());
  std::vector<std::uint8_t> out(std::begin(kDatasetMagic), std::end(kDatasetMagic));
  out.reserve(out.size() + 16 + clips.size() * (n_samples * 4 + kLabelBitmapBytes + 1));
  put_u32(out, static_cast<std::uint32_t>(sample_rate));
  put_u32(out, static_cast<std::uint32_t>(clips.size()));
  put_u32(out, static_cast<std::uint32_t>(geometry.frames));
  put_u32(out, static_cast<std::uint32_t>(n_samples));
  for (const auto& clip : clips) {
    if (static_cast<std::size_t>(clip.waveform.size()) != n_samples ||
        clip.frame_labels.size() != static_cast<std::size_t>(geometry.frames)) {
      throw InvalidArgument("dataset: clip shape does not match the frame geometry");
    }
    for (float v : clip.waveform.samples) put_f32(out, v);
    std::uint8_t bitmap[kLabelBitmapBytes] = {};
    for (std::size_t i = 0; i < clip.frame_labels.size(); ++i) {
      if (clip.frame_labels[i]) bitmap[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
    }
    out.insert(out.end(), std::begin(bitmap), std::end(bitmap));
    out.push_back(clip.clip_label ? 1 : 0);
  }
  return out;
}

ClipFile parse_clips(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof kDatasetMagic ||
      std::memcmp(bytes.data(), kDatasetMagic, sizeof kDatasetMagic) != 0) {
    throw FormatError("dataset: bad magic");
  }
  ByteReader r(bytes.subspan(sizeof kDatasetMagic));
  ClipFile file;
  file.sample_rate = static_cast<int>(r.u32());
  const std::uint32_t count = r.u32();
  file.frames = static_cast<int>(r.u32());
  file.samples_per_clip = static_cast<int>(r.u32());
  if (file.frames > static_cast<int>(kLabelBitmapBytes * 8)) {
    throw FormatError("dataset: frame count exceeds label bitmap");
  }
  const std::size_t record = static_cast<std::size_t>(file.samples_per_clip) * 4 + kLabelBitmapBytes + 1;
  if (r.remaining() != record * count) throw FormatError("dataset: size does not match header");
  file.clips.reserve(count);
  for (std::uint32_t c = 0; c < count; ++c) {
    synth::LabeledClip clip;
    clip.waveform.sample_rate = file.sample_rate;
    clip.waveform.samples.resize(file.samples_per_clip);
    for (int i = 0; i < file.samples_per_clip; ++i) clip.waveform.samples[i] = r.f32();
    std::uint8_t bitmap[kLabelBitmapBytes];
    r.bytes(kLabelBitmapBytes, bitmap);
    clip.frame_labels.resize(static_cast<std::size_t>(file.frames));
    for (int i = 0; i < file.frames; ++i) clip.frame_labels[static_cast<std::size_t>(i)] = (bitmap[i / 8] >> (i % 8)) & 1u;
    const std::uint8_t label = r.u8();
    if (label > 1) throw FormatError("dataset: clip label must be 0 or 1");
    clip.clip_label = label == 1;
    const bool any = std::find(clip.frame_labels.begin(), clip.frame_labels.end(), true) != clip.frame_labels.end();
    if (clip.clip_label != any) throw FormatError("dataset: clip label disagrees with frame labels");
    file.clips.push_back(std::move(clip));
  }
  return file;
}

std::string labels_csv(const std::vector<synth::LabeledClip>& clips) {
  std::ostringstream os;
  os << "clip_id,clip_label,frame_labels\n";
  for (std::size_t i = 0; i < clips.size(); ++i) {
    os << i << ',' << (clips[i].clip_label ? 1 : 0) << ',';
    for (bool b : clips[i].frame_labels) os << (b ? '1' : '0');
    os << '\n';
  }
  return os.str();
}

std::vector<std::uint8_t> serialize_spectrogram(const Spectrogram& s) {
  std::vector<std::uint8_t> out(std::begin(kSpecMagic), std::end(kSpecMagic));
  put_u32(out, static_cast<std::uint32_t>(s.frames()));
  put_u32(out, static_cast<std::uint32_t>(s.bands()));
  put_u32(out, 0);
  for (Eigen::Index t = 0; t < s.frames(); ++t) {
    for (Eigen::Index f = 0; f < s.bands(); ++f) put_f32(out, to_f32_outward(s.data(t, f)));
  }
  return out;
}

Spectrogram parse_spectrogram(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kSpecMagic, 4) != 0) {
    throw FormatError("spectrogram: bad magic");
  }
  ByteReader r(bytes.subspan(4));
  const std::uint32_t t = r.u32();
  const std::uint32_t f = r.u32();
  r.u32();
  if (r.remaining() != static_cast<std::size_t>(t) * f * 4) {
    throw FormatError("spectrogram: size does not match header");
  }
  Spectrogram s;
  s.data.resize(t, f);
  for (std::uint32_t i = 0; i < t; ++i) {
    for (std::uint32_t j = 0; j < f; ++j) s.data(i, j) = r.f32();
  }
  return s;
}

float to_f32_outward(double x) {
  float f = static_cast<float>(x);
  if (std::abs(static_cast<double>(f)) < std::abs(x)) {
    f = std::nextafter(f, x > 0 ? std::numeric_limits<float>::infinity()
                                : -std::numeric_limits<float>::infinity());
  }
  return f;
}

}  // namespace pam::io
