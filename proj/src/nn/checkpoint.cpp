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

#include "pam/nn/checkpoint.hpp"

#include <cstring>

#include "pam/io.hpp"

namespace pam::nn {
namespace {

constexpr char kMagic[4] = {'P', 'A', 'M', 'M'};
constexpr std::uint32_t kMaxRank = 8;

}  // namespace

std::vector<std::uint8_t> serialize_model(const ModelParams<float>& model) {
  model.validate();
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  io::put_u32(out, kCheckpointVersion);
  io::put_string(out, model.arch);
  io::put_string(out, model.pipeline_fingerprint);
  io::put_u32(out, static_cast<std::uint32_t>(model.specs.size()));
  for (const auto& s : model.specs) {
    io::put_string(out, s.name);
    io::put_u32(out, static_cast<std::uint32_t>(s.shape.size()));
    for (int d : s.shape) io::put_u32(out, static_cast<std::uint32_t>(d));
  }
  for (const auto& v : model.values) {
    for (Eigen::Index i = 0; i < v->value.size(); ++i) io::put_f32(out, v->value[i]);
  }
  return out;
}

ModelParams<float> parse_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw FormatError("checkpoint: bad magic");
  }
  io::ByteReader r(bytes.subspan(sizeof kMagic));
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  ModelParams<float> m;
  m.arch = r.string();
  if (m.arch != "detector" && m.arch != "segmenter" && m.arch != "segmenter_nofreq") {
    throw FormatError("checkpoint: unknown architecture '" + m.arch + "'");
  }
  m.pipeline_fingerprint = r.string();
  const std::uint32_t layers = r.u32();
  if (layers > r.remaining()) throw FormatError("checkpoint: layer count exceeds data");
  for (std::uint32_t l = 0; l < layers; ++l) {
    ParamSpec s;
    s.name = r.string();
    const std::uint32_t rank = r.u32();
    if (rank == 0 || rank > kMaxRank) throw FormatError("checkpoint: bad rank for '" + s.name + "'");
    for (std::uint32_t k = 0; k < rank; ++k) {
      const std::uint32_t d = r.u32();
      if (d == 0 || d > (1u << 24)) throw FormatError("checkpoint: bad dimension for '" + s.name + "'");
      s.shape.push_back(static_cast<int>(d));
    }
    s.bias = s.shape.size() == 1;
    m.specs.push_back(std::move(s));
  }
  for (const auto& s : m.specs) {
    const auto n = numel(s.shape);
    if (static_cast<std::uint64_t>(n) * 4 > r.remaining()) throw FormatError("checkpoint: truncated values");
    Vec<float> v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = r.f32();
    m.values.push_back(make_var<float>(s.shape, std::move(v), true));
  }
  if (r.remaining() != 0) throw FormatError("checkpoint: trailing bytes");
  return m;
}

void save_model(const ModelParams<float>& model, const std::filesystem::path& path) {
  io::write_file(path, serialize_model(model));
}

ModelParams<float> load_model(const std::filesystem::path& path) {
  return parse_model(io::read_file(path));
}

}  // namespace pam::nn
