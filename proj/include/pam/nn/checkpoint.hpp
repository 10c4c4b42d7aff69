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
#include <vector>

#include "pam/nn/model.hpp"

namespace pam::nn {

// Checkpoint layout, little-endian:
//
//   "PAMM" | version u32 | arch string | fingerprint string | layer count u32
//   | per layer: name string, rank u32, dims u32 x rank | f32 values per layer
//
// Strings are a u32 byte length followed by the bytes.

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> serialize_model(const ModelParams<float>& model);
/// Throws FormatError on malformed input or on an unknown architecture.
ModelParams<float> parse_model(std::span<const std::uint8_t> bytes);

void save_model(const ModelParams<float>& model, const std::filesystem::path& path);
ModelParams<float> load_model(const std::filesystem::path& path);

}  // namespace pam::nn
