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

#include "pam/nn/model.hpp"

namespace pam::nn {

std::vector<ParamSpec> detector_specs(const DetectorConfig& cfg) {
  std::vector<ParamSpec> specs;
  int channels = 1;
  for (int b = 0; b < cfg.blocks; ++b) {
    for (int l = 0; l < cfg.layers_per_block; ++l) {
      const std::string base = "block" + std::to_string(b) + ".conv" + std::to_string(l);
      const int fan_in = channels * cfg.kernel * cfg.kernel;
      specs.push_back({base + ".weight", {cfg.growth, channels, cfg.kernel, cfg.kernel}, fan_in, false});
      specs.push_back({base + ".bias", {cfg.growth}, fan_in, true});
      channels += cfg.growth;
    }
  }
  specs.push_back({"head.weight", {2, channels}, channels, false});
  specs.push_back({"head.bias", {2}, channels, true});
  return specs;
}

int detector_layer_count(const std::vector<ParamSpec>& specs, int block) {
  int n = 0;
  for (;;) {
    const std::string name =
        "block" + std::to_string(block) + ".conv" + std::to_string(n) + ".weight";
    if (std::none_of(specs.begin(), specs.end(), [&](const ParamSpec& s) { return s.name == name; })) {
      return n;
    }
    ++n;
  }
}

std::vector<ParamSpec> segmenter_specs(int n_bands, const SegmenterConfig& cfg) {
  std::vector<ParamSpec> specs;
  int channels = n_bands;
  if (cfg.frequency_conv) {
    specs.push_back({"freq.weight", {cfg.freq_filters, 1, 1, cfg.freq_kernel}, cfg.freq_kernel, false});
    specs.push_back({"freq.bias", {cfg.freq_filters}, cfg.freq_kernel, true});
    const int proj_fan_in = cfg.freq_filters * n_bands;
    specs.push_back({"freq_proj.weight", {cfg.freq_filters, cfg.freq_filters, 1, n_bands}, proj_fan_in, false});
    specs.push_back({"freq_proj.bias", {cfg.freq_filters}, proj_fan_in, true});
    channels = cfg.freq_filters;
  }
  for (int l = 0; l < 2; ++l) {
    const std::string base = "temporal" + std::to_string(l);
    const int fan_in = channels * cfg.temporal_kernel;
    specs.push_back({base + ".weight", {cfg.hidden, channels, cfg.temporal_kernel, 1}, fan_in, false});
    specs.push_back({base + ".bias", {cfg.hidden}, fan_in, true});
    channels = cfg.hidden;
  }
  specs.push_back({"head.weight", {2, channels, 1, 1}, channels, false});
  specs.push_back({"head.bias", {2}, channels, true});
  return specs;
}

}  // namespace pam::nn
