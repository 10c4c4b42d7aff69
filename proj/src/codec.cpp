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

#include "pam/codec.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

namespace pam::codec {
namespace {

constexpr char kMagic[4] = {'P', 'A', 'M', 'C'};
constexpr std::size_t kFixedHeader = 4 + 1 + 2 + 2 + 4;

void check_budget(int n_bands, int budget, int floor) {
  if (n_bands <= 0) throw InvalidArgument("allocation: need at least one band");
  if (floor < 1 || floor > kMaxBits) throw InvalidArgument("allocation: floor must be in [1, 32]");
  if (budget < floor * n_bands) {
    throw InvalidArgument("allocation: budget " + std::to_string(budget) + " below floor " +
                          std::to_string(floor) + " x " + std::to_string(n_bands) + " bands");
  }
  if (budget > kMaxBits * n_bands) {
    throw InvalidArgument("allocation: budget " + std::to_string(budget) +
                          " exceeds 32 bits per band");
  }
}

class BitWriter {
 public:
  void put(std::uint32_t value, int width) {
    for (int b = width - 1; b >= 0; --b) {
      if (used_ == 0) bytes_.push_back(0);
      if ((value >> b) & 1u) bytes_.back() |= static_cast<std::uint8_t>(0x80u >> used_);
      used_ = (used_ + 1) % 8;
    }
  }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
  int used_ = 0;
};

class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  std::uint32_t get(int width) {
    std::uint32_t v = 0;
    for (int b = 0; b < width; ++b) {
      const std::uint8_t byte = bytes_[pos_ / 8];
      v = (v << 1) | ((byte >> (7 - pos_ % 8)) & 1u);
      ++pos_;
    }
    return v;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace

std::string to_string(AllocationMethod m) {
  switch (m) {
    case AllocationMethod::kLearned: return "learned";
    case AllocationMethod::kHuman: return "human";
    case AllocationMethod::kUniform: return "uniform";
  }
  return "unknown";
}

AllocationMethod allocation_method_from_string(const std::string& name) {
  if (name == "learned") return AllocationMethod::kLearned;
  if (name == "human") return AllocationMethod::kHuman;
  if (name == "uniform") return AllocationMethod::kUniform;
  throw InvalidArgument("unknown allocation method '" + name + "'");
}

void AllocationPlan::validate() const {
  if (bits.empty()) throw InvalidArgument("plan: no bands");
  int sum = 0;
  for (int b : bits) {
    if (b < floor || b > kMaxBits) {
      throw InvalidArgument("plan: band width " + std::to_string(b) + " outside [" +
                            std::to_string(floor) + ", 32]");
    }
    sum += b;
  }
  if (sum != budget) {
    throw InvalidArgument("plan: widths sum to " + std::to_string(sum) + ", budget is " +
                          std::to_string(budget));
  }
  if (lambda && lambda->size() != static_cast<Eigen::Index>(bits.size())) {
    throw InvalidArgument("plan: lambda length does not match band count");
  }
}

IntSpectrogram float_to_fixed(const Spectrogram& s, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw InvalidArgument("float_to_fixed: scale must be > 0");
  IntSpectrogram out;
  out.scale = static_cast<float>(scale);
  const double sc = out.scale;
  out.data = s.data.unaryExpr([sc](double x) {
    const double r = std::clamp(x / sc, -1.0, 1.0) * static_cast<double>(kFullScale);
    return static_cast<std::int32_t>(std::llround(r));
  });
  return out;
}

RowMatrixXd fixed_to_float(const IntSpectrogram& x) {
  const double sc = x.scale;
  return x.data.unaryExpr([sc](std::int32_t q) {
    return static_cast<double>(q) / static_cast<double>(kFullScale) * sc;
  });
}

std::int32_t truncate(std::int32_t v, int bits) {
  if (bits < 1 || bits > kMaxBits) throw InvalidArgument("truncate: bits must be in [1, 32]");
  if (bits == kMaxBits) return v;
  if (bits == 1) return 0;
  const std::int64_t step = std::int64_t{1} << (kMaxBits - bits);
  // Integer division truncates toward zero.
  return static_cast<std::int32_t>(static_cast<std::int64_t>(v) / step * step);
}

std::size_t EncodedBlock::payload_bits() const {
  std::size_t per_frame = 0;
  for (auto b : bits) per_frame += b;
  return per_frame * frames;
}

std::vector<std::uint8_t> EncodedBlock::serialize() const {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  out.push_back(version);
  put_u16(out, frames);
  put_u16(out, bands);
  std::uint32_t raw;
  std::memcpy(&raw, &scale, sizeof raw);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(raw >> (8 * i)));
  out.insert(out.end(), bits.begin(), bits.end());
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

std::string to_string(DecodeErrc code) {
  switch (code) {
    case DecodeErrc::kTruncatedHeader: return "truncated header";
    case DecodeErrc::kBadMagic: return "bad magic";
    case DecodeErrc::kVersionMismatch: return "version mismatch";
    case DecodeErrc::kBadBitWidth: return "bad bit width";
    case DecodeErrc::kTruncatedPayload: return "truncated payload";
    case DecodeErrc::kTrailingBytes: return "trailing bytes";
  }
  return "unknown";
}

DecodeError::DecodeError(DecodeErrc code, const std::string& detail)
    : FormatError("decode: " + to_string(code) + (detail.empty() ? "" : ": " + detail)),
      code_(code) {}

EncodedBlock encode(const IntSpectrogram& x, const AllocationPlan& plan) {
  const auto t = x.data.rows();
  const auto f = x.data.cols();
  if (static_cast<Eigen::Index>(plan.bits.size()) != f) {
    throw InvalidArgument("encode: plan has " + std::to_string(plan.bits.size()) +
                          " bands, spectrogram has " + std::to_string(f));
  }
  if (t > 0xFFFF || f > 0xFFFF) throw InvalidArgument("encode: shape exceeds u16");
  for (int b : plan.bits) {
    if (b < 1 || b > kMaxBits) throw InvalidArgument("encode: bit width outside [1, 32]");
  }
  EncodedBlock e;
  e.frames = static_cast<std::uint16_t>(t);
  e.bands = static_cast<std::uint16_t>(f);
  e.scale = x.scale;
  e.bits.assign(plan.bits.begin(), plan.bits.end());

  BitWriter w;
  for (Eigen::Index band = 0; band < f; ++band) {
    const int b = plan.bits[static_cast<std::size_t>(band)];
    for (Eigen::Index frame = 0; frame < t; ++frame) {
      const auto q = static_cast<std::uint32_t>(truncate(x.data(frame, band), b));
      w.put(q >> (kMaxBits - b), b);
    }
  }
  e.payload = w.take();
  return e;
}

IntSpectrogram decode_fixed(const EncodedBlock& e) {
  if (e.version != kWireVersion) {
    throw DecodeError(DecodeErrc::kVersionMismatch, "got " + std::to_string(e.version));
  }
  if (e.bits.size() != e.bands) throw DecodeError(DecodeErrc::kTruncatedHeader, "bits vector");
  for (auto b : e.bits) {
    if (b < 1 || b > kMaxBits) {
      throw DecodeError(DecodeErrc::kBadBitWidth, std::to_string(static_cast<int>(b)));
    }
  }
  if (e.payload.size() * 8 < e.payload_bits()) {
    throw DecodeError(DecodeErrc::kTruncatedPayload,
                      std::to_string(e.payload.size()) + " bytes for " +
                          std::to_string(e.payload_bits()) + " bits");
  }
  IntSpectrogram out;
  out.scale = e.scale;
  out.data.resize(e.frames, e.bands);
  BitReader r(e.payload);
  for (int band = 0; band < e.bands; ++band) {
    const int b = e.bits[static_cast<std::size_t>(band)];
    for (int frame = 0; frame < e.frames; ++frame) {
      const std::uint32_t field = r.get(b);
      // Place the field in the top bits; the arithmetic value follows from
      // two's complement.
      const std::uint32_t word = b == kMaxBits ? field : field << (kMaxBits - b);
      out.data(frame, band) = static_cast<std::int32_t>(word);
    }
  }
  return out;
}

Spectrogram decode(const EncodedBlock& e) {
  Spectrogram s;
  s.data = fixed_to_float(decode_fixed(e));
  return s;
}

EncodedBlock parse(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFixedHeader) {
    throw DecodeError(DecodeErrc::kTruncatedHeader, std::to_string(bytes.size()) + " bytes");
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw DecodeError(DecodeErrc::kBadMagic, "");
  EncodedBlock e;
  e.version = bytes[4];
  if (e.version != kWireVersion) {
    throw DecodeError(DecodeErrc::kVersionMismatch, "got " + std::to_string(e.version));
  }
  e.frames = get_u16(bytes.data() + 5);
  e.bands = get_u16(bytes.data() + 7);
  std::uint32_t raw = 0;
  for (int i = 0; i < 4; ++i) raw |= static_cast<std::uint32_t>(bytes[9 + i]) << (8 * i);
  std::memcpy(&e.scale, &raw, sizeof raw);
  if (bytes.size() < kFixedHeader + e.bands) {
    throw DecodeError(DecodeErrc::kTruncatedHeader, "bits vector");
  }
  e.bits.assign(bytes.begin() + kFixedHeader, bytes.begin() + kFixedHeader + e.bands);
  for (auto b : e.bits) {
    if (b < 1 || b > kMaxBits) {
      throw DecodeError(DecodeErrc::kBadBitWidth, std::to_string(static_cast<int>(b)));
    }
  }
  const std::size_t expected = (e.payload_bits() + 7) / 8;
  const std::size_t available = bytes.size() - kFixedHeader - e.bands;
  if (available < expected) {
    throw DecodeError(DecodeErrc::kTruncatedPayload,
                      std::to_string(available) + " of " + std::to_string(expected) + " bytes");
  }
  if (available > expected) {
    throw DecodeError(DecodeErrc::kTrailingBytes, std::to_string(available - expected));
  }
  e.payload.assign(bytes.begin() + kFixedHeader + e.bands, bytes.end());
  return e;
}

Spectrogram round_trip(const Spectrogram& s, const AllocationPlan& plan, double scale) {
  Spectrogram out = decode(encode(float_to_fixed(s, scale), plan));
  out.frame_times_s = s.frame_times_s;
  out.band_freqs_hz = s.band_freqs_hz;
  return out;
}

std::vector<int> apportion(const std::vector<double>& weights, int total,
                           const std::vector<int>& caps) {
  const std::size_t n = weights.size();
  if (caps.size() != n) throw InvalidArgument("apportion: caps/weights length mismatch");
  if (total < 0) throw InvalidArgument("apportion: negative total");
  if (std::accumulate(caps.begin(), caps.end(), std::int64_t{0}) < total) {
    throw InvalidArgument("apportion: total exceeds the sum of caps");
  }
  std::vector<int> result(n, 0);
  std::vector<bool> capped(n, false);
  for (std::size_t i = 0; i < n; ++i) capped[i] = caps[i] <= 0;

  for (;;) {
    int remaining = total;
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < n; ++i) {
      if (capped[i]) {
        remaining -= std::max(caps[i], 0);
      } else {
        active.push_back(i);
      }
    }
    if (active.empty()) break;

    double wsum = 0.0;
    for (auto i : active) wsum += std::max(weights[i], 0.0);
    const bool flat = !(wsum > 0.0) || !std::isfinite(wsum);

    std::vector<double> rem(n, 0.0);
    int given = 0;
    for (auto i : active) {
      const double w = flat ? 1.0 : std::max(weights[i], 0.0);
      const double share = remaining * w / (flat ? static_cast<double>(active.size()) : wsum);
      const double base = std::floor(share);
      result[i] = static_cast<int>(base);
      rem[i] = share - base;
      given += result[i];
    }
    std::vector<std::size_t> order = active;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
    for (int k = 0; k < remaining - given; ++k) {
      ++result[order[static_cast<std::size_t>(k) % order.size()]];
    }

    bool overflow = false;
    for (auto i : active) {
      if (result[i] > caps[i]) {
        capped[i] = true;
        overflow = true;
      }
    }
    if (!overflow) break;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (capped[i]) result[i] = std::max(caps[i], 0);
  }
  return result;
}

double absolute_threshold_db(double freq_hz) {
  const double k = freq_hz / 1000.0;
  return 3.64 * std::pow(k, -0.8) - 6.5 * std::exp(-0.6 * (k - 3.3) * (k - 3.3)) +
         1e-3 * std::pow(k, 4.0);
}

AllocationPlan human_allocation(const std::vector<double>& band_freqs_hz, int budget, int floor) {
  const int f = static_cast<int>(band_freqs_hz.size());
  check_budget(f, budget, floor);
  std::vector<double> sensitivity(band_freqs_hz.size());
  for (std::size_t i = 0; i < band_freqs_hz.size(); ++i) {
    if (!(band_freqs_hz[i] > 0.0)) throw InvalidArgument("human allocation: band at 0 Hz");
    sensitivity[i] = std::pow(10.0, -absolute_threshold_db(band_freqs_hz[i]) / 20.0);
  }
  const std::vector<int> extra =
      apportion(sensitivity, budget - floor * f, std::vector<int>(band_freqs_hz.size(), kMaxBits - floor));
  AllocationPlan plan;
  plan.method = AllocationMethod::kHuman;
  plan.budget = budget;
  plan.floor = floor;
  for (int e : extra) plan.bits.push_back(floor + e);
  plan.validate();
  return plan;
}

AllocationPlan uniform_allocation(int n_bands, int budget, int floor) {
  check_budget(n_bands, budget, floor);
  AllocationPlan plan;
  plan.method = AllocationMethod::kUniform;
  plan.budget = budget;
  plan.floor = floor;
  plan.bits.assign(static_cast<std::size_t>(n_bands), budget / n_bands);
  for (int i = 0; i < budget % n_bands; ++i) ++plan.bits[static_cast<std::size_t>(i)];
  plan.validate();
  return plan;
}

double compression_ratio(const AllocationPlan& plan, const dsp::StftConfig& cfg) {
  plan.validate();
  const double raw_bps = static_cast<double>(cfg.sample_rate) * 32.0;
  const double coded_bps = static_cast<double>(plan.budget) * cfg.frame_rate();
  return raw_bps / coded_bps;
}

double percentile_scale(std::span<const Spectrogram> spectrograms, double percentile) {
  std::vector<double> mags;
  for (const auto& s : spectrograms) {
    for (Eigen::Index i = 0; i < s.data.size(); ++i) mags.push_back(std::abs(s.data.data()[i]));
  }
  if (mags.empty()) throw InvalidArgument("percentile_scale: no data");
  const double pos = percentile / 100.0 * static_cast<double>(mags.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(lo), mags.end());
  const double a = mags[lo];
  double value = a;
  if (lo + 1 < mags.size()) {
    const double b = *std::min_element(mags.begin() + static_cast<std::ptrdiff_t>(lo) + 1, mags.end());
    value = a + (pos - static_cast<double>(lo)) * (b - a);
  }
  if (!(value > 0.0)) throw InvalidArgument("percentile_scale: scale is zero");
  return value;
}

}  // namespace pam::codec
