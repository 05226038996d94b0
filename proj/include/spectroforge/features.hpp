// spectroforge/features.hpp

// Copyright 2026 The SpectroForge Authors
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

// Log-mel filterbank features, SpecAugment-style masking and the feature
// archive format.
//
// Archive layout (little-endian):
//   "SFG1" | u32 n_frames | u32 n_filters | n_frames * n_filters float32
// values row-major by frame. Metadata lives in a UTF-8 JSON sidecar at the
// archive path with ".json" appended.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spectroforge/error.hpp"
#include "spectroforge/rng.hpp"

namespace spectroforge {

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

struct MelFilterbank {
  int n_filters = 0;
  std::size_t n_bins = 0;
  double mel_low_hz = 0.0;
  double mel_high_hz = 0.0;
  std::vector<double> center_hz;
  std::vector<double> weights;  // n_filters x n_bins, row-major
  // Non-zero support of each row as [first, last).
  std::vector<std::pair<std::size_t, std::size_t>> support;

  double weight(int filter, std::size_t bin) const {
    return weights[static_cast<std::size_t>(filter) * n_bins + bin];
  }
  std::span<const double> row(int filter) const {
    return {weights.data() + static_cast<std::size_t>(filter) * n_bins, n_bins};
  }
};

/// Triangular filters with centers uniformly spaced on the mel scale between
/// 0 Hz and Nyquist. Triangles are linear in mel, so adjacent filters sum to
/// one between their centers.
inline MelFilterbank build_mel_filterbank(int n_filters, std::size_t n_bins, double sample_rate) {
  if (n_filters < 1) throw InvalidArgument("need at least one mel filter");
  if (n_bins < static_cast<std::size_t>(n_filters) + 2) {
    throw InvalidArgument("need at least n_filters + 2 spectral bins");
  }
  if (!(sample_rate > 0.0)) throw InvalidArgument("sample rate must be positive");

  MelFilterbank fb;
  fb.n_filters = n_filters;
  fb.n_bins = n_bins;
  fb.mel_low_hz = 0.0;
  fb.mel_high_hz = sample_rate / 2.0;
  fb.weights.assign(static_cast<std::size_t>(n_filters) * n_bins, 0.0);
  fb.support.assign(static_cast<std::size_t>(n_filters), {0, 0});

  const double mel_lo = hz_to_mel(fb.mel_low_hz);
  const double mel_hi = hz_to_mel(fb.mel_high_hz);
  const double step = (mel_hi - mel_lo) / (n_filters + 1);
  const double bin_hz = fb.mel_high_hz / static_cast<double>(n_bins - 1);

  std::vector<double> bin_mel(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k) bin_mel[k] = hz_to_mel(static_cast<double>(k) * bin_hz);

  for (int i = 0; i < n_filters; ++i) {
    const double left = mel_lo + step * i;
    const double center = mel_lo + step * (i + 1);
    const double right = mel_lo + step * (i + 2);
    fb.center_hz.push_back(mel_to_hz(center));
    std::size_t first = n_bins, last = 0;
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double m = bin_mel[k];
      double w = 0.0;
      if (m > left && m <= center) {
        w = (m - left) / (center - left);
      } else if (m > center && m < right) {
        w = (right - m) / (right - center);
      }
      if (w > 0.0) {
        fb.weights[static_cast<std::size_t>(i) * n_bins + k] = w;
        first = std::min(first, k);
        last = k + 1;
      }
    }
    fb.support[static_cast<std::size_t>(i)] = first < last ? std::pair{first, last} : std::pair{std::size_t{0}, std::size_t{0}};
  }
  return fb;
}

inline constexpr double kLogEnergyFloor = 1e-10;

/// out[i] = ln(max(sum_k w[i][k] * spectrum[k]^2, 1e-10)).
inline std::vector<double> apply_filterbank(std::span<const double> spectrum, const MelFilterbank& fb) {
  if (spectrum.size() != fb.n_bins) throw InvalidArgument("spectrum/filterbank bin count mismatch");
  std::vector<double> out(static_cast<std::size_t>(fb.n_filters));
  for (int i = 0; i < fb.n_filters; ++i) {
    const auto [first, last] = fb.support[static_cast<std::size_t>(i)];
    double acc = 0.0;
    for (std::size_t k = first; k < last; ++k) acc += fb.weight(i, k) * spectrum[k] * spectrum[k];
    out[static_cast<std::size_t>(i)] = std::log(std::max(acc, kLogEnergyFloor));
  }
  return out;
}

struct FeatureMeta {
  std::string source_id;
  std::string preset_name;
  std::uint64_t rng_seed = 0;
  std::vector<double> alphas;
  std::vector<double> betas;
  int sample_rate = 0;
  double frame_ms = 0.0;
  double hop_ms = 0.0;

  bool operator==(const FeatureMeta&) const = default;
};

struct FeatureMatrix {
  std::size_t n_frames = 0;
  std::size_t n_filters = 0;
  std::vector<float> values;  // row-major by frame
  FeatureMeta meta;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t frames, std::size_t filters)
      : n_frames(frames), n_filters(filters), values(frames * filters, 0.0f) {}

  float& at(std::size_t frame, std::size_t filter) { return values[frame * n_filters + filter]; }
  float at(std::size_t frame, std::size_t filter) const { return values[frame * n_filters + filter]; }
  std::span<float> frame(std::size_t i) { return {values.data() + i * n_filters, n_filters}; }
  std::span<const float> frame(std::size_t i) const { return {values.data() + i * n_filters, n_filters}; }
};

struct MaskSpec {
  int n_freq_masks = 0;
  int max_freq_width = 0;
  int n_time_masks = 0;
  int max_time_width = 0;

  static constexpr MaskSpec none() { return {}; }
  bool operator==(const MaskSpec&) const = default;
};

/// Frequency and time masking. Each mask draws its width uniformly from
/// [0, max_width], then its start uniformly among the positions that fit;
/// frequency masks are drawn before time masks. Masked cells take the mean
/// of the unmasked input.
inline FeatureMatrix spec_augment(const FeatureMatrix& features, const MaskSpec& mask, std::uint64_t seed) {
  if (mask.n_freq_masks < 0 || mask.n_time_masks < 0 || mask.max_freq_width < 0 || mask.max_time_width < 0) {
    throw InvalidArgument("mask counts and widths must be non-negative");
  }
  if (static_cast<std::size_t>(mask.max_freq_width) > features.n_filters ||
      static_cast<std::size_t>(mask.max_time_width) > features.n_frames) {
    throw InvalidArgument("mask width exceeds the feature axis");
  }
  FeatureMatrix out = features;
  if (features.values.empty()) return out;

  double sum = 0.0;
  for (const float v : features.values) sum += v;
  const auto mean = static_cast<float>(sum / static_cast<double>(features.values.size()));

  SplitMix64 rng(seed);
  for (int m = 0; m < mask.n_freq_masks; ++m) {
    const std::uint64_t width = rng.uniform_int(0, static_cast<std::uint64_t>(mask.max_freq_width));
    const std::uint64_t start = rng.uniform_int(0, features.n_filters - width);
    for (std::size_t t = 0; t < out.n_frames; ++t) {
      for (std::uint64_t f = start; f < start + width; ++f) out.at(t, f) = mean;
    }
  }
  for (int m = 0; m < mask.n_time_masks; ++m) {
    const std::uint64_t width = rng.uniform_int(0, static_cast<std::uint64_t>(mask.max_time_width));
    const std::uint64_t start = rng.uniform_int(0, features.n_frames - width);
    for (std::uint64_t t = start; t < start + width; ++t) {
      std::fill(out.frame(t).begin(), out.frame(t).end(), mean);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Archive I/O

inline nlohmann::ordered_json to_json(const FeatureMeta& m) {
  nlohmann::ordered_json j;
  j["source_id"] = m.source_id;
  j["preset_name"] = m.preset_name;
  j["rng_seed"] = m.rng_seed;
  j["alphas"] = m.alphas;
  j["betas"] = m.betas;
  j["sample_rate"] = m.sample_rate;
  j["frame_ms"] = m.frame_ms;
  j["hop_ms"] = m.hop_ms;
  return j;
}

inline FeatureMeta meta_from_json(const nlohmann::json& j) {
  FeatureMeta m;
  try {
    m.source_id = j.at("source_id").get<std::string>();
    m.preset_name = j.at("preset_name").get<std::string>();
    m.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    m.alphas = j.at("alphas").get<std::vector<double>>();
    m.betas = j.at("betas").get<std::vector<double>>();
    m.sample_rate = j.at("sample_rate").get<int>();
    m.frame_ms = j.at("frame_ms").get<double>();
    m.hop_ms = j.at("hop_ms").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad feature metadata: ") + e.what());
  }
  return m;
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& archive) {
  return std::filesystem::path(archive.string() + ".json");
}

inline constexpr std::array<char, 4> kArchiveMagic{'S', 'F', 'G', '1'};

namespace detail {

inline void put_u32le(std::vector<unsigned char>& buf, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) buf.push_back(static_cast<unsigned char>(v >> s));
}

inline std::uint32_t get_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

/// Serializes the archive body to bytes.
inline std::vector<unsigned char> encode_features(const FeatureMatrix& fm) {
  if (fm.values.size() != fm.n_frames * fm.n_filters) throw InvalidArgument("feature matrix shape mismatch");
  if (fm.n_frames > UINT32_MAX || fm.n_filters > UINT32_MAX) throw InvalidArgument("feature matrix too large");
  std::vector<unsigned char> buf;
  buf.reserve(12 + 4 * fm.values.size());
  buf.insert(buf.end(), kArchiveMagic.begin(), kArchiveMagic.end());
  detail::put_u32le(buf, static_cast<std::uint32_t>(fm.n_frames));
  detail::put_u32le(buf, static_cast<std::uint32_t>(fm.n_filters));
  for (const float v : fm.values) {
    if (!std::isfinite(v)) throw InvalidArgument("non-finite feature value");
    std::uint32_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    detail::put_u32le(buf, bits);
  }
  return buf;
}

inline FeatureMatrix decode_features(std::span<const unsigned char> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kArchiveMagic.data(), 4) != 0) {
    throw FormatError("corrupt header");
  }
  const std::uint32_t frames = detail::get_u32le(bytes.data() + 4);
  const std::uint32_t filters = detail::get_u32le(bytes.data() + 8);
  const std::uint64_t expected = 12 + 4ULL * frames * filters;
  if (bytes.size() != expected) {
    throw FormatError("dimension mismatch: header promises " + std::to_string(expected) +
                      " bytes, file has " + std::to_string(bytes.size()));
  }
  FeatureMatrix fm(frames, filters);
  for (std::size_t i = 0; i < fm.values.size(); ++i) {
    const std::uint32_t bits = detail::get_u32le(bytes.data() + 12 + 4 * i);
    std::memcpy(&fm.values[i], &bits, sizeof bits);
  }
  return fm;
}

inline void write_features(const FeatureMatrix& fm, const std::filesystem::path& path) {
  const std::vector<unsigned char> buf = encode_features(fm);
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("write failed: " + path.string());
  }
  std::ofstream side(sidecar_path(path), std::ios::trunc);
  if (!side) throw IoError("cannot open " + sidecar_path(path).string() + " for writing");
  side << to_json(fm.meta).dump(2) << '\n';
  if (!side) throw IoError("write failed: " + sidecar_path(path).string());
}

inline FeatureMatrix read_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  FeatureMatrix fm = decode_features(bytes);

  std::ifstream side(sidecar_path(path));
  if (!side) throw IoError("missing metadata sidecar " + sidecar_path(path).string());
  nlohmann::json j;
  try {
    side >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad feature metadata: ") + e.what());
  }
  fm.meta = meta_from_json(j);
  return fm;
}

}  // namespace spectroforge
