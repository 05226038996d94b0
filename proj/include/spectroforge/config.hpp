// spectroforge/config.hpp

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

#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "spectroforge/augment.hpp"
#include "spectroforge/error.hpp"
#include "spectroforge/features.hpp"
#include "spectroforge/signal_io.hpp"
#include "spectroforge/spectrum.hpp"

namespace spectroforge {

enum class FactorGranularity { kPerUtterance, kPerFrame };

struct AugmentConfig {
  std::string preset_name = "lpc-swp-exp3+fep";
  int sample_rate = 16000;
  double frame_ms = 25.0;
  double hop_ms = 10.0;
  int lpc_order = 18;
  std::size_t fft_size = 512;
  int n_mel = 80;
  double pre_emphasis = 0.97;
  WindowKind window = WindowKind::kHamming;
  FactorGranularity factor_granularity = FactorGranularity::kPerUtterance;
  MaskSpec mask{2, 30, 2, 40};
  std::uint64_t global_seed = 0;
  int augment_copies = 1;
  int jobs = 1;

  std::size_t frame_length() const { return ms_to_samples(frame_ms, sample_rate); }
};

inline std::string to_string(WindowKind w) {
  switch (w) {
    case WindowKind::kRectangular: return "rectangular";
    case WindowKind::kHamming: return "hamming";
    case WindowKind::kHann: return "hann";
  }
  return "?";
}

inline WindowKind window_from_string(const std::string& s) {
  if (s == "rectangular" || s == "none") return WindowKind::kRectangular;
  if (s == "hamming") return WindowKind::kHamming;
  if (s == "hann") return WindowKind::kHann;
  throw InvalidArgument("unknown window '" + s + "'");
}

inline std::string to_string(FactorGranularity g) {
  return g == FactorGranularity::kPerFrame ? "per-frame" : "per-utterance";
}

inline FactorGranularity granularity_from_string(const std::string& s) {
  if (s == "per-utterance") return FactorGranularity::kPerUtterance;
  if (s == "per-frame") return FactorGranularity::kPerFrame;
  throw InvalidArgument("unknown factor granularity '" + s + "'");
}

/// Throws InvalidArgument describing the first violated constraint.
inline void validate(const AugmentConfig& c) {
  find_preset(c.preset_name);
  if (c.sample_rate <= 0) throw InvalidArgument("sample_rate must be positive");
  if (!(c.hop_ms > 0.0) || c.frame_ms < c.hop_ms) throw InvalidArgument("need frame_ms >= hop_ms > 0");
  if (c.lpc_order <= 0) throw InvalidArgument("lpc_order must be positive");
  if (c.n_mel <= 0) throw InvalidArgument("n_mel must be positive");
  if (!is_power_of_two(c.fft_size)) throw InvalidArgument("fft_size must be a power of two");
  if (c.fft_size < c.frame_length()) throw InvalidArgument("fft_size is shorter than the frame");
  if (c.fft_size < 2 * static_cast<std::size_t>(c.lpc_order)) {
    throw InvalidArgument("fft_size must be at least twice lpc_order");
  }
  if (c.fft_size / 2 + 1 < static_cast<std::size_t>(c.n_mel) + 2) {
    throw InvalidArgument("too many mel filters for this fft_size");
  }
  if (static_cast<std::size_t>(c.lpc_order) >= c.frame_length()) {
    throw InvalidArgument("lpc_order must be below the frame length");
  }
  if (!(c.pre_emphasis >= 0.0 && c.pre_emphasis < 1.0)) throw InvalidArgument("pre_emphasis must lie in [0, 1)");
  if (c.mask.n_freq_masks < 0 || c.mask.max_freq_width < 0 || c.mask.n_time_masks < 0 || c.mask.max_time_width < 0) {
    throw InvalidArgument("mask fields must be non-negative");
  }
  if (c.augment_copies < 0) throw InvalidArgument("augment_copies must be >= 0");
  if (c.jobs < 1) throw InvalidArgument("jobs must be >= 1");
}

inline nlohmann::ordered_json to_json(const AugmentConfig& c) {
  nlohmann::ordered_json j;
  j["preset_name"] = c.preset_name;
  j["sample_rate"] = c.sample_rate;
  j["frame_ms"] = c.frame_ms;
  j["hop_ms"] = c.hop_ms;
  j["lpc_order"] = c.lpc_order;
  j["fft_size"] = c.fft_size;
  j["n_mel"] = c.n_mel;
  j["pre_emphasis"] = c.pre_emphasis;
  j["window"] = to_string(c.window);
  j["factor_granularity"] = to_string(c.factor_granularity);
  j["mask"] = {{"n_freq_masks", c.mask.n_freq_masks},
               {"max_freq_width", c.mask.max_freq_width},
               {"n_time_masks", c.mask.n_time_masks},
               {"max_time_width", c.mask.max_time_width}};
  j["global_seed"] = c.global_seed;
  j["augment_copies"] = c.augment_copies;
  j["jobs"] = c.jobs;
  return j;
}

/// Overlays the fields present in `j` onto `base`. Unknown keys are rejected.
inline AugmentConfig config_from_json(const nlohmann::json& j, AugmentConfig base = {}) {
  if (!j.is_object()) throw InvalidArgument("config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "preset_name" || key == "preset") base.preset_name = v.get<std::string>();
      else if (key == "sample_rate") base.sample_rate = v.get<int>();
      else if (key == "frame_ms") base.frame_ms = v.get<double>();
      else if (key == "hop_ms") base.hop_ms = v.get<double>();
      else if (key == "lpc_order") base.lpc_order = v.get<int>();
      else if (key == "fft_size") base.fft_size = v.get<std::size_t>();
      else if (key == "n_mel") base.n_mel = v.get<int>();
      else if (key == "pre_emphasis") base.pre_emphasis = v.get<double>();
      else if (key == "window") base.window = window_from_string(v.get<std::string>());
      else if (key == "factor_granularity") base.factor_granularity = granularity_from_string(v.get<std::string>());
      else if (key == "global_seed") base.global_seed = v.get<std::uint64_t>();
      else if (key == "augment_copies") base.augment_copies = v.get<int>();
      else if (key == "jobs") base.jobs = v.get<int>();
      else if (key == "mask") {
        for (const auto& [mk, mv] : v.items()) {
          if (mk == "n_freq_masks") base.mask.n_freq_masks = mv.get<int>();
          else if (mk == "max_freq_width") base.mask.max_freq_width = mv.get<int>();
          else if (mk == "n_time_masks") base.mask.n_time_masks = mv.get<int>();
          else if (mk == "max_time_width") base.mask.max_time_width = mv.get<int>();
          else throw InvalidArgument("unknown mask field '" + mk + "'");
        }
      } else {
        throw InvalidArgument("unknown config field '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("config type error: ") + e.what());
  }
  return base;
}

inline AugmentConfig load_config(const std::filesystem::path& path, AugmentConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j, std::move(base));
}

/// Parallelism from SPECTROFORGE_JOBS, or 1 when unset or unparsable.
inline int jobs_from_environment() {
  const char* v = std::getenv("SPECTROFORGE_JOBS");
  if (v == nullptr) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  return (end != v && *end == '\0' && n >= 1 && n <= 1024) ? static_cast<int>(n) : 1;
}

}  // namespace spectroforge
