// spectroforge/report.hpp

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

// Analysis reports: single-frame inspection and corpus formant statistics.

#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "spectroforge/augment.hpp"
#include "spectroforge/config.hpp"
#include "spectroforge/lpc.hpp"
#include "spectroforge/pipeline.hpp"

namespace spectroforge {

// ---------------------------------------------------------------------------
// CSV (RFC 4180)

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string csv_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline void write_csv_row(std::ostream& os, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) os << ',';
    os << csv_field(fields[i]);
  }
  os << "\r\n";
}

// ---------------------------------------------------------------------------
// Inspect

struct InspectReport {
  std::string source_id;
  std::size_t frame_index = 0;
  std::size_t frame_count = 0;
  double bin_hz = 0.0;
  bool degenerate = false;
  WarpFactors factors;
  std::vector<double> raw_fft;
  std::vector<double> envelope;
  std::vector<double> envelope_peaks_hz;
  std::vector<Formant> formants;
  std::vector<double> valleys_hz;
  std::vector<double> boundaries_hz;
  std::vector<double> warped_boundaries_hz;
  std::vector<WarpAnchor> anchors;
  std::vector<double> warped_envelope;
  std::vector<double> fep_envelope;
  std::vector<double> modified_spectrum;

  int segment_count() const { return static_cast<int>(boundaries_hz.size()) - 1; }
};

/// Dumps every intermediate of the augmentation chain for one frame. The
/// factor draw matches copy `copy_index` of run_augment for this file.
inline InspectReport run_inspect(const AugmentConfig& config, const AudioClip& clip, std::size_t frame_index,
                                 int copy_index = 0) {
  const FrontEnd fe(config);
  const AudioClip x = fe.prepare(clip);
  const FrameLayout layout = fe.layout(x);
  if (frame_index >= layout.count) {
    throw InvalidArgument("frame " + std::to_string(frame_index) + " out of range (clip has " +
                          std::to_string(layout.count) + " frames)");
  }
  const std::uint64_t seed = utterance_seed(config.global_seed, clip.source_id, static_cast<std::uint64_t>(copy_index));
  WarpFactors factors = draw_factors(fe.preset(), seed);
  if (config.factor_granularity == FactorGranularity::kPerFrame) {
    factors = draw_factors(fe.preset(), derive_seed(seed, frame_index));
  }

  const Frame frame = extract_frame(x, layout, frame_index, fe.window());
  const FrameAugmentation a = augment_frame(frame, fe, factors);

  InspectReport r;
  r.source_id = clip.source_id;
  r.frame_index = frame_index;
  r.frame_count = layout.count;
  r.bin_hz = a.raw.bin_hz;
  r.factors = factors;
  r.raw_fft = a.raw.magnitudes;
  r.modified_spectrum = a.spectrum;

  // VTLP skips LPC in the pipeline; analyze here so the envelope can be plotted.
  std::optional<LpcModel> model = a.model;
  bool degenerate = a.degenerate;
  if (!model && !degenerate) {
    try {
      model = analyze_frame(frame, config.lpc_order);
    } catch (const DegenerateFrame&) {
      degenerate = true;
    }
  }
  r.degenerate = degenerate;
  if (degenerate) return r;

  const SpectralEnvelope env = a.envelope.size() ? a.envelope : envelope(*model, config.fft_size, fe.sample_rate());
  r.envelope = env.magnitudes;
  for (const std::size_t k : find_peaks(env)) r.envelope_peaks_hz.push_back(env.frequency(k));
  try {
    r.formants = formants_from_poles(*model, fe.sample_rate());
  } catch (const RootFindingError&) {
    // formants stay empty
  }
  r.valleys_hz = a.segments.valleys_hz;
  r.boundaries_hz = a.segments.boundaries_hz;
  r.warped_boundaries_hz = warped_boundaries(a.segments, a.warp);
  r.anchors = a.warp.anchors;
  r.warped_envelope = a.warped.magnitudes;
  r.fep_envelope = a.scaled.magnitudes;
  return r;
}

inline nlohmann::ordered_json to_json(const InspectReport& r) {
  nlohmann::ordered_json j;
  j["source_id"] = r.source_id;
  j["frame_index"] = r.frame_index;
  j["frame_count"] = r.frame_count;
  j["bin_hz"] = r.bin_hz;
  j["degenerate"] = r.degenerate;
  j["preset"] = r.factors.preset_name;
  j["seed"] = r.factors.rng_seed;
  j["alphas"] = r.factors.alphas;
  j["betas"] = r.factors.betas;
  j["segment_count"] = r.degenerate ? 0 : r.segment_count();
  j["valleys_hz"] = r.valleys_hz;
  j["boundaries_hz"] = r.boundaries_hz;
  j["warped_boundaries_hz"] = r.warped_boundaries_hz;
  auto anchors = nlohmann::ordered_json::array();
  for (const WarpAnchor& a : r.anchors) anchors.push_back({a.source_hz, a.target_hz});
  j["warp_anchors"] = anchors;
  j["envelope_peaks_hz"] = r.envelope_peaks_hz;
  auto formants = nlohmann::ordered_json::array();
  for (const Formant& f : r.formants) {
    formants.push_back({{"frequency_hz", f.frequency_hz}, {"bandwidth_hz", f.bandwidth_hz}, {"magnitude", f.magnitude}});
  }
  j["formants"] = formants;
  j["raw_fft"] = r.raw_fft;
  j["envelope"] = r.envelope;
  j["warped_envelope"] = r.warped_envelope;
  j["fep_envelope"] = r.fep_envelope;
  j["modified_spectrum"] = r.modified_spectrum;
  return j;
}

/// Per-bin table; columns missing for degenerate frames are left empty.
inline void write_csv(std::ostream& os, const InspectReport& r) {
  write_csv_row(os, {"bin", "frequency_hz", "raw_fft", "envelope", "warped_envelope", "fep_envelope",
                     "modified_spectrum"});
  auto cell = [](const std::vector<double>& v, std::size_t k) { return k < v.size() ? csv_number(v[k]) : std::string{}; };
  for (std::size_t k = 0; k < r.raw_fft.size(); ++k) {
    write_csv_row(os, {std::to_string(k), csv_number(static_cast<double>(k) * r.bin_hz), cell(r.raw_fft, k),
                       cell(r.envelope, k), cell(r.warped_envelope, k), cell(r.fep_envelope, k),
                       cell(r.modified_spectrum, k)});
  }
}

// ---------------------------------------------------------------------------
// Formant statistics

/// A frame counts as voiced when its energy is within this many dB of the
/// loudest frame of the utterance.
inline constexpr double kVoicedEnergyRangeDb = 30.0;
/// Pole candidates outside these limits are not counted as formants.
inline constexpr double kFormantMinHz = 90.0;
inline constexpr double kFormantMaxBandwidthHz = 500.0;

struct RunningStats {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double stddev() const { return n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1)) : 0.0; }
};

struct CorpusFormants {
  std::array<RunningStats, 3> formants{};
  std::size_t files = 0;
  std::size_t files_failed = 0;
  std::size_t voiced_frames = 0;
};

/// First three plausible formants of every voiced frame in one clip.
inline void accumulate_formants(const AudioClip& clip, const FrontEnd& fe, CorpusFormants& acc) {
  const AudioClip x = fe.prepare(clip);
  const FrameLayout layout = fe.layout(x);
  std::vector<Frame> frames;
  std::vector<double> energy;
  double loudest = 0.0;
  for (std::size_t i = 0; i < layout.count; ++i) {
    frames.push_back(extract_frame(x, layout, i, fe.window()));
    double e = 0.0;
    for (const double s : frames.back().samples) e += s * s;
    energy.push_back(e);
    loudest = std::max(loudest, e);
  }
  if (!(loudest > 0.0)) return;
  const double threshold = loudest * std::pow(10.0, -kVoicedEnergyRangeDb / 10.0);
  const double nyquist = fe.nyquist();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (energy[i] < threshold) continue;
    std::vector<double> picked;
    try {
      const LpcModel m = analyze_frame(frames[i], fe.config().lpc_order);
      for (const Formant& f : formants_from_poles(m, fe.sample_rate())) {
        if (f.frequency_hz < kFormantMinHz || f.frequency_hz > nyquist - kFormantMinHz) continue;
        if (f.bandwidth_hz > kFormantMaxBandwidthHz) continue;
        picked.push_back(f.frequency_hz);
      }
    } catch (const DegenerateFrame&) {
      continue;
    } catch (const RootFindingError&) {
      continue;
    }
    if (picked.size() < 3) continue;
    for (std::size_t k = 0; k < 3; ++k) acc.formants[k].add(picked[k]);
    ++acc.voiced_frames;
  }
}

inline CorpusFormants corpus_formants(const FrontEnd& fe, const std::filesystem::path& dir) {
  CorpusFormants acc;
  for (const auto& path : list_wavs(dir)) {
    ++acc.files;
    try {
      accumulate_formants(load_audio(path), fe, acc);
    } catch (const Error&) {
      ++acc.files_failed;
    }
  }
  if (acc.voiced_frames == 0) throw InvalidArgument("corpus " + dir.string() + " has no voiced frames");
  return acc;
}

struct FormantStatsTable {
  CorpusFormants a;
  CorpusFormants b;

  double ratio(std::size_t k) const { return b.formants[k].mean / a.formants[k].mean; }
};

/// Mean and spread of F1..F3 for two corpora and the per-formant ratio b/a.
inline FormantStatsTable run_formant_stats(const AugmentConfig& config, const std::filesystem::path& corpus_a,
                                           const std::filesystem::path& corpus_b) {
  const FrontEnd fe(config);
  return {corpus_formants(fe, corpus_a), corpus_formants(fe, corpus_b)};
}

inline void write_csv(std::ostream& os, const FormantStatsTable& t) {
  write_csv_row(os, {"formant", "a_mean_hz", "a_std_hz", "a_frames", "b_mean_hz", "b_std_hz", "b_frames",
                     "ratio_b_over_a"});
  for (std::size_t k = 0; k < 3; ++k) {
    write_csv_row(os, {"F" + std::to_string(k + 1), csv_number(t.a.formants[k].mean),
                       csv_number(t.a.formants[k].stddev()), std::to_string(t.a.formants[k].n),
                       csv_number(t.b.formants[k].mean), csv_number(t.b.formants[k].stddev()),
                       std::to_string(t.b.formants[k].n), csv_number(t.ratio(k))});
  }
}

}  // namespace spectroforge
