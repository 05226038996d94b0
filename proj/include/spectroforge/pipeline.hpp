// spectroforge/pipeline.hpp

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

// Corpus-level orchestration.
//
// Per frame (LPC presets):
//   window -> |DFT| -> LPC envelope -> residual = |DFT| / envelope
//   -> segments at envelope valleys -> warp map from (alpha_k)
//   -> warped envelope -> segment energy scaling (beta_k)
//   -> modified envelope * residual -> log-mel
// The VTLP preset warps |DFT| directly with a single segment ending at
// 0.8 * Nyquist. Frames whose LPC analysis is degenerate pass |DFT| through.
//
// Seeds: utterance_seed(global_seed, utterance_id, copy_index) fixes the
// factor draw; per-frame draws use derive_seed(utterance seed, frame index)
// and masking uses derive_seed(utterance seed, kMaskSeedTag).

#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "spectroforge/augment.hpp"
#include "spectroforge/config.hpp"
#include "spectroforge/error.hpp"
#include "spectroforge/features.hpp"
#include "spectroforge/lpc.hpp"
#include "spectroforge/rng.hpp"
#include "spectroforge/signal_io.hpp"
#include "spectroforge/spectrum.hpp"

namespace spectroforge {

inline constexpr std::uint64_t kMaskSeedTag = 0x6D61736BULL;  // "mask"

/// Configuration-derived state shared read-only by all workers.
class FrontEnd {
 public:
  explicit FrontEnd(AugmentConfig config)
      : config_(validated(std::move(config))),
        preset_(&find_preset(config_.preset_name)),
        filterbank_(build_mel_filterbank(config_.n_mel, config_.fft_size / 2 + 1,
                                         static_cast<double>(config_.sample_rate))),
        window_(config_.window == WindowKind::kRectangular
                    ? std::vector<double>{}
                    : make_window(config_.window, config_.frame_length())) {}

  const AugmentConfig& config() const noexcept { return config_; }
  const Preset& preset() const noexcept { return *preset_; }
  const MelFilterbank& filterbank() const noexcept { return filterbank_; }
  std::span<const double> window() const noexcept { return window_; }
  double sample_rate() const noexcept { return static_cast<double>(config_.sample_rate); }
  double nyquist() const noexcept { return sample_rate() / 2.0; }

  /// Pre-emphasis plus framing geometry. Rejects clips at another rate.
  AudioClip prepare(const AudioClip& clip) const {
    if (clip.sample_rate != config_.sample_rate) {
      throw InvalidArgument(clip.source_id + ": sample rate " + std::to_string(clip.sample_rate) +
                            " does not match configured " + std::to_string(config_.sample_rate));
    }
    return pre_emphasize(clip, config_.pre_emphasis);
  }

  FrameLayout layout(const AudioClip& prepared) const {
    return frame_layout(prepared.size(), prepared.sample_rate, config_.frame_ms, config_.hop_ms);
  }

  FeatureMeta meta_for(const AudioClip& clip) const {
    FeatureMeta m;
    m.source_id = clip.source_id;
    m.sample_rate = clip.sample_rate;
    m.frame_ms = config_.frame_ms;
    m.hop_ms = config_.hop_ms;
    return m;
  }

 private:
  static AugmentConfig validated(AugmentConfig c) {
    validate(c);
    return c;
  }

  AugmentConfig config_;
  const Preset* preset_;
  MelFilterbank filterbank_;
  std::vector<double> window_;
};

/// Everything computed for one frame on the augmentation path.
struct FrameAugmentation {
  SpectralEnvelope raw;  // |DFT| of the windowed frame
  bool degenerate = false;
  std::optional<LpcModel> model;
  SpectralEnvelope envelope;  // LPC envelope (empty for degenerate frames and VTLP)
  std::vector<double> residual;
  SegmentMap segments;
  WarpMap warp;
  SpectralEnvelope warped;    // warped envelope (or warped |DFT| for VTLP)
  SpectralEnvelope scaled;    // after segment energy scaling
  std::vector<double> spectrum;  // final magnitude fed to the filterbank
};

inline FrameAugmentation augment_frame(const Frame& frame, const FrontEnd& fe, const WarpFactors& factors) {
  const AugmentConfig& cfg = fe.config();
  FrameAugmentation r;
  r.raw = magnitude_spectrum(frame.samples, cfg.fft_size, fe.sample_rate());

  if (fe.preset().domain == WarpDomain::kRawSpectrum) {
    r.segments = single_segment(fe.nyquist(), kVtlpFhiFraction);
    r.warp = build_warp_map(r.segments, factors, fe.nyquist());
    r.warped = apply_warp(r.raw, r.warp);
    r.scaled = fe.preset().energy_perturbation ? apply_fep(r.warped, r.segments, r.warp, factors) : r.warped;
    r.spectrum = r.scaled.magnitudes;
    return r;
  }

  try {
    r.model = analyze_frame(frame, cfg.lpc_order);
  } catch (const DegenerateFrame&) {
    r.degenerate = true;
    r.spectrum = r.raw.magnitudes;
    return r;
  }
  r.envelope = envelope(*r.model, cfg.fft_size, fe.sample_rate());
  r.residual.resize(r.raw.size());
  for (std::size_t k = 0; k < r.residual.size(); ++k) {
    r.residual[k] = r.raw.magnitudes[k] / std::max(r.envelope.magnitudes[k], kResidualEpsilon);
  }
  r.segments = detect_segments(r.envelope);
  r.warp = build_warp_map(r.segments, factors, fe.nyquist());
  r.warped = apply_warp(r.envelope, r.warp);
  r.scaled = fe.preset().energy_perturbation ? apply_fep(r.warped, r.segments, r.warp, factors) : r.warped;
  r.spectrum = reconstruct_spectrum(r.scaled, r.residual);
  return r;
}

/// Plain log-mel features, no spectral modification.
inline FeatureMatrix featurize_clip(const AudioClip& clip, const FrontEnd& fe) {
  const AudioClip x = fe.prepare(clip);
  const FrameLayout layout = fe.layout(x);
  FeatureMatrix fm(layout.count, static_cast<std::size_t>(fe.config().n_mel));
  fm.meta = fe.meta_for(clip);
  fm.meta.preset_name = "none";
  for (std::size_t i = 0; i < layout.count; ++i) {
    const Frame f = extract_frame(x, layout, i, fe.window());
    const SpectralEnvelope mag = magnitude_spectrum(f.samples, fe.config().fft_size, fe.sample_rate());
    const std::vector<double> logmel = apply_filterbank(mag.magnitudes, fe.filterbank());
    std::transform(logmel.begin(), logmel.end(), fm.frame(i).begin(),
                   [](double v) { return static_cast<float>(v); });
  }
  return fm;
}

struct AugmentedClip {
  FeatureMatrix features;
  WarpFactors factors;  // per-utterance draw (alphas/betas empty in per-frame mode)
  std::size_t degenerate_frames = 0;
};

/// Clamps the configured mask to the axes of one utterance.
inline MaskSpec fit_mask(MaskSpec m, const FeatureMatrix& fm) {
  m.max_freq_width = std::min<int>(m.max_freq_width, static_cast<int>(fm.n_filters));
  m.max_time_width = std::min<int>(m.max_time_width, static_cast<int>(fm.n_frames));
  return m;
}

inline AugmentedClip augment_clip(const AudioClip& clip, const FrontEnd& fe, std::uint64_t seed) {
  const AugmentConfig& cfg = fe.config();
  const AudioClip x = fe.prepare(clip);
  const FrameLayout layout = fe.layout(x);

  AugmentedClip out;
  out.factors = draw_factors(fe.preset(), seed);
  const bool per_frame = cfg.factor_granularity == FactorGranularity::kPerFrame;

  FeatureMatrix fm(layout.count, static_cast<std::size_t>(cfg.n_mel));
  for (std::size_t i = 0; i < layout.count; ++i) {
    const Frame f = extract_frame(x, layout, i, fe.window());
    const WarpFactors frame_factors = per_frame ? draw_factors(fe.preset(), derive_seed(seed, i)) : out.factors;
    const FrameAugmentation a = augment_frame(f, fe, frame_factors);
    if (a.degenerate) ++out.degenerate_frames;
    const std::vector<double> logmel = apply_filterbank(a.spectrum, fe.filterbank());
    std::transform(logmel.begin(), logmel.end(), fm.frame(i).begin(),
                   [](double v) { return static_cast<float>(v); });
  }

  const MaskSpec mask = fit_mask(cfg.mask, fm);
  if (mask != MaskSpec::none()) fm = spec_augment(fm, mask, derive_seed(seed, kMaskSeedTag));

  if (per_frame) {
    out.factors.alphas.clear();
    out.factors.betas.clear();
  }
  fm.meta = fe.meta_for(clip);
  fm.meta.preset_name = cfg.preset_name;
  fm.meta.rng_seed = seed;
  fm.meta.alphas = out.factors.alphas;
  fm.meta.betas = out.factors.betas;
  out.features = std::move(fm);
  return out;
}

// ---------------------------------------------------------------------------
// Corpus runs

enum class EntryStatus { kOk, kSkippedDegenerate, kError };

inline std::string to_string(EntryStatus s) {
  switch (s) {
    case EntryStatus::kOk: return "ok";
    case EntryStatus::kSkippedDegenerate: return "skipped-degenerate";
    case EntryStatus::kError: return "error";
  }
  return "error";
}

struct ManifestEntry {
  std::string utterance_id;
  std::string audio_path;    // relative to the input directory
  std::string feature_path;  // relative to the output directory; empty when nothing was written
  std::string preset;
  std::uint64_t seed = 0;
  int copy_index = 0;
  std::vector<double> alphas;
  std::vector<double> betas;
  std::size_t n_frames = 0;
  std::size_t degenerate_frames = 0;
  EntryStatus status = EntryStatus::kOk;
  std::string message;
};

struct CorpusManifest {
  std::vector<ManifestEntry> entries;

  std::size_t count(EntryStatus s) const {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [s](const ManifestEntry& e) { return e.status == s; }));
  }
};

inline nlohmann::ordered_json to_json(const ManifestEntry& e) {
  nlohmann::ordered_json j;
  j["utterance_id"] = e.utterance_id;
  j["audio_path"] = e.audio_path;
  j["feature_path"] = e.feature_path;
  j["preset"] = e.preset;
  j["seed"] = e.seed;
  j["copy_index"] = e.copy_index;
  j["alphas"] = e.alphas;
  j["betas"] = e.betas;
  j["n_frames"] = e.n_frames;
  j["degenerate_frames"] = e.degenerate_frames;
  j["status"] = to_string(e.status);
  if (!e.message.empty()) j["message"] = e.message;
  return j;
}

inline ManifestEntry entry_from_json(const nlohmann::json& j) {
  ManifestEntry e;
  e.utterance_id = j.at("utterance_id").get<std::string>();
  e.audio_path = j.at("audio_path").get<std::string>();
  e.feature_path = j.at("feature_path").get<std::string>();
  e.preset = j.at("preset").get<std::string>();
  e.seed = j.at("seed").get<std::uint64_t>();
  e.copy_index = j.value("copy_index", 0);
  e.alphas = j.at("alphas").get<std::vector<double>>();
  e.betas = j.at("betas").get<std::vector<double>>();
  e.n_frames = j.at("n_frames").get<std::size_t>();
  e.degenerate_frames = j.value("degenerate_frames", std::size_t{0});
  const std::string s = j.at("status").get<std::string>();
  if (s == "ok") e.status = EntryStatus::kOk;
  else if (s == "skipped-degenerate") e.status = EntryStatus::kSkippedDegenerate;
  else if (s == "error") e.status = EntryStatus::kError;
  else throw FormatError("unknown manifest status '" + s + "'");
  e.message = j.value("message", std::string{});
  return e;
}

inline constexpr const char* kManifestName = "manifest.jsonl";
inline constexpr const char* kArchiveExtension = ".sfg";

inline void write_manifest(const CorpusManifest& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const ManifestEntry& e : m.entries) out << to_json(e).dump() << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

inline CorpusManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  CorpusManifest m;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      m.entries.push_back(entry_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("bad manifest line: ") + e.what());
    }
  }
  return m;
}

/// WAV files directly inside `dir`, sorted by path.
inline std::vector<std::filesystem::path> list_wavs(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw IoError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> out;
  for (const auto& de : std::filesystem::directory_iterator(dir)) {
    if (!de.is_regular_file()) continue;
    std::string ext = de.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".wav") out.push_back(de.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw InvalidArgument("no WAV files in " + dir.string());
  return out;
}

/// Runs task(i) for i in [0, n) on `jobs` threads. Tasks must not throw.
inline void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& task) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) task(i);
    });
  }
}

namespace detail {

inline std::string describe(const std::exception& e) { return e.what(); }

inline void mark_error(ManifestEntry& e, const std::exception& ex) {
  e.status = EntryStatus::kError;
  e.feature_path.clear();
  e.message = describe(ex);
}

}  // namespace detail

/// Plain features for every WAV in `input_dir`, one archive per utterance.
inline CorpusManifest run_featurize(const AugmentConfig& config, const std::filesystem::path& input_dir,
                                    const std::filesystem::path& output_dir) {
  const FrontEnd fe(config);
  const std::vector<std::filesystem::path> files = list_wavs(input_dir);
  std::filesystem::create_directories(output_dir);

  CorpusManifest manifest;
  manifest.entries.resize(files.size());
  parallel_for(files.size(), config.jobs, [&](std::size_t i) {
    ManifestEntry& e = manifest.entries[i];
    e.utterance_id = files[i].stem().string();
    e.audio_path = files[i].filename().string();
    e.preset = "none";
    try {
      const AudioClip clip = load_audio(files[i]);
      const FeatureMatrix fm = featurize_clip(clip, fe);
      e.feature_path = e.utterance_id + kArchiveExtension;
      e.n_frames = fm.n_frames;
      write_features(fm, output_dir / e.feature_path);
    } catch (const std::exception& ex) {
      detail::mark_error(e, ex);
    }
  });
  write_manifest(manifest, output_dir / kManifestName);
  return manifest;
}

/// augment_copies perturbed archives per utterance, named <id>-aug<copy>.
inline CorpusManifest run_augment(const AugmentConfig& config, const std::filesystem::path& input_dir,
                                  const std::filesystem::path& output_dir) {
  const FrontEnd fe(config);
  const std::vector<std::filesystem::path> files = list_wavs(input_dir);
  std::filesystem::create_directories(output_dir);
  const auto copies = static_cast<std::size_t>(config.augment_copies);

  CorpusManifest manifest;
  manifest.entries.resize(files.size() * copies);
  parallel_for(files.size(), config.jobs, [&](std::size_t i) {
    const std::string id = files[i].stem().string();
    std::optional<AudioClip> clip;
    std::string load_error;
    try {
      clip = load_audio(files[i]);
    } catch (const std::exception& ex) {
      load_error = ex.what();
    }
    for (std::size_t c = 0; c < copies; ++c) {
      ManifestEntry& e = manifest.entries[i * copies + c];
      e.utterance_id = id + "-aug" + std::to_string(c);
      e.audio_path = files[i].filename().string();
      e.preset = config.preset_name;
      e.copy_index = static_cast<int>(c);
      e.seed = utterance_seed(config.global_seed, id, c);
      if (!clip) {
        e.status = EntryStatus::kError;
        e.message = load_error;
        continue;
      }
      try {
        AugmentedClip a = augment_clip(*clip, fe, e.seed);
        e.alphas = a.factors.alphas;
        e.betas = a.factors.betas;
        e.n_frames = a.features.n_frames;
        e.degenerate_frames = a.degenerate_frames;
        if (a.degenerate_frames == a.features.n_frames) {
          e.status = EntryStatus::kSkippedDegenerate;
          continue;
        }
        e.feature_path = e.utterance_id + kArchiveExtension;
        write_features(a.features, output_dir / e.feature_path);
      } catch (const std::exception& ex) {
        detail::mark_error(e, ex);
      }
    }
  });
  write_manifest(manifest, output_dir / kManifestName);
  return manifest;
}

}  // namespace spectroforge
