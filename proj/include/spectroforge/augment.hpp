// spectroforge/augment.hpp

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

// Segmental spectrum warping and segment energy perturbation.
//
// An LPC envelope is cut into at most four segments at its valleys. Each
// segment k gets a warp factor alpha_k and an energy factor beta_k. The
// frequency axis is remapped piecewise-linearly: inside segment k the slope
// is 1/alpha_k (alpha < 1 moves formants up), segments are chained end to
// end so the map stays continuous, and the band above the last segment is
// squeezed linearly onto whatever remains below Nyquist. After warping,
// every bin inside warped segment k is multiplied by beta_k.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spectroforge/error.hpp"
#include "spectroforge/rng.hpp"
#include "spectroforge/spectrum.hpp"

namespace spectroforge {

inline constexpr int kMaxSegments = 4;

// ---------------------------------------------------------------------------
// Presets

struct FactorRange {
  double lo = 1.0;
  double hi = 1.0;
  constexpr bool contains(double v) const noexcept { return v >= lo && v <= hi; }
};

enum class WarpDomain {
  kRawSpectrum,  // warp the DFT magnitude directly (VTLP)
  kLpcEnvelope,  // warp the LPC envelope, keep the residual
};

struct Preset {
  std::string_view name;
  WarpDomain domain = WarpDomain::kLpcEnvelope;
  bool shared_alpha = false;  // one draw replicated over all segments
  std::array<FactorRange, kMaxSegments> alpha{};
  bool energy_perturbation = false;
  FactorRange beta{};
};

inline constexpr FactorRange kUniformWarp{0.9, 1.1};
inline constexpr FactorRange kFepRange{0.7, 1.3};
inline constexpr FactorRange kUnit{1.0, 1.0};

inline constexpr std::array<FactorRange, kMaxSegments> kExp3Alpha{
    FactorRange{0.6, 0.85}, FactorRange{0.7, 0.85}, FactorRange{0.75, 0.95},
    FactorRange{0.85, 1.0}};

inline constexpr std::array<Preset, 8> kPresets{{
    {"vtlp", WarpDomain::kRawSpectrum, true, {kUniformWarp, kUniformWarp, kUniformWarp, kUniformWarp}, false, kUnit},
    {"lpc-wp", WarpDomain::kLpcEnvelope, true, {kUniformWarp, kUniformWarp, kUniformWarp, kUniformWarp}, false, kUnit},
    {"lpc-swp-exp1", WarpDomain::kLpcEnvelope, false, {kUniformWarp, kUniformWarp, kUniformWarp, kUniformWarp}, false, kUnit},
    {"lpc-swp-exp2", WarpDomain::kLpcEnvelope, false,
     {FactorRange{0.75, 1.0}, FactorRange{0.75, 1.0}, FactorRange{0.75, 1.0}, FactorRange{0.75, 1.0}}, false, kUnit},
    {"lpc-swp-exp3", WarpDomain::kLpcEnvelope, false, kExp3Alpha, false, kUnit},
    {"fep", WarpDomain::kLpcEnvelope, false, {kUnit, kUnit, kUnit, kUnit}, true, kFepRange},
    {"lpc-swp-exp3+fep", WarpDomain::kLpcEnvelope, false, kExp3Alpha, true, kFepRange},
    // Runs the full LPC chain with every factor pinned to 1.
    {"identity", WarpDomain::kLpcEnvelope, false, {kUnit, kUnit, kUnit, kUnit}, true, kUnit},
}};

inline const Preset& find_preset(std::string_view name) {
  for (const Preset& p : kPresets) {
    if (p.name == name) return p;
  }
  throw InvalidArgument("unknown preset '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Types

struct SegmentMap {
  std::vector<double> valleys_hz;     // every accepted valley, ascending
  std::vector<double> boundaries_hz;  // b0 = 0 < b1 < ... < bK = f_hi
  int segment_count = 1;
  double f_hi_hz = 0.0;
  double nyquist_hz = 0.0;
};

struct WarpFactors {
  std::vector<double> alphas;
  std::vector<double> betas;
  std::string preset_name;
  std::uint64_t rng_seed = 0;
};

struct WarpAnchor {
  double source_hz = 0.0;
  double target_hz = 0.0;
};

/// Monotone piecewise-linear bijection of [0, nyquist].
struct WarpMap {
  std::vector<WarpAnchor> anchors;
  double nyquist_hz = 0.0;
  // Factor applied to the segment targets when the cumulative warp would
  // have crossed Nyquist; 1 when no rescale happened.
  double overflow_scale = 1.0;

  double forward(double source_hz) const { return interpolate(source_hz, /*inverse=*/false); }
  double inverse(double target_hz) const { return interpolate(target_hz, /*inverse=*/true); }

 private:
  double interpolate(double x, bool inverse) const {
    auto from = [inverse](const WarpAnchor& a) { return inverse ? a.target_hz : a.source_hz; };
    auto to = [inverse](const WarpAnchor& a) { return inverse ? a.source_hz : a.target_hz; };
    if (x <= from(anchors.front())) return to(anchors.front());
    if (x >= from(anchors.back())) return to(anchors.back());
    const auto it = std::upper_bound(anchors.begin(), anchors.end(), x,
                                     [&](double v, const WarpAnchor& a) { return v < from(a); });
    const WarpAnchor& hi = *it;
    const WarpAnchor& lo = *(it - 1);
    const double t = (x - from(lo)) / (from(hi) - from(lo));
    return to(lo) + t * (to(hi) - to(lo));
  }
};

// ---------------------------------------------------------------------------
// Segment detection

inline constexpr double kValleyProminenceDb = 1.0;
inline constexpr double kDefaultFhiFraction = 0.9;

namespace detail {

inline std::vector<double> to_db(std::span<const double> mags) {
  std::vector<double> db(mags.size());
  for (std::size_t k = 0; k < mags.size(); ++k) db[k] = 20.0 * std::log10(std::max(mags[k], 1e-300));
  return db;
}

/// Prominence of the local minimum at `i`: the lower of the two highest
/// points reached on each side before the curve drops below the valley.
inline double valley_prominence(std::span<const double> db, std::size_t i) {
  double left = db[i];
  for (std::size_t j = i; j-- > 0;) {
    if (db[j] < db[i]) break;
    left = std::max(left, db[j]);
  }
  double right = db[i];
  for (std::size_t j = i + 1; j < db.size(); ++j) {
    if (db[j] < db[i]) break;
    right = std::max(right, db[j]);
  }
  return std::min(left, right) - db[i];
}

}  // namespace detail

/// Strict interior local minima of the log envelope with at least
/// `prominence_db` of prominence, as bin indices.
inline std::vector<std::size_t> find_valleys(const SpectralEnvelope& env,
                                             double prominence_db = kValleyProminenceDb) {
  const std::vector<double> db = detail::to_db(env.magnitudes);
  std::vector<std::size_t> out;
  for (std::size_t i = 1; i + 1 < db.size(); ++i) {
    if (db[i] < db[i - 1] && db[i] < db[i + 1] &&
        detail::valley_prominence(db, i) >= prominence_db) {
      out.push_back(i);
    }
  }
  return out;
}

/// Strict interior local maxima of the envelope, as bin indices.
inline std::vector<std::size_t> find_peaks(const SpectralEnvelope& env) {
  std::vector<std::size_t> out;
  const auto& m = env.magnitudes;
  for (std::size_t i = 1; i + 1 < m.size(); ++i) {
    if (m[i] > m[i - 1] && m[i] > m[i + 1]) out.push_back(i);
  }
  return out;
}

inline SegmentMap detect_segments(const SpectralEnvelope& env, int max_segments = kMaxSegments,
                                  double prominence_db = kValleyProminenceDb) {
  if (max_segments < 1) throw InvalidArgument("max_segments must be >= 1");
  if (env.size() < 2 || !(env.bin_hz > 0.0)) throw InvalidArgument("envelope grid is empty");

  SegmentMap seg;
  seg.nyquist_hz = env.nyquist_hz;
  for (const std::size_t i : find_valleys(env, prominence_db)) seg.valleys_hz.push_back(env.frequency(i));

  const auto wanted = static_cast<std::size_t>(max_segments);
  seg.boundaries_hz.push_back(0.0);
  if (seg.valleys_hz.size() >= wanted) {
    seg.boundaries_hz.insert(seg.boundaries_hz.end(), seg.valleys_hz.begin(),
                             seg.valleys_hz.begin() + static_cast<std::ptrdiff_t>(wanted));
    seg.f_hi_hz = seg.valleys_hz[wanted - 1];
  } else {
    // Too few valleys: the last segment runs up to a fixed fraction of
    // Nyquist, and valleys at or above that point cannot bound a segment.
    seg.f_hi_hz = kDefaultFhiFraction * env.nyquist_hz;
    std::erase_if(seg.valleys_hz, [&](double v) { return v >= seg.f_hi_hz; });
    seg.boundaries_hz.insert(seg.boundaries_hz.end(), seg.valleys_hz.begin(), seg.valleys_hz.end());
    seg.boundaries_hz.push_back(seg.f_hi_hz);
  }
  seg.segment_count = static_cast<int>(seg.boundaries_hz.size()) - 1;
  return seg;
}

/// Single segment [0, fraction * nyquist], the VTLP construction.
inline SegmentMap single_segment(double nyquist_hz, double f_hi_fraction) {
  SegmentMap seg;
  seg.nyquist_hz = nyquist_hz;
  seg.f_hi_hz = f_hi_fraction * nyquist_hz;
  seg.boundaries_hz = {0.0, seg.f_hi_hz};
  seg.segment_count = 1;
  return seg;
}

inline constexpr double kVtlpFhiFraction = 0.8;

// ---------------------------------------------------------------------------
// Factor draws

/// Draws factors for one utterance (or frame). Draw order from a SplitMix64
/// stream seeded with `seed`: alpha_1..alpha_4 (only alpha_1 when the preset
/// shares one alpha), then beta_1..beta_4 when the preset perturbs energy.
inline WarpFactors draw_factors(const Preset& preset, std::uint64_t seed) {
  SplitMix64 rng(seed);
  WarpFactors f;
  f.preset_name = std::string(preset.name);
  f.rng_seed = seed;
  if (preset.shared_alpha) {
    f.alphas.assign(kMaxSegments, rng.uniform(preset.alpha[0].lo, preset.alpha[0].hi));
  } else {
    for (const FactorRange& r : preset.alpha) f.alphas.push_back(rng.uniform(r.lo, r.hi));
  }
  if (preset.energy_perturbation) {
    for (int k = 0; k < kMaxSegments; ++k) f.betas.push_back(rng.uniform(preset.beta.lo, preset.beta.hi));
  } else {
    f.betas.assign(kMaxSegments, 1.0);
  }
  return f;
}

inline WarpFactors draw_factors(std::string_view preset, std::uint64_t seed) {
  return draw_factors(find_preset(preset), seed);
}

inline WarpFactors unit_factors(std::string preset_name = "identity") {
  WarpFactors f;
  f.alphas.assign(kMaxSegments, 1.0);
  f.betas.assign(kMaxSegments, 1.0);
  f.preset_name = std::move(preset_name);
  return f;
}

namespace detail {

/// factors[k] for k < K, replicating the last value when K exceeds the list.
inline double factor_at(const std::vector<double>& v, std::size_t k) {
  if (v.empty()) return 1.0;
  return v[std::min(k, v.size() - 1)];
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Warp map

inline constexpr double kOverflowTarget = 0.95;

inline WarpMap build_warp_map(const SegmentMap& segmap, const WarpFactors& factors, double nyquist_hz) {
  const auto& b = segmap.boundaries_hz;
  if (b.size() < 2 || b.front() != 0.0) throw InvalidArgument("segment boundaries must start at 0");
  for (std::size_t k = 1; k < b.size(); ++k) {
    if (!(b[k] > b[k - 1])) throw InvalidArgument("segment boundaries must be strictly increasing");
  }
  if (b.back() > nyquist_hz) throw InvalidArgument("segment boundary beyond Nyquist");

  const std::size_t segments = b.size() - 1;
  // t_k = t_(k-1) + (b_k - b_(k-1)) / alpha_k, written as b_k plus the
  // accumulated stretch so that unit factors reproduce b_k exactly.
  std::vector<double> targets(segments + 1, 0.0);
  double stretch = 0.0;
  for (std::size_t k = 1; k <= segments; ++k) {
    const double alpha = detail::factor_at(factors.alphas, k - 1);
    if (!(alpha > 0.0)) throw InvalidArgument("warp factors must be positive");
    if (alpha != 1.0) stretch += (b[k] - b[k - 1]) * (1.0 / alpha - 1.0);
    targets[k] = b[k] + stretch;
  }

  WarpMap map;
  map.nyquist_hz = nyquist_hz;
  const double last = targets.back();
  if (b.back() == nyquist_hz) {
    map.overflow_scale = nyquist_hz / last;
  } else if (last >= nyquist_hz) {
    map.overflow_scale = kOverflowTarget * nyquist_hz / last;
  }
  if (map.overflow_scale != 1.0) {
    for (double& t : targets) t *= map.overflow_scale;
    targets.back() = b.back() == nyquist_hz ? nyquist_hz : targets.back();
  }

  map.anchors.reserve(segments + 2);
  for (std::size_t k = 0; k <= segments; ++k) map.anchors.push_back({b[k], targets[k]});
  if (b.back() < nyquist_hz) map.anchors.push_back({nyquist_hz, nyquist_hz});
  return map;
}

// ---------------------------------------------------------------------------
// Envelope operations

/// Resamples `env` so that the value found at source frequency f appears at
/// map.forward(f). Output grid equals the input grid.
inline SpectralEnvelope apply_warp(const SpectralEnvelope& env, const WarpMap& map) {
  if (map.anchors.size() < 2 || std::abs(map.nyquist_hz - env.nyquist_hz) > 1e-9 * env.nyquist_hz) {
    throw InvalidArgument("warp map does not cover the envelope's band");
  }
  SpectralEnvelope out = env;
  const std::size_t n = env.size();
  const double last = static_cast<double>(n - 1);
  for (std::size_t k = 0; k < n; ++k) {
    double pos = map.inverse(env.frequency(k)) / env.bin_hz;
    const double nearest = std::round(pos);
    // Positions within rounding noise of a grid point read the bin directly.
    if (std::abs(pos - nearest) < 1e-9) pos = nearest;
    pos = std::clamp(pos, 0.0, last);
    const auto i0 = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(i0);
    if (frac == 0.0 || i0 + 1 >= n) {
      out.magnitudes[k] = env.magnitudes[i0];
    } else {
      out.magnitudes[k] = (1.0 - frac) * env.magnitudes[i0] + frac * env.magnitudes[i0 + 1];
    }
  }
  return out;
}

/// Segment boundaries carried onto the warped axis.
inline std::vector<double> warped_boundaries(const SegmentMap& segmap, const WarpMap& map) {
  std::vector<double> out;
  out.reserve(segmap.boundaries_hz.size());
  for (const double b : segmap.boundaries_hz) out.push_back(map.forward(b));
  return out;
}

/// Scales each bin of the warped envelope by the energy factor of the warped
/// segment it falls in; bins above the last boundary take beta_K.
inline SpectralEnvelope apply_fep(const SpectralEnvelope& env, const SegmentMap& segmap,
                                  const WarpMap& map, const WarpFactors& factors) {
  const std::vector<double> edges = warped_boundaries(segmap, map);
  const std::size_t segments = edges.size() - 1;
  SpectralEnvelope out = env;
  std::size_t seg = 0;
  for (std::size_t k = 0; k < env.size(); ++k) {
    const double g = env.frequency(k);
    while (seg + 1 < segments && g >= edges[seg + 1]) ++seg;
    out.magnitudes[k] *= detail::factor_at(factors.betas, seg);
  }
  return out;
}

/// modified_env[k] * residual[k].
inline std::vector<double> reconstruct_spectrum(std::span<const double> modified_env,
                                                std::span<const double> residual) {
  if (modified_env.size() != residual.size()) throw InvalidArgument("bin count mismatch");
  std::vector<double> out(residual.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = modified_env[k] * residual[k];
  return out;
}

inline std::vector<double> reconstruct_spectrum(const SpectralEnvelope& modified_env,
                                                std::span<const double> residual) {
  return reconstruct_spectrum(std::span<const double>(modified_env.magnitudes), residual);
}

}  // namespace spectroforge
