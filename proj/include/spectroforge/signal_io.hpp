// spectroforge/signal_io.hpp

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

// Audio ingestion and the analysis front end: RIFF/WAVE reading, pre-emphasis,
// framing and windowing.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <iterator>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "spectroforge/error.hpp"

namespace spectroforge {

struct AudioClip {
  std::vector<double> samples;  // mono, nominally in [-1, 1]
  int sample_rate = 0;
  int channel_count = 1;
  std::string source_id;

  std::size_t size() const noexcept { return samples.size(); }
  double duration_seconds() const noexcept {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

enum class WindowKind { kRectangular, kHamming, kHann };

struct Frame {
  std::vector<double> samples;
  std::size_t start_sample = 0;
  std::size_t frame_index = 0;
  bool window_applied = false;
};

namespace detail {

inline std::uint16_t read_u16le(const unsigned char* p) noexcept {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint32_t read_u32le(const unsigned char* p) noexcept {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

/// Parses a RIFF/WAVE byte stream. Accepts 16-bit integer PCM and 32-bit
/// IEEE float (plain or WAVE_FORMAT_EXTENSIBLE), little-endian. Channels are
/// averaged to mono; integer samples are divided by 2^15.
inline AudioClip parse_wav(std::span<const unsigned char> bytes, std::string source_id) {
  constexpr std::uint16_t kFormatPcm = 1;
  constexpr std::uint16_t kFormatFloat = 3;
  constexpr std::uint16_t kFormatExtensible = 0xFFFE;

  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw FormatError(source_id + ": not a RIFF/WAVE file");
  }

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0, block_align = 0;
  std::uint32_t rate = 0;
  std::span<const unsigned char> data;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* hdr = bytes.data() + pos;
    const std::uint32_t chunk_size = detail::read_u32le(hdr + 4);
    const std::size_t body = pos + 8;
    // Some writers leave a bogus size on the final data chunk; clamp to file.
    const std::size_t avail = std::min<std::size_t>(chunk_size, bytes.size() - body);

    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (avail < 16) throw FormatError(source_id + ": truncated fmt chunk");
      const unsigned char* f = bytes.data() + body;
      format = detail::read_u16le(f);
      channels = detail::read_u16le(f + 2);
      rate = detail::read_u32le(f + 4);
      block_align = detail::read_u16le(f + 12);
      bits = detail::read_u16le(f + 14);
      if (format == kFormatExtensible) {
        if (avail < 26) throw FormatError(source_id + ": truncated extensible fmt chunk");
        format = detail::read_u16le(f + 24);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data = bytes.subspan(body, avail);
      have_data = true;
    }
    pos = body + static_cast<std::size_t>(chunk_size) + (chunk_size & 1U);
  }

  if (!have_fmt) throw FormatError(source_id + ": missing fmt chunk");
  if (!have_data) throw FormatError(source_id + ": missing data chunk");
  if (channels == 0 || rate == 0) throw FormatError(source_id + ": invalid fmt chunk");

  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32) {
    throw FormatError(source_id + ": unsupported encoding (format " + std::to_string(format) +
                      ", " + std::to_string(bits) + " bits)");
  }
  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * channels;
  if (block_align != 0 && block_align != frame_bytes) {
    throw FormatError(source_id + ": block alignment does not match channel layout");
  }
  const std::size_t n = data.size() / frame_bytes;
  if (n == 0) throw FormatError(source_id + ": zero-length audio");

  AudioClip clip;
  clip.sample_rate = static_cast<int>(rate);
  clip.channel_count = 1;
  clip.source_id = std::move(source_id);
  clip.samples.resize(n);
  const unsigned char* p = data.data();
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c, p += bytes_per_sample) {
      if (pcm16) {
        acc += static_cast<std::int16_t>(detail::read_u16le(p)) / 32768.0;
      } else {
        float v;
        const std::uint32_t u = detail::read_u32le(p);
        std::memcpy(&v, &u, sizeof v);
        if (!std::isfinite(v)) throw FormatError(clip.source_id + ": non-finite sample");
        acc += std::clamp(static_cast<double>(v), -1.0, 1.0);
      }
    }
    clip.samples[i] = acc / channels;
  }
  return clip;
}

/// Reads a WAV file from disk. The source id is the file stem.
inline AudioClip load_audio(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return parse_wav(bytes, path.stem().string());
}

/// y[0] = x[0], y[n] = x[n] - coefficient * x[n-1].
inline AudioClip pre_emphasize(const AudioClip& clip, double coefficient) {
  if (!(coefficient >= 0.0 && coefficient < 1.0)) {
    throw InvalidArgument("pre-emphasis coefficient must lie in [0, 1)");
  }
  AudioClip out = clip;
  if (coefficient == 0.0) return out;
  for (std::size_t n = clip.samples.size(); n-- > 1;) {
    out.samples[n] = clip.samples[n] - coefficient * clip.samples[n - 1];
  }
  return out;
}

/// Symmetric window of the given length (w[0] == w[length-1]).
inline std::vector<double> make_window(WindowKind kind, std::size_t length) {
  std::vector<double> w(length, 1.0);
  if (kind == WindowKind::kRectangular || length < 2) return w;
  const double denom = static_cast<double>(length - 1);
  for (std::size_t n = 0; n < length; ++n) {
    const double c = std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / denom);
    w[n] = kind == WindowKind::kHamming ? 0.54 - 0.46 * c : 0.5 - 0.5 * c;
  }
  return w;
}

/// Frame geometry for a clip: lengths are rounded from milliseconds.
struct FrameLayout {
  std::size_t frame_length = 0;
  std::size_t hop_length = 0;
  std::size_t count = 0;
};

inline std::size_t ms_to_samples(double ms, int sample_rate) {
  return static_cast<std::size_t>(std::lround(ms * sample_rate / 1000.0));
}

inline FrameLayout frame_layout(std::size_t sample_count, int sample_rate, double frame_ms,
                                double hop_ms) {
  if (sample_rate <= 0) throw InvalidArgument("sample rate must be positive");
  if (!(hop_ms > 0.0) || frame_ms < hop_ms) {
    throw InvalidArgument("frame length must be >= hop length > 0");
  }
  FrameLayout layout;
  layout.frame_length = ms_to_samples(frame_ms, sample_rate);
  layout.hop_length = ms_to_samples(hop_ms, sample_rate);
  if (layout.hop_length == 0) throw InvalidArgument("hop rounds to zero samples");
  if (sample_count < layout.frame_length) {
    throw InvalidArgument("clip shorter than one frame (" + std::to_string(sample_count) + " < " +
                          std::to_string(layout.frame_length) + " samples)");
  }
  layout.count = (sample_count - layout.frame_length) / layout.hop_length + 1;
  return layout;
}

/// Copies frame `index` out of the clip and multiplies in `window` (empty
/// window means rectangular).
inline Frame extract_frame(const AudioClip& clip, const FrameLayout& layout, std::size_t index,
                           std::span<const double> window) {
  Frame f;
  f.frame_index = index;
  f.start_sample = index * layout.hop_length;
  const auto first = clip.samples.begin() + static_cast<std::ptrdiff_t>(f.start_sample);
  f.samples.assign(first, first + static_cast<std::ptrdiff_t>(layout.frame_length));
  if (!window.empty()) {
    for (std::size_t n = 0; n < f.samples.size(); ++n) f.samples[n] *= window[n];
    f.window_applied = true;
  }
  return f;
}

/// Splits a clip into overlapping frames. The trailing partial frame is dropped.
inline std::vector<Frame> frame_signal(const AudioClip& clip, double frame_ms, double hop_ms,
                                       WindowKind window = WindowKind::kHamming) {
  const FrameLayout layout = frame_layout(clip.size(), clip.sample_rate, frame_ms, hop_ms);
  const std::vector<double> w = window == WindowKind::kRectangular
                                    ? std::vector<double>{}
                                    : make_window(window, layout.frame_length);
  std::vector<Frame> frames;
  frames.reserve(layout.count);
  for (std::size_t i = 0; i < layout.count; ++i) frames.push_back(extract_frame(clip, layout, i, w));
  return frames;
}

}  // namespace spectroforge
