// spectroforge/spectrum.hpp

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

#include <algorithm>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "spectroforge/error.hpp"

namespace spectroforge {

/// Non-negative magnitudes on the uniform grid k * bin_hz, k = 0..fft_size/2.
/// Used both for raw FFT magnitudes and for LPC envelopes.
struct SpectralEnvelope {
  std::vector<double> magnitudes;
  double bin_hz = 0.0;
  double nyquist_hz = 0.0;

  std::size_t size() const noexcept { return magnitudes.size(); }
  double frequency(std::size_t bin) const noexcept { return static_cast<double>(bin) * bin_hz; }
};

constexpr bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

inline SpectralEnvelope make_grid(std::size_t fft_size, double sample_rate) {
  if (!is_power_of_two(fft_size) || fft_size < 2) {
    throw InvalidArgument("fft size must be a power of two, got " + std::to_string(fft_size));
  }
  SpectralEnvelope grid;
  grid.magnitudes.assign(fft_size / 2 + 1, 0.0);
  grid.bin_hz = sample_rate / static_cast<double>(fft_size);
  grid.nyquist_hz = sample_rate / 2.0;
  return grid;
}

/// |DFT| of `samples` zero-padded to fft_size, bins 0..fft_size/2.
inline SpectralEnvelope magnitude_spectrum(std::span<const double> samples, std::size_t fft_size,
                                           double sample_rate) {
  SpectralEnvelope out = make_grid(fft_size, sample_rate);
  if (samples.size() > fft_size) {
    throw InvalidArgument("frame longer than fft size (" + std::to_string(samples.size()) + " > " +
                          std::to_string(fft_size) + ")");
  }
  thread_local Eigen::FFT<double> fft;
  thread_local std::vector<double> padded;
  thread_local std::vector<std::complex<double>> bins;
  padded.assign(fft_size, 0.0);
  std::copy(samples.begin(), samples.end(), padded.begin());
  fft.fwd(bins, padded);
  for (std::size_t k = 0; k < out.magnitudes.size(); ++k) out.magnitudes[k] = std::abs(bins[k]);
  return out;
}

}  // namespace spectroforge
