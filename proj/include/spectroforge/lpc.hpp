// spectroforge/lpc.hpp

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

// Per-frame linear prediction analysis.
//
// Sign convention: the inverse filter is A(z) = 1 - sum_{i=1..p} a[i] z^-i,
// so coefficients[i-1] holds a[i] and the predictor is
// x^[n] = sum_i a[i] x[n-i]. The all-pole envelope is gain / |A(e^jw)| with
// gain = sqrt(prediction_error), which puts the envelope on the same scale as
// the frame's DFT magnitude.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spectroforge/error.hpp"
#include "spectroforge/signal_io.hpp"
#include "spectroforge/spectrum.hpp"

namespace spectroforge {

struct LpcModel {
  int order = 0;
  std::vector<double> coefficients;  // a[1..p]
  std::vector<double> reflection;    // k[1..p] from the recursion
  double gain = 0.0;
  double prediction_error = 0.0;
  std::size_t frame_index = 0;
};

struct Formant {
  double frequency_hz = 0.0;
  double bandwidth_hz = 0.0;
  double magnitude = 0.0;
};

/// r[k] = sum_n x[n] x[n+k] for k = 0..max_lag.
inline std::vector<double> autocorrelate(std::span<const double> x, std::size_t max_lag) {
  if (max_lag >= x.size()) {
    throw InvalidArgument("max lag " + std::to_string(max_lag) + " must be below frame length " +
                          std::to_string(x.size()));
  }
  std::vector<double> r(max_lag + 1, 0.0);
  const std::size_t n = x.size();
  for (std::size_t k = 0; k <= max_lag; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i + k < n; ++i) acc += x[i] * x[i + k];
    r[k] = acc;
  }
  return r;
}

inline std::vector<double> autocorrelate(const Frame& frame, std::size_t max_lag) {
  return autocorrelate(std::span<const double>(frame.samples), max_lag);
}

/// Solves the Toeplitz normal equations R a = r[1..p] by the Levinson-Durbin
/// recursion. Throws DegenerateFrame when r[0] <= 0 or when the recursion
/// loses positive-definiteness (|k| >= 1 or error <= 0).
inline LpcModel levinson_durbin(std::span<const double> r, int order) {
  if (order < 0) throw InvalidArgument("negative LPC order");
  if (r.empty() || static_cast<std::size_t>(order) > r.size() - 1) {
    throw InvalidArgument("LPC order " + std::to_string(order) +
                          " needs at least order+1 autocorrelation lags");
  }
  if (!(r[0] > 0.0)) throw DegenerateFrame("zero-energy frame");

  LpcModel m;
  m.order = order;
  m.coefficients.assign(static_cast<std::size_t>(order), 0.0);
  m.reflection.assign(static_cast<std::size_t>(order), 0.0);
  std::vector<double> prev(static_cast<std::size_t>(order), 0.0);
  std::vector<double>& a = m.coefficients;

  double err = r[0];
  for (int i = 1; i <= order; ++i) {
    double acc = r[static_cast<std::size_t>(i)];
    for (int j = 1; j < i; ++j) {
      acc -= a[static_cast<std::size_t>(j - 1)] * r[static_cast<std::size_t>(i - j)];
    }
    const double k = acc / err;
    if (!(std::abs(k) < 1.0)) throw DegenerateFrame("reflection coefficient outside unit circle");
    m.reflection[static_cast<std::size_t>(i - 1)] = k;

    std::copy_n(a.begin(), i - 1, prev.begin());
    a[static_cast<std::size_t>(i - 1)] = k;
    for (int j = 1; j < i; ++j) {
      a[static_cast<std::size_t>(j - 1)] =
          prev[static_cast<std::size_t>(j - 1)] - k * prev[static_cast<std::size_t>(i - j - 1)];
    }
    err *= (1.0 - k * k);
    if (!(err > 0.0)) throw DegenerateFrame("prediction error became non-positive");
  }
  m.prediction_error = err;
  m.gain = std::sqrt(err);
  return m;
}

/// Relative white-noise floor added to r[0] before the recursion.
inline constexpr double kAutocorrelationFloor = 1e-9;

/// autocorrelate + floor + levinson_durbin for one windowed frame.
inline LpcModel analyze_frame(const Frame& frame, int order) {
  std::vector<double> r = autocorrelate(frame, static_cast<std::size_t>(order));
  r[0] += kAutocorrelationFloor * r[0];
  LpcModel m = levinson_durbin(r, order);
  m.frame_index = frame.frame_index;
  return m;
}

/// A(e^{jw}) at angular frequency w (radians per sample).
inline std::complex<double> inverse_filter_response(const LpcModel& model, double w) {
  std::complex<double> acc(1.0, 0.0);
  for (std::size_t i = 0; i < model.coefficients.size(); ++i) {
    acc -= model.coefficients[i] * std::polar(1.0, -w * static_cast<double>(i + 1));
  }
  return acc;
}

/// gain / |A(e^{jw})| evaluated at frequency `hz`.
inline double envelope_at(const LpcModel& model, double hz, double sample_rate) {
  const double w = 2.0 * std::numbers::pi * hz / sample_rate;
  return model.gain / std::max(std::abs(inverse_filter_response(model, w)), 1e-300);
}

/// Samples gain / |A| on bins 0..fft_size/2.
inline SpectralEnvelope envelope(const LpcModel& model, std::size_t fft_size, double sample_rate) {
  SpectralEnvelope env = make_grid(fft_size, sample_rate);
  if (fft_size < 2 * model.coefficients.size()) {
    throw InvalidArgument("fft size must be at least twice the LPC order");
  }
  // Twiddle table indexed by (k * i) mod fft_size keeps every bin exact to
  // the table's rounding instead of accumulating phase error.
  thread_local std::vector<std::complex<double>> twiddle;
  if (twiddle.size() != fft_size) {
    twiddle.resize(fft_size);
    for (std::size_t m = 0; m < fft_size; ++m) {
      twiddle[m] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(m) /
                                       static_cast<double>(fft_size));
    }
  }
  const std::size_t mask = fft_size - 1;
  for (std::size_t k = 0; k < env.magnitudes.size(); ++k) {
    std::complex<double> acc(1.0, 0.0);
    for (std::size_t i = 0; i < model.coefficients.size(); ++i) {
      acc -= model.coefficients[i] * twiddle[(k * (i + 1)) & mask];
    }
    env.magnitudes[k] = model.gain / std::max(std::abs(acc), 1e-300);
  }
  return env;
}

inline constexpr double kResidualEpsilon = 1e-10;

/// |DFT(frame)| / max(env, 1e-10) per bin. The frame is expected to be
/// windowed already and `env` to come from the same frame and fft size.
inline std::vector<double> residual_spectrum(std::span<const double> frame,
                                             const SpectralEnvelope& env, std::size_t fft_size) {
  if (env.size() != fft_size / 2 + 1) throw InvalidArgument("envelope/fft size mismatch");
  const SpectralEnvelope mag = magnitude_spectrum(frame, fft_size, 2.0 * env.nyquist_hz);
  std::vector<double> out(mag.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = mag.magnitudes[k] / std::max(env.magnitudes[k], kResidualEpsilon);
  }
  return out;
}

inline std::vector<double> residual_spectrum(const Frame& frame, const SpectralEnvelope& env,
                                             std::size_t fft_size) {
  return residual_spectrum(std::span<const double>(frame.samples), env, fft_size);
}

/// Minimum pole radius for a root of A(z) to count as a formant.
inline constexpr double kFormantMinRadius = 0.7;

/// Roots of A(z) via the companion-matrix eigenvalues. Throws
/// RootFindingError if the eigen-solver does not converge.
inline std::vector<std::complex<double>> lpc_roots(const LpcModel& model) {
  const auto p = static_cast<Eigen::Index>(model.coefficients.size());
  if (p == 0) return {};
  // z^p - a1 z^(p-1) - ... - ap
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) companion(0, i) = model.coefficients[static_cast<std::size_t>(i)];
  for (Eigen::Index i = 1; i < p; ++i) companion(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) throw RootFindingError("companion eigen-solver failed");
  const Eigen::VectorXcd ev = solver.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

/// Formant candidates from pole angles and radii, ascending by frequency.
inline std::vector<Formant> formants_from_poles(const LpcModel& model, double sample_rate) {
  std::vector<Formant> out;
  for (const std::complex<double>& z : lpc_roots(model)) {
    const double radius = std::abs(z);
    if (!(z.imag() > 0.0) || !(radius > kFormantMinRadius)) continue;
    Formant f;
    f.frequency_hz = std::arg(z) * sample_rate / (2.0 * std::numbers::pi);
    f.bandwidth_hz = -std::log(radius) * sample_rate / std::numbers::pi;
    f.magnitude = envelope_at(model, f.frequency_hz, sample_rate);
    out.push_back(f);
  }
  std::sort(out.begin(), out.end(),
            [](const Formant& a, const Formant& b) { return a.frequency_hz < b.frequency_hz; });
  return out;
}

}  // namespace spectroforge
