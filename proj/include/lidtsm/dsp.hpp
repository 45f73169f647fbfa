// lidtsm/dsp.hpp

// Copyright 2026  The lidtsm Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "lidtsm/audio_io.hpp"
#include "lidtsm/error.hpp"

namespace lidtsm::dsp {

using Complex = std::complex<double>;

inline bool is_power_of_two(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline size_t next_power_of_two(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// In-place iterative radix-2 FFT. `inverse` computes the unnormalized
/// inverse transform (caller divides by N).
inline void fft(std::span<Complex> data, bool inverse = false) {
  const size_t n = data.size();
  require(is_power_of_two(n), ErrorCode::kInvalidArgument, "FFT size must be a power of two");
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }
  const double sign = inverse ? 1.0 : -1.0;
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
    const size_t half = len / 2;
    // Twiddles computed directly rather than by recurrence to keep error O(eps).
    std::vector<Complex> tw(half);
    for (size_t k = 0; k < half; ++k) tw[k] = std::polar(1.0, ang * static_cast<double>(k));
    for (size_t i = 0; i < n; i += len) {
      for (size_t k = 0; k < half; ++k) {
        const Complex u = data[i + k];
        const Complex v = data[i + k + half] * tw[k];
        data[i + k] = u + v;
        data[i + k + half] = u - v;
      }
    }
  }
}

/// Spectrum bins 0..N/2 of a real sequence zero-padded to n_fft.
inline std::vector<Complex> rfft(std::span<const double> x, size_t n_fft) {
  require(x.size() <= n_fft, ErrorCode::kInvalidArgument, "rfft input longer than FFT size");
  std::vector<Complex> buf(n_fft);
  for (size_t i = 0; i < x.size(); ++i) buf[i] = x[i];
  fft(buf);
  buf.resize(n_fft / 2 + 1);
  return buf;
}

/// Real inverse of a half spectrum (bins 0..N/2); the conjugate-symmetric half
/// is reconstructed, and the imaginary parts of DC and Nyquist are ignored.
inline std::vector<double> irfft(std::span<const Complex> half, size_t n_fft) {
  require(half.size() == n_fft / 2 + 1, ErrorCode::kShapeMismatch, "irfft bin count");
  std::vector<Complex> buf(n_fft);
  buf[0] = half[0].real();
  buf[n_fft / 2] = half[n_fft / 2].real();
  for (size_t k = 1; k < n_fft / 2; ++k) {
    buf[k] = half[k];
    buf[n_fft - k] = std::conj(half[k]);
  }
  fft(buf, true);
  std::vector<double> out(n_fft);
  const double scale = 1.0 / static_cast<double>(n_fft);
  for (size_t i = 0; i < n_fft; ++i) out[i] = buf[i].real() * scale;
  return out;
}

/// Periodic Hann window, h(n) = 0.5 (1 - cos(2 pi n / L)).
inline std::vector<double> hann_window(size_t length) {
  require(length >= 2, ErrorCode::kInvalidArgument, "window length must be >= 2");
  std::vector<double> h(length);
  for (size_t n = 0; n < length; ++n)
    h[n] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                 static_cast<double>(length)));
  return h;
}

struct AnalysisConfig {
  size_t frame_length = 2048;
  size_t analysis_hop = 512;
  size_t synthesis_hop = 512;
  size_t fft_size = 2048;

  void validate() const {
    require(frame_length >= 2, ErrorCode::kInvalidArgument, "frame length must be >= 2");
    require(analysis_hop > 0 && analysis_hop <= frame_length, ErrorCode::kInvalidArgument,
            "analysis hop must be in (0, L]");
    require(synthesis_hop > 0 && synthesis_hop <= frame_length, ErrorCode::kInvalidArgument,
            "synthesis hop must be in (0, L]");
    require(fft_size >= frame_length && is_power_of_two(fft_size), ErrorCode::kInvalidArgument,
            "FFT size must be a power of two >= L");
  }

  size_t num_bins() const { return fft_size / 2 + 1; }
};

/// Frame x bin grid of complex STFT values, row-major by frame.
struct ComplexSpectrogram {
  AnalysisConfig config;
  size_t num_frames = 0;
  std::vector<Complex> values;

  size_t num_bins() const { return config.num_bins(); }
  std::span<Complex> frame(size_t i) {
    return std::span(values).subspan(i * num_bins(), num_bins());
  }
  std::span<const Complex> frame(size_t i) const {
    return std::span(values).subspan(i * num_bins(), num_bins());
  }
  Complex &at(size_t frame_index, size_t bin) { return values[frame_index * num_bins() + bin]; }
  const Complex &at(size_t frame_index, size_t bin) const {
    return values[frame_index * num_bins() + bin];
  }
};

/// Number of analysis frames: the full frames plus one zero-padded frame
/// holding any leftover tail samples.
inline size_t stft_frame_count(size_t signal_length, const AnalysisConfig &cfg) {
  if (signal_length < cfg.frame_length) return 0;
  const size_t span = signal_length - cfg.frame_length;
  return span / cfg.analysis_hop + 1 + (span % cfg.analysis_hop != 0 ? 1 : 0);
}

inline ComplexSpectrogram stft(std::span<const double> x, const AnalysisConfig &cfg) {
  cfg.validate();
  require(x.size() >= cfg.frame_length, ErrorCode::kTooShort,
          "signal shorter than one analysis frame");
  const auto window = hann_window(cfg.frame_length);
  ComplexSpectrogram spec;
  spec.config = cfg;
  spec.num_frames = stft_frame_count(x.size(), cfg);
  spec.values.resize(spec.num_frames * cfg.num_bins());
  std::vector<double> frame(cfg.frame_length);
  for (size_t f = 0; f < spec.num_frames; ++f) {
    const size_t start = f * cfg.analysis_hop;
    for (size_t n = 0; n < cfg.frame_length; ++n) {
      const size_t idx = start + n;
      frame[n] = idx < x.size() ? x[idx] * window[n] : 0.0;
    }
    const auto bins = rfft(frame, cfg.fft_size);
    std::copy(bins.begin(), bins.end(), spec.frame(f).begin());
  }
  return spec;
}

inline ComplexSpectrogram stft(const Waveform &x, const AnalysisConfig &cfg) {
  return stft(std::span<const double>(x.samples), cfg);
}

inline constexpr double kEnvelopeFloor = 1e-8;

/// Weighted overlap-add synthesis at the synthesis hop: every frame is
/// inverse transformed, re-windowed, summed, and divided by the accumulated
/// squared-window envelope.
inline std::vector<double> istft(const ComplexSpectrogram &spec) {
  const auto &cfg = spec.config;
  cfg.validate();
  require(spec.num_frames > 0, ErrorCode::kEmptyInput, "empty spectrogram");
  require(spec.values.size() == spec.num_frames * cfg.num_bins(), ErrorCode::kShapeMismatch,
          "spectrogram value count does not match frames x bins");
  const auto window = hann_window(cfg.frame_length);
  const size_t out_len = (spec.num_frames - 1) * cfg.synthesis_hop + cfg.frame_length;
  std::vector<double> out(out_len, 0.0);
  std::vector<double> envelope(out_len, 0.0);
  for (size_t f = 0; f < spec.num_frames; ++f) {
    const auto frame = irfft(spec.frame(f), cfg.fft_size);
    const size_t start = f * cfg.synthesis_hop;
    for (size_t n = 0; n < cfg.frame_length; ++n) {
      out[start + n] += frame[n] * window[n];
      envelope[start + n] += window[n] * window[n];
    }
  }
  for (size_t i = 0; i < out_len; ++i) out[i] /= std::max(envelope[i], kEnvelopeFloor);
  return out;
}

/// Wraps a phase to (-pi, pi].
inline double princarg(double phase) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double wrapped = phase - two_pi * std::floor(phase / two_pi + 0.5);
  if (wrapped <= -std::numbers::pi) wrapped += two_pi;
  if (wrapped > std::numbers::pi) wrapped -= two_pi;
  return wrapped;
}

/// Peak frequency (Hz) of a real signal from a Hann-windowed, zero-padded FFT
/// with parabolic interpolation on the log magnitude.
inline double dominant_frequency(std::span<const double> x, double sample_rate,
                                 size_t min_fft = 8192) {
  require(!x.empty(), ErrorCode::kEmptyInput, "dominant_frequency of an empty signal");
  const size_t n_fft = next_power_of_two(std::max(min_fft, x.size()));
  const auto h = hann_window(std::max<size_t>(x.size(), 2));
  std::vector<double> windowed(x.size());
  for (size_t i = 0; i < x.size(); ++i) windowed[i] = x[i] * h[i];
  const auto spec = rfft(windowed, n_fft);
  size_t best = 1;
  for (size_t k = 1; k + 1 < spec.size(); ++k)
    if (std::abs(spec[k]) > std::abs(spec[best])) best = k;
  double offset = 0.0;
  if (best > 0 && best + 1 < spec.size()) {
    const double a = std::log(std::abs(spec[best - 1]) + 1e-300);
    const double b = std::log(std::abs(spec[best]) + 1e-300);
    const double c = std::log(std::abs(spec[best + 1]) + 1e-300);
    const double denom = a - 2.0 * b + c;
    if (denom < 0.0) offset = 0.5 * (a - c) / denom;
  }
  return (static_cast<double>(best) + offset) * sample_rate / static_cast<double>(n_fft);
}

}  // namespace lidtsm::dsp
