// lidtsm/tsm.hpp

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

// Phase-vocoder time-scale modification.
//
// The input is analysed with hop S_i = round(alpha * S_r) and resynthesized
// with hop S_r, so the output lasts about length(x) / alpha samples. For each
// bin the heterodyned phase advance between consecutive analysis frames gives
// the instantaneous frequency, which is then integrated over the synthesis hop
// to obtain the output phase. Magnitudes are kept, so spectral content (pitch,
// formants) survives the change in duration.

#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "lidtsm/audio_io.hpp"
#include "lidtsm/dsp.hpp"
#include "lidtsm/error.hpp"

namespace lidtsm::tsm {

inline constexpr double kMinAlpha = 0.5;
inline constexpr double kMaxAlpha = 2.0;

struct StretchSpec {
  double alpha = 1.0;
  dsp::AnalysisConfig base;  // frame_length, fft_size and synthesis_hop are used
  bool phase_locking = false;

  void validate() const {
    require(std::isfinite(alpha) && alpha >= kMinAlpha && alpha <= kMaxAlpha,
            ErrorCode::kInvalidArgument,
            "alpha " + std::to_string(alpha) + " outside [0.5, 2.0]");
    analysis_config().validate();
  }

  size_t analysis_hop() const {
    return static_cast<size_t>(std::lround(alpha * static_cast<double>(base.synthesis_hop)));
  }

  dsp::AnalysisConfig analysis_config() const {
    dsp::AnalysisConfig cfg = base;
    cfg.analysis_hop = analysis_hop();
    return cfg;
  }
};

/// Phase memory carried from one frame to the next.
struct PhaseState {
  std::vector<double> analysis_phase;   // previous frame's measured phase
  std::vector<double> synthesis_phase;  // accumulated output phase
};

namespace detail {

// Local magnitude maxima and, for every bin, the peak that owns it (bins are
// split at the lowest point between neighbouring peaks).
inline std::vector<size_t> peak_regions(std::span<const double> mag, std::vector<size_t> *peaks) {
  const size_t n = mag.size();
  peaks->clear();
  for (size_t k = 0; k < n; ++k) {
    const bool left = k == 0 || mag[k] > mag[k - 1];
    const bool right = k + 1 == n || mag[k] >= mag[k + 1];
    if (left && right) peaks->push_back(k);
  }
  // The first occurrence of the global maximum always qualifies, so peaks is
  // never empty for n > 0.
  std::vector<size_t> owner(n, 0);
  size_t start = 0;
  for (size_t p = 0; p < peaks->size(); ++p) {
    size_t end = n;
    if (p + 1 < peaks->size()) {
      const size_t a = (*peaks)[p], b = (*peaks)[p + 1];
      size_t valley = a;
      for (size_t k = a; k <= b; ++k)
        if (mag[k] < mag[valley]) valley = k;
      end = valley + 1;
    }
    for (size_t k = start; k < end; ++k) owner[k] = (*peaks)[p];
    start = end;
  }
  return owner;
}

}  // namespace detail

/// Stretches the waveform in time by 1/alpha while preserving its spectrum.
inline Waveform time_stretch(const Waveform &x, const StretchSpec &spec) {
  spec.validate();
  const auto cfg = spec.analysis_config();
  require(x.size() >= cfg.frame_length, ErrorCode::kTooShort,
          "input shorter than one analysis frame");

  auto analysis = dsp::stft(x, cfg);
  const size_t bins = cfg.num_bins();
  const double hop_in = static_cast<double>(cfg.analysis_hop);
  const double hop_out = static_cast<double>(cfg.synthesis_hop);

  std::vector<double> omega(bins);
  for (size_t k = 0; k < bins; ++k)
    omega[k] = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(cfg.fft_size);

  PhaseState state{std::vector<double>(bins), std::vector<double>(bins)};
  std::vector<double> mag(bins), phase(bins), freq(bins);
  std::vector<size_t> peaks;

  for (size_t f = 0; f < analysis.num_frames; ++f) {
    auto frame = analysis.frame(f);
    for (size_t k = 0; k < bins; ++k) {
      mag[k] = std::abs(frame[k]);
      phase[k] = std::arg(frame[k]);
    }
    if (f == 0) {
      state.synthesis_phase = phase;
    } else {
      for (size_t k = 0; k < bins; ++k) {
        const double delta =
            dsp::princarg(phase[k] - state.analysis_phase[k] - hop_in * omega[k]);
        freq[k] = omega[k] + delta / hop_in;
      }
      if (!spec.phase_locking) {
        for (size_t k = 0; k < bins; ++k) state.synthesis_phase[k] += hop_out * freq[k];
      } else {
        const auto owner = detail::peak_regions(mag, &peaks);
        std::vector<double> next(bins);
        for (size_t p : peaks) next[p] = state.synthesis_phase[p] + hop_out * freq[p];
        for (size_t k = 0; k < bins; ++k) {
          const size_t p = owner[k];
          if (p != k) next[k] = next[p] + phase[k] - phase[p];
        }
        state.synthesis_phase = std::move(next);
      }
    }
    state.analysis_phase = phase;
    for (size_t k = 0; k < bins; ++k) frame[k] = std::polar(mag[k], state.synthesis_phase[k]);
  }

  Waveform y;
  y.sample_rate = x.sample_rate;
  y.samples = dsp::istft(analysis);
  return y;
}

inline Waveform time_stretch(const Waveform &x, double alpha) {
  StretchSpec spec;
  spec.alpha = alpha;
  return time_stretch(x, spec);
}

/// Concatenates x with its stretched copies, original first, then in the
/// order of `alphas`.
inline Waveform splice_rates(const Waveform &x, std::span<const double> alphas,
                             const StretchSpec &base = {}) {
  Waveform out = x;
  for (double alpha : alphas) {
    StretchSpec spec = base;
    spec.alpha = alpha;
    const auto y = time_stretch(x, spec);
    out.samples.insert(out.samples.end(), y.samples.begin(), y.samples.end());
  }
  return out;
}

}  // namespace lidtsm::tsm
