// lidtsm/features.hpp

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

// Acoustic front end: PLP cepstra, autocorrelation pitch, regression deltas,
// global CMVN, an energy VAD, and context splicing.

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lidtsm/audio_io.hpp"
#include "lidtsm/dsp.hpp"
#include "lidtsm/error.hpp"
#include "lidtsm/matrix.hpp"

namespace lidtsm::features {

struct FrameConfig {
  int sample_rate = kDefaultSampleRate;
  double frame_length_ms = 25.0;
  double frame_shift_ms = 10.0;
  double preemphasis = 0.97;
  int cepstral_order = 16;  // P; PLP output has P + 1 columns (c0..cP)
  int num_bands = 21;       // bark-spaced critical bands
  double band_floor = 1e-10;
  // Pitch search band and analysis window.
  double min_f0 = 60.0;
  double max_f0 = 400.0;
  double pitch_window_ms = 40.0;
  double voicing_threshold = 0.45;
  int delta_window = 2;

  size_t frame_length() const {
    return static_cast<size_t>(std::lround(frame_length_ms * sample_rate / 1000.0));
  }
  size_t frame_shift() const {
    return static_cast<size_t>(std::lround(frame_shift_ms * sample_rate / 1000.0));
  }
  double frame_rate() const { return 1000.0 / frame_shift_ms; }
  size_t num_frames(size_t num_samples) const {
    if (num_samples < frame_length()) return 0;
    return 1 + (num_samples - frame_length()) / frame_shift();
  }
  size_t plp_dim() const { return static_cast<size_t>(cepstral_order) + 1; }
  /// PLP with deltas and double deltas, plus three pitch features.
  size_t feature_dim() const { return 3 * plp_dim() + 3; }

  void validate() const {
    require(sample_rate > 0, ErrorCode::kInvalidArgument, "sample rate must be positive");
    require(frame_length() >= 2 && frame_shift() >= 1, ErrorCode::kInvalidArgument,
            "bad frame geometry");
    require(cepstral_order >= 1, ErrorCode::kInvalidArgument, "cepstral order must be >= 1");
    require(num_bands >= 2, ErrorCode::kInvalidArgument, "need at least two bands");
    require(min_f0 > 0 && max_f0 > min_f0 && max_f0 < sample_rate / 2.0,
            ErrorCode::kInvalidArgument, "bad pitch range");
  }
};

struct FeatureMatrix {
  Matrix<double> values;
  double frame_rate = 100.0;
  std::string utterance_id;
  std::optional<std::string> language_label;

  size_t num_frames() const { return values.rows; }
  size_t dim() const { return values.cols; }
};

// ---------------------------------------------------------------------------
// Linear prediction

/// Predictor polynomial A(z) = 1 + sum_k a_k z^-k and its residual energy.
struct LpcResult {
  std::vector<double> coeffs;  // a_1..a_p
  double error = 0.0;
};

/// Levinson-Durbin recursion on autocorrelation r[0..order]. Solves the
/// Toeplitz normal equations R a = -r. Stops early (leaving the remaining
/// coefficients zero) if the residual energy stops being positive.
inline LpcResult levinson_durbin(std::span<const double> r, size_t order) {
  require(order >= 1 && r.size() >= order + 1, ErrorCode::kInvalidArgument,
          "autocorrelation too short for the requested order");
  LpcResult out;
  out.coeffs.assign(order, 0.0);
  out.error = r[0];
  if (!(r[0] > 0.0)) return out;
  std::vector<double> prev(order, 0.0);
  auto &a = out.coeffs;
  for (size_t i = 1; i <= order; ++i) {
    double acc = r[i];
    for (size_t j = 1; j < i; ++j) acc += a[j - 1] * r[i - j];
    const double k = -acc / out.error;
    prev = a;
    a[i - 1] = k;
    for (size_t j = 1; j < i; ++j) a[j - 1] = prev[j - 1] + k * prev[i - j - 1];
    const double next_error = out.error * (1.0 - k * k);
    if (!(next_error > 0.0)) {
      // Singular: keep the order-(i-1) solution.
      a = prev;
      a[i - 1] = 0.0;
      break;
    }
    out.error = next_error;
  }
  return out;
}

/// Cepstrum c_0..c_n of the all-pole model sqrt(error) / A(z).
inline std::vector<double> lpc_to_cepstrum(const LpcResult &lpc, size_t num_ceps) {
  const auto &a = lpc.coeffs;
  const size_t p = a.size();
  std::vector<double> c(num_ceps + 1, 0.0);
  c[0] = std::log(lpc.error);
  for (size_t n = 1; n <= num_ceps; ++n) {
    double acc = n <= p ? -a[n - 1] : 0.0;
    for (size_t k = 1; k < n; ++k)
      if (n - k <= p) acc -= (static_cast<double>(k) / n) * c[k] * a[n - k - 1];
    c[n] = acc;
  }
  return c;
}

// ---------------------------------------------------------------------------
// PLP

namespace detail {

inline double hz_to_bark(double hz) { return 6.0 * std::asinh(hz / 600.0); }

// Critical-band masking curve over bark distance (band centre at 0).
inline double critical_band_weight(double dz) {
  if (dz < -1.3 || dz > 2.5) return 0.0;
  if (dz < -0.5) return std::pow(10.0, 2.5 * (dz + 0.5));
  if (dz <= 0.5) return 1.0;
  return std::pow(10.0, -(dz - 0.5));
}

inline double equal_loudness(double hz) {
  const double w2 = std::pow(2.0 * std::numbers::pi * hz, 2);
  return (w2 + 56.8e6) * w2 * w2 / (std::pow(w2 + 6.3e6, 2) * (w2 + 0.38e9));
}

struct PlpTables {
  size_t n_fft = 0;
  std::vector<double> window;
  Matrix<double> bands;  // num_bands x (n_fft/2+1), loudness pre-applied
};

inline PlpTables make_plp_tables(const FrameConfig &cfg) {
  PlpTables t;
  t.n_fft = dsp::next_power_of_two(cfg.frame_length());
  t.window = dsp::hann_window(cfg.frame_length());
  const size_t bins = t.n_fft / 2 + 1;
  const double nyquist_bark = hz_to_bark(cfg.sample_rate / 2.0);
  const size_t q = static_cast<size_t>(cfg.num_bands);
  t.bands = Matrix<double>(q, bins);
  for (size_t b = 0; b < q; ++b) {
    // Bands centred uniformly in bark, leaving half a step at each edge.
    const double centre = nyquist_bark * (static_cast<double>(b) + 0.5) / static_cast<double>(q);
    const double centre_hz = 600.0 * std::sinh(centre / 6.0);
    const double loud = equal_loudness(centre_hz);
    for (size_t k = 0; k < bins; ++k) {
      const double hz = static_cast<double>(k) * cfg.sample_rate / static_cast<double>(t.n_fft);
      t.bands(b, k) = loud * critical_band_weight(hz_to_bark(hz) - centre);
    }
  }
  return t;
}

// Autocorrelation r[0..order] of the compressed auditory spectrum: the band
// values are treated as samples of a symmetric spectrum over [0, pi] and
// inverse transformed with a type-I cosine transform.
inline std::vector<double> auditory_autocorrelation(std::span<const double> bands, size_t order) {
  const size_t m = bands.size() + 2;  // edge bands duplicated
  std::vector<double> s(m);
  s[0] = bands.front();
  std::copy(bands.begin(), bands.end(), s.begin() + 1);
  s[m - 1] = bands.back();
  std::vector<double> r(order + 1);
  const double denom = 2.0 * static_cast<double>(m - 1);
  for (size_t k = 0; k <= order; ++k) {
    double acc = s[0] + ((k % 2 == 0) ? s[m - 1] : -s[m - 1]);
    for (size_t j = 1; j + 1 < m; ++j)
      acc += 2.0 * s[j] * std::cos(std::numbers::pi * static_cast<double>(k * j) /
                                   static_cast<double>(m - 1));
    r[k] = acc / denom;
  }
  return r;
}

inline std::vector<double> plp_frame(std::span<const double> frame, const FrameConfig &cfg,
                                     const PlpTables &t) {
  const size_t len = frame.size();
  std::vector<double> buf(len);
  for (size_t n = 0; n < len; ++n) {
    const double prev = n > 0 ? frame[n - 1] : frame[0];
    buf[n] = (frame[n] - cfg.preemphasis * prev) * t.window[n];
  }
  const auto spec = dsp::rfft(buf, t.n_fft);
  std::vector<double> power(spec.size());
  for (size_t k = 0; k < spec.size(); ++k) power[k] = std::norm(spec[k]);
  std::vector<double> bands(static_cast<size_t>(cfg.num_bands));
  for (size_t b = 0; b < bands.size(); ++b) {
    double acc = 0.0;
    const auto weights = t.bands.row(b);
    for (size_t k = 0; k < power.size(); ++k) acc += weights[k] * power[k];
    bands[b] = std::cbrt(std::max(acc, cfg.band_floor));
  }
  const size_t order = static_cast<size_t>(cfg.cepstral_order);
  const auto r = auditory_autocorrelation(bands, order);
  return lpc_to_cepstrum(levinson_durbin(r, order), order);
}

}  // namespace detail

/// Cepstrum emitted for a frame with no energy.
inline std::vector<double> floor_cepstrum(const FrameConfig &cfg) {
  const auto tables = detail::make_plp_tables(cfg);
  const std::vector<double> zeros(cfg.frame_length(), 0.0);
  return detail::plp_frame(zeros, cfg, tables);
}

inline FeatureMatrix compute_plp(const Waveform &w, const FrameConfig &cfg) {
  cfg.validate();
  require(w.sample_rate == cfg.sample_rate, ErrorCode::kInvalidArgument,
          "waveform sample rate does not match the frame config");
  const size_t frames = cfg.num_frames(w.size());
  require(frames >= 1, ErrorCode::kTooShort, "waveform shorter than one feature frame");
  const auto tables = detail::make_plp_tables(cfg);
  FeatureMatrix out;
  out.frame_rate = cfg.frame_rate();
  out.values = Matrix<double>(frames, cfg.plp_dim());
  const size_t len = cfg.frame_length(), shift = cfg.frame_shift();
  for (size_t f = 0; f < frames; ++f) {
    const auto ceps =
        detail::plp_frame(std::span<const double>(w.samples).subspan(f * shift, len), cfg, tables);
    std::copy(ceps.begin(), ceps.end(), out.values.row(f).begin());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Deltas

/// Regression deltas over +-window frames with edge replication.
inline Matrix<double> regression_deltas(const Matrix<double> &x, int window) {
  require(window >= 1, ErrorCode::kInvalidArgument, "delta window must be >= 1");
  const long t_max = static_cast<long>(x.rows) - 1;
  double norm = 0.0;
  for (int k = 1; k <= window; ++k) norm += 2.0 * k * k;
  Matrix<double> d(x.rows, x.cols);
  for (long t = 0; t <= t_max; ++t) {
    auto out = d.row(static_cast<size_t>(t));
    for (int k = 1; k <= window; ++k) {
      const auto ahead = x.row(static_cast<size_t>(std::min(t + k, t_max)));
      const auto behind = x.row(static_cast<size_t>(std::max(t - k, 0L)));
      for (size_t c = 0; c < x.cols; ++c) out[c] += k * (ahead[c] - behind[c]);
    }
    for (auto &v : out) v /= norm;
  }
  return d;
}

/// [x, delta(x), delta(delta(x))]; output dimension is 3 D.
inline FeatureMatrix append_deltas(const FeatureMatrix &f, int window = 2) {
  require(f.num_frames() >= 1, ErrorCode::kEmptyInput, "append_deltas on an empty matrix");
  const auto d1 = regression_deltas(f.values, window);
  const auto d2 = regression_deltas(d1, window);
  FeatureMatrix out = f;
  const size_t d = f.dim();
  out.values = Matrix<double>(f.num_frames(), 3 * d);
  for (size_t t = 0; t < f.num_frames(); ++t) {
    auto row = out.values.row(t);
    std::copy_n(f.values.row(t).begin(), d, row.begin());
    std::copy_n(d1.row(t).begin(), d, row.begin() + d);
    std::copy_n(d2.row(t).begin(), d, row.begin() + 2 * d);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pitch

namespace detail {

// Best normalized autocorrelation lag (fractional) and its peak value.
inline std::pair<double, double> pitch_lag(std::span<const double> x, size_t min_lag,
                                           size_t max_lag) {
  const size_t n = x.size();
  if (n <= max_lag + 1) return {0.0, 0.0};
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> y(n);
  for (size_t i = 0; i < n; ++i) y[i] = x[i] - mean;
  std::vector<double> energy(n + 1, 0.0);  // prefix sums of y^2
  for (size_t i = 0; i < n; ++i) energy[i + 1] = energy[i] + y[i] * y[i];
  if (energy[n] <= 1e-12) return {0.0, 0.0};

  std::vector<double> nccf(max_lag + 2, 0.0);
  for (size_t lag = min_lag > 0 ? min_lag - 1 : 0; lag <= max_lag + 1; ++lag) {
    const size_t m = n - lag;
    double cross = 0.0;
    for (size_t i = 0; i < m; ++i) cross += y[i] * y[i + lag];
    const double e0 = energy[m], e1 = energy[n] - energy[lag];
    nccf[lag] = e0 > 0 && e1 > 0 ? cross / std::sqrt(e0 * e1) : 0.0;
  }
  double best = -1.0;
  for (size_t lag = min_lag; lag <= max_lag; ++lag) best = std::max(best, nccf[lag]);
  if (best <= 0.0) return {0.0, 0.0};
  // Smallest-lag local maximum close to the global best, to avoid octave
  // errors on strongly periodic input.
  size_t chosen = min_lag;
  for (size_t lag = min_lag; lag <= max_lag; ++lag) {
    const bool local = nccf[lag] >= nccf[lag - 1] && nccf[lag] >= nccf[lag + 1];
    if (local && nccf[lag] >= 0.9 * best) {
      chosen = lag;
      break;
    }
  }
  const double a = nccf[chosen - 1], b = nccf[chosen], c = nccf[chosen + 1];
  const double denom = a - 2.0 * b + c;
  double offset = denom < 0.0 ? 0.5 * (a - c) / denom : 0.0;
  offset = std::clamp(offset, -0.5, 0.5);
  return {static_cast<double>(chosen) + offset, std::clamp(b, 0.0, 1.0)};
}

}  // namespace detail

/// Per frame: log pitch (Hz), voicing confidence in [0, 1], and delta log
/// pitch. Unvoiced frames carry pitch interpolated from voiced neighbours.
inline FeatureMatrix compute_pitch(const Waveform &w, const FrameConfig &cfg) {
  cfg.validate();
  const size_t frames = cfg.num_frames(w.size());
  require(frames >= 1, ErrorCode::kTooShort, "waveform shorter than one feature frame");
  const size_t len = cfg.frame_length(), shift = cfg.frame_shift();
  const size_t win = std::max(len, static_cast<size_t>(std::lround(
                                       cfg.pitch_window_ms * cfg.sample_rate / 1000.0)));
  const size_t min_lag = std::max<size_t>(
      2, static_cast<size_t>(std::floor(cfg.sample_rate / cfg.max_f0)));
  const size_t max_lag = static_cast<size_t>(std::ceil(cfg.sample_rate / cfg.min_f0));

  std::vector<double> log_pitch(frames, 0.0), conf(frames, 0.0);
  std::vector<bool> voiced(frames, false);
  std::vector<double> buf(win);
  for (size_t f = 0; f < frames; ++f) {
    // Window centred on the frame centre, zero-padded past the signal ends.
    const long centre = static_cast<long>(f * shift + len / 2);
    const long start = centre - static_cast<long>(win / 2);
    for (size_t i = 0; i < win; ++i) {
      const long idx = start + static_cast<long>(i);
      buf[i] = idx >= 0 && idx < static_cast<long>(w.size()) ? w.samples[idx] : 0.0;
    }
    const auto [lag, peak] = detail::pitch_lag(buf, min_lag, max_lag);
    conf[f] = peak;
    if (lag > 0.0 && peak >= cfg.voicing_threshold) {
      voiced[f] = true;
      log_pitch[f] = std::log(cfg.sample_rate / lag);
    }
  }

  // Fill unvoiced stretches by linear interpolation, replicating at the ends.
  const double fallback = std::log(std::sqrt(cfg.min_f0 * cfg.max_f0));
  long last = -1;
  for (size_t f = 0; f <= frames; ++f) {
    if (f < frames && !voiced[f]) continue;
    const long next = static_cast<long>(f);
    for (long g = last + 1; g < next; ++g) {
      double v;
      if (last < 0 && next >= static_cast<long>(frames)) {
        v = fallback;
      } else if (last < 0) {
        v = log_pitch[next];
      } else if (next >= static_cast<long>(frames)) {
        v = log_pitch[last];
      } else {
        const double t = static_cast<double>(g - last) / static_cast<double>(next - last);
        v = (1.0 - t) * log_pitch[last] + t * log_pitch[next];
      }
      log_pitch[g] = v;
    }
    last = next;
  }

  Matrix<double> track(frames, 1);
  for (size_t f = 0; f < frames; ++f) track(f, 0) = log_pitch[f];
  const auto delta = regression_deltas(track, cfg.delta_window);

  FeatureMatrix out;
  out.frame_rate = cfg.frame_rate();
  out.values = Matrix<double>(frames, 3);
  for (size_t f = 0; f < frames; ++f) {
    out.values(f, 0) = log_pitch[f];
    out.values(f, 1) = conf[f];
    out.values(f, 2) = delta(f, 0);
  }
  return out;
}

/// Full per-frame vector: PLP + deltas + double deltas, then the pitch triple.
inline FeatureMatrix compute_features(const Waveform &w, const FrameConfig &cfg) {
  const auto plp = append_deltas(compute_plp(w, cfg), cfg.delta_window);
  const auto pitch = compute_pitch(w, cfg);
  FeatureMatrix out;
  out.frame_rate = cfg.frame_rate();
  out.values = Matrix<double>(plp.num_frames(), plp.dim() + 3);
  for (size_t t = 0; t < plp.num_frames(); ++t) {
    auto row = out.values.row(t);
    std::copy(plp.values.row(t).begin(), plp.values.row(t).end(), row.begin());
    std::copy(pitch.values.row(t).begin(), pitch.values.row(t).end(), row.begin() + plp.dim());
  }
  return out;
}

// ---------------------------------------------------------------------------
// CMVN

inline constexpr double kVarianceFloor = 1e-8;

struct CmvnStats {
  std::vector<double> mean;
  std::vector<double> variance;
  std::vector<bool> floored;  // dimensions whose variance hit the floor
  size_t frame_count = 0;

  size_t dim() const { return mean.size(); }
};

/// Pooled global mean and variance over all frames of all matrices. The
/// accumulation order is fixed (matrix order, then frame order).
inline CmvnStats estimate_cmvn(std::span<const FeatureMatrix> set) {
  require(!set.empty(), ErrorCode::kEmptyInput, "estimate_cmvn needs at least one matrix");
  const size_t d = set.front().dim();
  CmvnStats stats;
  stats.mean.assign(d, 0.0);
  stats.variance.assign(d, 0.0);
  stats.floored.assign(d, false);
  for (const auto &f : set) {
    require(f.dim() == d, ErrorCode::kShapeMismatch, "inconsistent feature dimension");
    for (size_t t = 0; t < f.num_frames(); ++t) {
      const auto row = f.values.row(t);
      for (size_t c = 0; c < d; ++c) stats.mean[c] += row[c];
    }
    stats.frame_count += f.num_frames();
  }
  require(stats.frame_count > 0, ErrorCode::kEmptyInput, "estimate_cmvn over zero frames");
  const double n = static_cast<double>(stats.frame_count);
  for (auto &m : stats.mean) m /= n;
  for (const auto &f : set)
    for (size_t t = 0; t < f.num_frames(); ++t) {
      const auto row = f.values.row(t);
      for (size_t c = 0; c < d; ++c) stats.variance[c] += std::pow(row[c] - stats.mean[c], 2);
    }
  for (size_t c = 0; c < d; ++c) {
    stats.variance[c] /= n;
    if (stats.variance[c] < kVarianceFloor) {
      stats.variance[c] = kVarianceFloor;
      stats.floored[c] = true;
    }
  }
  return stats;
}

inline FeatureMatrix apply_cmvn(const FeatureMatrix &f, const CmvnStats &stats) {
  require(f.dim() == stats.dim(), ErrorCode::kShapeMismatch, "CMVN dimension mismatch");
  FeatureMatrix out = f;
  for (size_t t = 0; t < f.num_frames(); ++t) {
    auto row = out.values.row(t);
    for (size_t c = 0; c < row.size(); ++c)
      row[c] = (row[c] - stats.mean[c]) / std::sqrt(stats.variance[c]);
  }
  return out;
}

inline FeatureMatrix invert_cmvn(const FeatureMatrix &f, const CmvnStats &stats) {
  require(f.dim() == stats.dim(), ErrorCode::kShapeMismatch, "CMVN dimension mismatch");
  FeatureMatrix out = f;
  for (size_t t = 0; t < f.num_frames(); ++t) {
    auto row = out.values.row(t);
    for (size_t c = 0; c < row.size(); ++c)
      row[c] = row[c] * std::sqrt(stats.variance[c]) + stats.mean[c];
  }
  return out;
}

// ---------------------------------------------------------------------------
// VAD

struct VadConfig {
  double stddev_scale = 0.5;   // k in mean - k * stddev
  double dynamic_range_db = 30.0;  // frames this close to the loudest are always kept
  double energy_floor = 1e-10;
};

inline std::vector<double> frame_log_energy(const Waveform &w, const FrameConfig &cfg,
                                            double floor = 1e-10) {
  const size_t frames = cfg.num_frames(w.size());
  const size_t len = cfg.frame_length(), shift = cfg.frame_shift();
  std::vector<double> e(frames);
  for (size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (size_t n = 0; n < len; ++n) acc += std::pow(w.samples[f * shift + n], 2);
    e[f] = std::log(std::max(acc, floor));
  }
  return e;
}

/// A frame is silent when its log energy is below mean - k * stddev of the
/// utterance and also more than dynamic_range_db below the loudest frame.
/// At least one frame (the loudest) is always kept.
inline std::vector<bool> energy_vad(std::span<const double> log_energy, const VadConfig &vad = {}) {
  const size_t n = log_energy.size();
  std::vector<bool> keep(n, true);
  if (n == 0) return keep;
  double mean = 0.0;
  for (double e : log_energy) mean += e;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double e : log_energy) var += (e - mean) * (e - mean);
  const double stddev = std::sqrt(var / static_cast<double>(n));
  const double loudest = *std::max_element(log_energy.begin(), log_energy.end());
  const double threshold = mean - vad.stddev_scale * stddev;
  const double range = vad.dynamic_range_db * std::log(10.0) / 10.0;
  size_t kept = 0;
  for (size_t i = 0; i < n; ++i) {
    keep[i] = !(log_energy[i] < threshold && log_energy[i] < loudest - range);
    kept += keep[i];
  }
  if (kept == 0)
    keep[std::max_element(log_energy.begin(), log_energy.end()) - log_energy.begin()] = true;
  return keep;
}

inline std::vector<bool> energy_vad(const Waveform &w, const FrameConfig &cfg,
                                    const VadConfig &vad = {}) {
  const auto e = frame_log_energy(w, cfg, vad.energy_floor);
  return energy_vad(e, vad);
}

/// Uses one feature column (c0 by default) as the log-energy proxy.
inline std::vector<bool> energy_vad(const FeatureMatrix &f, const VadConfig &vad = {},
                                    size_t column = 0) {
  require(column < f.dim() || f.num_frames() == 0, ErrorCode::kInvalidArgument,
          "VAD column out of range");
  std::vector<double> e(f.num_frames());
  for (size_t t = 0; t < e.size(); ++t) e[t] = f.values(t, column);
  return energy_vad(e, vad);
}

inline FeatureMatrix select_frames(const FeatureMatrix &f, const std::vector<bool> &keep) {
  require(keep.size() == f.num_frames(), ErrorCode::kShapeMismatch, "mask length mismatch");
  FeatureMatrix out = f;
  const size_t kept = static_cast<size_t>(std::count(keep.begin(), keep.end(), true));
  out.values = Matrix<double>(kept, f.dim());
  size_t r = 0;
  for (size_t t = 0; t < keep.size(); ++t)
    if (keep[t]) std::copy_n(f.values.row(t).begin(), f.dim(), out.values.row(r++).begin());
  return out;
}

// ---------------------------------------------------------------------------
// Context splicing

/// Frame t becomes frames t-(M-1)/2 .. t+(M-1)/2 concatenated, with edge
/// replication. Output dimension is M D.
inline FeatureMatrix splice_context(const FeatureMatrix &f, size_t context) {
  require(context % 2 == 1, ErrorCode::kInvalidArgument, "context width must be odd");
  require(f.num_frames() >= 1, ErrorCode::kEmptyInput, "splice_context on an empty matrix");
  const long half = static_cast<long>(context / 2);
  const long t_max = static_cast<long>(f.num_frames()) - 1;
  const size_t d = f.dim();
  FeatureMatrix out = f;
  out.values = Matrix<double>(f.num_frames(), context * d);
  for (long t = 0; t <= t_max; ++t) {
    auto row = out.values.row(static_cast<size_t>(t));
    for (long k = -half; k <= half; ++k) {
      const long src = std::clamp(t + k, 0L, t_max);
      std::copy_n(f.values.row(static_cast<size_t>(src)).begin(), d,
                  row.begin() + static_cast<long>(d) * (k + half));
    }
  }
  return out;
}

}  // namespace lidtsm::features
