// lidtsm/synth.hpp

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

// Toy "languages": syllables of pulse-excited resonances. A language is a
// formant inventory plus syllable-rate and pitch ranges; every distinct
// formant centre across the corpus is one phone class (0 is silence).

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "lidtsm/audio_io.hpp"
#include "lidtsm/error.hpp"
#include "lidtsm/util.hpp"

namespace lidtsm::synth {

struct SynthLanguageRecipe {
  std::string name;
  std::vector<double> formants;    // Hz, one per phone
  std::vector<double> bandwidths;  // Hz, parallel to formants
  double min_syllable_rate = 3.0;  // syllables per second
  double max_syllable_rate = 4.0;
  double min_pitch = 100.0;  // Hz
  double max_pitch = 150.0;
  uint64_t seed = 0;

  void validate(int sample_rate) const {
    require(!name.empty(), ErrorCode::kConfig, "recipe without a name");
    require(!formants.empty() && formants.size() == bandwidths.size(), ErrorCode::kConfig,
            "recipe " + name + " needs one bandwidth per formant");
    const double nyquist = sample_rate / 2.0;
    for (size_t k = 0; k < formants.size(); ++k) {
      require(formants[k] > 0.0 && formants[k] < nyquist, ErrorCode::kConfig,
              "recipe " + name + ": formant " + std::to_string(formants[k]) +
                  " Hz is not below Nyquist");
      require(bandwidths[k] > 0.0 && bandwidths[k] < nyquist, ErrorCode::kConfig,
              "recipe " + name + ": bad bandwidth");
    }
    require(min_syllable_rate > 0.0 && max_syllable_rate >= min_syllable_rate, ErrorCode::kConfig,
            "recipe " + name + ": bad syllable rate range");
    require(min_pitch > 0.0 && max_pitch >= min_pitch && max_pitch < nyquist, ErrorCode::kConfig,
            "recipe " + name + ": bad pitch range");
  }
};

/// Three languages with partly shared phones and overlapping prosody.
inline std::vector<SynthLanguageRecipe> default_recipes() {
  return {
      {"lang-a", {400, 800, 1600, 2400}, {80, 100, 120, 150}, 3.0, 4.0, 100, 150, 101},
      {"lang-b", {600, 1000, 1600, 2800}, {90, 100, 120, 160}, 4.0, 5.5, 130, 190, 202},
      {"lang-c", {400, 1200, 2000, 2800}, {80, 110, 130, 160}, 2.5, 3.5, 170, 240, 303},
  };
}

/// Sorted distinct formant centres; phone class of a centre = 1 + its index.
inline std::vector<double> phone_inventory(const std::vector<SynthLanguageRecipe> &recipes) {
  std::vector<double> all;
  for (const auto &r : recipes) all.insert(all.end(), r.formants.begin(), r.formants.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return all;
}

inline int phone_class(const std::vector<double> &inventory, double formant) {
  const auto it = std::lower_bound(inventory.begin(), inventory.end(), formant);
  require(it != inventory.end() && *it == formant, ErrorCode::kInvalidArgument,
          "formant not in inventory");
  return 1 + static_cast<int>(it - inventory.begin());
}

struct PhoneSegment {
  double start = 0.0;  // seconds
  double end = 0.0;
  int phone = 0;
};

struct SynthUtterance {
  Waveform wave;
  std::vector<PhoneSegment> phones;
};

namespace detail {

constexpr double kTwoPi = 6.283185307179586;
constexpr double kGapNoise = 1e-3;
constexpr double kVoicedFraction = 0.75;
constexpr double kAspiration = 0.05;
constexpr double kPeak = 0.7;

// Two-pole resonator with unit gain at the centre frequency.
struct Resonator {
  double a1 = 0, a2 = 0, gain = 1, y1 = 0, y2 = 0;
  Resonator(double f, double bw, double fs) {
    const double r = std::exp(-M_PI * bw / fs);
    const double w = kTwoPi * f / fs;
    a1 = -2.0 * r * std::cos(w);
    a2 = r * r;
    const double re = 1.0 + a1 * std::cos(w) + a2 * std::cos(2 * w);
    const double im = -a1 * std::sin(w) - a2 * std::sin(2 * w);
    gain = std::sqrt(re * re + im * im);
  }
  double operator()(double x) {
    const double y = gain * x - a1 * y1 - a2 * y2;
    y2 = y1;
    y1 = y;
    return y;
  }
};

}  // namespace detail

/// One utterance of `duration_s` seconds. Leading and trailing pauses give
/// the VAD something to remove.
inline SynthUtterance synthesize_utterance(const SynthLanguageRecipe &recipe,
                                           const std::vector<double> &inventory,
                                           double duration_s, uint64_t seed,
                                           int sample_rate = 16000) {
  using namespace detail;
  recipe.validate(sample_rate);
  require(duration_s > 0.0, ErrorCode::kInvalidArgument, "duration must be positive");
  Rng rng(seed);
  const double fs = sample_rate;
  const size_t total = static_cast<size_t>(std::llround(duration_s * fs));
  SynthUtterance out;
  out.wave.sample_rate = sample_rate;
  out.wave.samples.assign(total, 0.0);
  auto &y = out.wave.samples;
  for (double &v : y) v = kGapNoise * rng.normal();

  // Per-utterance speaker jitter.
  const double base_pitch = rng.uniform(recipe.min_pitch, recipe.max_pitch);
  const double formant_scale = rng.uniform(0.97, 1.03);
  const double rate = rng.uniform(recipe.min_syllable_rate, recipe.max_syllable_rate);

  size_t pos = static_cast<size_t>(rng.uniform(0.05, 0.2) * fs);
  const size_t stop = total > static_cast<size_t>(0.1 * fs) ? total - static_cast<size_t>(0.1 * fs) : 0;
  double phase = 0.0;
  while (pos < stop) {
    const size_t syllable = static_cast<size_t>(fs / (rate * rng.uniform(0.8, 1.25)));
    const size_t voiced = std::min(static_cast<size_t>(kVoicedFraction * syllable), stop - pos);
    const size_t k = rng.below(recipe.formants.size());
    const double f = recipe.formants[k] * formant_scale;
    Resonator res(f, recipe.bandwidths[k], fs);
    const double f0_start = base_pitch * rng.uniform(0.9, 1.1);
    const double f0_end = f0_start * rng.uniform(0.85, 1.05);
    const double amp = rng.uniform(0.6, 1.0);
    const double ramp = 0.01 * fs;
    for (size_t n = 0; n < voiced; ++n) {
      const double u = static_cast<double>(n) / static_cast<double>(voiced);
      phase += (f0_start + (f0_end - f0_start) * u) / fs;
      double e = kAspiration * rng.normal();
      if (phase >= 1.0) {
        phase -= 1.0;
        e += 1.0;
      }
      const double dn = static_cast<double>(n), left = static_cast<double>(voiced - n);
      const double env = std::min({1.0, dn / ramp, left / ramp});
      y[pos + n] += amp * env * res(e);
    }
    out.phones.push_back({pos / fs, (pos + voiced) / fs, phone_class(inventory, recipe.formants[k])});
    pos += syllable;
  }

  double peak = 0.0;
  for (double v : y) peak = std::max(peak, std::abs(v));
  if (peak > 0.0)
    for (double &v : y) v *= kPeak / peak;
  return out;
}

/// Phone class of each analysis frame: the segment containing the frame
/// centre, or 0.
inline std::vector<int> frame_labels(const std::vector<PhoneSegment> &phones, size_t num_frames,
                                     double frame_shift_s, double frame_length_s) {
  std::vector<int> labels(num_frames, 0);
  size_t seg = 0;
  for (size_t t = 0; t < num_frames; ++t) {
    const double centre = static_cast<double>(t) * frame_shift_s + 0.5 * frame_length_s;
    while (seg < phones.size() && phones[seg].end <= centre) ++seg;
    if (seg < phones.size() && phones[seg].start <= centre) labels[t] = phones[seg].phone;
  }
  return labels;
}

/// Keeps the first `seconds` of an utterance.
inline SynthUtterance truncate(const SynthUtterance &u, double seconds) {
  SynthUtterance out;
  out.wave.sample_rate = u.wave.sample_rate;
  const size_t n = std::min(u.wave.size(), static_cast<size_t>(std::llround(seconds * u.wave.sample_rate)));
  out.wave.samples.assign(u.wave.samples.begin(), u.wave.samples.begin() + static_cast<long>(n));
  for (auto seg : u.phones) {
    if (seg.start >= seconds) break;
    seg.end = std::min(seg.end, seconds);
    out.phones.push_back(seg);
  }
  return out;
}

}  // namespace lidtsm::synth
