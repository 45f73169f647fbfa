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

#include <gtest/gtest.h>

#include <numeric>

#include "lidtsm/features.hpp"
#include "test_util.hpp"
#include "toeplitz_oracle.hpp"

namespace lidtsm::features {
namespace {

FeatureMatrix from_rows(const std::vector<std::vector<double>> &rows) {
  FeatureMatrix f;
  f.values = Matrix<double>(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (size_t t = 0; t < rows.size(); ++t)
    for (size_t c = 0; c < rows[t].size(); ++c) f.values(t, c) = rows[t][c];
  return f;
}

FeatureMatrix random_matrix(size_t t, size_t d, uint64_t seed) {
  Rng rng(seed);
  FeatureMatrix f;
  f.values = Matrix<double>(t, d);
  for (auto &v : f.values.data) v = rng.uniform(-3, 5);
  return f;
}

TEST(LevinsonTest, OrderOneHandExample) {
  const std::vector<double> r = {1.0, 0.5};
  const auto lpc = levinson_durbin(r, 1);
  ASSERT_EQ(lpc.coeffs.size(), 1u);
  EXPECT_NEAR(lpc.coeffs[0], -0.5, 1e-15);
  EXPECT_NEAR(lpc.error, 0.75, 1e-15);
}

TEST(LevinsonTest, MatchesDenseToeplitzSolveOnWhiteNoise) {
  const auto x = testing::noise(16000, 42).samples;
  const auto r = testing::autocorrelation(x, 16);
  const auto lpc = levinson_durbin(r, 16);
  const auto dense = testing::solve_toeplitz_dense(r, 16);
  for (size_t k = 0; k < 16; ++k) EXPECT_NEAR(lpc.coeffs[k], dense[k], 1e-8);
  double err = r[0];
  for (size_t k = 0; k < 16; ++k) err += lpc.coeffs[k] * r[k + 1];
  EXPECT_NEAR(lpc.error, err, 1e-9 * r[0]);
}

TEST(LevinsonTest, RandomPositiveDefiniteProperty) {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const size_t order = 1 + rng.below(20);
    std::vector<double> x(64 + rng.below(200));
    // Coloured noise so the systems are not trivially diagonal.
    double prev = 0.0;
    for (auto &v : x) {
      prev = 0.8 * prev + rng.normal();
      v = prev;
    }
    const auto r = testing::autocorrelation(x, order);
    const auto lpc = levinson_durbin(r, order);
    const auto dense = testing::solve_toeplitz_dense(r, order);
    for (size_t k = 0; k < order; ++k) ASSERT_NEAR(lpc.coeffs[k], dense[k], 1e-8) << trial;
  }
}

TEST(LevinsonTest, ZeroEnergyIsHandled) {
  const std::vector<double> r(5, 0.0);
  const auto lpc = levinson_durbin(r, 4);
  for (double a : lpc.coeffs) EXPECT_EQ(a, 0.0);
  EXPECT_THROW(levinson_durbin(r, 5), Error);
}

TEST(CepstrumTest, SinglePoleClosedForm) {
  // -ln(1 - 0.6 z^-1) = sum_n 0.6^n z^-n / n.
  LpcResult lpc;
  lpc.coeffs = {-0.6};
  lpc.error = 2.0;
  const auto c = lpc_to_cepstrum(lpc, 5);
  EXPECT_NEAR(c[0], std::log(2.0), 1e-15);
  for (int n = 1; n <= 5; ++n) EXPECT_NEAR(c[n], std::pow(0.6, n) / n, 1e-12);
}

TEST(PlpTest, ShapeAndFiniteness) {
  FrameConfig cfg;
  const auto f = compute_plp(testing::noise(16000, 3), cfg);
  EXPECT_EQ(f.num_frames(), 98u);  // 1 + (16000 - 400) / 160
  EXPECT_EQ(f.dim(), 17u);
  EXPECT_TRUE(f.values.all_finite());
}

TEST(PlpTest, SilenceGivesFloorCepstrum) {
  FrameConfig cfg;
  Waveform w;
  w.samples.assign(8000, 0.0);
  const auto f = compute_plp(w, cfg);
  const auto floor = floor_cepstrum(cfg);
  ASSERT_TRUE(f.values.all_finite());
  for (size_t t = 0; t < f.num_frames(); ++t)
    for (size_t c = 0; c < f.dim(); ++c) ASSERT_EQ(f.values(t, c), floor[c]);
}

TEST(PlpTest, TooShortThrows) {
  FrameConfig cfg;
  Waveform w;
  w.samples.assign(399, 0.1);
  EXPECT_THROW(compute_plp(w, cfg), Error);
  EXPECT_THROW(compute_pitch(w, cfg), Error);
}

TEST(PlpTest, DistinguishesResonances) {
  // Different spectral envelopes must produce clearly different cepstra.
  FrameConfig cfg;
  const auto a = compute_plp(testing::tone(500, 8000), cfg);
  const auto b = compute_plp(testing::tone(2500, 8000), cfg);
  double dist = 0.0;
  for (size_t c = 1; c < a.dim(); ++c) dist += std::pow(a.values(20, c) - b.values(20, c), 2);
  EXPECT_GT(dist, 0.5);
}

TEST(PitchTest, SinusoidAt200Hz) {
  FrameConfig cfg;
  const auto p = compute_pitch(testing::tone(200.0, 16000), cfg);
  for (size_t t = 5; t + 5 < p.num_frames(); ++t) {
    EXPECT_NEAR(std::exp(p.values(t, 0)), 200.0, 2.0) << t;
    EXPECT_GT(p.values(t, 1), 0.9);
    EXPECT_NEAR(p.values(t, 2), 0.0, 1e-3);
  }
}

TEST(PitchTest, PulseTrainFindsFundamental) {
  FrameConfig cfg;
  Waveform w;
  w.samples.assign(16000, 0.0);
  for (size_t i = 0; i < w.size(); i += 128) w.samples[i] = 0.8;  // 125 Hz
  const auto p = compute_pitch(w, cfg);
  for (size_t t = 5; t + 5 < p.num_frames(); ++t)
    EXPECT_NEAR(std::exp(p.values(t, 0)), 125.0, 2.0);
}

TEST(PitchTest, SilenceHasNoVoicing) {
  FrameConfig cfg;
  Waveform w;
  w.samples.assign(16000, 0.0);
  const auto p = compute_pitch(w, cfg);
  ASSERT_TRUE(p.values.all_finite());
  for (size_t t = 0; t < p.num_frames(); ++t) EXPECT_LE(p.values(t, 1), 0.1);
}

TEST(PitchTest, WhiteNoiseIsMostlyUnvoiced) {
  FrameConfig cfg;
  for (uint64_t seed : {1, 2, 3, 4, 5}) {
    const auto p = compute_pitch(testing::noise(16000, seed), cfg);
    double mean = 0.0;
    for (size_t t = 0; t < p.num_frames(); ++t) mean += p.values(t, 1);
    mean /= p.num_frames();
    EXPECT_LT(mean, 0.5) << seed;
  }
}

TEST(PitchTest, UnvoicedGapIsInterpolated) {
  FrameConfig cfg;
  auto w = testing::tone(150.0, 24000);
  for (size_t i = 8000; i < 16000; ++i) w.samples[i] = 0.0;
  const auto p = compute_pitch(w, cfg);
  for (size_t t = 0; t < p.num_frames(); ++t)
    EXPECT_NEAR(std::exp(p.values(t, 0)), 150.0, 3.0) << t;
}

TEST(DeltaTest, ConstantHasZeroDeltas) {
  const auto f = append_deltas(from_rows({{2, 3}, {2, 3}, {2, 3}, {2, 3}}));
  ASSERT_EQ(f.dim(), 6u);
  for (size_t t = 0; t < 4; ++t)
    for (size_t c = 2; c < 6; ++c) EXPECT_EQ(f.values(t, c), 0.0);
}

TEST(DeltaTest, LinearRampGivesSlope) {
  const double slope = 0.7;
  std::vector<std::vector<double>> rows;
  for (int t = 0; t < 20; ++t) rows.push_back({1.0 + slope * t});
  const auto f = append_deltas(from_rows(rows), 2);
  // Hand evaluation of sum_k k (x_{t+k} - x_{t-k}) / (2 sum_k k^2):
  // (1 * 2s + 2 * 4s) / (2 * 5) = s.
  for (size_t t = 2; t < 18; ++t) EXPECT_NEAR(f.values(t, 1), slope, 1e-12);
  for (size_t t = 4; t < 16; ++t) EXPECT_NEAR(f.values(t, 2), 0.0, 1e-12);
}

TEST(DeltaTest, TripledDimension) {
  EXPECT_EQ(append_deltas(random_matrix(5, 51, 1)).dim(), 153u);
  EXPECT_THROW(append_deltas(FeatureMatrix{}), Error);
}

TEST(DeltaTest, CommutesWithConcatenationOnInteriorFrames) {
  const auto a = random_matrix(30, 4, 2);
  const auto b = random_matrix(25, 4, 3);
  FeatureMatrix ab;
  ab.values = Matrix<double>(55, 4);
  std::copy(a.values.data.begin(), a.values.data.end(), ab.values.data.begin());
  std::copy(b.values.data.begin(), b.values.data.end(), ab.values.data.begin() + 120);
  const auto da = append_deltas(a), db = append_deltas(b), dab = append_deltas(ab);
  // Double deltas reach 4 frames; keep clear of both seams.
  for (size_t t = 4; t + 4 < 30; ++t)
    for (size_t c = 0; c < 12; ++c) ASSERT_NEAR(dab.values(t, c), da.values(t, c), 1e-12);
  for (size_t t = 4; t + 4 < 25; ++t)
    for (size_t c = 0; c < 12; ++c) ASSERT_NEAR(dab.values(30 + t, c), db.values(t, c), 1e-12);
}

TEST(CmvnTest, OwnStatsNormalize) {
  const auto f = random_matrix(200, 6, 4);
  const std::vector<FeatureMatrix> set = {f};
  const auto stats = estimate_cmvn(set);
  const auto g = apply_cmvn(f, stats);
  for (size_t c = 0; c < 6; ++c) {
    double mean = 0, var = 0;
    for (size_t t = 0; t < 200; ++t) mean += g.values(t, c);
    mean /= 200;
    for (size_t t = 0; t < 200; ++t) var += std::pow(g.values(t, c) - mean, 2);
    var /= 200;
    EXPECT_NEAR(mean, 0.0, 1e-6);
    EXPECT_NEAR(var, 1.0, 1e-4);
  }
}

TEST(CmvnTest, DuplicatedSetGivesSameStats) {
  const auto a = random_matrix(50, 3, 5), b = random_matrix(70, 3, 6);
  const std::vector<FeatureMatrix> once = {a, b}, twice = {a, b, a, b};
  const auto s1 = estimate_cmvn(once), s2 = estimate_cmvn(twice);
  for (size_t c = 0; c < 3; ++c) {
    EXPECT_NEAR(s1.mean[c], s2.mean[c], 1e-12);
    EXPECT_NEAR(s1.variance[c], s2.variance[c], 1e-12);
  }
  EXPECT_EQ(apply_cmvn(a, s1).values.rows, apply_cmvn(a, s2).values.rows);
}

TEST(CmvnTest, PooledStatsMatchHandComputation) {
  // Utterance 1: column values {1, 2, 3}; utterance 2: {10, 14}.
  // Pooled mean = 30 / 5 = 6; variance = (25 + 16 + 9 + 16 + 64) / 5 = 26.
  const std::vector<FeatureMatrix> set = {from_rows({{1, 0}, {2, 0}, {3, 0}}),
                                          from_rows({{10, 0}, {14, 0}})};
  const auto stats = estimate_cmvn(set);
  EXPECT_EQ(stats.frame_count, 5u);
  EXPECT_NEAR(stats.mean[0], 6.0, 1e-9);
  EXPECT_NEAR(stats.variance[0], 26.0, 1e-9);
  EXPECT_FALSE(stats.floored[0]);
  EXPECT_TRUE(stats.floored[1]);
  EXPECT_EQ(stats.variance[1], kVarianceFloor);
}

TEST(CmvnTest, InvertRecoversOriginal) {
  const auto f = random_matrix(40, 5, 8);
  const std::vector<FeatureMatrix> set = {f, random_matrix(10, 5, 9)};
  const auto stats = estimate_cmvn(set);
  const auto back = invert_cmvn(apply_cmvn(f, stats), stats);
  for (size_t i = 0; i < f.values.size(); ++i) ASSERT_NEAR(back.values.data[i], f.values.data[i], 1e-9);
}

TEST(CmvnTest, Errors) {
  EXPECT_THROW(estimate_cmvn(std::span<const FeatureMatrix>{}), Error);
  const std::vector<FeatureMatrix> mixed = {random_matrix(3, 2, 1), random_matrix(3, 3, 1)};
  EXPECT_THROW(estimate_cmvn(mixed), Error);
}

TEST(VadTest, SilenceKeepsGuardFrame) {
  FrameConfig cfg;
  Waveform w;
  w.samples.assign(16000, 0.0);
  const auto keep = energy_vad(w, cfg);
  EXPECT_GE(std::count(keep.begin(), keep.end(), true), 1);
}

TEST(VadTest, LeadingZerosAreSilent) {
  FrameConfig cfg;
  auto w = testing::tone(300.0, 32000);
  for (size_t i = 0; i < 16000; ++i) w.samples[i] = 0.0;
  const auto keep = energy_vad(w, cfg);
  // Frames lying entirely inside the zero half.
  size_t silent = 0, total = 0;
  for (size_t f = 0; f < keep.size(); ++f) {
    if (f * cfg.frame_shift() + cfg.frame_length() > 16000) break;
    ++total;
    silent += !keep[f];
  }
  EXPECT_GE(double(silent), 0.9 * total);
  for (size_t f = 101; f < keep.size(); ++f) EXPECT_TRUE(keep[f]);
}

TEST(VadTest, AllLoudKeepsEverything) {
  FrameConfig cfg;
  const auto keep = energy_vad(testing::noise(16000, 4, 0.5), cfg);
  EXPECT_EQ(size_t(std::count(keep.begin(), keep.end(), true)), keep.size());
  const auto tone_keep = energy_vad(testing::tone(440, 16000), cfg);
  EXPECT_EQ(size_t(std::count(tone_keep.begin(), tone_keep.end(), true)), tone_keep.size());
}

TEST(VadTest, FeatureColumnVariant) {
  const auto f = from_rows({{-30}, {-30}, {5}, {5.5}, {5}});
  const auto keep = energy_vad(f);
  EXPECT_EQ(keep, (std::vector<bool>{false, false, true, true, true}));
  const auto selected = select_frames(f, keep);
  EXPECT_EQ(selected.num_frames(), 3u);
  EXPECT_EQ(selected.values(1, 0), 5.5);
}

TEST(SpliceContextTest, Dimensions) {
  EXPECT_EQ(splice_context(random_matrix(7, 153, 1), 11).dim(), 1683u);
  EXPECT_THROW(splice_context(random_matrix(7, 3, 1), 4), Error);
}

TEST(SpliceContextTest, SingleFrameIsReplicated) {
  const auto f = from_rows({{1, 2, 3}});
  const auto s = splice_context(f, 5);
  ASSERT_EQ(s.dim(), 15u);
  for (size_t k = 0; k < 5; ++k)
    for (size_t c = 0; c < 3; ++c) EXPECT_EQ(s.values(0, 3 * k + c), c + 1.0);
}

TEST(SpliceContextTest, WidthOneIsIdentityAndCentreIsFrame) {
  const auto f = random_matrix(9, 4, 3);
  EXPECT_EQ(splice_context(f, 1).values, f.values);
  const auto s = splice_context(f, 3);
  for (size_t t = 1; t + 1 < 9; ++t)
    for (size_t c = 0; c < 4; ++c) {
      EXPECT_EQ(s.values(t, c), f.values(t - 1, c));
      EXPECT_EQ(s.values(t, 4 + c), f.values(t, c));
      EXPECT_EQ(s.values(t, 8 + c), f.values(t + 1, c));
    }
}

TEST(FrontEndTest, NeverEmitsNonFinite) {
  FrameConfig cfg;
  std::vector<Waveform> inputs;
  inputs.push_back(testing::noise(8000, 1, 1.0));
  Waveform silent;
  silent.samples.assign(8000, 0.0);
  inputs.push_back(silent);
  Waveform clipped;
  for (size_t i = 0; i < 8000; ++i) clipped.samples.push_back((i / 40) % 2 ? 1.0 : -1.0);
  inputs.push_back(clipped);
  Waveform impulsive;
  impulsive.samples.assign(8000, 0.0);
  impulsive.samples[4000] = 1.0;
  inputs.push_back(impulsive);
  Waveform dc;
  dc.samples.assign(8000, 0.3);
  inputs.push_back(dc);
  for (const auto &w : inputs) {
    const auto f = compute_features(w, cfg);
    EXPECT_EQ(f.dim(), cfg.feature_dim());
    EXPECT_TRUE(f.values.all_finite());
  }
}

TEST(FrontEndTest, FullScaleLayout) {
  FrameConfig cfg;
  cfg.cepstral_order = 49;
  EXPECT_EQ(cfg.feature_dim(), 153u);
  EXPECT_EQ(cfg.feature_dim() * 11, 1683u);
  const auto f = compute_features(testing::noise(4000, 2), cfg);
  EXPECT_EQ(f.dim(), 153u);
  EXPECT_TRUE(f.values.all_finite());
}

}  // namespace
}  // namespace lidtsm::features
