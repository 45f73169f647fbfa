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

#include <cmath>

#include "lidtsm/tsm.hpp"
#include "test_util.hpp"

namespace lidtsm::tsm {
namespace {

// Output length predicted by counting analysis frames by hand.
size_t brute_force_length(size_t n, double alpha) {
  const size_t hop_in = static_cast<size_t>(std::lround(alpha * 512));
  size_t frames = 0;
  for (size_t start = 0; start < n; start += hop_in) {
    if (start + 2048 <= n) {
      ++frames;
    } else {
      if (frames == 0 || (start - hop_in) + 2048 < n) ++frames;  // zero-padded tail
      break;
    }
  }
  return (frames - 1) * 512 + 2048;
}

TEST(TimeStretchTest, SlowDownLength) {
  const auto x = testing::noise(16000, 1);
  const auto y = time_stretch(x, 0.8);
  EXPECT_NEAR(double(y.size()), 20000.0, 2048.0);
  EXPECT_EQ(y.size(), brute_force_length(16000, 0.8));
}

TEST(TimeStretchTest, IdentityRateIsHighSnrCopy) {
  const auto x = testing::noise(16000, 2);
  const auto y = time_stretch(x, 1.0);
  ASSERT_GE(y.size(), x.size());
  EXPECT_GE(testing::snr_db(x.samples, y.samples, 2048, x.size() - 2048), 40.0);
}

TEST(TimeStretchTest, ToneKeepsItsFrequency) {
  const auto x = testing::tone(440.0, 16000);
  const auto y = time_stretch(x, 0.8);
  const double bin = 16000.0 / 8192.0;
  EXPECT_NEAR(dsp::dominant_frequency(y.samples, 16000.0, 8192), 440.0, bin);
}

TEST(TimeStretchTest, RejectsBadInput) {
  const auto x = testing::noise(16000, 3);
  EXPECT_THROW(time_stretch(x, 0.49), Error);
  EXPECT_THROW(time_stretch(x, 2.01), Error);
  EXPECT_THROW(time_stretch(x, std::nan("")), Error);
  EXPECT_THROW(time_stretch(testing::noise(2047, 3), 1.0), Error);
  EXPECT_NO_THROW(time_stretch(testing::noise(2048, 3), 0.5));
  EXPECT_NO_THROW(time_stretch(testing::noise(2048, 3), 2.0));
}

TEST(TimeStretchTest, LengthContractOverRandomInputs) {
  Rng rng(17);
  for (double alpha : {0.7, 0.8, 0.9, 1.1, 1.2, 1.3}) {
    for (int trial = 0; trial < 3; ++trial) {
      const size_t n = 8000 + rng.below(72000);
      const auto y = time_stretch(testing::noise(n, rng.next()), alpha);
      EXPECT_LE(std::abs(double(y.size()) - double(n) / alpha), 2048.0) << alpha << " " << n;
      EXPECT_EQ(y.size(), brute_force_length(n, alpha));
    }
  }
}

TEST(TimeStretchTest, FrequencyPreservedWithAndWithoutLocking) {
  for (bool locking : {false, true}) {
    for (double f : {100.0, 730.0, 2500.0, 4000.0}) {
      for (double alpha : {0.5, 0.8, 1.3, 2.0}) {
        StretchSpec spec;
        spec.alpha = alpha;
        spec.phase_locking = locking;
        const auto x = testing::tone(f, 24000);
        const auto y = time_stretch(x, spec);
        const double fx = dsp::dominant_frequency(x.samples, 16000.0, 65536);
        const double fy = dsp::dominant_frequency(y.samples, 16000.0, 65536);
        EXPECT_LT(std::abs(fy - fx) / fx, 0.01) << f << " " << alpha << " " << locking;
      }
    }
  }
}

TEST(TimeStretchTest, PhaseLockedIdentityIsHighSnr) {
  StretchSpec spec;
  spec.phase_locking = true;
  const auto x = testing::tone(300.0, 16000);
  const auto y = time_stretch(x, spec);
  EXPECT_GE(testing::snr_db(x.samples, y.samples, 2048, x.size() - 2048), 40.0);
}

TEST(TimeStretchTest, Deterministic) {
  const auto x = testing::noise(12345, 4);
  EXPECT_EQ(time_stretch(x, 1.2).samples, time_stretch(x, 1.2).samples);
}

TEST(SpliceTest, EmptyListIsIdentity) {
  const auto x = testing::noise(5000, 5);
  EXPECT_EQ(splice_rates(x, {}).samples, x.samples);
}

TEST(SpliceTest, LengthIsSumOfSegments) {
  const auto x = testing::noise(16000, 6);
  const std::vector<double> alphas = {0.8, 1.2};
  const auto y = splice_rates(x, alphas);
  EXPECT_NEAR(double(y.size()), 16000.0 + 20000.0 + 13333.0, 3 * 2048.0);
  EXPECT_EQ(y.size(), x.size() + time_stretch(x, 0.8).size() + time_stretch(x, 1.2).size());
}

TEST(SpliceTest, IdentityRateAppendsCopy) {
  const auto x = testing::noise(16000, 7);
  const std::vector<double> alphas = {1.0};
  const auto y = splice_rates(x, alphas);
  ASSERT_GE(y.size(), 2 * x.size());
  for (size_t i = 0; i < x.size(); ++i) ASSERT_EQ(y.samples[i], x.samples[i]);
  const std::vector<double> tail(y.samples.begin() + x.size(), y.samples.end());
  EXPECT_GE(testing::snr_db(x.samples, tail, 2048, x.size() - 2048), 40.0);
}

TEST(SpliceTest, BadAlphaPropagates) {
  const auto x = testing::noise(16000, 8);
  const std::vector<double> alphas = {0.8, 3.0};
  EXPECT_THROW(splice_rates(x, alphas), Error);
}

}  // namespace
}  // namespace lidtsm::tsm
