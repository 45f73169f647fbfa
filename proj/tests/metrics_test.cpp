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

#include "lidtsm/metrics.hpp"
#include "lidtsm/util.hpp"
#include "metrics_oracle.hpp"

namespace lidtsm::metrics {
namespace {

TEST(PairwiseCostTest, Arithmetic) {
  EXPECT_EQ(pairwise_cost(uniform_counts(2, 0.0, 0.0), 0, 1), 0.0);
  EXPECT_EQ(pairwise_cost(uniform_counts(2, 1.0, 1.0), 0, 1), 1.0);
  EXPECT_DOUBLE_EQ(pairwise_cost(uniform_counts(3, 0.2, 0.4), 2, 0), 0.3);
  EXPECT_THROW(pairwise_cost(uniform_counts(3, 0.2, 0.4), 1, 1), Error);
}

TEST(CavgTest, ClosedFormCases) {
  for (size_t n : {2u, 3u, 5u, 10u}) {
    EXPECT_EQ(cavg(uniform_counts(n, 0.0, 0.0)), 0.0);
    EXPECT_EQ(cavg(uniform_counts(n, 1.0, 1.0)), 1.0);
    EXPECT_EQ(cavg(uniform_counts(n, 0.5, 0.5)), 0.5);
  }
}

TEST(CavgTest, EqualsMeanOfPairwiseCosts) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const size_t n = 2 + rng.below(5);
    DetectionCounts c = uniform_counts(n, 0.0, 0.0, rng.uniform(0.0, 1.0));
    for (auto &p : c.p_miss) p = rng.uniform();
    for (auto &p : c.p_fa.data) p = rng.uniform();
    double mean = 0.0;
    for (size_t t = 0; t < n; ++t)
      for (size_t m = 0; m < n; ++m)
        if (t != m) mean += pairwise_cost(c, t, m);
    mean /= static_cast<double>(n * (n - 1));
    EXPECT_NEAR(cavg(c), mean, 1e-12);
  }
}

TEST(CavgTest, BoundedForLowPrior) {
  Rng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const size_t n = 2 + rng.below(6);
    DetectionCounts c = uniform_counts(n, 0.0, 0.0, rng.uniform(0.0, 0.5));
    for (auto &p : c.p_miss) p = rng.uniform();
    for (auto &p : c.p_fa.data) p = rng.uniform();
    const double v = cavg(c);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(CavgTest, RejectsIncompleteCounts) {
  DetectionCounts c = uniform_counts(3, 0.1, 0.1);
  c.p_fa = Matrix<double>(2, 3);
  EXPECT_THROW(cavg(c), Error);
  EXPECT_THROW(cavg(uniform_counts(1, 0.1, 0.1)), Error);
  EXPECT_THROW(cavg(uniform_counts(3, 1.5, 0.1)), Error);
}

TEST(EerTest, HandCases) {
  EXPECT_EQ(eer({0.9, 0.8}, {0.1, 0.2}), 0.0);
  EXPECT_EQ(eer({0.1, 0.2}, {0.9, 0.8}), 1.0);
  EXPECT_EQ(eer({0.8, 0.4}, {0.6, 0.2}), 0.5);
  EXPECT_THROW(eer({}, {0.1}), Error);
  EXPECT_THROW(eer({0.1}, {}), Error);
}

TEST(EerTest, MatchesBruteForceSweep) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> a(1 + rng.below(12)), b(1 + rng.below(12));
    for (auto &v : a) v = std::round(rng.normal() * 4.0 + 1.0) / 4.0;  // ties on purpose
    for (auto &v : b) v = std::round(rng.normal() * 4.0) / 4.0;
    EXPECT_NEAR(eer(a, b), testing::eer_oracle(a, b), 1e-12);
  }
}

TEST(EerTest, MirrorProperty) {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> a(1 + rng.below(20)), b(1 + rng.below(20));
    for (auto &v : a) v = rng.normal() + 0.5;
    for (auto &v : b) v = rng.normal();
    EXPECT_NEAR(eer(a, b), 1.0 - eer(b, a), 1e-12);
  }
}

TrialScores random_scores(Rng &rng, size_t n, size_t per_language, double separation) {
  TrialScores s;
  for (size_t l = 0; l < n; ++l) s.languages.push_back("L" + std::to_string(l));
  s.scores = Matrix<double>(n * per_language, n);
  for (size_t u = 0; u < n * per_language; ++u) {
    s.labels.push_back(u % n);
    for (size_t l = 0; l < n; ++l)
      s.scores(u, l) = rng.normal() + (l == u % n ? separation : 0.0);
  }
  return s;
}

TEST(DecisionsTest, MinCavgSweepEqualsEnumerationOracle) {
  Rng rng(21);
  for (int trial = 0; trial < 60; ++trial) {
    const size_t n = 2 + rng.below(2);
    auto s = random_scores(rng, n, 1 + rng.below(3), rng.uniform(0.0, 2.0));
    const auto d = decisions_from_scores(s, ThresholdPolicy::kMinCavgSweep);
    EXPECT_DOUBLE_EQ(cavg(d.counts), testing::min_cavg_oracle(s, 0.5));
  }
}

TEST(DecisionsTest, PerfectSeparationGivesZeroErrors) {
  TrialScores s;
  s.languages = {"a", "b", "c"};
  s.labels = {0, 1, 2, 0, 1, 2};
  s.scores = Matrix<double>(6, 3, -5.0);
  for (size_t u = 0; u < 6; ++u) s.scores(u, s.labels[u]) = -1.0;
  const auto d = decisions_from_scores(s, ThresholdPolicy::kMinCavgSweep);
  EXPECT_EQ(cavg(d.counts), 0.0);
  for (double p : d.counts.p_miss) EXPECT_EQ(p, 0.0);
  EXPECT_EQ(cavg(decisions_from_scores(s, ThresholdPolicy::kFixedLogOdds).counts), 0.0);
}

TEST(DecisionsTest, IdenticalScoresAreDegenerate) {
  TrialScores s;
  s.languages = {"a", "b"};
  s.labels = {0, 1, 0, 1};
  s.scores = Matrix<double>(4, 2, -2.0);
  for (auto policy : {ThresholdPolicy::kMinCavgSweep, ThresholdPolicy::kFixedLogOdds}) {
    const auto d = decisions_from_scores(s, policy);
    for (size_t t = 0; t < 2; ++t) EXPECT_EQ(d.counts.p_miss[t] + d.counts.p_fa(t, 1 - t), 1.0);
  }
}

TEST(DecisionsTest, FourTrialHandExample) {
  // Two languages; language 0 targets score 0.9 and 0.8, non-targets 0.1 and 0.2.
  TrialScores s;
  s.languages = {"a", "b"};
  s.labels = {0, 0, 1, 1};
  s.scores = Matrix<double>(4, 2);
  const double col0[] = {0.9, 0.8, 0.1, 0.2};
  for (size_t u = 0; u < 4; ++u) {
    s.scores(u, 0) = col0[u];
    s.scores(u, 1) = 1.0 - col0[u];
  }
  const auto d = decisions_from_scores(s, ThresholdPolicy::kMinCavgSweep);
  EXPECT_EQ(d.counts.p_miss[0], 0.0);
  EXPECT_EQ(d.counts.p_fa(0, 1), 0.0);
  EXPECT_GT(d.thresholds[0], 0.2);
  EXPECT_LE(d.thresholds[0], 0.8);
}

TEST(DecisionsTest, EmptyLanguageIsRejected) {
  TrialScores s;
  s.languages = {"a", "b", "c"};
  s.labels = {0, 1};
  s.scores = Matrix<double>(2, 3);
  EXPECT_THROW(decisions_from_scores(s, ThresholdPolicy::kMinCavgSweep), Error);
}

TEST(MetricsTest, MonotoneTransformInvariance) {
  Rng rng(33);
  for (int trial = 0; trial < 100; ++trial) {
    auto s = random_scores(rng, 3, 4, rng.uniform(0.0, 2.0));
    auto t = s;
    for (auto &v : t.scores.data) v = std::exp(0.7 * v) * 3.0 - 2.0;
    const auto a = decisions_from_scores(s, ThresholdPolicy::kMinCavgSweep);
    const auto b = decisions_from_scores(t, ThresholdPolicy::kMinCavgSweep);
    EXPECT_EQ(cavg(a.counts), cavg(b.counts));
    const auto ra = evaluate(s), rb = evaluate(t);
    EXPECT_EQ(ra.eer_pooled, rb.eer_pooled);
    for (size_t l = 0; l < 3; ++l) EXPECT_EQ(ra.per_language[l].eer, rb.per_language[l].eer);
  }
}

TEST(MetricsTest, ReportFields) {
  Rng rng(2);
  auto s = random_scores(rng, 3, 10, 3.0);
  const auto r = evaluate(s);
  EXPECT_EQ(r.num_utterances, 30u);
  ASSERT_EQ(r.per_language.size(), 3u);
  EXPECT_EQ(r.per_language[0].target_trials, 10u);
  EXPECT_EQ(r.per_language[0].nontarget_trials, 20u);
  EXPECT_GT(r.accuracy, 0.8);
}

TEST(MetricsTest, LogOddsOfTwoLanguagesIsScoreDifference) {
  TrialScores s;
  s.languages = {"a", "b"};
  s.labels = {0};
  s.scores = Matrix<double>(1, 2);
  s.scores(0, 0) = -0.3;
  s.scores(0, 1) = -1.7;
  const auto lo = log_odds(s);
  EXPECT_NEAR(lo(0, 0), 1.4, 1e-12);
  EXPECT_NEAR(lo(0, 1), -1.4, 1e-12);
}

}  // namespace
}  // namespace lidtsm::metrics
