// lidtsm/metrics.hpp

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

// Language-detection metrics: pair-wise detection cost, C_avg, and EER.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "lidtsm/error.hpp"
#include "lidtsm/matrix.hpp"

namespace lidtsm::metrics {

/// Miss and false-alarm probabilities for N languages. p_fa(t, n) is the
/// rate at which language-n trials are accepted by the detector for t; the
/// diagonal is unused.
struct DetectionCounts {
  std::vector<double> p_miss;
  Matrix<double> p_fa;
  double p_target = 0.5;

  size_t num_languages() const { return p_miss.size(); }

  void validate() const {
    const size_t n = p_miss.size();
    require(n >= 2, ErrorCode::kInvalidArgument, "need at least two languages");
    require(p_fa.rows == n && p_fa.cols == n, ErrorCode::kShapeMismatch,
            "incomplete false-alarm table");
    require(p_target >= 0.0 && p_target <= 1.0, ErrorCode::kInvalidArgument,
            "P_target outside [0, 1]");
    auto in_unit = [](double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; };
    for (double p : p_miss)
      require(in_unit(p), ErrorCode::kInvalidArgument, "P_miss outside [0, 1]");
    for (size_t t = 0; t < n; ++t)
      for (size_t m = 0; m < n; ++m)
        if (t != m) require(in_unit(p_fa(t, m)), ErrorCode::kInvalidArgument, "P_FA outside [0, 1]");
  }
};

inline DetectionCounts uniform_counts(size_t n, double p_miss, double p_fa, double p_target = 0.5) {
  DetectionCounts c;
  c.p_miss.assign(n, p_miss);
  c.p_fa = Matrix<double>(n, n, p_fa);
  c.p_target = p_target;
  return c;
}

/// C(L_t, L_n) = P_target P_miss(L_t) + (1 - P_target) P_FA(L_t, L_n).
inline double pairwise_cost(const DetectionCounts &c, size_t target, size_t nontarget) {
  require(target != nontarget, ErrorCode::kInvalidArgument,
          "pair-wise cost needs distinct target and non-target languages");
  require(target < c.num_languages() && nontarget < c.num_languages(),
          ErrorCode::kInvalidArgument, "language index out of range");
  return c.p_target * c.p_miss[target] + (1.0 - c.p_target) * c.p_fa(target, nontarget);
}

/// Average of the pair-wise costs over all ordered language pairs.
inline double cavg(const DetectionCounts &c) {
  c.validate();
  const size_t n = c.num_languages();
  double miss = 0.0, fa = 0.0;
  for (size_t t = 0; t < n; ++t) {
    miss += c.p_miss[t];
    for (size_t m = 0; m < n; ++m)
      if (m != t) fa += c.p_fa(t, m);
  }
  return (c.p_target * miss + (1.0 - c.p_target) * fa / static_cast<double>(n - 1)) /
         static_cast<double>(n);
}

/// Per-utterance per-language scores (mean log-likelihoods).
struct TrialScores {
  std::vector<std::string> languages;
  std::vector<std::string> utterance_ids;
  std::vector<size_t> labels;  // index into languages
  Matrix<double> scores;       // utterances x languages

  size_t num_utterances() const { return labels.size(); }
  size_t num_languages() const { return languages.size(); }

  void validate() const {
    require(scores.rows == labels.size() && scores.cols == languages.size(),
            ErrorCode::kShapeMismatch, "score matrix does not match labels and languages");
    require(utterance_ids.empty() || utterance_ids.size() == labels.size(),
            ErrorCode::kShapeMismatch, "utterance id count mismatch");
    for (size_t l : labels)
      require(l < languages.size(), ErrorCode::kInvalidArgument, "label out of range");
    require(scores.all_finite(), ErrorCode::kNonFinite, "non-finite trial score");
  }
};

enum class ThresholdPolicy {
  kMinCavgSweep,   // per-language threshold minimizing that language's cost
  kFixedLogOdds,   // accept when the log-odds score is >= 0
};

inline const char *policy_name(ThresholdPolicy p) {
  return p == ThresholdPolicy::kMinCavgSweep ? "min-cavg-sweep" : "fixed-log-odds-0";
}

/// Log-odds of each language against the average of the others.
inline Matrix<double> log_odds(const TrialScores &s) {
  const size_t n = s.num_languages();
  Matrix<double> out(s.num_utterances(), n);
  for (size_t u = 0; u < s.num_utterances(); ++u) {
    const auto row = s.scores.row(u);
    for (size_t t = 0; t < n; ++t) {
      double peak = -std::numeric_limits<double>::infinity();
      for (size_t m = 0; m < n; ++m)
        if (m != t) peak = std::max(peak, row[m]);
      double acc = 0.0;
      for (size_t m = 0; m < n; ++m)
        if (m != t) acc += std::exp(row[m] - peak);
      out(u, t) = row[t] - (peak + std::log(acc / static_cast<double>(n - 1)));
    }
  }
  return out;
}

struct Decisions {
  DetectionCounts counts;
  std::vector<double> thresholds;  // per target language, in the policy's score domain
  ThresholdPolicy policy = ThresholdPolicy::kMinCavgSweep;
};

namespace detail {

// Miss and false-alarm rates for target t at threshold theta; a trial is
// accepted when its score >= theta.
inline void rates_at(const Matrix<double> &scores, const std::vector<size_t> &labels,
                     const std::vector<size_t> &per_language, size_t t, double theta,
                     double *p_miss, std::vector<double> *p_fa) {
  const size_t n = per_language.size();
  std::vector<size_t> accepted(n, 0);
  for (size_t u = 0; u < labels.size(); ++u)
    if (scores(u, t) >= theta) ++accepted[labels[u]];
  *p_miss = 1.0 - static_cast<double>(accepted[t]) / static_cast<double>(per_language[t]);
  p_fa->assign(n, 0.0);
  for (size_t m = 0; m < n; ++m)
    if (m != t)
      (*p_fa)[m] = static_cast<double>(accepted[m]) / static_cast<double>(per_language[m]);
}

}  // namespace detail

/// One-vs-rest detection: for target t every utterance is a trial scored by
/// its column-t score; targets are the utterances labelled t.
inline Decisions decisions_from_scores(const TrialScores &s, ThresholdPolicy policy,
                                       double p_target = 0.5) {
  s.validate();
  const size_t n = s.num_languages();
  require(n >= 2, ErrorCode::kInvalidArgument, "need at least two languages");
  std::vector<size_t> per_language(n, 0);
  for (size_t l : s.labels) ++per_language[l];
  for (size_t t = 0; t < n; ++t)
    require(per_language[t] > 0, ErrorCode::kEmptyInput,
            "language " + s.languages[t] + " has no trials");

  const Matrix<double> domain = policy == ThresholdPolicy::kFixedLogOdds ? log_odds(s) : s.scores;
  Decisions d;
  d.policy = policy;
  d.counts.p_target = p_target;
  d.counts.p_miss.assign(n, 0.0);
  d.counts.p_fa = Matrix<double>(n, n);
  d.thresholds.assign(n, 0.0);
  std::vector<double> p_fa;
  for (size_t t = 0; t < n; ++t) {
    double best_theta = 0.0;
    if (policy == ThresholdPolicy::kMinCavgSweep) {
      std::vector<double> candidates;
      candidates.reserve(domain.rows + 1);
      for (size_t u = 0; u < domain.rows; ++u) candidates.push_back(domain(u, t));
      std::sort(candidates.begin(), candidates.end());
      candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
      candidates.push_back(std::numeric_limits<double>::infinity());
      double best_cost = std::numeric_limits<double>::infinity();
      for (double theta : candidates) {
        double miss;
        detail::rates_at(domain, s.labels, per_language, t, theta, &miss, &p_fa);
        double fa_sum = 0.0;
        for (double v : p_fa) fa_sum += v;
        const double cost =
            p_target * miss + (1.0 - p_target) * fa_sum / static_cast<double>(n - 1);
        if (cost < best_cost) {
          best_cost = cost;
          best_theta = theta;
        }
      }
    }
    double miss;
    detail::rates_at(domain, s.labels, per_language, t, best_theta, &miss, &p_fa);
    d.thresholds[t] = best_theta;
    d.counts.p_miss[t] = miss;
    for (size_t m = 0; m < n; ++m) d.counts.p_fa(t, m) = p_fa[m];
  }
  return d;
}

/// Equal error rate. Thresholds sweep over every observed score; a score
/// >= threshold is accepted. Where miss and false-alarm curves cross between
/// two sweep points, the crossing is located by linear interpolation.
inline double eer(std::vector<double> targets, std::vector<double> nontargets) {
  require(!targets.empty() && !nontargets.empty(), ErrorCode::kEmptyInput,
          "EER needs target and non-target scores");
  std::sort(targets.begin(), targets.end());
  std::sort(nontargets.begin(), nontargets.end());
  std::vector<double> thresholds(targets);
  thresholds.insert(thresholds.end(), nontargets.begin(), nontargets.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  thresholds.push_back(std::numeric_limits<double>::infinity());

  const double nt = static_cast<double>(targets.size());
  const double nn = static_cast<double>(nontargets.size());
  double prev_miss = 0.0, prev_fa = 1.0;  // threshold below every score
  for (double theta : thresholds) {
    const double miss =
        static_cast<double>(std::lower_bound(targets.begin(), targets.end(), theta) -
                            targets.begin()) / nt;
    const double fa = static_cast<double>(nontargets.end() - std::lower_bound(nontargets.begin(),
                                                                              nontargets.end(),
                                                                              theta)) / nn;
    const double d_prev = prev_miss - prev_fa;
    const double d = miss - fa;
    if (d >= 0.0) {
      if (d == 0.0) return miss;
      const double w = d_prev / (d_prev - d);
      return prev_miss + w * (miss - prev_miss);
    }
    prev_miss = miss;
    prev_fa = fa;
  }
  return prev_miss;  // unreachable: at +inf miss = 1 and fa = 0
}

struct LanguageMetrics {
  std::string language;
  double eer = 0.0;
  double p_miss = 0.0;
  double threshold = 0.0;
  size_t target_trials = 0;
  size_t nontarget_trials = 0;
};

struct MetricsReport {
  double cavg_sweep = 0.0;
  double cavg_fixed = 0.0;
  double eer_pooled = 0.0;
  double eer_mean = 0.0;  // average of the per-language EERs
  double accuracy = 0.0;  // argmax identification accuracy
  double p_target = 0.5;
  size_t num_utterances = 0;
  std::vector<LanguageMetrics> per_language;
};

inline MetricsReport evaluate(const TrialScores &s, double p_target = 0.5) {
  s.validate();
  MetricsReport r;
  r.p_target = p_target;
  r.num_utterances = s.num_utterances();
  const auto sweep = decisions_from_scores(s, ThresholdPolicy::kMinCavgSweep, p_target);
  const auto fixed = decisions_from_scores(s, ThresholdPolicy::kFixedLogOdds, p_target);
  r.cavg_sweep = cavg(sweep.counts);
  r.cavg_fixed = cavg(fixed.counts);

  std::vector<double> pooled_t, pooled_n;
  const size_t n = s.num_languages();
  for (size_t t = 0; t < n; ++t) {
    std::vector<double> tar, non;
    for (size_t u = 0; u < s.num_utterances(); ++u)
      (s.labels[u] == t ? tar : non).push_back(s.scores(u, t));
    pooled_t.insert(pooled_t.end(), tar.begin(), tar.end());
    pooled_n.insert(pooled_n.end(), non.begin(), non.end());
    LanguageMetrics lm;
    lm.language = s.languages[t];
    lm.target_trials = tar.size();
    lm.nontarget_trials = non.size();
    lm.eer = eer(tar, non);
    lm.p_miss = sweep.counts.p_miss[t];
    lm.threshold = sweep.thresholds[t];
    r.eer_mean += lm.eer / static_cast<double>(n);
    r.per_language.push_back(lm);
  }
  r.eer_pooled = eer(pooled_t, pooled_n);

  size_t correct = 0;
  for (size_t u = 0; u < s.num_utterances(); ++u) {
    const auto row = s.scores.row(u);
    const size_t best = static_cast<size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    correct += best == s.labels[u];
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(s.num_utterances());
  return r;
}

}  // namespace lidtsm::metrics
