// lidtsm/pipeline.hpp

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

// Training and inference for the two-stage system: a bottleneck DNN trained
// on frame-level phone classes, then a block LSTM language classifier
// trained on frozen bottleneck features. Utterance score = mean of the block
// log-probability vectors.

#pragma once

#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "lidtsm/blocking.hpp"
#include "lidtsm/checkpoint.hpp"
#include "lidtsm/config.hpp"
#include "lidtsm/features.hpp"
#include "lidtsm/nnet.hpp"
#include "lidtsm/tsm.hpp"
#include "lidtsm/util.hpp"

namespace lidtsm::pipeline {

using config::PipelineConfig;
using config::TrainConfig;

// Seed tags for the independent random streams of a run.
inline constexpr uint64_t kBnInitTag = 0xB0;
inline constexpr uint64_t kBnShuffleTag = 0xB1;
inline constexpr uint64_t kLidInitTag = 0x1D0;
inline constexpr uint64_t kLidShuffleTag = 0x1D1;

// ---------------------------------------------------------------------------
// Front end

struct FrontEndResult {
  features::FeatureMatrix features;  // VAD-selected frames
  std::vector<bool> mask;            // over all frames of the (spliced) waveform
  bool silent = false;               // no frame above -80 dBFS; kept on the guard frame
};

/// Optional TSM splicing, PLP + pitch features, energy VAD frame drop.
inline FrontEndResult front_end(const Waveform &w, const PipelineConfig &cfg,
                                std::span<const double> splice_alphas = {}) {
  const Waveform x = splice_alphas.empty() ? w : tsm::splice_rates(w, splice_alphas);
  require(x.size() >= cfg.frame.frame_length(), ErrorCode::kTooShort,
          "utterance shorter than one analysis frame");
  FrontEndResult r;
  r.features = features::compute_features(x, cfg.frame);
  const auto energy = features::frame_log_energy(x, cfg.frame, cfg.vad.energy_floor);
  r.mask = features::energy_vad(energy, cfg.vad);
  const double silent_level = std::log(1e-8 * static_cast<double>(cfg.frame.frame_length()));
  r.silent = *std::max_element(energy.begin(), energy.end()) < silent_level;
  if (r.silent) {
    std::fill(r.mask.begin(), r.mask.end(), false);
    r.mask[0] = true;
  }
  r.features = features::select_frames(r.features, r.mask);
  return r;
}

template <typename T>
std::vector<T> select(const std::vector<T> &v, const std::vector<bool> &mask) {
  std::vector<T> out;
  for (size_t k = 0; k < v.size(); ++k)
    if (mask[k]) out.push_back(v[k]);
  return out;
}

// ---------------------------------------------------------------------------
// Minibatch training

struct EpochLog {
  size_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double dev_loss = NAN;
  double dev_accuracy = NAN;
};

/// Shuffled minibatch loop. Each batch is split into tc.shards contiguous
/// shards whose gradients are summed in shard order, so the result does not
/// depend on `jobs`. grad_fn(model, indices, grad) accumulates the summed
/// loss gradient of the examples into grad and returns their statistics.
template <typename Model, typename GradFn, typename EpochFn>
std::vector<EpochLog> train_minibatch(Model &model, size_t num_examples, const TrainConfig &tc,
                                      uint64_t seed, int jobs, GradFn &&grad_fn,
                                      EpochFn &&on_epoch) {
  tc.validate("training");
  require(num_examples > 0, ErrorCode::kEmptyInput, "no training examples");
  Rng rng(seed);
  std::vector<size_t> order(num_examples);
  std::iota(order.begin(), order.end(), size_t{0});
  nnet::Sgd<float> sgd{tc.learning_rate};
  nnet::Adam<float> adam;
  adam.learning_rate = tc.learning_rate;
  adam.beta1 = tc.beta1;
  adam.beta2 = tc.beta2;
  adam.epsilon = tc.epsilon;
  std::vector<Model> grads(tc.shards, Model(model.arch));
  std::vector<EpochLog> logs;
  for (size_t epoch = 1; epoch <= tc.epochs; ++epoch) {
    rng.shuffle(order);
    nnet::BatchStats total;
    for (size_t b = 0; b < num_examples; b += tc.batch_size) {
      const size_t count = std::min(tc.batch_size, num_examples - b);
      const size_t shards = std::min(tc.shards, count);
      std::vector<nnet::BatchStats> stats(shards);
      parallel_for(shards, jobs, [&](size_t s) {
        nnet::zero<float>(grads[s]);
        const size_t lo = b + count * s / shards, hi = b + count * (s + 1) / shards;
        stats[s] = grad_fn(static_cast<const Model &>(model),
                           std::span<const size_t>(order).subspan(lo, hi - lo), grads[s]);
      });
      for (size_t s = 0; s < shards; ++s) {
        if (s > 0) nnet::accumulate<float>(grads[0], grads[s]);
        total += stats[s];
      }
      require(std::isfinite(total.loss), ErrorCode::kDiverged,
              "training loss diverged at epoch " + std::to_string(epoch));
      nnet::scale<float>(grads[0], 1.0f / static_cast<float>(count));
      if (tc.clip_norm > 0.0) {
        const double norm = nnet::global_norm<float>(grads[0]);
        if (norm > tc.clip_norm) nnet::scale<float>(grads[0], static_cast<float>(tc.clip_norm / norm));
      }
      if (tc.optimizer == "adam")
        adam.step(model, grads[0]);
      else
        sgd.step(model, grads[0]);
    }
    EpochLog log;
    log.epoch = epoch;
    log.train_loss = total.loss / static_cast<double>(total.count);
    log.train_accuracy = static_cast<double>(total.correct) / static_cast<double>(total.count);
    on_epoch(log, static_cast<const Model &>(model));
    logs.push_back(log);
  }
  return logs;
}

// ---------------------------------------------------------------------------
// Bottleneck DNN stage

/// A trained extractor with the CMVN statistics and context it expects.
struct BnModel {
  nnet::BnDnn<float> net;
  features::CmvnStats cmvn;
  size_t context = 11;
};

inline checkpoint::Checkpoint to_checkpoint(const BnModel &m) {
  auto arch = checkpoint::to_json(m.net.arch);
  arch["context"] = m.context;
  auto c = checkpoint::make(m.net, arch);
  Matrix<double> mean(1, m.cmvn.dim()), var(1, m.cmvn.dim());
  mean.data = m.cmvn.mean;
  var.data = m.cmvn.variance;
  c.tensors.push_back(checkpoint::tensor_from("cmvn.mean", mean));
  c.tensors.push_back(checkpoint::tensor_from("cmvn.var", var));
  return c;
}

inline BnModel bn_from_checkpoint(const checkpoint::Checkpoint &c) {
  BnModel m;
  m.net = checkpoint::load_bn_dnn<float>(c);
  m.context = c.architecture.value("context", size_t{11});
  const auto &mean = c.get("cmvn.mean");
  const auto &var = c.get("cmvn.var");
  m.cmvn.mean.assign(mean.values.begin(), mean.values.end());
  m.cmvn.variance.assign(var.values.begin(), var.values.end());
  m.cmvn.floored.assign(m.cmvn.mean.size(), false);
  require(m.cmvn.dim() * m.context == m.net.arch.input_dim, ErrorCode::kShapeMismatch,
          "bottleneck checkpoint CMVN does not match its input width");
  return m;
}

/// CMVN-normalized frames plus their phone labels, with row gathering under
/// context splicing (edge replication).
struct FrameDataset {
  std::vector<Matrix<float>> feats;
  std::vector<std::vector<int>> labels;
  std::vector<std::pair<uint32_t, uint32_t>> index;  // (utterance, frame)
  size_t context = 11;

  size_t dim() const { return feats.empty() ? 0 : feats.front().cols; }
  size_t input_dim() const { return dim() * context; }

  void add(const features::FeatureMatrix &normalized, std::vector<int> frame_labels) {
    require(frame_labels.size() == normalized.num_frames(), ErrorCode::kShapeMismatch,
            "label/feature length mismatch for " + normalized.utterance_id);
    const auto u = static_cast<uint32_t>(feats.size());
    feats.push_back(normalized.values.cast<float>());
    for (uint32_t t = 0; t < frame_labels.size(); ++t) index.emplace_back(u, t);
    labels.push_back(std::move(frame_labels));
  }

  void gather_row(size_t i, std::span<float> out) const {
    const auto [u, t] = index[i];
    const Matrix<float> &f = feats[u];
    const long half = static_cast<long>(context / 2), last = static_cast<long>(f.rows) - 1;
    for (long k = -half; k <= half; ++k) {
      const long src = std::clamp(static_cast<long>(t) + k, 0L, last);
      std::copy_n(f.row(static_cast<size_t>(src)).begin(), f.cols,
                  out.begin() + static_cast<long>(f.cols) * (k + half));
    }
  }

  Matrix<float> gather(std::span<const size_t> rows, std::vector<int> *targets) const {
    Matrix<float> x(rows.size(), input_dim());
    if (targets) targets->resize(rows.size());
    for (size_t r = 0; r < rows.size(); ++r) {
      gather_row(rows[r], x.row(r));
      if (targets) (*targets)[r] = labels[index[rows[r]].first][index[rows[r]].second];
    }
    return x;
  }
};

/// Frame accuracy and mean cross-entropy of a DNN on a dataset.
inline std::pair<double, double> evaluate_frames(const nnet::BnDnn<float> &net,
                                                 const FrameDataset &ds, int jobs) {
  const size_t chunk = 512, n = ds.index.size();
  const size_t chunks = (n + chunk - 1) / chunk;
  std::vector<nnet::BatchStats> stats(chunks);
  parallel_for(chunks, jobs, [&](size_t c) {
    std::vector<size_t> rows;
    for (size_t i = c * chunk; i < std::min(n, (c + 1) * chunk); ++i) rows.push_back(i);
    std::vector<int> targets;
    const auto x = ds.gather(rows, &targets);
    nnet::DnnCache<float> cache;
    nnet::dnn_forward_batch(net, x, cache);
    for (size_t r = 0; r < rows.size(); ++r) {
      const auto lp = cache.log_probs.row(r);
      stats[c].loss -= lp[static_cast<size_t>(targets[r])];
      stats[c].correct += std::max_element(lp.begin(), lp.end()) - lp.begin() == targets[r];
      ++stats[c].count;
    }
  });
  nnet::BatchStats total;
  for (const auto &s : stats) total += s;
  if (total.count == 0) return {NAN, NAN};
  return {total.loss / static_cast<double>(total.count),
          static_cast<double>(total.correct) / static_cast<double>(total.count)};
}

using BnEpochFn = std::function<void(const EpochLog &, const nnet::BnDnn<float> &)>;

/// Trains the bottleneck DNN with cross-entropy on phone-class targets.
inline nnet::BnDnn<float> train_bn_dnn(const FrameDataset &train, const FrameDataset *dev,
                                       const nnet::BnDnnArch &arch, const TrainConfig &tc,
                                       uint64_t seed, int jobs, std::vector<EpochLog> *logs = nullptr,
                                       const BnEpochFn &on_epoch = {}) {
  require(arch.input_dim == train.input_dim(), ErrorCode::kShapeMismatch,
          "bottleneck DNN input width does not match spliced features");
  for (const auto &l : train.labels)
    for (int y : l)
      require(y >= 0 && static_cast<size_t>(y) < arch.num_classes, ErrorCode::kInvalidArgument,
              "frame label outside the target-class range");
  nnet::BnDnn<float> net(arch);
  Rng init(derive_seed(seed, kBnInitTag));
  net.initialize(init);
  auto grad = [&](const nnet::BnDnn<float> &m, std::span<const size_t> rows, nnet::BnDnn<float> &g) {
    std::vector<size_t> idx(rows.begin(), rows.end());
    std::vector<int> targets;
    const auto x = train.gather(idx, &targets);
    return nnet::dnn_backward_batch<float>(m, x, targets, g);
  };
  auto epoch_fn = [&](EpochLog &log, const nnet::BnDnn<float> &m) {
    if (dev && !dev->index.empty()) std::tie(log.dev_loss, log.dev_accuracy) = evaluate_frames(m, *dev, jobs);
    if (on_epoch) on_epoch(log, m);
  };
  auto l = train_minibatch(net, train.index.size(), tc, derive_seed(seed, kBnShuffleTag), jobs, grad, epoch_fn);
  if (logs) *logs = std::move(l);
  return net;
}

/// T x bottleneck features for one utterance (raw front-end features in).
inline features::FeatureMatrix extract_bn(const features::FeatureMatrix &raw, const BnModel &m) {
  require(raw.dim() * m.context == m.net.arch.input_dim, ErrorCode::kShapeMismatch,
          "feature dimension " + std::to_string(raw.dim()) + " does not match the extractor");
  const auto spliced = features::splice_context(features::apply_cmvn(raw, m.cmvn), m.context);
  const auto bn = nnet::dnn_bottleneck(m.net, spliced.values.cast<float>());
  features::FeatureMatrix out;
  out.utterance_id = raw.utterance_id;
  out.language_label = raw.language_label;
  out.frame_rate = raw.frame_rate;
  out.values = bn.cast<double>();
  return out;
}

// ---------------------------------------------------------------------------
// Language classifier stage

struct BlockDataset {
  std::vector<Matrix<float>> blocks;
  std::vector<size_t> labels;

  void add(const features::FeatureMatrix &bn, size_t label, const blocking::BlockConfig &cfg) {
    for (auto &b : blocking::make_blocks(bn, cfg, static_cast<int>(label))) {
      blocks.push_back(b.values.cast<float>());
      labels.push_back(label);
    }
  }
};

inline std::pair<double, double> evaluate_blocks(const nnet::Classifier<float> &net,
                                                 const BlockDataset &ds, int jobs) {
  std::vector<nnet::BatchStats> stats(ds.blocks.size());
  parallel_for(ds.blocks.size(), jobs, [&](size_t i) {
    const auto lp = nnet::classifier_forward(net, ds.blocks[i]);
    stats[i].loss = -lp[ds.labels[i]];
    stats[i].correct = static_cast<size_t>(std::max_element(lp.begin(), lp.end()) - lp.begin()) == ds.labels[i];
    stats[i].count = 1;
  });
  nnet::BatchStats total;
  for (const auto &s : stats) total += s;
  if (total.count == 0) return {NAN, NAN};
  return {total.loss / static_cast<double>(total.count),
          static_cast<double>(total.correct) / static_cast<double>(total.count)};
}

using LidEpochFn = std::function<void(const EpochLog &, const nnet::Classifier<float> &)>;

/// Trains the classifier on bottleneck-feature blocks. The extractor is not
/// an argument: only the classifier's parameters can change.
inline nnet::Classifier<float> train_lid(const BlockDataset &train, const BlockDataset *dev,
                                         const nnet::ClassifierArch &arch, const TrainConfig &tc,
                                         uint64_t seed, int jobs, std::vector<EpochLog> *logs = nullptr,
                                         const LidEpochFn &on_epoch = {}) {
  for (const auto &b : train.blocks)
    require(b.cols == arch.input_dim, ErrorCode::kShapeMismatch, "block width does not match classifier");
  for (size_t y : train.labels)
    require(y < arch.num_classes, ErrorCode::kInvalidArgument, "language label out of range");
  nnet::Classifier<float> net(arch);
  Rng init(derive_seed(seed, kLidInitTag));
  net.initialize(init);
  auto grad = [&](const nnet::Classifier<float> &m, std::span<const size_t> rows,
                  nnet::Classifier<float> &g) {
    nnet::BatchStats s;
    for (size_t i : rows) s += nnet::classifier_backward(m, train.blocks[i], train.labels[i], g);
    return s;
  };
  auto epoch_fn = [&](EpochLog &log, const nnet::Classifier<float> &m) {
    if (dev && !dev->blocks.empty()) std::tie(log.dev_loss, log.dev_accuracy) = evaluate_blocks(m, *dev, jobs);
    if (on_epoch) on_epoch(log, m);
  };
  auto l = train_minibatch(net, train.blocks.size(), tc, derive_seed(seed, kLidShuffleTag), jobs, grad, epoch_fn);
  if (logs) *logs = std::move(l);
  return net;
}

// ---------------------------------------------------------------------------
// Scoring

struct UtteranceScore {
  std::vector<double> scores;  // mean block log-probability per language
  size_t predicted = 0;
  size_t num_blocks = 0;
  bool silent = false;
};

/// Arithmetic mean of block log-probability vectors.
inline std::vector<double> mean_log_probs(const std::vector<std::vector<double>> &blocks) {
  require(!blocks.empty(), ErrorCode::kEmptyInput, "no blocks to score");
  std::vector<double> mean(blocks.front().size(), 0.0);
  for (const auto &b : blocks)
    for (size_t k = 0; k < mean.size(); ++k) mean[k] += b[k];
  for (double &v : mean) v /= static_cast<double>(blocks.size());
  return mean;
}

inline UtteranceScore score_bn_features(const features::FeatureMatrix &bn,
                                        const nnet::Classifier<float> &lid,
                                        const blocking::BlockConfig &cfg) {
  std::vector<std::vector<double>> block_scores;
  for (const auto &b : blocking::make_blocks(bn, cfg)) {
    const auto lp = nnet::classifier_forward(lid, b.values.cast<float>());
    block_scores.emplace_back(lp.begin(), lp.end());
  }
  UtteranceScore s;
  s.scores = mean_log_probs(block_scores);
  s.num_blocks = block_scores.size();
  s.predicted = static_cast<size_t>(std::max_element(s.scores.begin(), s.scores.end()) - s.scores.begin());
  return s;
}

/// Waveform to per-language scores: splice, VAD, features, CMVN, context,
/// bottleneck, blocks, mean block log-probabilities.
inline UtteranceScore score_utterance(const Waveform &w, const BnModel &bn,
                                      const nnet::Classifier<float> &lid, const PipelineConfig &cfg,
                                      std::span<const double> splice_alphas) {
  const auto fe = front_end(w, cfg, splice_alphas);
  auto s = score_bn_features(extract_bn(fe.features, bn), lid, cfg.block);
  s.silent = fe.silent;
  return s;
}

}  // namespace lidtsm::pipeline
