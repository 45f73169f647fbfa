// lidtsm/stages.hpp

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

// On-disk stages of an experiment. Everything lives under two directories:
//
//   <corpus>/corpus.json, manifest.jsonl, wav/
//   <work>/feats/{train,dev}.ark, {train,dev}-phones.ark   front-end output
//   <work>/models/bn.ckpt, lid.ckpt                          updated per epoch
//   <work>/bn/{train,dev}.ark                                bottleneck features
//   <work>/logs/train-bn.json, train-lid.json
//   <work>/scores/test-<condition>[-tsm-<alphas>].jsonl
//   <work>/metrics.json

#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lidtsm/archive.hpp"
#include "lidtsm/corpus.hpp"
#include "lidtsm/metrics.hpp"
#include "lidtsm/pipeline.hpp"

namespace lidtsm::stages {

namespace fs = std::filesystem;
using nlohmann::json;
using config::PipelineConfig;

struct WorkLayout {
  fs::path root;

  explicit WorkLayout(fs::path r) : root(std::move(r)) {}
  std::string feats(const std::string &split) const { return (root / "feats" / (split + ".ark")).string(); }
  std::string phones(const std::string &split) const {
    return (root / "feats" / (split + "-phones.ark")).string();
  }
  std::string bn_feats(const std::string &split) const { return (root / "bn" / (split + ".ark")).string(); }
  std::string bn_model() const { return (root / "models" / "bn.ckpt").string(); }
  std::string lid_model() const { return (root / "models" / "lid.ckpt").string(); }
  std::string log(const std::string &stage) const { return (root / "logs" / (stage + ".json")).string(); }
  std::string scores(const std::string &condition, std::span<const double> alphas) const {
    return (root / "scores" / ("test-" + condition + alpha_suffix(alphas) + ".jsonl")).string();
  }
  std::string metrics() const { return (root / "metrics.json").string(); }

  static std::string alpha_suffix(std::span<const double> alphas) {
    if (alphas.empty()) return "";
    std::string s = "-tsm";
    for (double a : alphas) {
      std::ostringstream v;
      v << a;
      s += "-" + v.str();
    }
    return s;
  }
};

inline void ensure_parent(const std::string &path) { fs::create_directories(fs::path(path).parent_path()); }

inline void write_json(const std::string &path, const json &j) {
  ensure_parent(path);
  std::ofstream out(path);
  out << j.dump(2) << "\n";
  require(out.good(), ErrorCode::kIo, "cannot write " + path);
}

inline json read_json(const std::string &path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kMissingFile, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception &e) {
    fail(ErrorCode::kBadContainer, path + ": " + e.what());
  }
}

inline void note(std::ostream *progress, const std::string &msg) {
  if (progress) *progress << msg << std::endl;
}

inline json epoch_json(const pipeline::EpochLog &l) {
  json j = {{"epoch", l.epoch}, {"train_loss", l.train_loss}, {"train_accuracy", l.train_accuracy}};
  if (!std::isnan(l.dev_loss)) j["dev_loss"] = l.dev_loss;
  if (!std::isnan(l.dev_accuracy)) j["dev_accuracy"] = l.dev_accuracy;
  return j;
}

inline std::string format_epoch(const std::string &stage, const pipeline::EpochLog &l) {
  std::ostringstream out;
  out << stage << " epoch " << l.epoch << " loss " << l.train_loss << " acc " << l.train_accuracy;
  if (!std::isnan(l.dev_accuracy)) out << " dev_acc " << l.dev_accuracy;
  return out.str();
}

// ---------------------------------------------------------------------------

inline corpus::CorpusManifest synth(const PipelineConfig &cfg) {
  corpus::SynthCorpusConfig c;
  c.train_per_language = cfg.corpus_train;
  c.dev_per_language = cfg.corpus_dev;
  c.test_per_language = cfg.corpus_test;
  c.duration_s = cfg.corpus_duration_s;
  c.seed = cfg.seed;
  c.sample_rate = cfg.frame.sample_rate;
  c.jobs = cfg.jobs;
  return corpus::synth_corpus(c, cfg.corpus_dir);
}

/// Front end over a list of manifest entries, utterance-parallel. Phone
/// labels (when wanted) are computed on the unspliced frame grid and pass
/// through the same VAD mask as the features.
inline void featurize_entries(const PipelineConfig &cfg, const std::vector<const corpus::ManifestEntry *> &entries,
                              std::span<const double> alphas, std::vector<features::FeatureMatrix> &feats,
                              std::vector<features::FeatureMatrix> *phones) {
  feats.assign(entries.size(), {});
  if (phones) phones->assign(entries.size(), {});
  parallel_for(entries.size(), cfg.jobs, [&](size_t k) {
    const auto &e = *entries[k];
    const auto fe = pipeline::front_end(corpus::load_audio(cfg.corpus_dir, e), cfg, alphas);
    feats[k] = fe.features;
    feats[k].utterance_id = e.utterance_id;
    feats[k].language_label = e.language_label;
    if (phones) {
      const auto labels = synth::frame_labels(e.phones, fe.mask.size(), cfg.frame.frame_shift_ms / 1000.0,
                                              cfg.frame.frame_length_ms / 1000.0);
      const auto kept = pipeline::select(labels, fe.mask);
      auto &p = (*phones)[k];
      p.utterance_id = e.utterance_id;
      p.values = Matrix<double>(kept.size(), 1);
      for (size_t t = 0; t < kept.size(); ++t) p.values(t, 0) = kept[t];
    }
  });
}

/// Train and dev front-end features with frame phone labels. With
/// train_splice the training set is also featurized after TSM splicing
/// (feats/train-splice.ark) for the language classifier.
inline void featurize(const PipelineConfig &cfg, std::ostream *progress = nullptr) {
  const auto m = corpus::read_manifest(cfg.corpus_dir);
  const WorkLayout w(cfg.work_dir);
  for (const std::string split : {"train", "dev"}) {
    std::vector<features::FeatureMatrix> feats, phones;
    featurize_entries(cfg, m.select(split), {}, feats, &phones);
    ensure_parent(w.feats(split));
    archive::write(w.feats(split), feats);
    archive::write(w.phones(split), phones);
    note(progress, "featurized " + std::to_string(feats.size()) + " " + split + " utterances");
  }
  if (cfg.train_splice && !cfg.splice_alphas.empty()) {
    std::vector<features::FeatureMatrix> feats;
    featurize_entries(cfg, m.select("train"), cfg.splice_alphas, feats, nullptr);
    archive::write(w.feats("train-splice"), feats);
  }
}

inline pipeline::FrameDataset frame_dataset(const std::vector<features::FeatureMatrix> &feats,
                                            const std::vector<features::FeatureMatrix> &phones,
                                            const features::CmvnStats &cmvn, size_t context) {
  require(feats.size() == phones.size(), ErrorCode::kShapeMismatch, "feature and label archives differ in length");
  pipeline::FrameDataset ds;
  ds.context = context;
  for (size_t k = 0; k < feats.size(); ++k) {
    require(feats[k].utterance_id == phones[k].utterance_id, ErrorCode::kShapeMismatch,
            "label archive out of order at " + feats[k].utterance_id);
    std::vector<int> labels(phones[k].num_frames());
    for (size_t t = 0; t < labels.size(); ++t) labels[t] = static_cast<int>(phones[k].values(t, 0));
    ds.add(features::apply_cmvn(feats[k], cmvn), std::move(labels));
  }
  return ds;
}

inline pipeline::BnModel train_bn(const PipelineConfig &cfg, std::ostream *progress = nullptr) {
  const auto m = corpus::read_manifest(cfg.corpus_dir);
  const WorkLayout w(cfg.work_dir);
  const auto train = archive::read(w.feats("train"));
  const auto dev = archive::read(w.feats("dev"));
  pipeline::BnModel model;
  model.context = cfg.context;
  model.cmvn = features::estimate_cmvn(train);
  const auto train_ds = frame_dataset(train, archive::read(w.phones("train")), model.cmvn, cfg.context);
  const auto dev_ds = frame_dataset(dev, archive::read(w.phones("dev")), model.cmvn, cfg.context);
  nnet::BnDnnArch arch = cfg.bn;
  arch.input_dim = train_ds.input_dim();
  if (arch.num_classes == 0) arch.num_classes = static_cast<size_t>(m.num_phone_classes);
  json log = {{"stage", "train-bn"}, {"config_fingerprint", config::fingerprint(cfg)},
              {"frames", train_ds.index.size()}, {"epochs", json::array()}};
  ensure_parent(w.bn_model());
  auto save = [&](const nnet::BnDnn<float> &net) {
    model.net = net;
    checkpoint::save(pipeline::to_checkpoint(model), w.bn_model());
  };
  model.net = nnet::BnDnn<float>(arch);
  const auto net = pipeline::train_bn_dnn(
      train_ds, &dev_ds, arch, cfg.bn_train, cfg.seed, cfg.jobs, nullptr,
      [&](const pipeline::EpochLog &l, const nnet::BnDnn<float> &n) {
        save(n);
        log["epochs"].push_back(epoch_json(l));
        note(progress, format_epoch("train-bn", l));
      });
  save(net);
  log["checkpoint_checksum"] = hex64(file_checksum(w.bn_model()));
  write_json(w.log("train-bn"), log);
  return model;
}

inline void extract(const PipelineConfig &cfg, std::ostream *progress = nullptr) {
  const WorkLayout w(cfg.work_dir);
  const auto bn = pipeline::bn_from_checkpoint(checkpoint::load(w.bn_model()));
  const bool spliced = cfg.train_splice && !cfg.splice_alphas.empty();
  const std::pair<std::string, std::string> jobs[] = {{spliced ? "train-splice" : "train", "train"},
                                                      {"dev", "dev"}};
  for (const auto &[in, out] : jobs) {
    auto feats = archive::read(w.feats(in));
    parallel_for(feats.size(), cfg.jobs, [&](size_t k) { feats[k] = pipeline::extract_bn(feats[k], bn); });
    ensure_parent(w.bn_feats(out));
    archive::write(w.bn_feats(out), feats);
    note(progress, "extracted bottleneck features for " + std::to_string(feats.size()) + " " + out + " utterances");
  }
}

inline pipeline::BlockDataset block_dataset(const PipelineConfig &cfg, const corpus::CorpusManifest &m,
                                            const std::vector<features::FeatureMatrix> &bn) {
  std::map<std::string, std::string> language;
  for (const auto &e : m.entries) language[e.utterance_id] = e.language_label;
  pipeline::BlockDataset ds;
  for (const auto &f : bn) {
    const auto it = language.find(f.utterance_id);
    require(it != language.end(), ErrorCode::kInvalidArgument, "utterance " + f.utterance_id + " not in manifest");
    ds.add(f, static_cast<size_t>(m.language_index(it->second)), cfg.block);
  }
  return ds;
}

/// Trains the language classifier. The bottleneck checkpoint is hashed
/// before and after; the log records both.
inline nnet::Classifier<float> train_lid(const PipelineConfig &cfg, std::ostream *progress = nullptr) {
  const auto m = corpus::read_manifest(cfg.corpus_dir);
  const WorkLayout w(cfg.work_dir);
  const uint64_t before = file_checksum(w.bn_model());
  const auto train = block_dataset(cfg, m, archive::read(w.bn_feats("train")));
  const auto dev = block_dataset(cfg, m, archive::read(w.bn_feats("dev")));
  require(!train.blocks.empty(), ErrorCode::kEmptyInput, "no training blocks");
  nnet::ClassifierArch arch = cfg.lid;
  arch.input_dim = train.blocks.front().cols;
  if (arch.num_classes == 0) arch.num_classes = m.languages.size();
  require(arch.num_classes == m.languages.size(), ErrorCode::kConfig,
          "classifier has " + std::to_string(arch.num_classes) + " outputs but the corpus has " +
              std::to_string(m.languages.size()) + " languages");
  json log = {{"stage", "train-lid"}, {"config_fingerprint", config::fingerprint(cfg)},
              {"blocks", train.blocks.size()}, {"languages", m.languages}, {"epochs", json::array()}};
  ensure_parent(w.lid_model());
  auto arch_json = checkpoint::to_json(arch);
  arch_json["languages"] = m.languages;
  const auto net = pipeline::train_lid(
      train, &dev, arch, cfg.lid_train, cfg.seed, cfg.jobs, nullptr,
      [&](const pipeline::EpochLog &l, const nnet::Classifier<float> &n) {
        checkpoint::save(checkpoint::make(n, arch_json), w.lid_model());
        log["epochs"].push_back(epoch_json(l));
        note(progress, format_epoch("train-lid", l));
      });
  checkpoint::save(checkpoint::make(net, arch_json), w.lid_model());
  const uint64_t after = file_checksum(w.bn_model());
  log["bn_checksum_before"] = hex64(before);
  log["bn_checksum_after"] = hex64(after);
  log["bn_frozen"] = before == after;
  write_json(w.log("train-lid"), log);
  require(before == after, ErrorCode::kIo, "bottleneck checkpoint changed during classifier training");
  return net;
}

// ---------------------------------------------------------------------------
// Scoring and evaluation

struct ScoredSet {
  std::string condition;
  std::vector<double> alphas;
  metrics::TrialScores trials;
  std::vector<bool> silent;
};

/// Scores test utterances of one duration condition and writes the JSONL
/// scores file. Returns the trials for evaluation.
inline ScoredSet score(const PipelineConfig &cfg, const std::string &condition, std::span<const double> alphas,
                       std::ostream *progress = nullptr) {
  const auto m = corpus::read_manifest(cfg.corpus_dir);
  const WorkLayout w(cfg.work_dir);
  const auto bn = pipeline::bn_from_checkpoint(checkpoint::load(w.bn_model()));
  const auto lid_ckpt = checkpoint::load(w.lid_model());
  const auto lid = checkpoint::load_classifier<float>(lid_ckpt);
  const auto languages = lid_ckpt.architecture.value("languages", m.languages);
  require(languages == m.languages, ErrorCode::kConfig, "classifier languages differ from the corpus");
  const auto entries = m.select("test", condition);
  require(!entries.empty(), ErrorCode::kEmptyInput, "no test utterances for condition " + condition);

  std::vector<pipeline::UtteranceScore> results(entries.size());
  parallel_for(entries.size(), cfg.jobs, [&](size_t k) {
    results[k] = pipeline::score_utterance(corpus::load_audio(cfg.corpus_dir, *entries[k]), bn, lid, cfg, alphas);
  });

  ScoredSet out;
  out.condition = condition;
  out.alphas.assign(alphas.begin(), alphas.end());
  out.trials.languages = m.languages;
  out.trials.scores = Matrix<double>(entries.size(), m.languages.size());
  const std::string fp = config::fingerprint(cfg);
  const std::string path = w.scores(condition, alphas);
  ensure_parent(path);
  std::ofstream file(path);
  for (size_t k = 0; k < entries.size(); ++k) {
    const auto &e = *entries[k];
    const auto &r = results[k];
    json by_language;
    for (size_t l = 0; l < m.languages.size(); ++l) {
      by_language[m.languages[l]] = r.scores[l];
      out.trials.scores(k, l) = r.scores[l];
    }
    out.trials.utterance_ids.push_back(e.utterance_id);
    out.trials.labels.push_back(static_cast<size_t>(m.language_index(e.language_label)));
    out.silent.push_back(r.silent);
    json rec = {{"utterance_id", e.utterance_id}, {"language_label", e.language_label},
                {"scores", by_language}, {"predicted", m.languages[r.predicted]},
                {"num_blocks", r.num_blocks}, {"condition", condition},
                {"splice_alphas", out.alphas}, {"config_fingerprint", fp}};
    if (r.silent) rec["silent"] = true;
    file << rec.dump() << "\n";
  }
  require(file.good(), ErrorCode::kIo, "cannot write " + path);
  note(progress, "scored " + std::to_string(entries.size()) + " test-" + condition + " utterances -> " + path);
  return out;
}

/// Reads a scores file back into trials (language order from the corpus).
inline ScoredSet read_scores(const std::string &path, const std::vector<std::string> &languages) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kMissingFile, "cannot open " + path);
  ScoredSet out;
  out.trials.languages = languages;
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
      out.condition = j.at("condition").get<std::string>();
      out.alphas = j.at("splice_alphas").get<std::vector<double>>();
      out.trials.utterance_ids.push_back(j.at("utterance_id").get<std::string>());
      const auto label = j.at("language_label").get<std::string>();
      const auto it = std::find(languages.begin(), languages.end(), label);
      require(it != languages.end(), ErrorCode::kInvalidArgument, "unknown language " + label);
      out.trials.labels.push_back(static_cast<size_t>(it - languages.begin()));
      std::vector<double> row;
      for (const auto &l : languages) row.push_back(j.at("scores").at(l).get<double>());
      rows.push_back(std::move(row));
      out.silent.push_back(j.value("silent", false));
    } catch (const json::exception &e) {
      fail(ErrorCode::kBadContainer, path + ": " + e.what());
    }
  }
  require(!rows.empty(), ErrorCode::kEmptyInput, "no records in " + path);
  out.trials.scores = Matrix<double>(rows.size(), languages.size());
  for (size_t u = 0; u < rows.size(); ++u)
    std::copy(rows[u].begin(), rows[u].end(), out.trials.scores.row(u).begin());
  return out;
}

inline json metrics_json(const metrics::MetricsReport &r, const ScoredSet &s) {
  json per_language = json::object();
  size_t target = 0, nontarget = 0;
  for (const auto &l : r.per_language) {
    per_language[l.language] = {{"eer", l.eer}, {"p_miss", l.p_miss}, {"threshold", l.threshold},
                                {"target_trials", l.target_trials}, {"nontarget_trials", l.nontarget_trials}};
    target += l.target_trials;
    nontarget += l.nontarget_trials;
  }
  return {{"condition", s.condition},
          {"splice_alphas", s.alphas},
          {"num_utterances", r.num_utterances},
          {"accuracy", r.accuracy},
          {"p_target", r.p_target},
          {"cavg", {{metrics::policy_name(metrics::ThresholdPolicy::kMinCavgSweep), r.cavg_sweep},
                    {metrics::policy_name(metrics::ThresholdPolicy::kFixedLogOdds), r.cavg_fixed}}},
          {"eer_pooled", r.eer_pooled},
          {"eer_mean", r.eer_mean},
          {"target_trials", target},
          {"nontarget_trials", nontarget},
          {"silent_utterances", std::count(s.silent.begin(), s.silent.end(), true)},
          {"per_language", per_language}};
}

/// Table in the usual C_avg / EER layout, one row per scored set.
inline std::string metrics_table(const std::vector<std::pair<metrics::MetricsReport, ScoredSet>> &rows) {
  std::ostringstream out;
  out << "condition  tsm            C_avg   C_avg(fixed)  EER(%)  acc(%)\n";
  for (const auto &[r, s] : rows) {
    std::string tsm = "none";
    if (!s.alphas.empty()) tsm = WorkLayout::alpha_suffix(s.alphas).substr(5);
    char line[160];
    std::snprintf(line, sizeof line, "%-10s %-14s %6.4f  %12.4f  %6.2f  %6.2f\n", ("test-" + s.condition).c_str(),
                  tsm.c_str(), r.cavg_sweep, r.cavg_fixed, 100.0 * r.eer_pooled, 100.0 * r.accuracy);
    out << line;
  }
  return out.str();
}

/// Evaluates scored sets, writes metrics.json and returns the table text.
inline std::string evaluate(const PipelineConfig &cfg, const std::vector<ScoredSet> &sets) {
  std::vector<std::pair<metrics::MetricsReport, ScoredSet>> rows;
  json results = json::array();
  for (const auto &s : sets) {
    rows.emplace_back(metrics::evaluate(s.trials), s);
    results.push_back(metrics_json(rows.back().first, s));
  }
  const json j = {{"config_fingerprint", config::fingerprint(cfg)},
                  {"seed", cfg.seed},
                  {"default_threshold_policy", metrics::policy_name(metrics::ThresholdPolicy::kMinCavgSweep)},
                  {"results", results}};
  write_json(WorkLayout(cfg.work_dir).metrics(), j);
  return metrics_table(rows);
}

}  // namespace lidtsm::stages
