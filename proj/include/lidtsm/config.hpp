// lidtsm/config.hpp

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

// Pipeline configuration, the two named profiles, and a small TOML-like
// text format:
//
//   # comment
//   profile = desk-scale        # must come before any section
//   seed = 7
//   [bn]
//   hidden_width = 256
//   [tsm]
//   splice_alphas = 0.8, 1.2
//
// Keys are "section.name"; unknown keys are errors. Paths may be overridden
// by LIDTSM_CORPUS_DIR and LIDTSM_WORK_DIR.

#pragma once

#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "lidtsm/blocking.hpp"
#include "lidtsm/error.hpp"
#include "lidtsm/features.hpp"
#include "lidtsm/nnet.hpp"
#include "lidtsm/util.hpp"

namespace lidtsm::config {

struct TrainConfig {
  size_t epochs = 50;
  size_t batch_size = 256;
  std::string optimizer = "sgd";  // sgd | adam
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 0.0;  // 0 disables global-norm clipping
  size_t shards = 8;       // fixed gradient reduction tree, independent of jobs

  void validate(const std::string &stage) const {
    require(batch_size > 0 && shards > 0, ErrorCode::kConfig, stage + ": batch size and shards must be positive");
    require(optimizer == "sgd" || optimizer == "adam", ErrorCode::kConfig,
            stage + ": optimizer must be sgd or adam");
    require(learning_rate >= 0.0 && clip_norm >= 0.0, ErrorCode::kConfig,
            stage + ": negative learning rate or clip norm");
  }
};

struct PipelineConfig {
  std::string profile = "desk-scale";
  uint64_t seed = 1;
  int jobs = 1;

  features::FrameConfig frame;
  features::VadConfig vad;
  size_t context = 11;  // M
  blocking::BlockConfig block;
  nnet::BnDnnArch bn;         // input_dim derived; num_classes 0 = from corpus
  nnet::ClassifierArch lid;   // input_dim derived; num_classes 0 = from corpus
  TrainConfig bn_train;
  TrainConfig lid_train;
  std::vector<double> splice_alphas;  // test-time TSM; empty = off
  bool train_splice = false;          // also splice LID training utterances

  // Synthetic corpus.
  size_t corpus_train = 24;
  size_t corpus_dev = 6;
  size_t corpus_test = 30;
  double corpus_duration_s = 4.0;

  std::string corpus_dir = "corpus";
  std::string work_dir = "work";

  size_t feature_dim() const { return static_cast<size_t>(frame.feature_dim()); }

  void validate() const {
    frame.validate();
    block.validate();
    require(context % 2 == 1, ErrorCode::kConfig, "context must be odd");
    require(jobs >= 1, ErrorCode::kConfig, "jobs must be at least 1");
    require(bn.hidden_layers >= 1 && bn.hidden_width > 0 && bn.bottleneck_width > 0,
            ErrorCode::kConfig, "invalid bn architecture");
    require(lid.lstm1 > 0 && lid.lstm2 > 0 && lid.relu_width > 0, ErrorCode::kConfig,
            "invalid lid architecture");
    bn_train.validate("bn_train");
    lid_train.validate("lid_train");
    for (double a : splice_alphas)
      require(a >= 0.5 && a <= 2.0, ErrorCode::kConfig, "splice alpha outside [0.5, 2]");
    require(corpus_train > 0 && corpus_dev > 0 && corpus_test > 0 && corpus_duration_s > 0,
            ErrorCode::kConfig, "corpus counts and duration must be positive");
  }
};

/// Full-size system: 50 cepstra (153-dim frames), 11-frame
/// context, 5 x 512 DNN with a 512-wide linear bottleneck and 6294 targets,
/// 2 x 512 LSTM, 1024 ReLU, 10 languages, SGD 0.001 / Adam 0.0002, 50 epochs,
/// batch 256.
inline PipelineConfig full_scale() {
  PipelineConfig c;
  c.profile = "full-scale";
  c.frame.cepstral_order = 49;
  c.bn = {0, 5, 512, 512, 6294};
  c.lid = {0, 512, 512, 1024, 10};
  c.bn_train.epochs = 50;
  c.bn_train.batch_size = 256;
  c.bn_train.optimizer = "sgd";
  c.bn_train.learning_rate = 0.001;
  c.lid_train.epochs = 50;
  c.lid_train.batch_size = 256;
  c.lid_train.optimizer = "adam";
  c.lid_train.learning_rate = 0.0002;
  return c;
}

/// Small enough to run the whole toy experiment on one core in minutes.
inline PipelineConfig desk_scale() {
  PipelineConfig c;
  c.profile = "desk-scale";
  c.frame.cepstral_order = 16;
  c.bn = {0, 3, 128, 32, 0};
  c.lid = {0, 32, 32, 64, 0};
  c.bn_train.epochs = 6;
  c.bn_train.batch_size = 128;
  c.bn_train.optimizer = "sgd";
  c.bn_train.learning_rate = 0.5;
  c.lid_train.epochs = 30;
  c.lid_train.batch_size = 16;
  c.lid_train.optimizer = "adam";
  c.lid_train.learning_rate = 0.003;
  c.lid_train.clip_norm = 5.0;
  return c;
}

inline PipelineConfig profile(const std::string &name) {
  if (name == "desk-scale") return desk_scale();
  if (name == "full-scale") return full_scale();
  fail(ErrorCode::kConfig, "unknown profile '" + name + "' (expected desk-scale or full-scale)");
}

namespace detail {

inline std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string &key, const std::string &v) {
  std::istringstream in(v);
  T out{};
  in >> out;
  require(!in.fail() && in.eof(), ErrorCode::kConfig, "bad value for " + key + ": '" + v + "'");
  return out;
}

inline std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

struct Field {
  std::string key;
  std::function<void(const std::string &)> set;
  std::function<std::string()> get;
  bool fingerprinted = true;
};

template <typename T>
Field number(const std::string &key, T &ref) {
  return {key, [&ref, key](const std::string &v) { ref = parse_number<T>(key, v); },
          [&ref] {
            if constexpr (std::is_floating_point_v<T>) return format_double(ref);
            else return std::to_string(ref);
          }};
}

inline Field text(const std::string &key, std::string &ref, bool fingerprinted = true) {
  return {key, [&ref](const std::string &v) { ref = v; }, [&ref] { return ref; }, fingerprinted};
}

inline Field flag(const std::string &key, bool &ref) {
  return {key,
          [&ref, key](const std::string &v) {
            require(v == "true" || v == "false", ErrorCode::kConfig, key + " must be true or false");
            ref = v == "true";
          },
          [&ref] { return std::string(ref ? "true" : "false"); }};
}

inline Field list(const std::string &key, std::vector<double> &ref) {
  return {key,
          [&ref, key](const std::string &v) {
            ref.clear();
            std::stringstream in(v);
            std::string item;
            while (std::getline(in, item, ',')) {
              item = trim(item);
              if (!item.empty()) ref.push_back(parse_number<double>(key, item));
            }
          },
          [&ref] {
            std::string out;
            for (size_t k = 0; k < ref.size(); ++k) out += (k ? ", " : "") + format_double(ref[k]);
            return out;
          }};
}

inline void add_train(std::vector<Field> &f, const std::string &s, TrainConfig &t) {
  f.push_back(number(s + ".epochs", t.epochs));
  f.push_back(number(s + ".batch_size", t.batch_size));
  f.push_back(text(s + ".optimizer", t.optimizer));
  f.push_back(number(s + ".learning_rate", t.learning_rate));
  f.push_back(number(s + ".beta1", t.beta1));
  f.push_back(number(s + ".beta2", t.beta2));
  f.push_back(number(s + ".epsilon", t.epsilon));
  f.push_back(number(s + ".clip_norm", t.clip_norm));
  f.push_back(number(s + ".shards", t.shards));
}

/// Every configurable key, in canonical order.
inline std::vector<Field> fields(PipelineConfig &c) {
  std::vector<Field> f;
  f.push_back(text("profile", c.profile));
  f.push_back(number("seed", c.seed));
  f.push_back(number("jobs", c.jobs));
  f.back().fingerprinted = false;
  f.push_back(text("paths.corpus_dir", c.corpus_dir, false));
  f.push_back(text("paths.work_dir", c.work_dir, false));
  f.push_back(number("corpus.train_per_language", c.corpus_train));
  f.push_back(number("corpus.dev_per_language", c.corpus_dev));
  f.push_back(number("corpus.test_per_language", c.corpus_test));
  f.push_back(number("corpus.duration_s", c.corpus_duration_s));
  f.push_back(number("features.cepstral_order", c.frame.cepstral_order));
  f.push_back(number("features.num_bands", c.frame.num_bands));
  f.push_back(number("features.preemphasis", c.frame.preemphasis));
  f.push_back(number("features.frame_length_ms", c.frame.frame_length_ms));
  f.push_back(number("features.frame_shift_ms", c.frame.frame_shift_ms));
  f.push_back(number("features.delta_window", c.frame.delta_window));
  f.push_back(number("features.min_f0", c.frame.min_f0));
  f.push_back(number("features.max_f0", c.frame.max_f0));
  f.push_back(number("features.voicing_threshold", c.frame.voicing_threshold));
  f.push_back(number("vad.stddev_scale", c.vad.stddev_scale));
  f.push_back(number("vad.dynamic_range_db", c.vad.dynamic_range_db));
  f.push_back(number("bn.context", c.context));
  f.push_back(number("bn.hidden_layers", c.bn.hidden_layers));
  f.push_back(number("bn.hidden_width", c.bn.hidden_width));
  f.push_back(number("bn.bottleneck_width", c.bn.bottleneck_width));
  f.push_back(number("bn.num_classes", c.bn.num_classes));
  add_train(f, "bn_train", c.bn_train);
  f.push_back(number("block.length", c.block.block_length));
  f.push_back(number("block.step", c.block.block_step));
  f.push_back(number("lid.lstm1", c.lid.lstm1));
  f.push_back(number("lid.lstm2", c.lid.lstm2));
  f.push_back(number("lid.relu_width", c.lid.relu_width));
  f.push_back(number("lid.num_classes", c.lid.num_classes));
  add_train(f, "lid_train", c.lid_train);
  f.push_back(list("tsm.splice_alphas", c.splice_alphas));
  f.push_back(flag("tsm.train_splice", c.train_splice));
  return f;
}

}  // namespace detail

/// Sets one "section.name" key.
inline void set(PipelineConfig &c, const std::string &key, const std::string &value) {
  require(key != "profile", ErrorCode::kConfig, "profile can only be chosen first");
  for (auto &f : detail::fields(c))
    if (f.key == key) {
      f.set(value);
      return;
    }
  fail(ErrorCode::kConfig, "unknown config key '" + key + "'");
}

/// Canonical "key = value" listing of every field.
inline std::string dump(const PipelineConfig &c, bool fingerprinted_only = false) {
  PipelineConfig copy = c;
  std::string out;
  for (const auto &f : detail::fields(copy))
    if (!fingerprinted_only || f.fingerprinted) out += f.key + " = " + f.get() + "\n";
  return out;
}

/// Hash of every setting that can change results (paths and jobs excluded).
inline std::string fingerprint(const PipelineConfig &c) { return hex64(fnv1a(dump(c, true))); }

inline void apply_env_overrides(PipelineConfig &c) {
  if (const char *v = std::getenv("LIDTSM_CORPUS_DIR"); v && *v) c.corpus_dir = v;
  if (const char *v = std::getenv("LIDTSM_WORK_DIR"); v && *v) c.work_dir = v;
}

/// Parses config text on top of the named profile (or desk-scale).
inline PipelineConfig parse(const std::string &text) {
  std::vector<std::pair<std::string, std::string>> items;
  std::string section, line;
  std::istringstream in(text);
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      require(line.back() == ']', ErrorCode::kConfig,
              "line " + std::to_string(line_no) + ": unterminated section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorCode::kConfig,
            "line " + std::to_string(line_no) + ": expected key = value");
    std::string key = detail::trim(line.substr(0, eq));
    std::string value = detail::trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    items.emplace_back(section.empty() ? key : section + "." + key, value);
  }
  PipelineConfig c = desk_scale();
  for (size_t k = 0; k < items.size(); ++k) {
    if (items[k].first != "profile") continue;
    require(k == 0, ErrorCode::kConfig, "profile must be the first setting");
    c = profile(items[k].second);
  }
  for (const auto &[key, value] : items)
    if (key != "profile") set(c, key, value);
  c.validate();
  return c;
}

inline PipelineConfig load(const std::string &path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kMissingFile, "cannot open config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

}  // namespace lidtsm::config
