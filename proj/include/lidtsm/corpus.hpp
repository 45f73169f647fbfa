// lidtsm/corpus.hpp

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

// Corpus manifest (JSON lines) and the synthetic corpus writer.
//
// Layout of a corpus directory:
//   corpus.json      language inventory, phone-class count, generator settings
//   manifest.jsonl   one record per utterance
//   wav/<id>.wav

#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "lidtsm/audio_io.hpp"
#include "lidtsm/error.hpp"
#include "lidtsm/synth.hpp"
#include "lidtsm/util.hpp"

namespace lidtsm::corpus {

using nlohmann::json;

struct ManifestEntry {
  std::string utterance_id;
  std::string file_path;  // relative to the corpus directory
  std::string language_label;
  std::string split;               // train | dev | test
  double duration_s = 0.0;
  std::string condition = "full";  // full | 3s | 1s
  std::vector<synth::PhoneSegment> phones;
};

struct CorpusManifest {
  std::vector<std::string> languages;
  int num_phone_classes = 0;  // including silence
  json generator;             // settings that produced the corpus
  std::vector<ManifestEntry> entries;

  int language_index(const std::string &label) const {
    for (size_t k = 0; k < languages.size(); ++k)
      if (languages[k] == label) return static_cast<int>(k);
    fail(ErrorCode::kInvalidArgument, "language '" + label + "' is not in the inventory");
  }

  std::vector<const ManifestEntry *> select(const std::string &split,
                                            const std::string &condition = "full") const {
    std::vector<const ManifestEntry *> out;
    for (const auto &e : entries)
      if (e.split == split && e.condition == condition) out.push_back(&e);
    return out;
  }

  void validate() const {
    require(languages.size() >= 2, ErrorCode::kConfig, "manifest needs at least two languages");
    std::set<std::string> ids;
    std::map<std::string, std::set<std::string>> splits;
    for (const auto &e : entries) {
      require(ids.insert(e.utterance_id).second, ErrorCode::kConfig,
              "duplicate utterance id " + e.utterance_id);
      language_index(e.language_label);
      require(e.split == "train" || e.split == "dev" || e.split == "test", ErrorCode::kConfig,
              "bad split '" + e.split + "' for " + e.utterance_id);
      splits[e.split].insert(e.language_label);
    }
    for (const char *s : {"train", "dev", "test"})
      require(splits[s].size() == languages.size(), ErrorCode::kConfig,
              std::string("split ") + s + " is missing a language");
  }
};

inline json to_json(const ManifestEntry &e) {
  json phones = json::array();
  for (const auto &p : e.phones) phones.push_back({p.start, p.end, p.phone});
  return {{"utterance_id", e.utterance_id}, {"file_path", e.file_path},
          {"language_label", e.language_label}, {"split", e.split},
          {"duration_s", e.duration_s}, {"condition", e.condition}, {"phones", phones}};
}

inline ManifestEntry entry_from_json(const json &j) {
  ManifestEntry e;
  try {
    e.utterance_id = j.at("utterance_id").get<std::string>();
    e.file_path = j.at("file_path").get<std::string>();
    e.language_label = j.at("language_label").get<std::string>();
    e.split = j.at("split").get<std::string>();
    e.duration_s = j.at("duration_s").get<double>();
    e.condition = j.value("condition", std::string("full"));
    if (j.contains("phones"))
      for (const auto &p : j.at("phones"))
        e.phones.push_back({p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<int>()});
  } catch (const json::exception &ex) {
    fail(ErrorCode::kConfig, std::string("malformed manifest record: ") + ex.what());
  }
  return e;
}

inline void write_manifest(const CorpusManifest &m, const std::filesystem::path &dir) {
  std::filesystem::create_directories(dir);
  json meta = {{"languages", m.languages},
               {"num_phone_classes", m.num_phone_classes},
               {"generator", m.generator}};
  std::ofstream meta_out(dir / "corpus.json");
  require(meta_out.good(), ErrorCode::kUnwritablePath, "cannot write " + (dir / "corpus.json").string());
  meta_out << meta.dump(2) << "\n";
  std::ofstream out(dir / "manifest.jsonl");
  require(out.good(), ErrorCode::kUnwritablePath, "cannot write manifest in " + dir.string());
  for (const auto &e : m.entries) out << to_json(e).dump() << "\n";
}

inline CorpusManifest read_manifest(const std::filesystem::path &dir) {
  const auto meta_path = dir / "corpus.json";
  const auto list_path = dir / "manifest.jsonl";
  require(std::filesystem::exists(meta_path) && std::filesystem::exists(list_path),
          ErrorCode::kMissingFile, "no corpus at " + dir.string());
  CorpusManifest m;
  try {
    std::ifstream in(meta_path);
    const json meta = json::parse(in);
    m.languages = meta.at("languages").get<std::vector<std::string>>();
    m.num_phone_classes = meta.at("num_phone_classes").get<int>();
    m.generator = meta.value("generator", json::object());
  } catch (const json::exception &ex) {
    fail(ErrorCode::kConfig, std::string("malformed corpus.json: ") + ex.what());
  }
  std::ifstream in(list_path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception &ex) {
      fail(ErrorCode::kConfig, std::string("malformed manifest line: ") + ex.what());
    }
    m.entries.push_back(entry_from_json(j));
  }
  m.validate();
  return m;
}

inline Waveform load_audio(const std::filesystem::path &corpus_dir, const ManifestEntry &e) {
  return read_wav((corpus_dir / e.file_path).string());
}

struct SynthCorpusConfig {
  std::vector<synth::SynthLanguageRecipe> recipes = synth::default_recipes();
  size_t train_per_language = 24;
  size_t dev_per_language = 6;
  size_t test_per_language = 30;
  double duration_s = 4.0;
  uint64_t seed = 1;
  int sample_rate = 16000;
  int jobs = 1;

  void validate() const {
    require(recipes.size() >= 2, ErrorCode::kConfig, "need at least two language recipes");
    require(train_per_language > 0 && dev_per_language > 0 && test_per_language > 0,
            ErrorCode::kConfig, "per-split utterance counts must be positive");
    require(duration_s > 0.0, ErrorCode::kConfig, "duration must be positive");
    for (const auto &r : recipes) r.validate(sample_rate);
  }
};

/// Writes the corpus to `dir` and returns its manifest. Output depends only
/// on the config (the job count changes nothing).
inline CorpusManifest synth_corpus(const SynthCorpusConfig &cfg, const std::filesystem::path &dir) {
  cfg.validate();
  std::filesystem::create_directories(dir / "wav");
  const auto inventory = synth::phone_inventory(cfg.recipes);

  struct Job {
    size_t lang;
    std::string split;
    size_t index;
  };
  std::vector<Job> jobs;
  const std::pair<const char *, size_t> splits[] = {
      {"train", cfg.train_per_language}, {"dev", cfg.dev_per_language}, {"test", cfg.test_per_language}};
  for (size_t l = 0; l < cfg.recipes.size(); ++l)
    for (const auto &[split, count] : splits)
      for (size_t i = 0; i < count; ++i) jobs.push_back({l, split, i});

  std::vector<std::vector<ManifestEntry>> produced(jobs.size());
  parallel_for(jobs.size(), cfg.jobs, [&](size_t j) {
    const Job &job = jobs[j];
    const auto &recipe = cfg.recipes[job.lang];
    const uint64_t split_tag = job.split == "train" ? 1 : job.split == "dev" ? 2 : 3;
    const uint64_t seed = derive_seed(derive_seed(derive_seed(cfg.seed, recipe.seed), split_tag), job.index);
    Rng rng(seed);
    const double duration = cfg.duration_s * rng.uniform(0.85, 1.15);
    const auto utt = synth::synthesize_utterance(recipe, inventory, duration, rng.next(), cfg.sample_rate);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04zu", job.index);
    const std::string id = recipe.name + "-" + job.split + "-" + buf;

    auto emit = [&](const synth::SynthUtterance &u, const std::string &uid, const std::string &cond) {
      ManifestEntry e;
      e.utterance_id = uid;
      e.file_path = "wav/" + uid + ".wav";
      e.language_label = recipe.name;
      e.split = job.split;
      e.duration_s = u.wave.duration();
      e.condition = cond;
      e.phones = u.phones;
      write_wav(u.wave, (dir / e.file_path).string());
      produced[j].push_back(std::move(e));
    };
    emit(utt, id, "full");
    if (job.split == "test") {
      if (utt.wave.duration() > 3.0) emit(synth::truncate(utt, 3.0), id + "-3s", "3s");
      emit(synth::truncate(utt, 1.0), id + "-1s", "1s");
    }
  });

  CorpusManifest m;
  for (const auto &r : cfg.recipes) m.languages.push_back(r.name);
  m.num_phone_classes = static_cast<int>(inventory.size()) + 1;
  json recipes = json::array();
  for (const auto &r : cfg.recipes)
    recipes.push_back({{"name", r.name}, {"formants", r.formants}, {"bandwidths", r.bandwidths},
                       {"syllable_rate", {r.min_syllable_rate, r.max_syllable_rate}},
                       {"pitch", {r.min_pitch, r.max_pitch}}, {"seed", r.seed}});
  m.generator = {{"seed", cfg.seed}, {"duration_s", cfg.duration_s},
                 {"sample_rate", cfg.sample_rate}, {"phone_inventory_hz", inventory},
                 {"counts", {cfg.train_per_language, cfg.dev_per_language, cfg.test_per_language}},
                 {"recipes", recipes}};
  for (auto &list : produced)
    for (auto &e : list) m.entries.push_back(std::move(e));
  m.validate();
  write_manifest(m, dir);
  return m;
}

}  // namespace lidtsm::corpus
