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


// Command-line front end. Every subcommand reads the same configuration:
// the profile or --config file, then LIDTSM_CORPUS_DIR / LIDTSM_WORK_DIR,
// then --set key=value and the explicit flags.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lidtsm/gradcheck.hpp"
#include "lidtsm/stages.hpp"

namespace {

using namespace lidtsm;
using nlohmann::json;

struct Options {
  std::string config_path;
  std::string profile;
  std::vector<std::string> sets;
  int jobs = 0;
  long long seed = -1;
  std::string corpus_dir, work_dir;
};

config::PipelineConfig resolve(const Options &o) {
  config::PipelineConfig c = !o.config_path.empty() ? config::load(o.config_path)
                             : !o.profile.empty()   ? config::profile(o.profile)
                                                    : config::desk_scale();
  config::apply_env_overrides(c);
  for (const auto &kv : o.sets) {
    const auto eq = kv.find('=');
    require(eq != std::string::npos, ErrorCode::kConfig, "--set expects key=value, got '" + kv + "'");
    config::set(c, config::detail::trim(kv.substr(0, eq)), config::detail::trim(kv.substr(eq + 1)));
  }
  if (o.jobs > 0) c.jobs = o.jobs;
  if (o.seed >= 0) c.seed = static_cast<uint64_t>(o.seed);
  if (!o.corpus_dir.empty()) c.corpus_dir = o.corpus_dir;
  if (!o.work_dir.empty()) c.work_dir = o.work_dir;
  c.validate();
  return c;
}

std::vector<double> parse_alphas(const std::string &text) {
  std::vector<double> out;
  if (text.empty() || text == "none") return out;
  config::PipelineConfig tmp;
  config::set(tmp, "tsm.splice_alphas", text);
  return tmp.splice_alphas;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<stages::ScoredSet> score_all(const config::PipelineConfig &c, const std::vector<std::string> &conditions,
                                         const std::vector<std::vector<double>> &alpha_sets) {
  std::vector<stages::ScoredSet> sets;
  for (const auto &alphas : alpha_sets)
    for (const auto &cond : conditions) sets.push_back(stages::score(c, cond, alphas, &std::cerr));
  return sets;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Short-utterance spoken language identification with time-scale modification"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config_path, "Config file (key = value, [section] headers)");
  app.add_option("--profile", o.profile, "desk-scale or full-scale (ignored with --config)");
  app.add_option("--set", o.sets, "Override one setting, e.g. --set block.step=25");
  app.add_option("--jobs,-j", o.jobs, "Worker threads");
  app.add_option("--seed", o.seed, "Master seed");
  app.add_option("--corpus-dir", o.corpus_dir, "Corpus directory");
  app.add_option("--work-dir", o.work_dir, "Work directory");

  auto *synth = app.add_subcommand("synth-corpus", "Generate the synthetic three-language corpus");

  std::string in_path, out_path, alpha_text, condition = "full";
  double alpha = 1.0;
  auto *tsm_cmd = app.add_subcommand("tsm", "Time-stretch a WAV file by rate alpha");
  tsm_cmd->add_option("input", in_path, "Input WAV")->required();
  tsm_cmd->add_option("output", out_path, "Output WAV")->required();
  tsm_cmd->add_option("--alpha", alpha, "Rate factor (>1 faster, <1 slower)")->required();

  auto *splice = app.add_subcommand("splice", "Concatenate a WAV file with stretched copies");
  splice->add_option("input", in_path, "Input WAV")->required();
  splice->add_option("output", out_path, "Output WAV")->required();
  splice->add_option("--alphas", alpha_text, "Comma-separated rates, e.g. 0.8,1.2")->required();

  auto *featurize = app.add_subcommand("featurize", "Front-end features and phone labels for train/dev");
  auto *train_bn = app.add_subcommand("train-bn", "Train the bottleneck DNN");
  auto *extract = app.add_subcommand("extract-bn", "Extract bottleneck features for train/dev");
  auto *train_lid = app.add_subcommand("train-lid", "Train the LSTM language classifier");

  auto *score = app.add_subcommand("score", "Score test utterances");
  score->add_option("--condition", condition, "full, 3s or 1s")->check(CLI::IsMember({"full", "3s", "1s"}));
  score->add_option("--alphas", alpha_text, "TSM splice rates (default: from config; 'none' disables)");

  std::vector<std::string> score_files;
  auto *evaluate = app.add_subcommand("evaluate", "C_avg / EER table from scores files");
  evaluate->add_option("scores", score_files, "Scores files (default: every file under <work>/scores)");

  size_t gc_block = 5, gc_blocks = 2;
  auto *gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of the classifier gradient");
  gradcheck->add_option("--block-length", gc_block, "Frames per block");
  gradcheck->add_option("--blocks", gc_blocks, "Blocks in the loss");

  auto *run = app.add_subcommand("run", "All stages, then scoring of every test condition with and without TSM");

  CLI11_PARSE(app, argc, argv);

  try {
    const auto t0 = std::chrono::steady_clock::now();
    if (tsm_cmd->parsed()) {
      write_wav(quantized(tsm::time_stretch(read_wav(in_path), alpha)), out_path);
      return 0;
    }
    if (splice->parsed()) {
      const auto alphas = parse_alphas(alpha_text);
      write_wav(quantized(tsm::splice_rates(read_wav(in_path), alphas)), out_path);
      return 0;
    }
    const auto c = resolve(o);
    if (synth->parsed()) {
      const auto m = stages::synth(c);
      std::cout << json{{"corpus_dir", c.corpus_dir}, {"utterances", m.entries.size()},
                        {"languages", m.languages}, {"phone_classes", m.num_phone_classes}}.dump()
                << "\n";
    } else if (featurize->parsed()) {
      stages::featurize(c, &std::cerr);
    } else if (train_bn->parsed()) {
      stages::train_bn(c, &std::cerr);
    } else if (extract->parsed()) {
      stages::extract(c, &std::cerr);
    } else if (train_lid->parsed()) {
      stages::train_lid(c, &std::cerr);
    } else if (score->parsed()) {
      const auto alphas = score->count("--alphas") ? parse_alphas(alpha_text) : c.splice_alphas;
      stages::score(c, condition, alphas, &std::cerr);
    } else if (evaluate->parsed()) {
      const auto m = corpus::read_manifest(c.corpus_dir);
      if (score_files.empty()) {
        const auto dir = std::filesystem::path(c.work_dir) / "scores";
        require(std::filesystem::is_directory(dir), ErrorCode::kMissingFile, "no scores under " + dir.string());
        for (const auto &e : std::filesystem::directory_iterator(dir))
          if (e.path().extension() == ".jsonl") score_files.push_back(e.path().string());
        std::sort(score_files.begin(), score_files.end());
      }
      std::vector<stages::ScoredSet> sets;
      for (const auto &f : score_files) sets.push_back(stages::read_scores(f, m.languages));
      std::cout << stages::evaluate(c, sets);
    } else if (gradcheck->parsed()) {
      const nnet::ClassifierArch arch{3, 4, 4, 5, 3};
      const auto r = nnet::classifier_gradcheck(arch, gc_block, gc_blocks, c.seed);
      std::cout << json{{"max_relative_error", r.max_relative_error},
                        {"max_absolute_error", r.max_absolute_error},
                        {"worst_parameter", r.worst_parameter},
                        {"checked", r.checked}}.dump()
                << "\n";
      return r.max_relative_error <= 1e-4 ? 0 : 1;
    } else if (run->parsed()) {
      if (!std::filesystem::exists(std::filesystem::path(c.corpus_dir) / "manifest.jsonl")) stages::synth(c);
      stages::featurize(c, &std::cerr);
      stages::train_bn(c, &std::cerr);
      stages::extract(c, &std::cerr);
      stages::train_lid(c, &std::cerr);
      std::vector<std::vector<double>> alpha_sets = {{}};
      if (!c.splice_alphas.empty()) alpha_sets.push_back(c.splice_alphas);
      std::cout << stages::evaluate(c, score_all(c, {"full", "3s", "1s"}, alpha_sets));
    }
    std::cerr << "done in " << seconds_since(t0) << " s\n";
  } catch (const Error &e) {
    std::cerr << json{{"error", std::string(error_code_name(e.code()))}, {"message", e.what()}}.dump() << "\n";
    return 2;
  } catch (const std::exception &e) {
    std::cerr << json{{"error", "internal"}, {"message", e.what()}}.dump() << "\n";
    return 2;
  }
  return 0;
}
