// Copyright 2026 The Crydet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"

#include "crydet/corpus.hpp"
#include "crydet/error.hpp"
#include "crydet/features.hpp"
#include "crydet/harness.hpp"
#include "crydet/preprocess.hpp"

namespace fs = std::filesystem;
using namespace crydet;

namespace {

struct RunConfig {
  detect::ModelSpec spec;
  corpus::SynthSpec synth;
  int jobs = 1;
};

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    // trim
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key=value");
    }
    auto strip = [](std::string s) {
      const auto b2 = s.find_first_not_of(" \t");
      if (b2 == std::string::npos) return std::string();
      const auto e2 = s.find_last_not_of(" \t");
      return s.substr(b2, e2 - b2 + 1);
    };
    kv[strip(line.substr(0, eq))] = strip(line.substr(eq + 1));
  }
  return kv;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: bad number for " + key + ": '" + v + "'");
  }
}

long to_long(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long n = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer for " + key + ": '" + v + "'");
  }
}

void apply_config(const std::map<std::string, std::string>& kv, RunConfig& rc) {
  for (const auto& [key, value] : kv) {
    if (key == "variant") {
      rc.spec.variant = detect::variant_from_string(value);
    } else if (key == "seed") {
      rc.spec.seed = static_cast<std::uint64_t>(to_long(key, value));
      rc.synth.seed = rc.spec.seed;
    } else if (key == "jobs") {
      rc.jobs = static_cast<int>(to_long(key, value));
      if (rc.jobs < 1) throw ConfigError("config: jobs must be >= 1");
    } else if (key == "verbose") {
      rc.spec.verbose = to_long(key, value) != 0;
    } else if (key == "silence.threshold_db") {
      rc.spec.silence_threshold_db = to_double(key, value);
    } else if (key == "svm.c") {
      rc.spec.svm_params.c = to_double(key, value);
    } else if (key == "svm.gamma") {
      rc.spec.svm_params.gamma = to_double(key, value);
    } else if (key == "svm.tol") {
      rc.spec.svm_params.tol = to_double(key, value);
    } else if (key == "cnn.preset") {
      rc.spec.preset = nn::preset_from_string(value);
    } else if (key == "cnn.epochs") {
      rc.spec.train_cfg.epochs = static_cast<int>(to_long(key, value));
    } else if (key == "cnn.batch_size") {
      rc.spec.train_cfg.batch_size = static_cast<int>(to_long(key, value));
    } else if (key == "cnn.learning_rate") {
      rc.spec.train_cfg.learning_rate = to_double(key, value);
    } else if (key == "cnn.beta1") {
      rc.spec.train_cfg.beta1 = to_double(key, value);
    } else if (key == "cnn.beta2") {
      rc.spec.train_cfg.beta2 = to_double(key, value);
    } else if (key == "cnn.epsilon") {
      rc.spec.train_cfg.epsilon = to_double(key, value);
    } else if (key == "embed.path") {
      rc.spec.embeddings_path = value;
    } else if (key == "synth.participants") {
      rc.synth.participants = static_cast<int>(to_long(key, value));
    } else if (key == "synth.duration_s") {
      rc.synth.recording_seconds = static_cast<int>(to_long(key, value));
    } else if (key == "synth.palette") {
      rc.synth.palette = corpus::palette_from_string(value);
    } else if (key == "synth.f0_min") {
      rc.synth.f0_min_hz = to_double(key, value);
    } else if (key == "synth.f0_max") {
      rc.synth.f0_max_hz = to_double(key, value);
    } else if (key == "synth.episode_min_s") {
      rc.synth.episode_min_s = static_cast<int>(to_long(key, value));
    } else if (key == "synth.episode_max_s") {
      rc.synth.episode_max_s = static_cast<int>(to_long(key, value));
    } else if (key == "synth.cry_level_db") {
      rc.synth.cry_level_db = to_double(key, value);
    } else if (key == "synth.babble_level_db") {
      rc.synth.babble_level_db = to_double(key, value);
    } else if (key == "synth.broadband_level_db") {
      rc.synth.broadband_level_db = to_double(key, value);
    } else if (key == "synth.clean_bed_db") {
      rc.synth.clean_bed_db = to_double(key, value);
    } else if (key == "synth.noisy_babble_db") {
      rc.synth.noisy_babble_db = to_double(key, value);
    } else {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }
}

RunConfig build_config(const std::string& config_path,
                       const std::vector<std::string>& overrides) {
  RunConfig rc;
  std::map<std::string, std::string> kv;
  if (!config_path.empty()) kv = read_config_file(config_path);
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("--set expects key=value, got '" + o + "'");
    }
    kv[o.substr(0, eq)] = o.substr(eq + 1);
  }
  apply_config(kv, rc);
  return rc;
}

void cmd_synth(const RunConfig& rc, const std::string& out_dir) {
  rc.synth.validate();
  const auto result = corpus::generate_synthetic(rc.synth, out_dir);
  std::cout << result.manifest_path << '\n';
}

void cmd_train(const RunConfig& rc, const std::string& manifest_path,
               const std::string& out_dir, const std::string& dump_features,
               const std::string& dump_windows) {
  rc.spec.validate();
  const auto manifest = corpus::Manifest::load(manifest_path);
  manifest.validate();

  const auto model = detect::train_variant(manifest, rc.spec);
  fs::create_directories(out_dir);
  model.save(out_dir);
  std::cout << "model written to " << out_dir << '\n';

  if (!dump_features.empty() || !dump_windows.empty()) {
    // rebuild the balanced training set (deterministic under the same seed)
    std::vector<detect::LoadedRecording> recs;
    for (const auto& e : manifest.entries) {
      recs.push_back(detect::load_recording(e, rc.spec));
    }
    std::vector<preprocess::WindowInstance> labeled;
    for (const auto& r : recs) {
      for (const auto& w : r.windows) {
        if (w.label == preprocess::WindowLabel::crying ||
            w.label == preprocess::WindowLabel::not_crying) {
          labeled.push_back(w);
        }
      }
    }
    const auto train_set = preprocess::balance(
        std::move(labeled), hash_seed(rc.spec.seed, "balance"));
    if (!dump_windows.empty()) {
      std::ofstream os(dump_windows, std::ios::trunc);
      if (!os) throw DataError("cannot write " + dump_windows);
      preprocess::write_window_manifest(train_set, os);
    }
    if (!dump_features.empty()) {
      std::vector<features::FeatureVector> fvs(train_set.size());
      std::vector<features::FeatureRow> rows(train_set.size());
      for (std::size_t i = 0; i < train_set.size(); ++i) {
        const auto& w = train_set[i];
        fvs[i] = features::window_features(w.samples(), w.clip->sample_rate,
                                           static_cast<double>(w.start_s));
        rows[i] = {w.clip->recording_id, static_cast<double>(w.start_s),
                   preprocess::to_string(w.label), &fvs[i]};
      }
      std::ofstream os(dump_features, std::ios::trunc);
      if (!os) throw DataError("cannot write " + dump_features);
      features::write_feature_csv(rows, os);
    }
  }
}

void cmd_predict(const RunConfig& rc, const std::string& model_dir,
                 const std::string& wav_path, const std::string& out_path) {
  rc.spec.validate();
  auto model = detect::TrainedVariant::load(model_dir, rc.spec.variant);
  auto clip = audio::load_wav(wav_path);
  clip.recording_id = fs::path(wav_path).stem().string();
  const auto timeline = detect::predict_recording(model, clip, rc.spec);
  std::ofstream os(out_path, std::ios::trunc);
  if (!os) throw DataError("cannot write " + out_path);
  detect::write_timeline_csv(timeline, os);
  std::cout << "timeline written to " << out_path << '\n';
}

void cmd_evaluate(const RunConfig& rc, const std::string& manifest_path,
                  const std::string& train_manifest,
                  const std::string& test_manifest,
                  const std::string& out_dir) {
  rc.spec.validate();
  detect::EvalReport report;
  if (!manifest_path.empty()) {
    const auto manifest = corpus::Manifest::load(manifest_path);
    report = detect::lopo_evaluate(manifest, rc.spec, rc.jobs);
  } else {
    const auto train = corpus::Manifest::load(train_manifest);
    const auto test = corpus::Manifest::load(test_manifest);
    report = detect::train_test_evaluate(train, test, rc.spec, rc.jobs);
  }
  fs::create_directories(out_dir);
  {
    std::ofstream os(fs::path(out_dir) / "metrics.csv", std::ios::trunc);
    if (!os) throw DataError("cannot write metrics.csv in " + out_dir);
    detect::write_metrics_csv(report, os);
  }
  {
    std::ofstream os(fs::path(out_dir) / "summary.json", std::ios::trunc);
    if (!os) throw DataError("cannot write summary.json in " + out_dir);
    detect::write_summary_json(report, detect::to_string(rc.spec.variant), os);
  }
  std::cout << "f1 " << report.f1.mean << " (+/-" << report.f1.stddev << ") over "
            << report.per_participant.size() << " participants\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crydet: infant cry detection over continuous audio"};
  app.require_subcommand(1);
  app.fallthrough();  // global --config/--set may follow the subcommand

  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "key=value config file");
  app.add_option("--set", overrides, "config override (key=value), repeatable");

  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  std::string synth_out;
  synth->add_option("--out", synth_out, "output directory")->required();

  auto* train = app.add_subcommand("train", "train a model variant");
  std::string train_manifest_path, train_out, dump_features, dump_windows;
  train->add_option("--manifest", train_manifest_path, "corpus manifest")
      ->required();
  train->add_option("--out", train_out, "model output directory")->required();
  train->add_option("--dump-features", dump_features,
                    "write the balanced training feature matrix CSV");
  train->add_option("--dump-windows", dump_windows,
                    "write the balanced training window manifest CSV");

  auto* predict = app.add_subcommand("predict", "per-second timeline for a wav");
  std::string model_dir, wav_path, predict_out;
  predict->add_option("--model-dir", model_dir, "trained model directory")
      ->required();
  predict->add_option("--wav", wav_path, "input recording")->required();
  predict->add_option("--out", predict_out, "output timeline CSV")->required();

  auto* evaluate = app.add_subcommand("evaluate", "LOPO or train/test metrics");
  std::string eval_manifest, eval_train, eval_test, eval_out;
  evaluate->add_option("--manifest", eval_manifest, "manifest for LOPO");
  evaluate->add_option("--train-manifest", eval_train, "training manifest");
  evaluate->add_option("--test-manifest", eval_test, "test manifest");
  evaluate->add_option("--out", eval_out, "metrics output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const RunConfig rc = build_config(config_path, overrides);
    if (app.got_subcommand(synth)) {
      cmd_synth(rc, synth_out);
    } else if (app.got_subcommand(train)) {
      cmd_train(rc, train_manifest_path, train_out, dump_features, dump_windows);
    } else if (app.got_subcommand(predict)) {
      cmd_predict(rc, model_dir, wav_path, predict_out);
    } else if (app.got_subcommand(evaluate)) {
      const bool lopo = !eval_manifest.empty();
      const bool tt = !eval_train.empty() || !eval_test.empty();
      if (lopo == tt || (tt && (eval_train.empty() || eval_test.empty()))) {
        throw ConfigError(
            "evaluate needs either --manifest or both --train-manifest and "
            "--test-manifest");
      }
      cmd_evaluate(rc, eval_manifest, eval_train, eval_test, eval_out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
