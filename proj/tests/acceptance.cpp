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
//
// Acceptance suite: one pass/fail line per criterion. Criterion 5 drives the
// installed CLI binary (path given as argv[1]); everything else runs in
// process. Exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "crydet/corpus.hpp"
#include "crydet/dsp.hpp"
#include "crydet/features.hpp"
#include "crydet/harness.hpp"
#include "crydet/nn.hpp"
#include "crydet/preprocess.hpp"
#include "crydet/rng.hpp"
#include "crydet/svm.hpp"
#include "oracles.hpp"

using namespace crydet;
namespace fs = std::filesystem;

namespace {

// Documented reference operating points for the real-world task (second-wise
// F1 of the deep-spectrum + acoustic model, and its in-lab-to-real-world
// transfer). Desk-scale synthetic corpora are not expected to reproduce
// them; the domain-shift criterion below mirrors the transfer drop in
// direction, not magnitude.
[[maybe_unused]] constexpr double kRealWorldDsfAfF1 = 0.613;
[[maybe_unused]] constexpr double kRealWorldDsfAfPrecision = 0.672;
[[maybe_unused]] constexpr double kRealWorldDsfAfRecall = 0.552;
[[maybe_unused]] constexpr double kInLabToRealWorldF1 = 0.236;

constexpr int kDeskEpochs = 4;

int g_failures = 0;
fs::path g_scratch;
std::string g_cli;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

void run_criterion(int id, const std::string& name,
                   const std::function<std::string()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  bool ok = true;
  try {
    detail = body();
  } catch (const std::exception& e) {
    ok = false;
    detail = std::string("exception: ") + e.what();
  }
  if (!detail.empty() && detail.rfind("FAIL:", 0) == 0) {
    ok = false;
    detail = detail.substr(5);
  }
  std::printf("[%s] criterion %2d: %s (%s; %.1f s)\n", ok ? "PASS" : "FAIL", id,
              name.c_str(), detail.c_str(), seconds_since(t0));
  std::fflush(stdout);
  g_failures += ok ? 0 : 1;
}

std::string file_bytes(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

int run_cli(const std::string& args) {
  const std::string cmd = g_cli + " " + args + " >/dev/null 2>&1";
  return std::system(cmd.c_str());
}

// ------------------------------------------------------------ criterion 1

std::string c1_dsp_oracle() {
  Rng rng(101);
  const std::size_t len = 980 + 2 * 490;
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<float> x(len);
    for (auto& v : x) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    const Matrix got = dsp::stft_power(x, {});
    const Matrix want = oracles::naive_stft_power(x, 980, 490);
    for (std::size_t i = 0; i < got.data.size(); ++i) {
      const double rel = std::abs(got.data[i] - want.data[i]) /
                         std::max(1e-12, std::abs(want.data[i]));
      worst = std::max(worst, rel);
    }
  }
  if (worst >= 1e-6) {
    return "FAIL:max rel err " + std::to_string(worst);
  }
  std::ostringstream os;
  os << "20 random 3-frame signals, max rel err " << worst;
  return os.str();
}

// ------------------------------------------------------------ criterion 2

struct GradReport {
  double worst = 0.0;
  int checks = 0;
};

void gradcheck_layer(nn::Layer& layer, nn::Tensor input, Rng& rng,
                     GradReport& report) {
  const nn::Tensor out = layer.forward(input, true);
  std::vector<double> w(out.size());
  for (auto& v : w) v = rng.uniform(-1.0, 1.0);

  nn::Tensor lgrad(out.shape);
  lgrad.values = w;
  for (nn::Tensor* p : layer.parameters()) p->zero_grad();
  const nn::Tensor igrad = layer.backward(lgrad);

  auto loss_of = [&](const nn::Tensor& x) {
    const nn::Tensor o = layer.forward(x, true);
    double acc = 0.0;
    for (std::size_t i = 0; i < o.size(); ++i) acc += w[i] * o.values[i];
    return acc;
  };
  const double h = 1e-5;
  auto check = [&](nn::Tensor& target, const std::vector<double>& analytic,
                   const nn::Tensor& base) {
    for (std::size_t i = 0; i < target.size(); ++i) {
      const double saved = target.values[i];
      target.values[i] = saved + h;
      const double up = loss_of(base);
      target.values[i] = saved - h;
      const double down = loss_of(base);
      target.values[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double denom =
          std::max({std::abs(numeric), std::abs(analytic[i]), 1e-4});
      report.worst = std::max(report.worst,
                              std::abs(numeric - analytic[i]) / denom);
      ++report.checks;
    }
  };
  check(input, igrad.values, input);
  for (nn::Tensor* p : layer.parameters()) check(*p, p->grad, input);
}

std::string c2_gradients() {
  Rng rng(202);
  auto tensor = [&](std::vector<std::size_t> shape) {
    nn::Tensor t(std::move(shape));
    for (auto& v : t.values) v = rng.normal();
    return t;
  };
  GradReport report;
  {
    nn::Conv2d l(2, 3, 3, 1, 1, &rng);
    gradcheck_layer(l, tensor({2, 2, 6, 6}), rng, report);
  }
  {
    nn::Conv2d l(1, 2, 3, 2, 0, &rng);
    gradcheck_layer(l, tensor({2, 1, 8, 8}), rng, report);
  }
  {
    nn::BatchNorm l(3);
    gradcheck_layer(l, tensor({4, 3, 5, 5}), rng, report);
  }
  {
    nn::BatchNorm l(5);
    gradcheck_layer(l, tensor({7, 5}), rng, report);
  }
  {
    nn::ReLU l;
    gradcheck_layer(l, tensor({3, 4, 6, 6}), rng, report);
  }
  {
    nn::MaxPool2d l(3, 2);
    gradcheck_layer(l, tensor({2, 3, 7, 7}), rng, report);
  }
  {
    nn::Flatten l;
    gradcheck_layer(l, tensor({3, 2, 4, 4}), rng, report);
  }
  {
    nn::Linear l(8, 5, &rng);
    gradcheck_layer(l, tensor({6, 8}), rng, report);
  }
  // softmax cross-entropy closes the training path
  {
    nn::Tensor logits = tensor({6, 2});
    std::vector<int> labels(6);
    for (auto& v : labels) v = static_cast<int>(rng.uniform_index(2));
    nn::Tensor grad;
    nn::softmax_cross_entropy(logits, labels, &grad);
    const double h = 1e-6;
    for (std::size_t i = 0; i < logits.size(); ++i) {
      const double saved = logits.values[i];
      logits.values[i] = saved + h;
      const double up = nn::softmax_cross_entropy(logits, labels, nullptr);
      logits.values[i] = saved - h;
      const double down = nn::softmax_cross_entropy(logits, labels, nullptr);
      logits.values[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double denom =
          std::max({std::abs(numeric), std::abs(grad.values[i]), 1e-4});
      report.worst =
          std::max(report.worst, std::abs(numeric - grad.values[i]) / denom);
      ++report.checks;
    }
  }
  if (report.worst >= 1e-4) {
    return "FAIL:max rel err " + std::to_string(report.worst);
  }
  std::ostringstream os;
  os << report.checks << " derivatives across all layer kinds, max rel err "
     << report.worst;
  return os.str();
}

// ------------------------------------------------------------ criterion 3

std::string c3_adam_first_step() {
  Rng rng(303);
  const nn::TrainConfig cfg;  // lr 0.001, betas 0.9/0.999, eps 1e-8
  nn::Tensor p({64});
  for (auto& v : p.values) v = rng.normal();
  p.alloc_grad();
  for (auto& g : p.grad) {
    const double mag = std::pow(10.0, rng.uniform(-2.0, 2.0));  // >> epsilon
    g = (rng.uniform() < 0.5 ? -1.0 : 1.0) * mag;
  }
  const auto before = p.values;
  nn::Adam adam({&p}, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);
  adam.step();

  double worst = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double step = std::abs(p.values[i] - before[i]);
    worst = std::max(worst, std::abs(step - cfg.learning_rate));
  }
  if (worst >= 1e-6) {
    return "FAIL:worst |step - lr| = " + std::to_string(worst);
  }
  std::ostringstream os;
  os << "64 parameters, worst ||step| - lr| = " << worst;
  return os.str();
}

// ------------------------------------------------------------ criterion 4

std::string c4_svm_oracle() {
  Rng rng(404);
  int worst_agree = 200;
  double worst_kkt = 0.0;
  for (int problem = 0; problem < 10; ++problem) {
    const std::size_t n = 20;
    const std::size_t d = 2 + rng.uniform_index(3);
    Matrix x(n, d);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      const bool pos = i % 2 == 0;
      for (std::size_t j = 0; j < d; ++j) {
        x(i, j) = (pos ? 0.9 : -0.9) * (j == 0 ? 1.0 : 0.4) + 0.7 * rng.normal();
      }
      y[i] = pos ? 1 : -1;
    }
    svm::SvmParams params;
    params.c = 1.0;
    params.gamma = 0.4;
    params.tol = 1e-3;
    std::vector<double> alphas;
    const auto model = svm::SvmModel::fit(x, y, params, nullptr, &alphas);

    // KKT residuals on the training set
    for (std::size_t i = 0; i < n; ++i) {
      const double margin = y[i] * model.decision_value(x.row(i));
      double residual = 0.0;
      if (alphas[i] <= 0.0) {
        residual = std::max(0.0, 1.0 - margin);
      } else if (alphas[i] >= params.c) {
        residual = std::max(0.0, margin - 1.0);
      } else {
        residual = std::abs(margin - 1.0);
      }
      worst_kkt = std::max(worst_kkt, residual);
    }

    // agreement with the projected-gradient reference solver
    svm::Scaler sc;
    sc.fit(x);
    Matrix z(n, d);
    for (std::size_t i = 0; i < n; ++i) {
      const auto zi = sc.transform(x.row(i));
      std::copy(zi.begin(), zi.end(), z.row(i).data());
    }
    const auto ref = oracles::reference_svm_dual(z, y, params.c, params.gamma);
    int agree = 0;
    for (int q = 0; q < 200; ++q) {
      std::vector<double> raw(d);
      for (auto& v : raw) v = rng.uniform(-2.0, 2.0);
      const int got = model.predict(raw).label;
      const double fr = oracles::reference_svm_decision(ref, z, y, params.gamma,
                                                        sc.transform(raw));
      agree += got == (fr > 0.0 ? 1 : -1) ? 1 : 0;
    }
    worst_agree = std::min(worst_agree, agree);
  }
  if (worst_agree < 196) {
    return "FAIL:worst agreement " + std::to_string(worst_agree) + "/200";
  }
  if (worst_kkt >= 1e-3 + 1e-9) {
    return "FAIL:worst KKT residual " + std::to_string(worst_kkt);
  }
  std::ostringstream os;
  os << "10 problems, worst agreement " << worst_agree
     << "/200, worst KKT residual " << worst_kkt;
  return os.str();
}

// ------------------------------------------------------------ criterion 5

std::string c5_cli_determinism() {
  if (g_cli.empty()) return "FAIL:no CLI path given (argv[1])";
  const fs::path dir = g_scratch / "c5";
  fs::create_directories(dir);

  const std::string corpus_dir = (dir / "corpus").string();
  if (run_cli("synth --out " + corpus_dir +
              " --set synth.participants=2 --set synth.duration_s=120 "
              "--set seed=0") != 0) {
    return "FAIL:synth command failed";
  }
  const std::string manifest = corpus_dir + "/manifest.csv";
  const std::string common = " --set variant=af --set seed=0";

  for (const char* tag : {"a", "b"}) {
    if (run_cli("train --manifest " + manifest + " --out " +
                (dir / ("model_" + std::string(tag))).string() + common) != 0) {
      return "FAIL:train command failed";
    }
    if (run_cli("evaluate --manifest " + manifest + " --out " +
                (dir / ("eval_" + std::string(tag))).string() + common) != 0) {
      return "FAIL:evaluate command failed";
    }
    if (run_cli("predict --model-dir " +
                (dir / ("model_" + std::string(tag))).string() + " --wav " +
                corpus_dir + "/P1R1.wav --out " +
                (dir / ("timeline_" + std::string(tag) + ".csv")).string() +
                common) != 0) {
      return "FAIL:predict command failed";
    }
  }

  if (file_bytes(dir / "model_a/af.svm") != file_bytes(dir / "model_b/af.svm")) {
    return "FAIL:model files differ between runs";
  }
  if (file_bytes(dir / "eval_a/metrics.csv") !=
      file_bytes(dir / "eval_b/metrics.csv")) {
    return "FAIL:metrics.csv differs between runs";
  }
  if (file_bytes(dir / "eval_a/summary.json") !=
      file_bytes(dir / "eval_b/summary.json")) {
    return "FAIL:summary.json differs between runs";
  }
  if (file_bytes(dir / "timeline_a.csv") != file_bytes(dir / "timeline_b.csv")) {
    return "FAIL:timelines differ between runs";
  }
  return "synth + 2x(train, evaluate, predict): byte-identical artifacts";
}

// ------------------------------------------------------------ criterion 6

std::string c6_window_arithmetic() {
  auto clip = std::make_shared<audio::AudioClip>();
  clip->sample_rate = 22050;
  clip->samples.assign(61 * 22050, 0.1f);
  clip->recording_id = "c6";
  for (int n = 5; n <= 60; ++n) {
    preprocess::ActiveMask mask(static_cast<std::size_t>(n), true);
    const auto windows = preprocess::make_windows(clip, mask);
    if (windows.size() != static_cast<std::size_t>(n - 4)) {
      return "FAIL:N=" + std::to_string(n) + " gave " +
             std::to_string(windows.size()) + " windows";
    }
    for (std::size_t i = 0; i < windows.size(); ++i) {
      if (windows[i].start_s != static_cast<int>(i)) {
        return "FAIL:window starts not at 1 s hop";
      }
    }
  }
  return "window count = N-4 for every N in [5, 60]";
}

// ------------------------------------------------------------ criterion 7

std::string c7_smoothing_oracles() {
  Rng rng(707);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(200);
    std::vector<bool> bits(n);
    for (std::size_t i = 0; i < n; ++i) bits[i] = rng.uniform() < 0.5;
    detect::SecondTimeline t;
    t.crying = bits;
    const auto got = detect::smooth_timeline(t);
    if (got.crying != oracles::reference_smooth(bits)) {
      return "FAIL:smooth_timeline mismatch at trial " + std::to_string(trial);
    }
    std::size_t run = 0;
    for (std::size_t i = 0; i <= got.crying.size(); ++i) {
      if (i < got.crying.size() && got.crying[i]) {
        ++run;
      } else {
        if (run != 0 && run <= 5) return "FAIL:short crying run survived";
        run = 0;
      }
    }
  }
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(8);
    std::vector<detect::Interval> raw;
    std::vector<oracles::RefInterval> ref_raw;
    for (std::size_t i = 0; i < n; ++i) {
      const double a = rng.uniform(0.0, 90.0);
      const double b = a + rng.uniform(0.1, 12.0);
      raw.push_back({a, b});
      ref_raw.push_back({a, b});
    }
    const auto track = detect::LabelTrack::canonicalize(raw, 200.0);
    const auto ref = oracles::reference_canonicalize(ref_raw);
    if (track.crying_intervals().size() != ref.size()) {
      return "FAIL:canonicalize episode count mismatch";
    }
    for (std::size_t i = 0; i < ref.size(); ++i) {
      if (std::abs(track.crying_intervals()[i].start_s - ref[i].start) > 1e-12 ||
          std::abs(track.crying_intervals()[i].end_s - ref[i].end) > 1e-12) {
        return "FAIL:canonicalize interval mismatch";
      }
    }
  }
  return "1000 random sequences + 1000 interval lists match the references";
}

// ------------------------------------------------------------ criterion 8

std::string c8_synthetic_separability() {
  const auto t0 = std::chrono::steady_clock::now();
  corpus::SynthSpec spec;  // defaults: 4 participants x 10 min, mixed palette
  spec.seed = 0;
  const auto corpus_result =
      corpus::generate_synthetic(spec, (g_scratch / "c8_corpus").string());

  detect::ModelSpec dsf;
  dsf.variant = detect::Variant::dsf_af;
  dsf.seed = 0;
  dsf.preset = nn::Preset::desk;
  dsf.train_cfg.epochs = kDeskEpochs;
  const auto dsf_report = detect::lopo_evaluate(corpus_result.manifest, dsf, 2);

  detect::ModelSpec af;
  af.variant = detect::Variant::af;
  af.seed = 0;
  const auto af_report = detect::lopo_evaluate(corpus_result.manifest, af, 2);

  const double elapsed = seconds_since(t0);
  std::ostringstream os;
  os << "dsf_af F1 " << dsf_report.f1.mean << " (+/-" << dsf_report.f1.stddev
     << "), af F1 " << af_report.f1.mean << ", " << elapsed << " s";
  if (dsf_report.f1.mean < 0.95) return "FAIL:dsf_af macro F1 < 0.95; " + os.str();
  if (af_report.f1.mean < 0.90) return "FAIL:af macro F1 < 0.90; " + os.str();
  if (elapsed >= 1800.0) return "FAIL:runtime over 30 min; " + os.str();
  return os.str();
}

// ------------------------------------------------------------ criterion 9

std::string c9_domain_shift() {
  corpus::SynthSpec clean_spec;
  clean_spec.participants = 3;
  clean_spec.recording_seconds = 240;
  clean_spec.palette = corpus::Palette::clean;
  clean_spec.seed = 0;
  const auto clean =
      corpus::generate_synthetic(clean_spec, (g_scratch / "c9_clean").string());

  corpus::SynthSpec noisy_train_spec = clean_spec;
  noisy_train_spec.palette = corpus::Palette::noisy;
  noisy_train_spec.seed = 1;
  const auto noisy_train = corpus::generate_synthetic(
      noisy_train_spec, (g_scratch / "c9_noisy_train").string());

  corpus::SynthSpec noisy_test_spec = noisy_train_spec;
  noisy_test_spec.seed = 2;
  const auto noisy_test = corpus::generate_synthetic(
      noisy_test_spec, (g_scratch / "c9_noisy_test").string());

  detect::ModelSpec spec;
  spec.variant = detect::Variant::dsf_af;
  spec.seed = 0;
  spec.preset = nn::Preset::desk;
  spec.train_cfg.epochs = kDeskEpochs;

  const auto matched = detect::train_test_evaluate(noisy_train.manifest,
                                                   noisy_test.manifest, spec);
  const auto shifted =
      detect::train_test_evaluate(clean.manifest, noisy_test.manifest, spec);

  const double f1_drop = matched.f1.mean - shifted.f1.mean;
  const double precision_drop = matched.precision.mean - shifted.precision.mean;
  const double recall_drop = matched.recall.mean - shifted.recall.mean;

  std::ostringstream os;
  os << "matched F1 " << matched.f1.mean << " -> shifted F1 " << shifted.f1.mean
     << " (drop " << f1_drop << "); precision drop " << precision_drop
     << ", recall drop " << recall_drop;
  if (f1_drop < 0.15) return "FAIL:F1 drop < 0.15; " + os.str();
  if (precision_drop <= recall_drop) {
    return "FAIL:precision did not fall more than recall; " + os.str();
  }
  return os.str();
}

// ------------------------------------------------------------ criterion 10

std::string c10_dimensions() {
  std::vector<float> window(5 * 22050, 0.1f);
  const auto fv = features::window_features(window, 22050.0);
  if (fv.values.size() != 102) return "FAIL:FeatureVector dim";

  const auto img = dsp::mel_image(window);
  if (img.values.size() != 225u * 225u) return "FAIL:MelImage shape";

  auto model = nn::CnnModel::modified_alexnet(nn::Preset::desk, 0);
  model.set_eval(true);
  const auto deep = model.deep_features(img);
  if (deep.size() != 1000) return "FAIL:deep feature dim";

  std::vector<double> acoustic(fv.values.begin(), fv.values.end());
  if (svm::concat_dsf_af(deep, acoustic).size() != 1102) {
    return "FAIL:DSF+AF input dim";
  }

  // embedding width contract, via the loader
  const fs::path path = g_scratch / "c10_embeddings.csv";
  {
    std::ofstream os(path);
    os << "k:0";
    for (int j = 0; j < 128; ++j) os << ",0.25";
    os << "\n";
  }
  const auto m = svm::load_embeddings(path.string(), {"k:0"});
  if (m.cols != 128) return "FAIL:embedding dim";
  return "102 / 225x225 / 1000 / 1102 / 128 all hold";
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_cli = argv[1];
  g_scratch = fs::temp_directory_path() / "crydet_acceptance";
  fs::create_directories(g_scratch);

  const auto t0 = std::chrono::steady_clock::now();
  run_criterion(1, "stft_power matches the naive per-frame DFT", c1_dsp_oracle);
  run_criterion(2, "analytic gradients match central finite differences",
                c2_gradients);
  run_criterion(3, "first Adam step magnitude equals the learning rate",
                c3_adam_first_step);
  run_criterion(4, "SMO agrees with the brute-force dual solver; KKT holds",
                c4_svm_oracle);
  run_criterion(5, "CLI train/evaluate/predict are byte-deterministic",
                c5_cli_determinism);
  run_criterion(6, "N-second active runs yield N-4 windows",
                c6_window_arithmetic);
  run_criterion(7, "timeline smoothing and episode rules match references",
                c7_smoothing_oracles);
  run_criterion(8, "synthetic-corpus LOPO separability (dsf_af, af)",
                c8_synthetic_separability);
  run_criterion(9, "clean-to-noisy domain shift drops F1, precision first",
                c9_domain_shift);
  run_criterion(10, "dimensional contracts", c10_dimensions);

  std::printf("%d/10 criteria passed (%.0f s total)\n", 10 - g_failures,
              seconds_since(t0));
  return g_failures == 0 ? 0 : 1;
}
