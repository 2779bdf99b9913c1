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

#pragma once

#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "crydet/corpus.hpp"
#include "crydet/detect.hpp"
#include "crydet/nn.hpp"
#include "crydet/preprocess.hpp"
#include "crydet/svm.hpp"

namespace crydet::detect {

enum class Variant { af, cnn, dsf_af, embed_svm };

const char* to_string(Variant v);
Variant variant_from_string(const std::string& s);

/// Everything a run needs beyond the data itself. One master seed drives
/// every randomized stage (augmentation, subsampling, init, shuffling, SMO
/// tie-breaking) through derived child streams.
struct ModelSpec {
  Variant variant = Variant::af;
  std::uint64_t seed = 0;
  double silence_threshold_db = preprocess::kDefaultSilenceThresholdDb;
  svm::SvmParams svm_params;
  nn::Preset preset = nn::Preset::desk;
  nn::TrainConfig train_cfg;
  std::string embeddings_path;  // embed_svm only
  bool verbose = false;

  void validate() const;  // throws ConfigError
};

struct TrainedVariant {
  Variant variant = Variant::af;
  std::optional<nn::CnnModel> cnn;
  std::optional<svm::SvmModel> svm;

  void save(const std::string& dir) const;  // <dir>/<variant>.{cnn,svm}
  static TrainedVariant load(const std::string& dir, Variant variant);
};

/// One recording pulled through the deterministic front half of the pipeline
/// (decode, resample, silence filter, mask smoothing, windowing, truth).
struct LoadedRecording {
  corpus::ManifestEntry entry;
  std::shared_ptr<const audio::AudioClip> clip;
  preprocess::ActiveMask mask;  // smoothed
  LabelTrack truth;
  std::vector<bool> truth_seconds;
  std::vector<preprocess::WindowInstance> windows;  // labeled, originals only
};

LoadedRecording load_recording(const corpus::ManifestEntry& entry,
                               const ModelSpec& spec);

/// Full training pipeline on the given recordings: label windows, drop mixed,
/// balance (augment + subsample), then fit the variant's model(s).
TrainedVariant train_variant(
    const std::vector<const LoadedRecording*>& recordings,
    const ModelSpec& spec);
TrainedVariant train_variant(const corpus::Manifest& manifest,
                             const ModelSpec& spec);

/// End-to-end prediction for one recording: window predictions, any-window
/// second binning (silence-filtered seconds stay not_crying), then timeline
/// smoothing.
SecondTimeline predict_recording(TrainedVariant& model,
                                 const LoadedRecording& rec,
                                 const ModelSpec& spec);
SecondTimeline predict_recording(TrainedVariant& model,
                                 const audio::AudioClip& clip,
                                 const ModelSpec& spec);

struct ParticipantScore {
  std::string participant_id;
  Score score;
};

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;  // population
};

Summary summarize_values(const std::vector<double>& values);

struct EvalReport {
  std::vector<ParticipantScore> per_participant;  // sorted by participant
  Summary f1, precision, recall;
};

/// Leave-one-participant-out: per fold, train on all other participants and
/// score the held-out one second-by-second over full recordings. jobs > 1
/// runs folds in parallel; results do not depend on the job count.
EvalReport lopo_evaluate(const corpus::Manifest& manifest,
                         const ModelSpec& spec, int jobs = 1);

/// Single train on the training manifest, per-participant scores on the test
/// manifest. Warns on overlapping participant sets (resubstitution).
EvalReport train_test_evaluate(const corpus::Manifest& train,
                               const corpus::Manifest& test,
                               const ModelSpec& spec, int jobs = 1);

void write_metrics_csv(const EvalReport& report, std::ostream& os);
void write_summary_json(const EvalReport& report, const std::string& model,
                        std::ostream& os);
void write_timeline_csv(const SecondTimeline& timeline, std::ostream& os);

}  // namespace crydet::detect
