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

#include "crydet/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <thread>

#include "crydet/error.hpp"
#include "crydet/features.hpp"

#include "json.hpp"

namespace fs = std::filesystem;

namespace crydet::detect {

namespace {

constexpr std::size_t kPredictChunk = 64;  // CNN forward batch at inference

std::vector<double> acoustic_vector(const preprocess::WindowInstance& w) {
  const auto samples = w.samples();
  const auto fv = features::window_features(samples, w.clip->sample_rate,
                                            static_cast<double>(w.start_s));
  return {fv.values.begin(), fv.values.end()};
}

Matrix acoustic_matrix(const std::vector<preprocess::WindowInstance>& ws) {
  Matrix x(ws.size(), features::kWindowFeatureCount);
  for (std::size_t i = 0; i < ws.size(); ++i) {
    const auto v = acoustic_vector(ws[i]);
    std::copy(v.begin(), v.end(), x.row(i).data());
  }
  return x;
}

std::vector<dsp::MelImage> mel_images(const std::vector<preprocess::WindowInstance>& ws) {
  std::vector<dsp::MelImage> images;
  images.reserve(ws.size());
  for (const auto& w : ws) {
    images.push_back(dsp::mel_image(w.samples(), static_cast<double>(w.start_s)));
  }
  return images;
}

std::vector<const dsp::MelImage*> image_ptrs(const std::vector<dsp::MelImage>& v) {
  std::vector<const dsp::MelImage*> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = &v[i];
  return out;
}

std::vector<int> svm_labels(const std::vector<preprocess::WindowInstance>& ws) {
  std::vector<int> y(ws.size());
  for (std::size_t i = 0; i < ws.size(); ++i) {
    y[i] = ws[i].label == preprocess::WindowLabel::crying ? 1 : -1;
  }
  return y;
}

std::vector<int> cnn_labels(const std::vector<preprocess::WindowInstance>& ws) {
  std::vector<int> y(ws.size());
  for (std::size_t i = 0; i < ws.size(); ++i) {
    y[i] = ws[i].label == preprocess::WindowLabel::crying ? 1 : 0;
  }
  return y;
}

std::vector<std::string> window_keys(const std::vector<preprocess::WindowInstance>& ws) {
  std::vector<std::string> keys(ws.size());
  for (std::size_t i = 0; i < ws.size(); ++i) keys[i] = ws[i].key();
  return keys;
}

nn::CnnModel train_cnn(const std::vector<preprocess::WindowInstance>& train_set,
                       const ModelSpec& spec) {
  const auto images = mel_images(train_set);
  auto model = nn::CnnModel::modified_alexnet(spec.preset,
                                              hash_seed(spec.seed, "cnn-init"));
  nn::TrainConfig cfg = spec.train_cfg;
  cfg.rng_seed = hash_seed(spec.seed, "cnn-train");
  const auto losses = model.train(image_ptrs(images), cnn_labels(train_set), cfg);
  if (spec.verbose) {
    std::cerr << "  cnn: " << train_set.size() << " windows, " << cfg.epochs
              << " epochs, loss " << losses.front() << " -> " << losses.back()
              << "\n";
  }
  return model;
}

Matrix dsf_af_matrix(nn::CnnModel& cnn,
                     const std::vector<preprocess::WindowInstance>& ws) {
  Matrix x(ws.size(), svm::kDeepFeatureDim + svm::kAcousticFeatureDim);
  for (std::size_t begin = 0; begin < ws.size(); begin += kPredictChunk) {
    const std::size_t end = std::min(ws.size(), begin + kPredictChunk);
    std::vector<dsp::MelImage> chunk_images;
    chunk_images.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
      chunk_images.push_back(
          dsp::mel_image(ws[i].samples(), static_cast<double>(ws[i].start_s)));
    }
    const Matrix deep = cnn.deep_features_batch(image_ptrs(chunk_images));
    for (std::size_t i = begin; i < end; ++i) {
      const auto acoustic = acoustic_vector(ws[i]);
      const auto row = svm::concat_dsf_af(deep.row(i - begin), acoustic);
      std::copy(row.begin(), row.end(), x.row(i).data());
    }
  }
  return x;
}

svm::SvmParams svm_params_for(const ModelSpec& spec) {
  svm::SvmParams p = spec.svm_params;
  p.seed = hash_seed(spec.seed, "svm");
  return p;
}

/// Window predictions (true = crying) for one recording's window list.
std::vector<bool> predict_windows(TrainedVariant& model,
                                  const std::vector<preprocess::WindowInstance>& ws,
                                  const ModelSpec& spec) {
  std::vector<bool> crying(ws.size(), false);
  switch (model.variant) {
    case Variant::af: {
      for (std::size_t i = 0; i < ws.size(); ++i) {
        crying[i] = model.svm->predict(acoustic_vector(ws[i])).label > 0;
      }
      break;
    }
    case Variant::cnn: {
      for (std::size_t begin = 0; begin < ws.size(); begin += kPredictChunk) {
        const std::size_t end = std::min(ws.size(), begin + kPredictChunk);
        std::vector<dsp::MelImage> chunk;
        chunk.reserve(end - begin);
        for (std::size_t i = begin; i < end; ++i) {
          chunk.push_back(dsp::mel_image(ws[i].samples(),
                                         static_cast<double>(ws[i].start_s)));
        }
        const auto preds = model.cnn->predict_batch(image_ptrs(chunk));
        for (std::size_t i = begin; i < end; ++i) {
          crying[i] = preds[i - begin].crying;
        }
      }
      break;
    }
    case Variant::dsf_af: {
      const Matrix x = dsf_af_matrix(*model.cnn, ws);
      for (std::size_t i = 0; i < ws.size(); ++i) {
        crying[i] = model.svm->predict(x.row(i)).label > 0;
      }
      break;
    }
    case Variant::embed_svm: {
      const Matrix x = svm::load_embeddings(spec.embeddings_path, window_keys(ws));
      for (std::size_t i = 0; i < ws.size(); ++i) {
        crying[i] = model.svm->predict(x.row(i)).label > 0;
      }
      break;
    }
  }
  return crying;
}

std::vector<std::string> sorted_participants(
    const std::vector<LoadedRecording>& recs) {
  std::set<std::string> s;
  for (const auto& r : recs) s.insert(r.entry.participant_id);
  return {s.begin(), s.end()};
}

EvalReport report_from_scores(std::vector<ParticipantScore> scores) {
  std::sort(scores.begin(), scores.end(),
            [](const ParticipantScore& a, const ParticipantScore& b) {
              return a.participant_id < b.participant_id;
            });
  EvalReport report;
  std::vector<double> f1s, ps, rs;
  for (const auto& s : scores) {
    f1s.push_back(s.score.f1);
    ps.push_back(s.score.precision);
    rs.push_back(s.score.recall);
  }
  report.per_participant = std::move(scores);
  report.f1 = summarize_values(f1s);
  report.precision = summarize_values(ps);
  report.recall = summarize_values(rs);
  return report;
}

/// Scores one participant by pooling confusion counts over their recordings.
ParticipantScore score_participant(
    const std::string& pid, TrainedVariant& model,
    const std::vector<const LoadedRecording*>& recordings,
    const ModelSpec& spec) {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::size_t seconds = 0;
  for (const auto* rec : recordings) {
    const SecondTimeline pred = predict_recording(model, *rec, spec);
    SecondTimeline truth;
    truth.crying = rec->truth_seconds;
    const Score s = score(pred, truth);
    tp += s.tp;
    fp += s.fp;
    fn += s.fn;
    tn += s.tn;
    seconds += rec->truth_seconds.size();
  }
  if (seconds == 0) {
    throw DataError("evaluate: participant " + pid + " has zero evaluable seconds");
  }
  return {pid, score_from_counts(tp, fp, fn, tn)};
}

}  // namespace

Summary summarize_values(const std::vector<double>& values) {
  Summary s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(var / static_cast<double>(values.size()));
  return s;
}

const char* to_string(Variant v) {
  switch (v) {
    case Variant::af:
      return "af";
    case Variant::cnn:
      return "cnn";
    case Variant::dsf_af:
      return "dsf_af";
    case Variant::embed_svm:
      return "embed_svm";
  }
  return "?";
}

Variant variant_from_string(const std::string& s) {
  if (s == "af") return Variant::af;
  if (s == "cnn") return Variant::cnn;
  if (s == "dsf_af") return Variant::dsf_af;
  if (s == "embed_svm") return Variant::embed_svm;
  throw ConfigError("unknown model variant: " + s);
}

void ModelSpec::validate() const {
  if (variant == Variant::embed_svm && embeddings_path.empty()) {
    throw ConfigError("embed_svm variant requires an embeddings file");
  }
  if (train_cfg.epochs <= 0 || train_cfg.batch_size <= 0 ||
      train_cfg.learning_rate <= 0.0 || train_cfg.epsilon <= 0.0 ||
      train_cfg.beta1 <= 0.0 || train_cfg.beta1 >= 1.0 ||
      train_cfg.beta2 <= 0.0 || train_cfg.beta2 >= 1.0) {
    throw ConfigError("bad cnn training configuration");
  }
  if (svm_params.c <= 0.0 || svm_params.tol <= 0.0) {
    throw ConfigError("bad svm parameters");
  }
  if (silence_threshold_db > 0.0) {
    throw ConfigError("silence threshold must be <= 0 dBFS");
  }
}

void TrainedVariant::save(const std::string& dir) const {
  fs::create_directories(dir);
  const std::string base = (fs::path(dir) / to_string(variant)).string();
  if (cnn) cnn->save(base + ".cnn");
  if (svm) svm->save(base + ".svm");
}

TrainedVariant TrainedVariant::load(const std::string& dir, Variant variant) {
  TrainedVariant tv;
  tv.variant = variant;
  const std::string base = (fs::path(dir) / to_string(variant)).string();
  if (variant == Variant::cnn || variant == Variant::dsf_af) {
    tv.cnn = nn::CnnModel::load(base + ".cnn");
  }
  if (variant != Variant::cnn) {
    tv.svm = svm::SvmModel::load(base + ".svm");
  }
  return tv;
}

LoadedRecording load_recording(const corpus::ManifestEntry& entry,
                               const ModelSpec& spec) {
  LoadedRecording rec;
  rec.entry = entry;

  audio::AudioClip clip = audio::load_wav(entry.wav_path);
  if (clip.sample_rate != audio::kCanonicalSampleRate) {
    clip = audio::resample(clip, audio::kCanonicalSampleRate);
  }
  clip.recording_id = entry.recording_id;
  clip.participant_id = entry.participant_id;
  auto shared = std::make_shared<const audio::AudioClip>(std::move(clip));
  rec.clip = shared;

  rec.mask = preprocess::smooth_mask(
      preprocess::silence_filter(*shared, spec.silence_threshold_db));

  const auto raw = corpus::parse_annotations(entry.annotation_path);
  rec.truth = LabelTrack::canonicalize(raw, shared->duration_seconds());
  rec.truth_seconds = rec.truth.second_labels(rec.mask.size());
  rec.windows = preprocess::make_windows(shared, rec.mask, &rec.truth_seconds);
  return rec;
}

TrainedVariant train_variant(
    const std::vector<const LoadedRecording*>& recordings,
    const ModelSpec& spec) {
  spec.validate();

  std::vector<preprocess::WindowInstance> labeled;
  for (const auto* rec : recordings) {
    for (const auto& w : rec->windows) {
      if (w.label == preprocess::WindowLabel::crying ||
          w.label == preprocess::WindowLabel::not_crying) {
        labeled.push_back(w);
      }
    }
  }
  const auto train_set =
      preprocess::balance(std::move(labeled), hash_seed(spec.seed, "balance"));
  if (spec.verbose) {
    std::cerr << "train[" << to_string(spec.variant) << "]: " << train_set.size()
              << " balanced windows from " << recordings.size() << " recordings\n";
  }

  TrainedVariant tv;
  tv.variant = spec.variant;
  switch (spec.variant) {
    case Variant::af: {
      tv.svm = svm::SvmModel::fit(acoustic_matrix(train_set),
                                  svm_labels(train_set), svm_params_for(spec));
      break;
    }
    case Variant::cnn: {
      tv.cnn = train_cnn(train_set, spec);
      break;
    }
    case Variant::dsf_af: {
      tv.cnn = train_cnn(train_set, spec);
      tv.svm = svm::SvmModel::fit(dsf_af_matrix(*tv.cnn, train_set),
                                  svm_labels(train_set), svm_params_for(spec));
      break;
    }
    case Variant::embed_svm: {
      const Matrix x =
          svm::load_embeddings(spec.embeddings_path, window_keys(train_set));
      tv.svm = svm::SvmModel::fit(x, svm_labels(train_set), svm_params_for(spec));
      break;
    }
  }
  return tv;
}

TrainedVariant train_variant(const corpus::Manifest& manifest,
                             const ModelSpec& spec) {
  manifest.validate();
  std::vector<LoadedRecording> recs;
  for (const auto& e : manifest.entries) recs.push_back(load_recording(e, spec));
  std::vector<const LoadedRecording*> ptrs;
  for (const auto& r : recs) ptrs.push_back(&r);
  return train_variant(ptrs, spec);
}

SecondTimeline predict_recording(TrainedVariant& model,
                                 const LoadedRecording& rec,
                                 const ModelSpec& spec) {
  const auto crying = predict_windows(model, rec.windows, spec);
  std::vector<int> starts;
  for (std::size_t i = 0; i < rec.windows.size(); ++i) {
    if (crying[i]) starts.push_back(rec.windows[i].start_s);
  }
  SecondTimeline t = windows_to_seconds(starts, rec.mask.size(), &rec.mask);
  t.participant_id = rec.entry.participant_id;
  return smooth_timeline(std::move(t));
}

SecondTimeline predict_recording(TrainedVariant& model,
                                 const audio::AudioClip& clip,
                                 const ModelSpec& spec) {
  LoadedRecording rec;
  rec.entry.participant_id = clip.participant_id;
  rec.entry.recording_id = clip.recording_id;
  std::shared_ptr<const audio::AudioClip> shared;
  if (clip.sample_rate != audio::kCanonicalSampleRate) {
    shared = std::make_shared<const audio::AudioClip>(
        audio::resample(clip, audio::kCanonicalSampleRate));
  } else {
    shared = std::make_shared<const audio::AudioClip>(clip);
  }
  rec.clip = shared;
  rec.mask = preprocess::smooth_mask(
      preprocess::silence_filter(*shared, spec.silence_threshold_db));
  rec.windows = preprocess::make_windows(shared, rec.mask, nullptr);
  return predict_recording(model, rec, spec);
}

EvalReport lopo_evaluate(const corpus::Manifest& manifest, const ModelSpec& spec,
                         int jobs) {
  spec.validate();
  manifest.validate();

  std::vector<LoadedRecording> recs;
  recs.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) recs.push_back(load_recording(e, spec));
  const auto participants = sorted_participants(recs);
  if (participants.size() < 2) {
    throw DataError("lopo: need at least 2 participants");
  }

  std::vector<ParticipantScore> scores(participants.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto run_fold = [&](std::size_t fold) {
    const std::string& held_out = participants[fold];
    std::vector<const LoadedRecording*> train_recs, test_recs;
    for (const auto& r : recs) {
      (r.entry.participant_id == held_out ? test_recs : train_recs).push_back(&r);
    }
    if (spec.verbose) {
      std::cerr << "lopo fold " << fold + 1 << "/" << participants.size()
                << ": hold out " << held_out << "\n";
    }
    TrainedVariant model = train_variant(train_recs, spec);
    scores[fold] = score_participant(held_out, model, test_recs, spec);
  };

  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(participants.size())));
  if (workers == 1) {
    for (std::size_t f = 0; f < participants.size(); ++f) run_fold(f);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        while (true) {
          const std::size_t f = next.fetch_add(1);
          if (f >= participants.size()) break;
          try {
            run_fold(f);
          } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
  }
  return report_from_scores(std::move(scores));
}

EvalReport train_test_evaluate(const corpus::Manifest& train,
                               const corpus::Manifest& test,
                               const ModelSpec& spec, int jobs) {
  (void)jobs;
  spec.validate();
  train.validate();
  test.validate();

  const auto train_p = train.participants();
  const auto test_p = test.participants();
  std::vector<std::string> overlap;
  std::set_intersection(train_p.begin(), train_p.end(), test_p.begin(),
                        test_p.end(), std::back_inserter(overlap));
  if (!overlap.empty()) {
    std::cerr << "train_test_evaluate: warning: " << overlap.size()
              << " participant(s) appear in both manifests (resubstitution)\n";
  }

  std::vector<LoadedRecording> train_recs;
  for (const auto& e : train.entries) {
    train_recs.push_back(load_recording(e, spec));
  }
  std::vector<const LoadedRecording*> train_ptrs;
  for (const auto& r : train_recs) train_ptrs.push_back(&r);
  TrainedVariant model = train_variant(train_ptrs, spec);
  train_recs.clear();

  std::vector<LoadedRecording> test_recs;
  for (const auto& e : test.entries) test_recs.push_back(load_recording(e, spec));

  std::map<std::string, std::vector<const LoadedRecording*>> by_participant;
  for (const auto& r : test_recs) {
    by_participant[r.entry.participant_id].push_back(&r);
  }
  std::vector<ParticipantScore> scores;
  for (auto& [pid, rs] : by_participant) {
    scores.push_back(score_participant(pid, model, rs, spec));
  }
  return report_from_scores(std::move(scores));
}

void write_metrics_csv(const EvalReport& report, std::ostream& os) {
  os << "participant,tp,fp,fn,tn,precision,recall,f1\n";
  char buf[128];
  for (const auto& p : report.per_participant) {
    std::snprintf(buf, sizeof buf, "%s,%zu,%zu,%zu,%zu,%.6f,%.6f,%.6f\n",
                  p.participant_id.c_str(), p.score.tp, p.score.fp, p.score.fn,
                  p.score.tn, p.score.precision, p.score.recall, p.score.f1);
    os << buf;
  }
}

void write_summary_json(const EvalReport& report, const std::string& model,
                        std::ostream& os) {
  nlohmann::json j;
  j["model"] = model;
  j["participants"] = report.per_participant.size();
  j["f1"] = {{"mean", report.f1.mean}, {"std", report.f1.stddev}};
  j["precision"] = {{"mean", report.precision.mean},
                    {"std", report.precision.stddev}};
  j["recall"] = {{"mean", report.recall.mean}, {"std", report.recall.stddev}};
  os << j.dump(2) << '\n';
}

void write_timeline_csv(const SecondTimeline& timeline, std::ostream& os) {
  os << "second,label\n";
  for (std::size_t s = 0; s < timeline.crying.size(); ++s) {
    os << s << ',' << (timeline.crying[s] ? "crying" : "not_crying") << '\n';
  }
}

}  // namespace crydet::detect
