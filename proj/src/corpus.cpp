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

#include "crydet/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <span>
#include <sstream>

#include "crydet/audio_io.hpp"
#include "crydet/error.hpp"
#include "crydet/rng.hpp"

namespace fs = std::filesystem;

namespace crydet::corpus {

namespace {

constexpr int kSampleRate = audio::kCanonicalSampleRate;
constexpr double kPi = 3.14159265358979323846;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double db_to_rms(double db) {
  // level convention: 0 dB is a full-scale sine (RMS 1/sqrt(2))
  return std::pow(10.0, db / 20.0) / std::sqrt(2.0);
}

// scales a span to a target RMS in place; leaves silence untouched
void set_rms(std::span<float> x, double target_rms) {
  double acc = 0.0;
  for (float v : x) acc += static_cast<double>(v) * v;
  const double rms = std::sqrt(acc / static_cast<double>(x.size()));
  if (rms <= 0.0) return;
  const double g = target_rms / rms;
  for (auto& v : x) v = static_cast<float>(v * g);
}

void add_white_noise(std::span<float> x, double level_db, Rng& rng) {
  const double sigma = db_to_rms(level_db);
  for (auto& v : x) v += static_cast<float>(sigma * rng.normal());
}

// speech-band babble: a dense stack of slowly modulated, slowly drifting
// tones. Band and modulation rates sit away from the cry F0 region and the
// 3-5 Hz cry rhythm so the two sources stay separable by design.
void add_babble(std::span<float> x, double level_db, Rng& rng) {
  constexpr int kVoices = 40;
  struct Voice {
    double freq, phase, am_rate, am_phase, drift_rate, drift_phase;
  };
  std::vector<Voice> voices(kVoices);
  for (auto& v : voices) {
    v.freq = rng.uniform(600.0, 3200.0);
    v.phase = rng.uniform(0.0, 2.0 * kPi);
    v.am_rate = rng.uniform(0.4, 1.8);
    v.am_phase = rng.uniform(0.0, 2.0 * kPi);
    v.drift_rate = rng.uniform(0.05, 0.3);
    v.drift_phase = rng.uniform(0.0, 2.0 * kPi);
  }
  std::vector<float> buf(x.size(), 0.0f);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = static_cast<double>(i) / kSampleRate;
    double s = 0.0;
    for (const auto& v : voices) {
      const double am =
          0.3 + 0.7 * 0.5 * (1.0 + std::sin(2.0 * kPi * v.am_rate * t + v.am_phase));
      const double f =
          v.freq * (1.0 + 0.05 * std::sin(2.0 * kPi * v.drift_rate * t + v.drift_phase));
      s += am * std::sin(2.0 * kPi * f * t + v.phase);
    }
    buf[i] = static_cast<float>(s);
  }
  set_rms(buf, db_to_rms(level_db));
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += buf[i];
}

// harmonic-rich sawtooth burst with 3-5 Hz amplitude modulation and slight
// vibrato, the synthetic stand-in for a cry episode
void add_cry(std::span<float> x, double f0_min, double f0_max, double level_db,
             Rng& rng) {
  const double f0 = rng.uniform(f0_min, f0_max);
  const double am_rate = rng.uniform(3.0, 5.0);
  const double am_phase = rng.uniform(0.0, 2.0 * kPi);
  const double vib_rate = rng.uniform(4.0, 7.0);
  const double vib_depth = 0.02;
  const int harmonics = std::max(1, static_cast<int>(8000.0 / f0));

  std::vector<float> buf(x.size(), 0.0f);
  double phase = rng.uniform(0.0, 2.0 * kPi);
  const double dt = 1.0 / kSampleRate;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = static_cast<double>(i) * dt;
    const double inst_f0 =
        f0 * (1.0 + vib_depth * std::sin(2.0 * kPi * vib_rate * t));
    phase += 2.0 * kPi * inst_f0 * dt;
    double s = 0.0;
    for (int k = 1; k <= harmonics; ++k) {
      s += std::sin(k * phase) / k;
    }
    const double am =
        0.15 + 0.85 * 0.5 * (1.0 + std::sin(2.0 * kPi * am_rate * t + am_phase));
    buf[i] = static_cast<float>(s * am);
  }
  // 50 ms onset/offset ramps
  const std::size_t ramp = kSampleRate / 20;
  for (std::size_t i = 0; i < ramp && i < buf.size(); ++i) {
    const float g = static_cast<float>(i) / ramp;
    buf[i] *= g;
    buf[buf.size() - 1 - i] *= g;
  }
  set_rms(buf, db_to_rms(level_db));
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += buf[i];
}

struct RecordingPlan {
  std::vector<float> samples;
  std::vector<detect::Interval> cries;
  std::vector<BedKind> bed;
};

RecordingPlan synth_mixed(const SynthSpec& spec, Rng& rng) {
  const int total = spec.recording_seconds;
  RecordingPlan plan;
  plan.samples.assign(static_cast<std::size_t>(total) * kSampleRate, 0.0f);
  plan.bed.assign(total, BedKind::silence);

  auto span_of = [&](int start_s, int len_s) {
    return std::span<float>(plan.samples)
        .subspan(static_cast<std::size_t>(start_s) * kSampleRate,
                 static_cast<std::size_t>(len_s) * kSampleRate);
  };
  auto mark = [&](int start_s, int len_s, BedKind kind) {
    for (int s = start_s; s < start_s + len_s; ++s) plan.bed[s] = kind;
  };

  int t = 0;
  int block_index = 0;
  while (t < total) {
    const int remaining = total - t;
    // fixed prologue (babble, episode, broadband) so every recording carries
    // both negative stretch kinds and at least one episode on its own
    int kind;
    const int cry_need = 6 + spec.episode_max_s + 6;
    if (block_index == 0) {
      kind = 1;
    } else if (block_index == 1 && remaining >= cry_need) {
      kind = 0;
    } else if (block_index == 2) {
      kind = 2;
    } else {
      // noise-heavy mix keeps negatives plentiful enough that balancing
      // subsamples them instead of leaving the classes skewed
      const double p = rng.uniform();
      kind = p < 0.18 ? 0 : p < 0.52 ? 1 : p < 0.85 ? 2 : 3;
    }
    if (kind == 0 && remaining < cry_need) kind = 3;

    if (kind == 0) {
      const int ep = spec.episode_min_s +
                     static_cast<int>(rng.uniform_index(
                         static_cast<std::size_t>(spec.episode_max_s -
                                                  spec.episode_min_s + 1)));
      // 6 s silent margins keep episodes in their own active runs
      add_cry(span_of(t + 6, ep), spec.f0_min_hz, spec.f0_max_hz,
              spec.cry_level_db, rng);
      mark(t + 6, ep, BedKind::bed);
      plan.cries.push_back({static_cast<double>(t + 6),
                            static_cast<double>(t + 6 + ep)});
      t += 6 + ep + 6;
    } else if (kind == 1) {
      const int len = std::min(remaining, 10 + static_cast<int>(rng.uniform_index(13)));
      add_babble(span_of(t, len), spec.babble_level_db, rng);
      mark(t, len, BedKind::babble);
      t += len;
    } else if (kind == 2) {
      const int len = std::min(remaining, 10 + static_cast<int>(rng.uniform_index(13)));
      add_white_noise(span_of(t, len), spec.broadband_level_db, rng);
      mark(t, len, BedKind::broadband);
      t += len;
    } else {
      const int len = std::min(remaining, 6 + static_cast<int>(rng.uniform_index(10)));
      t += len;  // bed stays silence
    }
    ++block_index;
  }
  return plan;
}

RecordingPlan synth_over_bed(const SynthSpec& spec, Rng& rng, bool noisy) {
  const int total = spec.recording_seconds;
  RecordingPlan plan;
  plan.samples.assign(static_cast<std::size_t>(total) * kSampleRate, 0.0f);
  plan.bed.assign(total, BedKind::bed);

  auto all = std::span<float>(plan.samples);
  if (noisy) {
    add_babble(all, spec.noisy_babble_db, rng);
  } else {
    add_white_noise(all, spec.clean_bed_db, rng);
  }

  int t = 10 + static_cast<int>(rng.uniform_index(11));
  while (true) {
    const int ep = spec.episode_min_s +
                   static_cast<int>(rng.uniform_index(static_cast<std::size_t>(
                       spec.episode_max_s - spec.episode_min_s + 1)));
    if (t + ep + 6 > total) break;
    add_cry(all.subspan(static_cast<std::size_t>(t) * kSampleRate,
                        static_cast<std::size_t>(ep) * kSampleRate),
            spec.f0_min_hz, spec.f0_max_hz, spec.cry_level_db, rng);
    plan.cries.push_back({static_cast<double>(t), static_cast<double>(t + ep)});
    t += ep + 10 + static_cast<int>(rng.uniform_index(16));
  }
  return plan;
}

}  // namespace

Manifest Manifest::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("manifest: cannot open " + path);
  const fs::path dir = fs::path(path).parent_path();

  Manifest m;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("participant_id,", 0) == 0) continue;  // header
    const auto cols = split_csv_line(line);
    if (cols.size() < 4 || cols.size() > 5) {
      throw DataError("manifest: expected 4-5 columns at line " +
                      std::to_string(line_no) + " in " + path);
    }
    ManifestEntry e;
    e.participant_id = cols[0];
    e.recording_id = cols[1];
    auto resolve = [&](const std::string& p) {
      return fs::path(p).is_absolute() ? p : (dir / p).string();
    };
    e.wav_path = resolve(cols[2]);
    e.annotation_path = resolve(cols[3]);
    if (cols.size() == 5) e.split = cols[4];
    m.entries.push_back(std::move(e));
  }
  return m;
}

void Manifest::save(const std::string& path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("manifest: cannot write " + path);
  os << "participant_id,recording_id,wav,annotation,split\n";
  for (const auto& e : entries) {
    os << e.participant_id << ',' << e.recording_id << ',' << e.wav_path << ','
       << e.annotation_path << ',' << e.split << '\n';
  }
}

void Manifest::validate() const {
  if (entries.empty()) throw DataError("manifest: no entries");
  std::set<std::string> ids;
  std::string problems;
  for (const auto& e : entries) {
    if (!ids.insert(e.recording_id).second) {
      problems += " duplicate recording_id " + e.recording_id + ";";
    }
    if (!fs::exists(e.wav_path)) problems += " missing wav " + e.wav_path + ";";
    if (!fs::exists(e.annotation_path)) {
      problems += " missing annotation " + e.annotation_path + ";";
    }
  }
  if (!problems.empty()) throw DataError("manifest invalid:" + problems);
}

std::vector<std::string> Manifest::participants() const {
  std::set<std::string> s;
  for (const auto& e : entries) s.insert(e.participant_id);
  return {s.begin(), s.end()};
}

std::vector<detect::Interval> parse_annotations(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("annotations: cannot open " + path);
  std::vector<detect::Interval> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cols = split_csv_line(line);
    if (cols.size() != 3) {
      throw DataError("annotations: expected start,end,label at line " +
                      std::to_string(line_no) + " in " + path);
    }
    double start = 0.0, end = 0.0;
    try {
      start = std::stod(cols[0]);
      end = std::stod(cols[1]);
    } catch (const std::exception&) {
      throw DataError("annotations: bad number at line " +
                      std::to_string(line_no) + " in " + path);
    }
    if (cols[2] != "crying") {
      throw DataError("annotations: unknown label '" + cols[2] + "' at line " +
                      std::to_string(line_no) + " in " + path);
    }
    if (end <= start || start < 0.0) {
      throw DataError("annotations: bad interval at line " +
                      std::to_string(line_no) + " in " + path);
    }
    out.push_back({start, end});
  }
  return out;
}

void write_annotations(const std::vector<detect::Interval>& intervals,
                       const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("annotations: cannot write " + path);
  char buf[80];
  for (const auto& iv : intervals) {
    std::snprintf(buf, sizeof buf, "%.3f,%.3f,crying\n", iv.start_s, iv.end_s);
    os << buf;
  }
}

Palette palette_from_string(const std::string& s) {
  if (s == "mixed") return Palette::mixed;
  if (s == "clean") return Palette::clean;
  if (s == "noisy") return Palette::noisy;
  throw ConfigError("unknown palette: " + s);
}

const char* to_string(Palette p) {
  switch (p) {
    case Palette::mixed:
      return "mixed";
    case Palette::clean:
      return "clean";
    case Palette::noisy:
      return "noisy";
  }
  return "?";
}

void SynthSpec::validate() const {
  if (participants < 1) throw ConfigError("synth: participants < 1");
  if (recording_seconds < 60) throw ConfigError("synth: recording_seconds < 60");
  if (!(f0_min_hz > 0.0) || !(f0_max_hz >= f0_min_hz) ||
      f0_max_hz >= kSampleRate / 2.0) {
    throw ConfigError("synth: F0 range must lie inside (0, Nyquist)");
  }
  if (episode_min_s < 3) throw ConfigError("synth: episodes must be >= 3 s");
  if (episode_max_s < episode_min_s) throw ConfigError("synth: bad episode range");
  if (episode_max_s + 12 > recording_seconds) {
    throw ConfigError("synth: recording too short for one episode");
  }
}

SynthResult generate_synthetic(const SynthSpec& spec,
                               const std::string& out_dir) {
  spec.validate();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) {
    throw DataError("synth: cannot create output directory " + out_dir);
  }

  SynthResult result;
  for (int p = 0; p < spec.participants; ++p) {
    const std::string pid = "P" + std::to_string(p + 1);
    const std::string rid = pid + "R1";
    Rng rng(hash_seed(spec.seed, "participant:" + pid));

    RecordingPlan plan;
    switch (spec.palette) {
      case Palette::mixed:
        plan = synth_mixed(spec, rng);
        break;
      case Palette::clean:
        plan = synth_over_bed(spec, rng, /*noisy=*/false);
        break;
      case Palette::noisy:
        plan = synth_over_bed(spec, rng, /*noisy=*/true);
        break;
    }

    audio::AudioClip clip;
    clip.sample_rate = kSampleRate;
    clip.samples = std::move(plan.samples);
    for (auto& v : clip.samples) v = std::clamp(v, -1.0f, 1.0f);
    clip.recording_id = rid;
    clip.participant_id = pid;

    const std::string wav_name = rid + ".wav";
    const std::string ann_name = rid + ".csv";
    audio::save_wav((fs::path(out_dir) / wav_name).string(), clip);
    write_annotations(plan.cries, (fs::path(out_dir) / ann_name).string());

    ManifestEntry e;
    e.participant_id = pid;
    e.recording_id = rid;
    e.wav_path = wav_name;
    e.annotation_path = ann_name;
    result.manifest.entries.push_back(e);
    result.bed_seconds.push_back(std::move(plan.bed));
  }

  result.manifest_path = (fs::path(out_dir) / "manifest.csv").string();
  result.manifest.save(result.manifest_path);
  // reload so entry paths resolve against the manifest directory
  result.manifest = Manifest::load(result.manifest_path);
  return result;
}

}  // namespace crydet::corpus
