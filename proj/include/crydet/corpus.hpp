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

#include <cstdint>
#include <string>
#include <vector>

#include "crydet/detect.hpp"

namespace crydet::corpus {

struct ManifestEntry {
  std::string participant_id;
  std::string recording_id;
  std::string wav_path;
  std::string annotation_path;
  std::string split;  // optional tag
};

/// Corpus manifest CSV: participant_id,recording_id,wav,annotation[,split].
/// Relative paths resolve against the manifest's directory on load.
struct Manifest {
  std::vector<ManifestEntry> entries;

  static Manifest load(const std::string& path);
  void save(const std::string& path) const;

  /// Unique recording ids and resolvable paths; throws DataError otherwise.
  void validate() const;

  std::vector<std::string> participants() const;  // sorted unique
};

/// Annotation CSV: `start_s,end_s,crying` per line; only crying intervals are
/// listed (everything else is implicitly not_crying). Malformed lines are
/// reported with their line number.
std::vector<detect::Interval> parse_annotations(const std::string& path);

void write_annotations(const std::vector<detect::Interval>& intervals,
                       const std::string& path);

enum class Palette {
  mixed,  // silence-separated cry episodes plus babble/broadband stretches
  clean,  // cries over a quiet white-noise bed
  noisy,  // cries over continuous speech-band babble
};

Palette palette_from_string(const std::string& s);
const char* to_string(Palette p);

/// What each generated second's background was; returned for tests and
/// diagnostics, not written to disk.
enum class BedKind : std::uint8_t { silence, babble, broadband, bed };

struct SynthSpec {
  int participants = 4;
  int recording_seconds = 600;
  double f0_min_hz = 440.0;  // infant-cry fundamental range
  double f0_max_hz = 505.0;
  int episode_min_s = 8;
  int episode_max_s = 30;
  Palette palette = Palette::mixed;
  double cry_level_db = -6.0;
  double babble_level_db = -20.0;     // mixed-palette stretches
  double broadband_level_db = -35.0;
  double clean_bed_db = -45.0;        // clean-palette white bed
  double noisy_babble_db = -10.0;     // noisy-palette bed
  std::uint64_t seed = 0;

  void validate() const;  // throws ConfigError
};

struct SynthResult {
  Manifest manifest;
  std::string manifest_path;
  // per manifest entry, one BedKind per second
  std::vector<std::vector<BedKind>> bed_seconds;
};

/// Writes one WAV + annotation CSV per participant plus manifest.csv into
/// out_dir. Cry bursts are amplitude-modulated sawtooth harmonics with F0
/// drawn from the spec range; episodes land on integer second boundaries with
/// inter-episode gaps > 5 s, so the written annotations are already
/// canonical. Byte-identical output for a fixed seed.
SynthResult generate_synthetic(const SynthSpec& spec,
                               const std::string& out_dir);

}  // namespace crydet::corpus
