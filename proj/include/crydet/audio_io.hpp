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

#include <string>
#include <vector>

namespace crydet::audio {

inline constexpr int kCanonicalSampleRate = 22050;

/// Mono clip, amplitudes in [-1, 1].
struct AudioClip {
  std::vector<float> samples;
  int sample_rate = kCanonicalSampleRate;
  std::string recording_id;
  std::string participant_id;

  double duration_seconds() const {
    return sample_rate > 0
               ? static_cast<double>(samples.size()) / sample_rate
               : 0.0;
  }
};

/// Reads a RIFF/WAV file (PCM 8/16/24/32-bit or IEEE float32/64).
/// Multichannel input is averaged to mono; integer samples are scaled by the
/// type's max magnitude (e.g. 32767 -> 32767/32768). Throws DataError for
/// unreadable files, unsupported codecs, or zero-length audio.
AudioClip load_wav(const std::string& path);

/// Writes PCM16 (default) or float32 WAV.
void save_wav(const std::string& path, const AudioClip& clip,
              bool float_format = false);

/// Linear-interpolation resampling; no-op (copy) when rates match.
/// Output length = round(len * target / source).
AudioClip resample(const AudioClip& clip, int target_rate);

}  // namespace crydet::audio
