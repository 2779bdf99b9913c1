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
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "crydet/audio_io.hpp"

namespace crydet::preprocess {

inline constexpr int kWindowSeconds = 5;
inline constexpr int kWindowHopSeconds = 1;  // 4 s overlap
inline constexpr double kMaxMaskSeconds = 0.44;
inline constexpr double kSilenceBandHz = 350.0;
inline constexpr double kDefaultSilenceThresholdDb = -60.0;

/// Per-second retention mask: true = active, false = removed as silent above
/// the 350 Hz band. Length = floor(clip duration in seconds).
using ActiveMask = std::vector<bool>;

enum class WindowLabel { crying, not_crying, mixed, unlabeled };

const char* to_string(WindowLabel label);

/// One 5 s analysis window. Samples are materialized on demand from the
/// source clip (plus the augmentation mask span, if any), so instances stay
/// cheap to copy and duplicate.
struct WindowInstance {
  std::shared_ptr<const audio::AudioClip> clip;
  int start_s = 0;
  WindowLabel label = WindowLabel::unlabeled;
  bool augmented = false;
  // zeroed span for time-masked duplicates, sample units within the window
  int mask_begin = 0;
  int mask_len = 0;

  int window_samples() const { return kWindowSeconds * clip->sample_rate; }
  std::vector<float> samples() const;

  /// Stable key: "<recording_id>:<start_s>". Augmented duplicates share the
  /// source window's key (external per-window artifacts such as embedding
  /// files are keyed on the un-augmented audio).
  std::string key() const;
};

/// Marks each whole second silent when its energy in STFT bins >= 350 Hz,
/// expressed in dB relative to a full-scale sine, falls below threshold_db.
ActiveMask silence_filter(const audio::AudioClip& clip,
                          double threshold_db = kDefaultSilenceThresholdDb);

/// Bridges inactive gaps of length <= 5 s lying strictly between active runs,
/// then removes active runs shorter than 5 s. Idempotent.
ActiveMask smooth_mask(ActiveMask mask);

/// Cuts each maximal active run of length >= 5 s into 5 s windows at a 1 s
/// hop (an N-second run yields N-4 windows). When per-second truth labels are
/// given, a window is crying/not_crying only if all five covered seconds
/// agree, otherwise mixed.
std::vector<WindowInstance> make_windows(
    std::shared_ptr<const audio::AudioClip> clip, const ActiveMask& mask,
    const std::vector<bool>* second_is_crying = nullptr);

/// Removes label == mixed.
std::vector<WindowInstance> drop_mixed(std::vector<WindowInstance> instances);

/// Duplicate of a crying window with one contiguous span of duration drawn
/// uniformly from (0, 0.44] s zeroed out. Deterministic for a fixed seed.
WindowInstance time_mask_augment(const WindowInstance& window,
                                 std::uint64_t rng_seed);

/// Doubles the crying class with one time-masked duplicate per window, then
/// subsamples not_crying windows (without replacement) down to the augmented
/// crying count. Negatives already fewer than that are kept as-is. Throws
/// std::invalid_argument when either class is absent.
std::vector<WindowInstance> balance(std::vector<WindowInstance> instances,
                                    std::uint64_t rng_seed);

/// Window manifest export: recording_id,start_s,label,augmented.
void write_window_manifest(std::span<const WindowInstance> instances,
                           std::ostream& os);

}  // namespace crydet::preprocess
