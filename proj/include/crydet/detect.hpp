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

#include <cstddef>
#include <string>
#include <vector>

namespace crydet::detect {

inline constexpr double kMinEpisodeSeconds = 3.0;
inline constexpr double kMergeGapSeconds = 5.0;
inline constexpr std::size_t kSmoothRunSeconds = 5;  // runs <= 5 s reassigned

/// Raw annotated crying interval, seconds.
struct Interval {
  double start_s = 0.0;
  double end_s = 0.0;
};

/// Canonical two-class labeling of a recording: a sorted list of crying
/// episodes (duration >= 3 s, inter-episode gaps > 5 s); everything else is
/// not_crying.
class LabelTrack {
 public:
  /// Merges crying intervals with gaps <= 5 s, drops merged episodes shorter
  /// than 3 s. Throws std::invalid_argument for intervals with end <= start
  /// or lying outside [0, duration].
  static LabelTrack canonicalize(std::vector<Interval> raw, double duration_s);

  const std::vector<Interval>& crying_intervals() const { return crying_; }
  double duration_s() const { return duration_s_; }

  /// Gap-free interval list alternating not_crying / crying labels.
  struct LabeledInterval {
    double start_s, end_s;
    bool crying;
  };
  std::vector<LabeledInterval> full_intervals() const;

  /// Per-second truth: second s is crying iff crying covers at least half of
  /// [s, s+1).
  std::vector<bool> second_labels(std::size_t n_seconds) const;

 private:
  std::vector<Interval> crying_;
  double duration_s_ = 0.0;
};

/// Per-second boolean predictions (or truth) over a recording.
struct SecondTimeline {
  std::vector<bool> crying;
  std::string participant_id;
};

/// Any-window-positive binning: second s is crying iff some predicted-crying
/// 5 s window covers [s, s+1). Seconds outside the active mask (when given)
/// stay not_crying. Throws std::invalid_argument for windows ending past
/// n_seconds.
SecondTimeline windows_to_seconds(const std::vector<int>& crying_window_starts,
                                  std::size_t n_seconds,
                                  const std::vector<bool>* active_mask = nullptr);

/// Pass 1 bridges not_crying runs of length <= 5 strictly between crying
/// runs; pass 2 reassigns crying runs of length <= 5 to not_crying. Output
/// never contains a crying run of length <= 5.
SecondTimeline smooth_timeline(SecondTimeline timeline);

/// Second-by-second confusion counts with crying as the positive class.
/// Undefined ratios fall back to 0 (so participants without positives do not
/// produce NaN).
struct Score {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

Score score_from_counts(std::size_t tp, std::size_t fp, std::size_t fn,
                        std::size_t tn);
Score score(const SecondTimeline& pred, const SecondTimeline& truth);

}  // namespace crydet::detect
