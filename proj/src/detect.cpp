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

#include "crydet/detect.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace crydet::detect {

LabelTrack LabelTrack::canonicalize(std::vector<Interval> raw,
                                    double duration_s) {
  if (duration_s < 0) {
    throw std::invalid_argument("canonicalize: negative duration");
  }
  for (const auto& iv : raw) {
    if (iv.end_s <= iv.start_s) {
      throw std::invalid_argument("canonicalize: interval end <= start");
    }
    if (iv.start_s < 0 || iv.end_s > duration_s + 1e-9) {
      throw std::invalid_argument(
          "canonicalize: interval outside recording duration");
    }
  }
  std::sort(raw.begin(), raw.end(),
            [](const Interval& a, const Interval& b) { return a.start_s < b.start_s; });

  // merge episodes with gaps <= 5 s, then enforce the 3 s minimum
  std::vector<Interval> merged;
  for (const auto& iv : raw) {
    if (!merged.empty() && iv.start_s - merged.back().end_s <= kMergeGapSeconds) {
      merged.back().end_s = std::max(merged.back().end_s, iv.end_s);
    } else {
      merged.push_back(iv);
    }
  }
  LabelTrack track;
  track.duration_s_ = duration_s;
  for (const auto& iv : merged) {
    if (iv.end_s - iv.start_s >= kMinEpisodeSeconds) {
      track.crying_.push_back(iv);
    }
  }
  return track;
}

std::vector<LabelTrack::LabeledInterval> LabelTrack::full_intervals() const {
  std::vector<LabeledInterval> out;
  double cursor = 0.0;
  for (const auto& iv : crying_) {
    if (iv.start_s > cursor) out.push_back({cursor, iv.start_s, false});
    out.push_back({iv.start_s, iv.end_s, true});
    cursor = iv.end_s;
  }
  if (cursor < duration_s_) out.push_back({cursor, duration_s_, false});
  if (out.empty()) out.push_back({0.0, duration_s_, false});
  return out;
}

std::vector<bool> LabelTrack::second_labels(std::size_t n_seconds) const {
  std::vector<bool> labels(n_seconds, false);
  for (std::size_t s = 0; s < n_seconds; ++s) {
    const double lo = static_cast<double>(s);
    const double hi = lo + 1.0;
    double covered = 0.0;
    for (const auto& iv : crying_) {
      covered += std::max(0.0, std::min(hi, iv.end_s) - std::max(lo, iv.start_s));
    }
    labels[s] = covered >= 0.5;
  }
  return labels;
}

SecondTimeline windows_to_seconds(const std::vector<int>& crying_window_starts,
                                  std::size_t n_seconds,
                                  const std::vector<bool>* active_mask) {
  SecondTimeline t;
  t.crying.assign(n_seconds, false);
  for (int start : crying_window_starts) {
    if (start < 0 || static_cast<std::size_t>(start) + 5 > n_seconds) {
      throw std::invalid_argument("windows_to_seconds: window beyond duration");
    }
    for (int s = start; s < start + 5; ++s) {
      t.crying[static_cast<std::size_t>(s)] = true;
    }
  }
  if (active_mask) {
    const std::size_t n = std::min(n_seconds, active_mask->size());
    for (std::size_t s = 0; s < n; ++s) {
      if (!(*active_mask)[s]) t.crying[s] = false;
    }
    for (std::size_t s = active_mask->size(); s < n_seconds; ++s) {
      t.crying[s] = false;
    }
  }
  return t;
}

SecondTimeline smooth_timeline(SecondTimeline timeline) {
  auto& v = timeline.crying;
  const std::size_t n = v.size();
  // pass 1: crying-bounded not_crying runs <= 5 become crying
  std::size_t i = 0;
  while (i < n) {
    if (!v[i]) {
      std::size_t j = i;
      while (j < n && !v[j]) ++j;
      const bool interior = i > 0 && j < n;  // crying on both sides
      if (interior && j - i <= kSmoothRunSeconds) {
        for (std::size_t k = i; k < j; ++k) v[k] = true;
      }
      i = j;
    } else {
      ++i;
    }
  }
  // pass 2: crying runs <= 5 become not_crying
  i = 0;
  while (i < n) {
    if (v[i]) {
      std::size_t j = i;
      while (j < n && v[j]) ++j;
      if (j - i <= kSmoothRunSeconds) {
        for (std::size_t k = i; k < j; ++k) v[k] = false;
      }
      i = j;
    } else {
      ++i;
    }
  }
  return timeline;
}

Score score_from_counts(std::size_t tp, std::size_t fp, std::size_t fn,
                        std::size_t tn) {
  Score s;
  s.tp = tp;
  s.fp = fp;
  s.fn = fn;
  s.tn = tn;
  s.precision = (tp + fp) ? static_cast<double>(tp) / (tp + fp) : 0.0;
  s.recall = (tp + fn) ? static_cast<double>(tp) / (tp + fn) : 0.0;
  s.f1 = (s.precision + s.recall > 0.0)
             ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
             : 0.0;
  return s;
}

Score score(const SecondTimeline& pred, const SecondTimeline& truth) {
  if (pred.crying.size() != truth.crying.size()) {
    throw std::invalid_argument("score: timeline length mismatch");
  }
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < pred.crying.size(); ++i) {
    const bool p = pred.crying[i], t = truth.crying[i];
    if (p && t) {
      ++tp;
    } else if (p && !t) {
      ++fp;
    } else if (!p && t) {
      ++fn;
    } else {
      ++tn;
    }
  }
  return score_from_counts(tp, fp, fn, tn);
}

}  // namespace crydet::detect
