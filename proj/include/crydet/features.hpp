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

#include <array>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "crydet/matrix.hpp"

namespace crydet::features {

inline constexpr int kShortTermCount = 34;
inline constexpr int kWindowFeatureCount = 102;  // mean(34) | median(34) | std(34)

/// 102-d per-window acoustic descriptor.
struct FeatureVector {
  std::array<double, kWindowFeatureCount> values{};
  double window_start_s = 0.0;
};

/// Frame-level extractor for the 34-feature set, in fixed order:
///   [0]  zero-crossing rate        (sign changes per adjacent sample pair)
///   [1]  energy                    (mean squared amplitude)
///   [2]  entropy of energy         (10 sub-blocks, bits)
///   [3]  spectral centroid, Hz
///   [4]  spectral spread, Hz
///   [5]  spectral entropy          (10 blocks, bits)
///   [6]  spectral flux             (vs previous frame; 0 for the first)
///   [7]  spectral rolloff, Hz      (90% of spectral power)
///   [8..20]  MFCC 1-13             (40 mel filters 0..Nyquist, DCT-II ortho)
///   [21..32] 12-bin chroma         (power share per pitch class)
///   [33] chroma deviation          (population std of the chroma bins)
///
/// Silence conventions: zero energy yields zero for centroid, spread,
/// entropies, flux, rolloff and chroma; MFCCs are computed on the floored
/// log spectrum. No input produces NaN or Inf.
///
/// The extractor keeps the previous frame's normalized spectrum for the flux
/// term; call reset() at window boundaries.
class FrameFeatureExtractor {
 public:
  explicit FrameFeatureExtractor(double sample_rate, int frame_len);
  ~FrameFeatureExtractor();
  FrameFeatureExtractor(FrameFeatureExtractor&&) noexcept;
  FrameFeatureExtractor& operator=(FrameFeatureExtractor&&) noexcept;

  std::array<double, kShortTermCount> process(std::span<const float> frame);
  void reset();

  double sample_rate() const;
  int frame_len() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One-shot 34-feature extraction (flux = 0, single-frame semantics).
std::array<double, kShortTermCount> short_term_features(
    std::span<const float> frame, double sample_rate);

/// 5 x 34 matrix: each row averages the 34-feature vectors of all 50 ms /
/// 25 ms-hop frames lying inside one of the five 1 s subsegments. Requires
/// exactly 5 * sample_rate samples.
Matrix per_second_features(std::span<const float> window_samples,
                           double sample_rate);

/// Column-wise mean, median and population std of the 5 x 34 matrix,
/// concatenated as mean||median||std.
FeatureVector window_features(std::span<const float> window_samples,
                              double sample_rate, double window_start_s = 0.0);

/// CSV export: id,start_s,label,f0..f101 per row.
struct FeatureRow {
  std::string recording_id;
  double start_s;
  std::string label;
  const FeatureVector* features;
};
void write_feature_csv(std::span<const FeatureRow> rows, std::ostream& os);

}  // namespace crydet::features
