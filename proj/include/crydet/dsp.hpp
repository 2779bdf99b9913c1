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

#include <ostream>
#include <span>
#include <vector>

#include "crydet/matrix.hpp"

namespace crydet::dsp {

/// STFT framing parameters. Hann window is implied.
struct StftConfig {
  int samples_per_segment = 980;
  int overlap = 490;

  int hop() const { return samples_per_segment - overlap; }
  int freq_bins() const { return samples_per_segment / 2 + 1; }
};

/// Periodic Hann window of length n.
std::vector<double> hann_window(int n);

/// Power spectrogram, freq_bins x frames. Frame t covers samples
/// [t*hop, t*hop + samples_per_segment); frames = floor((N - seg)/hop) + 1.
/// Bin (k, t) = |DFT(hann .* slice)[k]|^2. Throws std::invalid_argument when
/// the input is shorter than one segment.
Matrix stft_power(std::span<const float> samples, const StftConfig& cfg = {});

/// HTK mel scale.
double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Triangular filterbank, n_mels x (n_fft/2 + 1). Centers equally spaced on
/// the mel scale from 0 Hz to Nyquist, weights sampled at bin centers. A
/// filter too narrow to reach any bin center gets weight 1 on its nearest
/// bin, so every row has at least one positive entry.
Matrix mel_filterbank(int n_mels, int n_fft, double sample_rate);

/// Center frequencies (Hz) of the n_mels filters, for locating bands in tests
/// and diagnostics.
std::vector<double> mel_center_frequencies(int n_mels, double sample_rate);

inline constexpr int kMelImageSize = 225;
inline constexpr int kMelWindowSamples = 110250;  // 5 s at 22050 Hz
inline constexpr int kMelPaddedSamples = 110740;  // yields exactly 225 frames

/// Log-mel image consumed by the CNN: 225 mel bins x 225 frames,
/// standardized to zero mean / unit variance per image.
struct MelImage {
  std::vector<float> values;  // row-major, mel bin major
  double window_start_s = 0.0;

  float at(int mel, int frame) const {
    return values[static_cast<std::size_t>(mel) * kMelImageSize + frame];
  }
};

/// 5 s window at 22050 Hz -> MelImage. The window is zero-padded to
/// kMelPaddedSamples so the frame count matches the 225-bin filterbank, then
/// log(power + 1e-10) and per-image standardization are applied. A
/// zero-variance image (e.g. digital silence) maps to all zeros.
MelImage mel_image(std::span<const float> window_samples,
                   double window_start_s = 0.0);

/// Debug dumps.
void write_mel_csv(const MelImage& img, std::ostream& os);
void write_mel_binary(const MelImage& img, std::ostream& os);  // LE float32

}  // namespace crydet::dsp
