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

#include "crydet/dsp.hpp"

#include <cmath>
#include <stdexcept>

#include "crydet/fft.hpp"

namespace crydet::dsp {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kLogFloor = 1e-10;
}  // namespace

std::vector<double> hann_window(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / n);
  }
  return w;
}

Matrix stft_power(std::span<const float> samples, const StftConfig& cfg) {
  const int seg = cfg.samples_per_segment;
  const int hop = cfg.hop();
  if (seg <= 0 || cfg.overlap < 0 || cfg.overlap >= seg) {
    throw std::invalid_argument("stft_power: bad config");
  }
  if (static_cast<int>(samples.size()) < seg) {
    throw std::invalid_argument("stft_power: input shorter than one segment");
  }
  const std::size_t frames = (samples.size() - seg) / hop + 1;
  const std::size_t bins = static_cast<std::size_t>(cfg.freq_bins());

  const auto window = hann_window(seg);
  const Fft fft(static_cast<std::size_t>(seg));

  Matrix out(bins, frames);
  std::vector<std::complex<double>> in(seg), sp(seg);
  for (std::size_t t = 0; t < frames; ++t) {
    const float* slice = samples.data() + t * hop;
    for (int i = 0; i < seg; ++i) {
      in[i] = window[i] * static_cast<double>(slice[i]);
    }
    fft.forward(in, sp);
    for (std::size_t k = 0; k < bins; ++k) {
      out(k, t) = std::norm(sp[k]);
    }
  }
  return out;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

Matrix mel_filterbank(int n_mels, int n_fft, double sample_rate) {
  if (n_mels < 1) throw std::invalid_argument("mel_filterbank: n_mels < 1");
  const int bins = n_fft / 2 + 1;
  if (n_mels > bins) {
    throw std::invalid_argument("mel_filterbank: n_mels exceeds usable bins");
  }
  const double nyquist = sample_rate / 2.0;
  const double mel_max = hz_to_mel(nyquist);
  // n_mels + 2 edge points, filters peak at points 1..n_mels
  std::vector<double> edges_hz(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i) {
    edges_hz[i] = mel_to_hz(mel_max * i / (n_mels + 1));
  }

  Matrix fb(n_mels, bins);
  for (int m = 0; m < n_mels; ++m) {
    const double lo = edges_hz[m], center = edges_hz[m + 1], hi = edges_hz[m + 2];
    bool any = false;
    for (int k = 0; k < bins; ++k) {
      const double f = k * sample_rate / n_fft;
      double w = 0.0;
      if (f > lo && f < center) {
        w = (f - lo) / (center - lo);
      } else if (f == center) {
        w = 1.0;
      } else if (f > center && f < hi) {
        w = (hi - f) / (hi - center);
      }
      if (w > 0.0) any = true;
      fb(m, k) = w;
    }
    if (!any) {
      // narrow filter between bin centers: snap to the nearest bin
      int k = static_cast<int>(std::lround(center * n_fft / sample_rate));
      k = std::min(std::max(k, 0), bins - 1);
      fb(m, k) = 1.0;
    }
  }
  return fb;
}

std::vector<double> mel_center_frequencies(int n_mels, double sample_rate) {
  const double mel_max = hz_to_mel(sample_rate / 2.0);
  std::vector<double> centers(n_mels);
  for (int m = 0; m < n_mels; ++m) {
    centers[m] = mel_to_hz(mel_max * (m + 1) / (n_mels + 1));
  }
  return centers;
}

MelImage mel_image(std::span<const float> window_samples, double window_start_s) {
  if (window_samples.size() != static_cast<std::size_t>(kMelWindowSamples)) {
    throw std::invalid_argument("mel_image: expected exactly 110250 samples");
  }
  std::vector<float> padded(kMelPaddedSamples, 0.0f);
  std::copy(window_samples.begin(), window_samples.end(), padded.begin());

  const StftConfig cfg;
  const Matrix power = stft_power(padded, cfg);
  // one filterbank per process; construction is deterministic
  static const Matrix fb = mel_filterbank(kMelImageSize, cfg.samples_per_segment,
                                          22050.0);
  // sparse row ranges of fb (triangles touch few bins)
  struct RowRange {
    int begin, end;
  };
  static const std::vector<RowRange> ranges = [] {
    std::vector<RowRange> r(kMelImageSize);
    for (int m = 0; m < kMelImageSize; ++m) {
      int b = -1, e = -1;
      for (std::size_t k = 0; k < fb.cols; ++k) {
        if (fb(m, k) > 0.0) {
          if (b < 0) b = static_cast<int>(k);
          e = static_cast<int>(k) + 1;
        }
      }
      r[m] = {b, e};
    }
    return r;
  }();

  if (power.cols != kMelImageSize) {
    throw std::logic_error("mel_image: unexpected frame count");
  }

  MelImage img;
  img.window_start_s = window_start_s;
  img.values.resize(static_cast<std::size_t>(kMelImageSize) * kMelImageSize);

  std::vector<double> tmp(img.values.size());
  double sum = 0.0;
  for (int m = 0; m < kMelImageSize; ++m) {
    const auto [b, e] = ranges[m];
    for (int t = 0; t < kMelImageSize; ++t) {
      double acc = 0.0;
      for (int k = b; k < e; ++k) {
        acc += fb(m, k) * power(k, t);
      }
      const double v = std::log(acc + kLogFloor);
      tmp[static_cast<std::size_t>(m) * kMelImageSize + t] = v;
      sum += v;
    }
  }
  const double n = static_cast<double>(tmp.size());
  const double mean = sum / n;
  double var = 0.0;
  for (double v : tmp) var += (v - mean) * (v - mean);
  var /= n;

  if (var < 1e-24) {
    std::fill(img.values.begin(), img.values.end(), 0.0f);
    return img;
  }
  const double inv_std = 1.0 / std::sqrt(var);
  for (std::size_t i = 0; i < tmp.size(); ++i) {
    img.values[i] = static_cast<float>((tmp[i] - mean) * inv_std);
  }
  return img;
}

void write_mel_csv(const MelImage& img, std::ostream& os) {
  for (int m = 0; m < kMelImageSize; ++m) {
    for (int t = 0; t < kMelImageSize; ++t) {
      if (t) os << ',';
      os << img.at(m, t);
    }
    os << '\n';
  }
}

void write_mel_binary(const MelImage& img, std::ostream& os) {
  os.write(reinterpret_cast<const char*>(img.values.data()),
           static_cast<std::streamsize>(img.values.size() * sizeof(float)));
}

}  // namespace crydet::dsp
