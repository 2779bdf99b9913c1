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

#include "crydet/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "crydet/dsp.hpp"
#include "crydet/fft.hpp"

namespace crydet::features {

namespace {

constexpr int kEnergyBlocks = 10;
constexpr int kSpectralBlocks = 10;
constexpr int kMfccFilters = 40;
constexpr int kMfccCount = 13;
constexpr int kChromaBins = 12;
constexpr double kLogFloor = 1e-10;
constexpr double kPi = 3.14159265358979323846;

double entropy_bits(std::span<const double> shares) {
  double h = 0.0;
  for (double p : shares) {
    if (p > 0.0) h -= p * std::log2(p);
  }
  return h;
}

}  // namespace

struct FrameFeatureExtractor::Impl {
  double sample_rate;
  int frame_len;
  int bins;  // frame_len / 2 + 1
  dsp::Fft fft;
  Matrix mel_fb;                       // 40 x bins, for MFCC
  std::vector<int> chroma_class;      // per bin, -1 for DC
  std::vector<double> prev_norm_mag;  // previous frame's normalized magnitudes
  bool has_prev = false;

  Impl(double sr, int len)
      : sample_rate(sr),
        frame_len(len),
        bins(len / 2 + 1),
        fft(static_cast<std::size_t>(len)),
        mel_fb(dsp::mel_filterbank(kMfccFilters, len, sr)),
        prev_norm_mag(static_cast<std::size_t>(len / 2 + 1), 0.0) {
    chroma_class.resize(bins);
    chroma_class[0] = -1;
    for (int k = 1; k < bins; ++k) {
      const double f = k * sample_rate / frame_len;
      const long idx = std::lround(12.0 * std::log2(f / 440.0));
      chroma_class[k] = static_cast<int>(((idx % 12) + 12) % 12);
    }
  }
};

FrameFeatureExtractor::FrameFeatureExtractor(double sample_rate, int frame_len)
    : impl_(std::make_unique<Impl>(sample_rate, frame_len)) {
  if (sample_rate <= 0 || frame_len < 2) {
    throw std::invalid_argument("FrameFeatureExtractor: bad arguments");
  }
}

FrameFeatureExtractor::~FrameFeatureExtractor() = default;
FrameFeatureExtractor::FrameFeatureExtractor(FrameFeatureExtractor&&) noexcept =
    default;
FrameFeatureExtractor& FrameFeatureExtractor::operator=(
    FrameFeatureExtractor&&) noexcept = default;

double FrameFeatureExtractor::sample_rate() const { return impl_->sample_rate; }
int FrameFeatureExtractor::frame_len() const { return impl_->frame_len; }

void FrameFeatureExtractor::reset() {
  impl_->has_prev = false;
  std::fill(impl_->prev_norm_mag.begin(), impl_->prev_norm_mag.end(), 0.0);
}

std::array<double, kShortTermCount> FrameFeatureExtractor::process(
    std::span<const float> frame) {
  Impl& im = *impl_;
  const int n = im.frame_len;
  if (static_cast<int>(frame.size()) != n) {
    throw std::invalid_argument("FrameFeatureExtractor: frame length mismatch");
  }

  std::array<double, kShortTermCount> out{};

  // [0] zero-crossing rate: strict sign changes per adjacent pair
  int crossings = 0;
  for (int i = 1; i < n; ++i) {
    if (static_cast<double>(frame[i - 1]) * frame[i] < 0.0) ++crossings;
  }
  out[0] = static_cast<double>(crossings) / (n - 1);

  // [1] energy
  double energy_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    energy_sum += static_cast<double>(frame[i]) * frame[i];
  }
  out[1] = energy_sum / n;

  // [2] entropy of energy over 10 sub-blocks
  {
    const int block = n / kEnergyBlocks;
    std::array<double, kEnergyBlocks> shares{};
    double total = 0.0;
    for (int bidx = 0; bidx < kEnergyBlocks; ++bidx) {
      double e = 0.0;
      for (int i = bidx * block; i < (bidx + 1) * block; ++i) {
        e += static_cast<double>(frame[i]) * frame[i];
      }
      shares[bidx] = e;
      total += e;
    }
    if (total > 0.0) {
      for (auto& s : shares) s /= total;
      out[2] = entropy_bits(shares);
    }
  }

  // spectrum
  const auto spectrum = im.fft.forward_real(frame);
  const int bins = im.bins;
  std::vector<double> mag(bins), power(bins);
  double mag_sum = 0.0, power_sum = 0.0;
  for (int k = 0; k < bins; ++k) {
    mag[k] = std::abs(spectrum[k]);
    power[k] = mag[k] * mag[k];
    mag_sum += mag[k];
    power_sum += power[k];
  }
  const bool silent = power_sum <= 0.0;

  // [3] centroid, [4] spread (Hz, magnitude-weighted)
  if (!silent && mag_sum > 0.0) {
    double centroid = 0.0;
    for (int k = 0; k < bins; ++k) {
      centroid += (k * im.sample_rate / n) * mag[k];
    }
    centroid /= mag_sum;
    double spread = 0.0;
    for (int k = 0; k < bins; ++k) {
      const double d = k * im.sample_rate / n - centroid;
      spread += d * d * mag[k];
    }
    out[3] = centroid;
    out[4] = std::sqrt(spread / mag_sum);
  }

  // [5] spectral entropy over 10 bin blocks of the power spectrum
  if (!silent) {
    const int block = bins / kSpectralBlocks;
    std::array<double, kSpectralBlocks> shares{};
    double total = 0.0;
    for (int bidx = 0; bidx < kSpectralBlocks; ++bidx) {
      double e = 0.0;
      for (int k = bidx * block; k < (bidx + 1) * block; ++k) e += power[k];
      shares[bidx] = e;
      total += e;
    }
    if (total > 0.0) {
      for (auto& s : shares) s /= total;
      out[5] = entropy_bits(shares);
    }
  }

  // [6] spectral flux vs previous frame (normalized magnitudes)
  std::vector<double> norm_mag(bins, 0.0);
  if (mag_sum > 0.0) {
    for (int k = 0; k < bins; ++k) norm_mag[k] = mag[k] / mag_sum;
  }
  if (im.has_prev) {
    double flux = 0.0;
    for (int k = 0; k < bins; ++k) {
      const double d = norm_mag[k] - im.prev_norm_mag[k];
      flux += d * d;
    }
    out[6] = flux;
  }
  im.prev_norm_mag = norm_mag;
  im.has_prev = true;

  // [7] rolloff: lowest bin frequency holding 90% of spectral power
  if (!silent) {
    const double target = 0.90 * power_sum;
    double acc = 0.0;
    for (int k = 0; k < bins; ++k) {
      acc += power[k];
      if (acc >= target) {
        out[7] = k * im.sample_rate / n;
        break;
      }
    }
  }

  // [8..20] MFCC 1-13
  {
    std::array<double, kMfccFilters> log_mel{};
    for (int m = 0; m < kMfccFilters; ++m) {
      double e = 0.0;
      const auto row = im.mel_fb.row(m);
      for (int k = 0; k < bins; ++k) e += row[k] * power[k];
      log_mel[m] = std::log(e + kLogFloor);
    }
    // orthonormal DCT-II
    for (int j = 0; j < kMfccCount; ++j) {
      double c = 0.0;
      for (int m = 0; m < kMfccFilters; ++m) {
        c += log_mel[m] * std::cos(kPi * j * (m + 0.5) / kMfccFilters);
      }
      const double scale = (j == 0) ? std::sqrt(1.0 / kMfccFilters)
                                    : std::sqrt(2.0 / kMfccFilters);
      out[8 + j] = scale * c;
    }
  }

  // [21..32] chroma: power share per pitch class; [33] its deviation
  if (!silent) {
    std::array<double, kChromaBins> chroma{};
    double mapped = 0.0;
    for (int k = 1; k < bins; ++k) {
      chroma[im.chroma_class[k]] += power[k];
      mapped += power[k];
    }
    if (mapped > 0.0) {
      double mean = 0.0;
      for (int c = 0; c < kChromaBins; ++c) {
        chroma[c] /= mapped;
        mean += chroma[c];
      }
      mean /= kChromaBins;
      double var = 0.0;
      for (int c = 0; c < kChromaBins; ++c) {
        out[21 + c] = chroma[c];
        var += (chroma[c] - mean) * (chroma[c] - mean);
      }
      out[33] = std::sqrt(var / kChromaBins);
    }
  }

  return out;
}

std::array<double, kShortTermCount> short_term_features(
    std::span<const float> frame, double sample_rate) {
  if (frame.empty()) throw std::invalid_argument("short_term_features: empty frame");
  FrameFeatureExtractor ex(sample_rate, static_cast<int>(frame.size()));
  return ex.process(frame);
}

Matrix per_second_features(std::span<const float> window_samples,
                           double sample_rate) {
  const auto sr = static_cast<std::size_t>(sample_rate);
  if (window_samples.size() != 5 * sr) {
    throw std::invalid_argument("per_second_features: expected 5 s of samples");
  }
  const int frame_len = static_cast<int>(sample_rate * 0.050);
  const int hop = static_cast<int>(sample_rate * 0.025);
  FrameFeatureExtractor ex(sample_rate, frame_len);

  Matrix out(5, kShortTermCount);
  for (std::size_t sec = 0; sec < 5; ++sec) {
    const std::size_t begin = sec * sr;
    const std::size_t end = (sec + 1) * sr;
    std::array<double, kShortTermCount> acc{};
    int frames = 0;
    for (std::size_t start = begin; start + frame_len <= end; start += hop) {
      const auto f = ex.process(window_samples.subspan(start, frame_len));
      for (int j = 0; j < kShortTermCount; ++j) acc[j] += f[j];
      ++frames;
    }
    for (int j = 0; j < kShortTermCount; ++j) {
      out(sec, j) = frames > 0 ? acc[j] / frames : 0.0;
    }
  }
  return out;
}

FeatureVector window_features(std::span<const float> window_samples,
                              double sample_rate, double window_start_s) {
  const Matrix m = per_second_features(window_samples, sample_rate);
  FeatureVector fv;
  fv.window_start_s = window_start_s;
  for (int j = 0; j < kShortTermCount; ++j) {
    std::array<double, 5> col;
    double mean = 0.0;
    for (int s = 0; s < 5; ++s) {
      col[s] = m(s, j);
      mean += col[s];
    }
    mean /= 5.0;
    std::sort(col.begin(), col.end());
    double var = 0.0;
    for (int s = 0; s < 5; ++s) var += (col[s] - mean) * (col[s] - mean);
    var /= 5.0;  // population

    fv.values[j] = mean;
    fv.values[kShortTermCount + j] = col[2];
    fv.values[2 * kShortTermCount + j] = std::sqrt(var);
  }
  return fv;
}

void write_feature_csv(std::span<const FeatureRow> rows, std::ostream& os) {
  os << "recording_id,start_s,label";
  for (int j = 0; j < kWindowFeatureCount; ++j) os << ",f" << j;
  os << '\n';
  char buf[40];
  for (const auto& r : rows) {
    os << r.recording_id << ',' << r.start_s << ',' << r.label;
    for (double v : r.features->values) {
      std::snprintf(buf, sizeof buf, ",%.9g", v);
      os << buf;
    }
    os << '\n';
  }
}

}  // namespace crydet::features
