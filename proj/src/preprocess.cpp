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

#include "crydet/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "crydet/dsp.hpp"
#include "crydet/rng.hpp"

namespace crydet::preprocess {

const char* to_string(WindowLabel label) {
  switch (label) {
    case WindowLabel::crying:
      return "crying";
    case WindowLabel::not_crying:
      return "not_crying";
    case WindowLabel::mixed:
      return "mixed";
    case WindowLabel::unlabeled:
      return "unlabeled";
  }
  return "?";
}

std::vector<float> WindowInstance::samples() const {
  const int sr = clip->sample_rate;
  const std::size_t begin = static_cast<std::size_t>(start_s) * sr;
  const std::size_t len = static_cast<std::size_t>(window_samples());
  std::vector<float> out(len, 0.0f);
  // zero-pad past the end of the clip if the run outlives the sample buffer
  const std::size_t avail =
      begin < clip->samples.size()
          ? std::min(len, clip->samples.size() - begin)
          : 0;
  std::copy_n(clip->samples.begin() + static_cast<std::ptrdiff_t>(begin), avail,
              out.begin());
  if (mask_len > 0) {
    const int end = std::min(mask_begin + mask_len, static_cast<int>(len));
    std::fill(out.begin() + mask_begin, out.begin() + end, 0.0f);
  }
  return out;
}

std::string WindowInstance::key() const {
  return clip->recording_id + ":" + std::to_string(start_s);
}

ActiveMask silence_filter(const audio::AudioClip& clip, double threshold_db) {
  const int sr = clip.sample_rate;
  const std::size_t seconds = clip.samples.size() / static_cast<std::size_t>(sr);
  if (seconds == 0) {
    throw std::invalid_argument("silence_filter: clip shorter than 1 s");
  }

  const dsp::StftConfig cfg;
  // full-scale reference: a unit sine's one-sided windowed power
  const auto window = dsp::hann_window(cfg.samples_per_segment);
  double wsum = 0.0;
  for (double w : window) wsum += w;
  const double ref_per_frame = wsum * wsum / 2.0;

  const int first_bin = static_cast<int>(std::ceil(
      kSilenceBandHz * cfg.samples_per_segment / static_cast<double>(sr)));
  const int nyquist_bin = cfg.freq_bins() - 1;

  ActiveMask mask(seconds, false);
  for (std::size_t s = 0; s < seconds; ++s) {
    const std::span<const float> sec(clip.samples.data() + s * sr,
                                     static_cast<std::size_t>(sr));
    const Matrix power = dsp::stft_power(sec, cfg);
    double band = 0.0;
    for (std::size_t t = 0; t < power.cols; ++t) {
      for (int k = first_bin; k <= nyquist_bin; ++k) {
        band += power(static_cast<std::size_t>(k), t) * (k == nyquist_bin ? 1.0 : 2.0);
      }
    }
    const double level = band / (ref_per_frame * static_cast<double>(power.cols));
    const bool active = level > 0.0 && 10.0 * std::log10(level) >= threshold_db;
    mask[s] = active;
  }
  return mask;
}

ActiveMask smooth_mask(ActiveMask mask) {
  const std::size_t n = mask.size();
  // pass 1: bridge inactive gaps <= 5 strictly between active runs
  std::size_t i = 0;
  while (i < n) {
    if (!mask[i]) {
      std::size_t j = i;
      while (j < n && !mask[j]) ++j;
      const bool interior = i > 0 && j < n;
      if (interior && j - i <= 5) {
        for (std::size_t k = i; k < j; ++k) mask[k] = true;
      }
      i = j;
    } else {
      ++i;
    }
  }
  // pass 2: drop active runs shorter than 5
  i = 0;
  while (i < n) {
    if (mask[i]) {
      std::size_t j = i;
      while (j < n && mask[j]) ++j;
      if (j - i < 5) {
        for (std::size_t k = i; k < j; ++k) mask[k] = false;
      }
      i = j;
    } else {
      ++i;
    }
  }
  return mask;
}

std::vector<WindowInstance> make_windows(
    std::shared_ptr<const audio::AudioClip> clip, const ActiveMask& mask,
    const std::vector<bool>* second_is_crying) {
  if (second_is_crying && second_is_crying->size() < mask.size()) {
    throw std::invalid_argument("make_windows: label track shorter than mask");
  }
  std::vector<WindowInstance> out;
  const std::size_t n = mask.size();
  std::size_t i = 0;
  while (i < n) {
    if (!mask[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && mask[j]) ++j;
    if (j - i >= kWindowSeconds) {
      for (std::size_t start = i; start + kWindowSeconds <= j; ++start) {
        WindowInstance w;
        w.clip = clip;
        w.start_s = static_cast<int>(start);
        if (second_is_crying) {
          int crying = 0;
          for (int s = 0; s < kWindowSeconds; ++s) {
            crying += (*second_is_crying)[start + s] ? 1 : 0;
          }
          w.label = crying == kWindowSeconds  ? WindowLabel::crying
                    : crying == 0             ? WindowLabel::not_crying
                                              : WindowLabel::mixed;
        }
        out.push_back(std::move(w));
      }
    }
    i = j;
  }
  return out;
}

std::vector<WindowInstance> drop_mixed(std::vector<WindowInstance> instances) {
  std::erase_if(instances, [](const WindowInstance& w) {
    return w.label == WindowLabel::mixed;
  });
  return instances;
}

WindowInstance time_mask_augment(const WindowInstance& window,
                                 std::uint64_t rng_seed) {
  if (window.label != WindowLabel::crying) {
    throw std::invalid_argument("time_mask_augment: window is not crying");
  }
  Rng rng(rng_seed);
  const int total = window.window_samples();
  const int max_len =
      static_cast<int>(kMaxMaskSeconds * window.clip->sample_rate);
  // duration uniform in (0, 0.44] s
  const double dur_s = kMaxMaskSeconds * (1.0 - rng.uniform());
  int len = static_cast<int>(std::lround(dur_s * window.clip->sample_rate));
  len = std::clamp(len, 1, max_len);
  const int start = static_cast<int>(rng.uniform_index(
      static_cast<std::size_t>(total - len + 1)));

  WindowInstance out = window;
  out.augmented = true;
  out.mask_begin = start;
  out.mask_len = len;
  return out;
}

std::vector<WindowInstance> balance(std::vector<WindowInstance> instances,
                                    std::uint64_t rng_seed) {
  std::vector<WindowInstance> positives, negatives;
  for (auto& w : instances) {
    if (w.label == WindowLabel::crying) {
      positives.push_back(std::move(w));
    } else if (w.label == WindowLabel::not_crying) {
      negatives.push_back(std::move(w));
    }
  }
  if (positives.empty() || negatives.empty()) {
    throw std::invalid_argument("balance: both classes must be present");
  }

  std::vector<WindowInstance> out;
  out.reserve(positives.size() * 2 + negatives.size());
  for (const auto& p : positives) out.push_back(p);
  for (const auto& p : positives) {
    // per-window seed keeps duplicates identical across folds sharing a seed
    out.push_back(time_mask_augment(p, hash_seed(rng_seed, "mask:" + p.key())));
  }

  const std::size_t target = positives.size() * 2;
  if (negatives.size() > target) {
    Rng rng = Rng(rng_seed).fork("subsample");
    // partial Fisher-Yates, then restore source order
    std::vector<std::size_t> idx(negatives.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = 0; i < target; ++i) {
      const std::size_t j = i + rng.uniform_index(idx.size() - i);
      std::swap(idx[i], idx[j]);
    }
    idx.resize(target);
    std::sort(idx.begin(), idx.end());
    for (std::size_t i : idx) out.push_back(std::move(negatives[i]));
  } else {
    for (auto& n : negatives) out.push_back(std::move(n));
  }
  return out;
}

void write_window_manifest(std::span<const WindowInstance> instances,
                           std::ostream& os) {
  os << "recording_id,start_s,label,augmented\n";
  for (const auto& w : instances) {
    os << w.clip->recording_id << ',' << w.start_s << ',' << to_string(w.label)
       << ',' << (w.augmented ? 1 : 0) << '\n';
  }
}

}  // namespace crydet::preprocess
