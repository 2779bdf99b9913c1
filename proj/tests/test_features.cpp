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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "crydet/features.hpp"
#include "crydet/rng.hpp"
#include "oracles.hpp"

using namespace crydet;
using features::kShortTermCount;

namespace {

std::vector<float> sine(double freq, std::size_t n, double amp = 1.0,
                        int sr = 22050) {
  std::vector<float> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = static_cast<float>(amp * std::sin(2.0 * oracles::kPi * freq * i / sr));
  }
  return x;
}

}  // namespace

TEST_CASE("all-zero frame: energy 0, zcr 0, everything finite") {
  std::vector<float> zeros(1102, 0.0f);
  const auto f = features::short_term_features(zeros, 22050.0);
  CHECK(f[0] == 0.0);  // zcr
  CHECK(f[1] == 0.0);  // energy
  CHECK(f[3] == 0.0);  // centroid
  CHECK(f[7] == 0.0);  // rolloff
  for (double v : f) CHECK(std::isfinite(v));
}

TEST_CASE("square wave alternating every sample has zcr 1") {
  std::vector<float> x(1102);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = (i % 2 == 0) ? 1.0f : -1.0f;
  const auto f = features::short_term_features(x, 22050.0);
  CHECK(f[0] == 1.0);
}

TEST_CASE("450 Hz sine: centroid matches dft oracle, within 450 +/- 50") {
  const auto x = sine(450.0, 1102, 0.7);
  const auto f = features::short_term_features(x, 22050.0);
  const double oracle = oracles::naive_spectral_centroid(x, 22050.0);
  CHECK(f[3] == doctest::Approx(oracle).epsilon(1e-9));
  CHECK(f[3] > 400.0);
  CHECK(f[3] < 500.0);
}

TEST_CASE("amplitude scaling: invariant features stay, energy scales c^2") {
  Rng rng(5);
  std::vector<float> x(1102);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = static_cast<float>(0.2 * rng.normal() + 0.1 * std::sin(0.3 * i));
  }
  // scale by an exact power of two so float multiplication is lossless
  const float c = 4.0f;
  std::vector<float> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = c * x[i];

  const auto fa = features::short_term_features(x, 22050.0);
  const auto fb = features::short_term_features(y, 22050.0);

  // zcr, centroid, spread, spectral entropy, rolloff
  for (int idx : {0, 3, 4, 5, 7}) {
    CHECK(std::abs(fa[idx] - fb[idx]) <=
          1e-9 * std::max(1.0, std::abs(fa[idx])));
  }
  // chroma bins and deviation
  for (int idx = 21; idx < 34; ++idx) {
    CHECK(std::abs(fa[idx] - fb[idx]) <= 1e-9);
  }
  CHECK(fb[1] == doctest::Approx(16.0 * fa[1]).epsilon(1e-9));
}

TEST_CASE("per-second features: shape, constancy, energy ordering") {
  const std::size_t sr = 22050;
  std::vector<float> constant(5 * sr, 0.25f);
  const Matrix m = features::per_second_features(constant, sr);
  REQUIRE(m.rows == 5);
  REQUIRE(m.cols == static_cast<std::size_t>(kShortTermCount));
  for (std::size_t s = 1; s < 5; ++s) {
    for (std::size_t j = 0; j < m.cols; ++j) {
      CHECK(m(s, j) == doctest::Approx(m(0, j)).epsilon(1e-12));
    }
  }

  // silence in seconds 1-4, tone in second 5
  std::vector<float> mixed(5 * sr, 0.0f);
  const auto tone = sine(500.0, sr, 0.5);
  std::copy(tone.begin(), tone.end(), mixed.begin() + 4 * sr);
  const Matrix e = features::per_second_features(mixed, sr);
  for (int s = 0; s < 4; ++s) CHECK(e(4, 1) > e(s, 1));

  std::vector<float> wrong(4 * sr, 0.0f);
  CHECK_THROWS_AS(features::per_second_features(wrong, sr), std::invalid_argument);
}

TEST_CASE("window features: aggregation blocks") {
  const std::size_t sr = 22050;

  // constant signal: std block all zero, mean block equals median block
  std::vector<float> constant(5 * sr, 0.3f);
  const auto fv = features::window_features(constant, sr);
  for (int j = 0; j < kShortTermCount; ++j) {
    CHECK(fv.values[2 * kShortTermCount + j] ==
          doctest::Approx(0.0).epsilon(1e-9));
    CHECK(fv.values[j] ==
          doctest::Approx(fv.values[kShortTermCount + j]).epsilon(1e-9));
  }

  // per-second energies {0.01..0.05} -> mean 0.03, median 0.03, std 0.01*sqrt(2)
  std::vector<float> stepped(5 * sr);
  for (std::size_t s = 0; s < 5; ++s) {
    const float amp = std::sqrt(0.01f * (s + 1));
    std::fill(stepped.begin() + s * sr, stepped.begin() + (s + 1) * sr, amp);
  }
  const auto sv = features::window_features(stepped, sr);
  CHECK(sv.values[1] == doctest::Approx(0.03).epsilon(1e-4));
  CHECK(sv.values[kShortTermCount + 1] == doctest::Approx(0.03).epsilon(1e-4));
  CHECK(sv.values[2 * kShortTermCount + 1] ==
        doctest::Approx(0.01 * std::sqrt(2.0)).epsilon(1e-4));
}

TEST_CASE("dimension is always 102 and values stay finite") {
  Rng rng(17);
  const std::size_t sr = 22050;
  std::vector<float> x(5 * sr, 0.0f);
  // silence, bursts, an impulse, clipped noise
  for (std::size_t i = sr; i < 2 * sr; ++i) {
    x[i] = static_cast<float>(rng.normal());
  }
  x[3 * sr] = 1.0f;
  for (std::size_t i = 4 * sr; i < 5 * sr; ++i) {
    x[i] = static_cast<float>(std::clamp(3.0 * rng.normal(), -1.0, 1.0));
  }
  const auto fv = features::window_features(x, sr);
  CHECK(fv.values.size() == 102);
  for (double v : fv.values) CHECK(std::isfinite(v));
}

TEST_CASE("reordering the five seconds leaves mean/median/std blocks alone") {
  const std::size_t sr = 22050;
  Rng rng(23);
  std::vector<std::vector<float>> seconds(5, std::vector<float>(sr));
  for (auto& sec : seconds) {
    const double f0 = rng.uniform(200.0, 2000.0);
    const double amp = rng.uniform(0.05, 0.8);
    for (std::size_t i = 0; i < sr; ++i) {
      sec[i] =
          static_cast<float>(amp * std::sin(2.0 * oracles::kPi * f0 * i / sr));
    }
  }
  auto assemble = [&](const std::vector<int>& order) {
    std::vector<float> w;
    for (int s : order) w.insert(w.end(), seconds[s].begin(), seconds[s].end());
    return w;
  };
  const auto a = features::window_features(assemble({0, 1, 2, 3, 4}), sr);
  const auto b = features::window_features(assemble({4, 2, 0, 3, 1}), sr);
  for (int j = 0; j < 102; ++j) {
    // flux couples adjacent frames across second boundaries; skip its columns
    if (j % kShortTermCount == 6) continue;
    CHECK(a.values[j] == doctest::Approx(b.values[j]).epsilon(1e-6));
  }
}

TEST_CASE("feature csv export") {
  const std::size_t sr = 22050;
  std::vector<float> x(5 * sr, 0.1f);
  const auto fv = features::window_features(x, sr, 3.0);
  features::FeatureRow row{"rec1", 3.0, "crying", &fv};
  std::ostringstream os;
  features::write_feature_csv({&row, 1}, os);
  const std::string s = os.str();
  CHECK(s.rfind("recording_id,start_s,label,f0", 0) == 0);
  CHECK(s.find("rec1,3,crying,") != std::string::npos);
  CHECK(s.find("f101") != std::string::npos);
}
