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

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace crydet {

/// FNV-1a over a string, folded into an existing seed. Used to derive
/// independent child streams (per participant, per window, ...) from one
/// run-level seed.
inline std::uint64_t hash_seed(std::uint64_t seed, std::string_view tag) {
  std::uint64_t h = 1469598103934665603ull ^ seed;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 1099511628211ull;
  }
  // final avalanche (splitmix64)
  h += 0x9e3779b97f4a7c15ull;
  h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ull;
  h = (h ^ (h >> 27)) * 0x94d049bb133111ebull;
  return h ^ (h >> 31);
}

/// Deterministic random stream. std::mt19937_64 output is fully specified by
/// the standard; the distributions are hand-rolled here because the standard
/// leaves std::*_distribution algorithms implementation-defined and every
/// randomized stage of the pipeline must be byte-reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed), seed_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Rejection-free modulo bias is negligible for
  /// the small n used here, but reject anyway to keep draws exact.
  std::size_t uniform_index(std::size_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return static_cast<std::size_t>(x % n);
  }

  /// Standard normal via Box-Muller.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  /// Child stream keyed by tag; independent of how much this stream has drawn.
  Rng fork(std::string_view tag) const { return Rng(hash_seed(seed_, tag)); }

  std::uint64_t seed() const { return seed_; }

 private:
  std::mt19937_64 gen_;
  std::uint64_t seed_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace crydet
