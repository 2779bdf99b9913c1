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

#include "crydet/fft.hpp"

#include <cmath>
#include <stdexcept>

namespace crydet::dsp {

namespace {

std::size_t smallest_factor(std::size_t n) {
  if (n % 2 == 0) return 2;
  for (std::size_t p = 3; p * p <= n; p += 2) {
    if (n % p == 0) return p;
  }
  return n;
}

}  // namespace

Fft::Fft(std::size_t n) : n_(n) {
  if (n == 0) throw std::invalid_argument("Fft: zero length");
  twiddle_.resize(n);
  const double step = -2.0 * 3.14159265358979323846 / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) {
    twiddle_[j] = std::polar(1.0, step * static_cast<double>(j));
  }
}

void Fft::forward(std::span<const std::complex<double>> in,
                  std::span<std::complex<double>> out) const {
  if (in.size() != n_ || out.size() != n_) {
    throw std::invalid_argument("Fft::forward: length mismatch");
  }
  std::vector<std::complex<double>> scratch(n_);
  transform(in.data(), out.data(), n_, 1, 1, scratch.data());
}

std::vector<std::complex<double>> Fft::forward_real(
    std::span<const double> x) const {
  std::vector<std::complex<double>> in(n_);
  for (std::size_t i = 0; i < n_; ++i) in[i] = x[i];
  std::vector<std::complex<double>> out(n_);
  forward(in, out);
  return out;
}

std::vector<std::complex<double>> Fft::forward_real(
    std::span<const float> x) const {
  std::vector<std::complex<double>> in(n_);
  for (std::size_t i = 0; i < n_; ++i) in[i] = static_cast<double>(x[i]);
  std::vector<std::complex<double>> out(n_);
  forward(in, out);
  return out;
}

// tw_stride keeps the invariant tw_stride == n_ / n, so the local root of
// unity w_n^j is twiddle_[(j * tw_stride) % n_].
void Fft::transform(const std::complex<double>* in, std::complex<double>* out,
                    std::size_t n, std::size_t in_stride, std::size_t tw_stride,
                    std::complex<double>* scratch) const {
  if (n == 1) {
    out[0] = in[0];
    return;
  }
  const std::size_t p = smallest_factor(n);
  if (p == n) {
    // direct DFT for a prime length
    for (std::size_t k = 0; k < n; ++k) {
      std::complex<double> acc = in[0];
      for (std::size_t j = 1; j < n; ++j) {
        acc += in[j * in_stride] * twiddle_[(j * k * tw_stride) % n_];
      }
      out[k] = acc;
    }
    return;
  }

  const std::size_t m = n / p;
  for (std::size_t r = 0; r < p; ++r) {
    transform(in + r * in_stride, out + r * m, m, in_stride * p, tw_stride * p,
              scratch);
  }
  // out now holds p sub-transforms of length m; recombine.
  for (std::size_t q = 0; q < m; ++q) {
    for (std::size_t s = 0; s < p; ++s) {
      const std::size_t k = q + s * m;
      std::complex<double> acc = out[q];
      for (std::size_t r = 1; r < p; ++r) {
        acc += out[r * m + q] * twiddle_[(r * k * tw_stride) % n_];
      }
      scratch[k] = acc;
    }
  }
  for (std::size_t k = 0; k < n; ++k) out[k] = scratch[k];
}

}  // namespace crydet::dsp
