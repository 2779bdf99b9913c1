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

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace crydet::dsp {

/// Mixed-radix Cooley-Tukey forward DFT for arbitrary length n. Composite
/// lengths split over their prime factors; prime lengths fall back to the
/// direct O(p^2) transform, so cost is O(n * sum of prime factors). No
/// normalization: X[k] = sum_n x[n] exp(-2*pi*i*k*n/n).
///
/// A plan precomputes the twiddle table for one n. forward() is const and
/// allocation-local, so one plan may be shared across threads.
class Fft {
 public:
  explicit Fft(std::size_t n);

  std::size_t size() const { return n_; }

  /// Full complex transform. in and out must have length n.
  void forward(std::span<const std::complex<double>> in,
               std::span<std::complex<double>> out) const;

  /// Spectrum of a real signal, all n bins.
  std::vector<std::complex<double>> forward_real(std::span<const double> x) const;
  std::vector<std::complex<double>> forward_real(std::span<const float> x) const;

 private:
  void transform(const std::complex<double>* in, std::complex<double>* out,
                 std::size_t n, std::size_t in_stride, std::size_t tw_stride,
                 std::complex<double>* scratch) const;

  std::size_t n_;
  std::vector<std::complex<double>> twiddle_;  // exp(-2*pi*i*j/n), j in [0, n)
};

}  // namespace crydet::dsp
