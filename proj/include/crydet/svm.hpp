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

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "crydet/matrix.hpp"

namespace crydet::svm {

/// Per-dimension standardization fitted on training data. Zero-variance
/// dimensions get std 1 (pass-through).
struct Scaler {
  std::vector<double> mean;
  std::vector<double> stddev;

  void fit(const Matrix& x);
  void transform_inplace(std::span<double> v) const;
  std::vector<double> transform(std::span<const double> v) const;
};

struct SvmParams {
  double c = 1.0;
  double gamma = 0.0;  // <= 0: 1 / (d * var(standardized X))
  double tol = 1e-3;
  std::uint64_t seed = 0;
  // safety valve; the SMO loop normally exits on KKT satisfaction
  std::size_t max_iterations = 10'000'000;
};

/// RBF-kernel binary SVM. Labels are +1 (crying) / -1 (not_crying); a
/// decision value of exactly 0 resolves to -1.
class SvmModel {
 public:
  struct Prediction {
    int label;        // +1 / -1
    double decision;  // sum_i alpha_i y_i K(sv_i, x) + b
  };

  /// SMO on the dual with seeded heuristic pair selection; runs until every
  /// KKT violation is below params.tol. Requires both classes present and
  /// finite features. An optional trace receives the dual objective after
  /// each successful update step (test hook; O(n^2) per call), and alphas_out
  /// receives the final per-point dual coefficients.
  static SvmModel fit(const Matrix& x, const std::vector<int>& y,
                      const SvmParams& params = {},
                      std::function<void(double)> objective_trace = nullptr,
                      std::vector<double>* alphas_out = nullptr);

  Prediction predict(std::span<const double> x) const;
  double decision_value(std::span<const double> x) const;

  std::size_t support_vector_count() const { return support_vectors_.rows; }
  std::size_t dimension() const { return scaler_.mean.size(); }
  double gamma() const { return gamma_; }
  double c() const { return c_; }
  double bias() const { return bias_; }
  const Scaler& scaler() const { return scaler_; }

  void save(const std::string& path) const;
  static SvmModel load(const std::string& path);

 private:
  Matrix support_vectors_;  // standardized, row per SV
  std::vector<double> alpha_y_;
  double bias_ = 0.0;
  double gamma_ = 0.0;
  double c_ = 1.0;
  Scaler scaler_;
};

/// deep(1000) || acoustic(102) -> 1102. Order is deep first.
std::vector<double> concat_dsf_af(std::span<const double> deep,
                                  std::span<const double> acoustic);

inline constexpr int kDeepFeatureDim = 1000;
inline constexpr int kAcousticFeatureDim = 102;
inline constexpr int kEmbeddingDim = 128;

/// Reads a per-window embedding CSV (`key,e0..e127`) and returns rows aligned
/// with expected_keys. Throws DataError for malformed rows, wrong width, or
/// keys missing from the file (all offenders listed). Extra keys in the file
/// are ignored.
Matrix load_embeddings(const std::string& path,
                       const std::vector<std::string>& expected_keys);

}  // namespace crydet::svm
