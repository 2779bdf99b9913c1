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

#include "crydet/svm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "crydet/error.hpp"
#include "crydet/rng.hpp"

#include "json.hpp"

namespace crydet::svm {

namespace {

double rbf(std::span<const double> a, std::span<const double> b, double gamma) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

// Precomputed kernel matrix. Training sets here are small enough that the
// full n x n matrix fits; an LRU row cache kicks in beyond the cap.
class KernelCache {
 public:
  KernelCache(const Matrix& z, double gamma, std::size_t full_cap = 4096)
      : z_(z), gamma_(gamma), n_(z.rows), full_(n_ <= full_cap) {
    if (full_) {
      matrix_.assign(n_ * n_, 0.0);
      for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = i; j < n_; ++j) {
          const double k = rbf(z_.row(i), z_.row(j), gamma_);
          matrix_[i * n_ + j] = k;
          matrix_[j * n_ + i] = k;
        }
      }
    }
  }

  std::span<const double> row(std::size_t i) {
    if (full_) return {matrix_.data() + i * n_, n_};
    auto it = rows_.find(i);
    if (it == rows_.end()) {
      if (order_.size() >= 256) {
        rows_.erase(order_.back());
        order_.pop_back();
      }
      std::vector<double> r(n_);
      for (std::size_t j = 0; j < n_; ++j) r[j] = rbf(z_.row(i), z_.row(j), gamma_);
      order_.insert(order_.begin(), i);
      it = rows_.emplace(i, std::move(r)).first;
    }
    return it->second;
  }

 private:
  const Matrix& z_;
  double gamma_;
  std::size_t n_;
  bool full_;
  std::vector<double> matrix_;
  std::unordered_map<std::size_t, std::vector<double>> rows_;
  std::vector<std::size_t> order_;
};

}  // namespace

void Scaler::fit(const Matrix& x) {
  const std::size_t n = x.rows, d = x.cols;
  mean.assign(d, 0.0);
  stddev.assign(d, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += x(i, j);
  }
  for (auto& m : mean) m /= static_cast<double>(n);
  std::vector<double> var(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double dv = x(i, j) - mean[j];
      var[j] += dv * dv;
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    var[j] /= static_cast<double>(n);
    stddev[j] = var[j] > 1e-24 ? std::sqrt(var[j]) : 1.0;
  }
}

void Scaler::transform_inplace(std::span<double> v) const {
  for (std::size_t j = 0; j < v.size(); ++j) {
    v[j] = (v[j] - mean[j]) / stddev[j];
  }
}

std::vector<double> Scaler::transform(std::span<const double> v) const {
  std::vector<double> out(v.begin(), v.end());
  transform_inplace(out);
  return out;
}

SvmModel SvmModel::fit(const Matrix& x, const std::vector<int>& y,
                       const SvmParams& params,
                       std::function<void(double)> objective_trace,
                       std::vector<double>* alphas_out) {
  const std::size_t n = x.rows, d = x.cols;
  if (n < 2 || y.size() != n) {
    throw std::invalid_argument("svm::fit: need >= 2 labeled rows");
  }
  bool has_pos = false, has_neg = false;
  for (int v : y) {
    if (v == 1) has_pos = true;
    else if (v == -1) has_neg = true;
    else throw std::invalid_argument("svm::fit: labels must be +1/-1");
  }
  if (!has_pos || !has_neg) {
    throw std::invalid_argument("svm::fit: both classes must be present");
  }
  for (double v : x.data) {
    if (!std::isfinite(v)) throw std::invalid_argument("svm::fit: non-finite feature");
  }

  SvmModel model;
  model.scaler_.fit(x);
  Matrix z = x;
  for (std::size_t i = 0; i < n; ++i) model.scaler_.transform_inplace(z.row(i));

  double gamma = params.gamma;
  if (gamma <= 0.0) {
    // 1 / (d * var) over all standardized entries
    double mean = 0.0;
    for (double v : z.data) mean += v;
    mean /= static_cast<double>(z.data.size());
    double var = 0.0;
    for (double v : z.data) var += (v - mean) * (v - mean);
    var /= static_cast<double>(z.data.size());
    gamma = var > 1e-12 ? 1.0 / (static_cast<double>(d) * var) : 1.0;
  }
  const double c = params.c;
  const double tol = params.tol;

  KernelCache kernel(z, gamma);
  std::vector<double> alpha(n, 0.0);
  std::vector<double> err(n);  // f(x_i) - y_i
  for (std::size_t i = 0; i < n; ++i) err[i] = -static_cast<double>(y[i]);
  double b = 0.0;

  Rng rng(hash_seed(params.seed, "smo"));
  std::size_t iterations = 0;

  auto dual_objective = [&]() {
    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i) obj += alpha[i];
    for (std::size_t i = 0; i < n; ++i) {
      if (alpha[i] == 0.0) continue;
      const auto ki = kernel.row(i);
      for (std::size_t j = 0; j < n; ++j) {
        if (alpha[j] == 0.0) continue;
        obj -= 0.5 * alpha[i] * alpha[j] * y[i] * y[j] * ki[j];
      }
    }
    return obj;
  };

  auto take_step = [&](std::size_t i1, std::size_t i2) -> bool {
    if (i1 == i2) return false;
    const double a1 = alpha[i1], a2 = alpha[i2];
    const double y1 = y[i1], y2 = y[i2];
    const double e1 = err[i1], e2 = err[i2];
    const double s = y1 * y2;
    double lo, hi;
    if (s < 0) {
      lo = std::max(0.0, a2 - a1);
      hi = std::min(c, c + a2 - a1);
    } else {
      lo = std::max(0.0, a1 + a2 - c);
      hi = std::min(c, a1 + a2);
    }
    if (lo >= hi) return false;

    const auto k1 = kernel.row(i1);
    const auto k2 = kernel.row(i2);
    const double k11 = k1[i1], k12 = k1[i2], k22 = k2[i2];
    const double eta = k11 + k22 - 2.0 * k12;

    double a2_new;
    if (eta > 0.0) {
      a2_new = a2 + y2 * (e1 - e2) / eta;
      a2_new = std::clamp(a2_new, lo, hi);
    } else {
      // degenerate curvature: evaluate the objective at both clip ends
      const double f1 = y1 * e1 - a1 * k11 - s * a2 * k12;
      const double f2 = y2 * e2 - a2 * k22 - s * a1 * k12;
      const double l1 = a1 + s * (a2 - lo);
      const double h1 = a1 + s * (a2 - hi);
      const double obj_lo = l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11 +
                            0.5 * lo * lo * k22 + s * lo * l1 * k12;
      const double obj_hi = h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11 +
                            0.5 * hi * hi * k22 + s * hi * h1 * k12;
      if (obj_lo < obj_hi - 1e-12) {
        a2_new = lo;
      } else if (obj_lo > obj_hi + 1e-12) {
        a2_new = hi;
      } else {
        return false;
      }
    }
    if (std::abs(a2_new - a2) < 1e-12 * (a2_new + a2 + 1e-12)) return false;

    double a1_new = a1 + s * (a2 - a2_new);
    // numerical cleanup at the box bounds
    if (a1_new < 1e-10) a1_new = 0.0;
    if (a1_new > c - 1e-10) a1_new = c;
    if (a2_new < 1e-10) a2_new = 0.0;
    if (a2_new > c - 1e-10) a2_new = c;

    const double b1 = e1 + y1 * (a1_new - a1) * k11 + y2 * (a2_new - a2) * k12 + b;
    const double b2 = e2 + y1 * (a1_new - a1) * k12 + y2 * (a2_new - a2) * k22 + b;
    double b_new;
    if (a1_new > 0.0 && a1_new < c) {
      b_new = b1;
    } else if (a2_new > 0.0 && a2_new < c) {
      b_new = b2;
    } else {
      b_new = 0.5 * (b1 + b2);
    }

    const double d1 = y1 * (a1_new - a1);
    const double d2 = y2 * (a2_new - a2);
    for (std::size_t i = 0; i < n; ++i) {
      err[i] += d1 * k1[i] + d2 * k2[i] - (b_new - b);
    }
    alpha[i1] = a1_new;
    alpha[i2] = a2_new;
    b = b_new;
    if (objective_trace) objective_trace(dual_objective());
    return true;
  };

  auto examine = [&](std::size_t i2) -> bool {
    const double y2 = y[i2], a2 = alpha[i2], e2 = err[i2];
    const double r2 = e2 * y2;
    if (!((r2 < -tol && a2 < c) || (r2 > tol && a2 > 0.0))) return false;

    // heuristic 1: maximize |e1 - e2| over non-bound points
    std::size_t best = n;
    double best_gap = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (alpha[i] > 0.0 && alpha[i] < c) {
        const double gap = std::abs(err[i] - e2);
        if (gap > best_gap) {
          best_gap = gap;
          best = i;
        }
      }
    }
    if (best < n && take_step(best, i2)) return true;

    // heuristic 2: non-bound points from a random start
    const std::size_t offset = rng.uniform_index(n);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = (k + offset) % n;
      if (alpha[i] > 0.0 && alpha[i] < c && take_step(i, i2)) return true;
    }
    // heuristic 3: anything from a random start
    const std::size_t offset2 = rng.uniform_index(n);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = (k + offset2) % n;
      if (take_step(i, i2)) return true;
    }
    return false;
  };

  bool examine_all = true;
  std::size_t num_changed = 0;
  while ((num_changed > 0 || examine_all) && iterations < params.max_iterations) {
    num_changed = 0;
    if (examine_all) {
      for (std::size_t i = 0; i < n; ++i) {
        num_changed += examine(i) ? 1 : 0;
        ++iterations;
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        if (alpha[i] > 0.0 && alpha[i] < c) {
          num_changed += examine(i) ? 1 : 0;
        }
        ++iterations;
      }
    }
    if (examine_all) {
      examine_all = false;
    } else if (num_changed == 0) {
      examine_all = true;
    }
  }

  if (alphas_out) *alphas_out = alpha;
  std::size_t sv_count = 0;
  for (double a : alpha) sv_count += a > 0.0 ? 1 : 0;
  model.support_vectors_ = Matrix(sv_count, d);
  model.alpha_y_.resize(sv_count);
  std::size_t row = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (alpha[i] > 0.0) {
      std::copy_n(z.row(i).data(), d, model.support_vectors_.row(row).data());
      model.alpha_y_[row] = alpha[i] * y[i];
      ++row;
    }
  }
  model.bias_ = b;
  model.gamma_ = gamma;
  model.c_ = c;
  return model;
}

double SvmModel::decision_value(std::span<const double> x) const {
  if (x.size() != dimension()) {
    throw std::invalid_argument("svm::predict: dimension mismatch");
  }
  const auto z = scaler_.transform(x);
  double f = bias_;
  for (std::size_t i = 0; i < support_vectors_.rows; ++i) {
    f += alpha_y_[i] * rbf(support_vectors_.row(i), z, gamma_);
  }
  return f;
}

SvmModel::Prediction SvmModel::predict(std::span<const double> x) const {
  const double f = decision_value(x);
  return {f > 0.0 ? 1 : -1, f};
}

namespace {
constexpr char kSvmMagic[] = "CRYSVM1\n";

void write_doubles(std::ofstream& os, std::span<const double> v) {
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(double)));
}
}  // namespace

void SvmModel::save(const std::string& path) const {
  nlohmann::json meta;
  meta["kind"] = "svm-rbf";
  meta["dim"] = dimension();
  meta["sv_count"] = support_vectors_.rows;
  meta["gamma"] = gamma_;
  meta["c"] = c_;
  meta["bias"] = bias_;
  meta["scaler_mean"] = scaler_.mean;
  meta["scaler_std"] = scaler_.stddev;
  const std::string header = meta.dump();

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("svm: cannot write " + path);
  os.write(kSvmMagic, 8);
  const std::uint64_t len = header.size();
  os.write(reinterpret_cast<const char*>(&len), 8);
  os.write(header.data(), static_cast<std::streamsize>(header.size()));
  write_doubles(os, support_vectors_.data);
  write_doubles(os, alpha_y_);
  if (!os) throw DataError("svm: write failed for " + path);
}

SvmModel SvmModel::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("svm: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kSvmMagic, 8) != 0) {
    throw DataError("svm: bad magic in " + path);
  }
  std::uint64_t len = 0;
  is.read(reinterpret_cast<char*>(&len), 8);
  std::string header(len, '\0');
  is.read(header.data(), static_cast<std::streamsize>(len));
  if (!is) throw DataError("svm: truncated header in " + path);

  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("svm: bad header in " + path + ": " + e.what());
  }

  SvmModel m;
  const std::size_t dim = meta.at("dim").get<std::size_t>();
  const std::size_t sv = meta.at("sv_count").get<std::size_t>();
  m.gamma_ = meta.at("gamma").get<double>();
  m.c_ = meta.at("c").get<double>();
  m.bias_ = meta.at("bias").get<double>();
  m.scaler_.mean = meta.at("scaler_mean").get<std::vector<double>>();
  m.scaler_.stddev = meta.at("scaler_std").get<std::vector<double>>();
  if (m.scaler_.mean.size() != dim || m.scaler_.stddev.size() != dim) {
    throw DataError("svm: inconsistent scaler in " + path);
  }
  m.support_vectors_ = Matrix(sv, dim);
  is.read(reinterpret_cast<char*>(m.support_vectors_.data.data()),
          static_cast<std::streamsize>(sv * dim * sizeof(double)));
  m.alpha_y_.resize(sv);
  is.read(reinterpret_cast<char*>(m.alpha_y_.data()),
          static_cast<std::streamsize>(sv * sizeof(double)));
  if (!is) throw DataError("svm: truncated blob in " + path);
  return m;
}

std::vector<double> concat_dsf_af(std::span<const double> deep,
                                  std::span<const double> acoustic) {
  if (deep.size() != kDeepFeatureDim || acoustic.size() != kAcousticFeatureDim) {
    throw std::invalid_argument("concat_dsf_af: wrong input dimensions");
  }
  std::vector<double> out;
  out.reserve(deep.size() + acoustic.size());
  out.insert(out.end(), deep.begin(), deep.end());
  out.insert(out.end(), acoustic.begin(), acoustic.end());
  return out;
}

Matrix load_embeddings(const std::string& path,
                       const std::vector<std::string>& expected_keys) {
  std::ifstream is(path);
  if (!is) throw DataError("embeddings: cannot open " + path);

  std::unordered_map<std::string, std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string key;
    if (!std::getline(ss, key, ',')) {
      throw DataError("embeddings: malformed line " + std::to_string(line_no) +
                      " in " + path);
    }
    std::vector<double> values;
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        values.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw DataError("embeddings: bad number at line " +
                        std::to_string(line_no) + " in " + path);
      }
    }
    if (values.size() != kEmbeddingDim) {
      throw DataError("embeddings: expected " + std::to_string(kEmbeddingDim) +
                      " values, got " + std::to_string(values.size()) +
                      " at line " + std::to_string(line_no) + " in " + path);
    }
    rows[key] = std::move(values);
  }

  std::vector<std::string> missing;
  for (const auto& key : expected_keys) {
    if (!rows.count(key)) missing.push_back(key);
  }
  if (!missing.empty()) {
    std::string msg = "embeddings: missing keys in " + path + ":";
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) {
      msg += " " + missing[i];
    }
    if (missing.size() > 20) {
      msg += " (+" + std::to_string(missing.size() - 20) + " more)";
    }
    throw DataError(msg);
  }

  Matrix out(expected_keys.size(), kEmbeddingDim);
  for (std::size_t i = 0; i < expected_keys.size(); ++i) {
    const auto& v = rows[expected_keys[i]];
    std::copy(v.begin(), v.end(), out.row(i).data());
  }
  return out;
}

}  // namespace crydet::svm
