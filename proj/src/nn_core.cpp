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

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "crydet/nn.hpp"

namespace crydet::nn {

namespace {

// C[m x n] += A[m x k] * B[k x n], all row-major
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double av = a[i * k + kk];
      if (av == 0.0) continue;
      const double* brow = b + kk * n;
      double* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[m x n] += A[m x k] * B[n x k]^T (dot products of contiguous rows)
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = b + j * k;
      double acc = 0.0;
      for (std::size_t kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
      c[i * n + j] += acc;
    }
  }
}

// C[m x n] += A[k x m]^T * B[k x n]
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c) {
  for (std::size_t kk = 0; kk < k; ++kk) {
    const double* brow = b + kk * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = a[kk * m + i];
      if (av == 0.0) continue;
      double* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

int conv_out_size(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

// x[C,H,W] -> col[C*k*k, OH*OW]
void im2col(const double* x, int c, int h, int w, int k, int stride, int pad,
            int oh, int ow, double* col) {
  for (int ch = 0; ch < c; ++ch) {
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        double* crow = col + ((static_cast<std::size_t>(ch) * k + ki) * k + kj) *
                                 (static_cast<std::size_t>(oh) * ow);
        for (int i = 0; i < oh; ++i) {
          const int ih = i * stride - pad + ki;
          double* dst = crow + static_cast<std::size_t>(i) * ow;
          if (ih < 0 || ih >= h) {
            std::fill(dst, dst + ow, 0.0);
            continue;
          }
          const double* src = x + (static_cast<std::size_t>(ch) * h + ih) * w;
          for (int j = 0; j < ow; ++j) {
            const int iw = j * stride - pad + kj;
            dst[j] = (iw >= 0 && iw < w) ? src[iw] : 0.0;
          }
        }
      }
    }
  }
}

// reverse of im2col, accumulating
void col2im(const double* col, int c, int h, int w, int k, int stride, int pad,
            int oh, int ow, double* x) {
  for (int ch = 0; ch < c; ++ch) {
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        const double* crow =
            col + ((static_cast<std::size_t>(ch) * k + ki) * k + kj) *
                      (static_cast<std::size_t>(oh) * ow);
        for (int i = 0; i < oh; ++i) {
          const int ih = i * stride - pad + ki;
          if (ih < 0 || ih >= h) continue;
          const double* src = crow + static_cast<std::size_t>(i) * ow;
          double* dst = x + (static_cast<std::size_t>(ch) * h + ih) * w;
          for (int j = 0; j < ow; ++j) {
            const int iw = j * stride - pad + kj;
            if (iw >= 0 && iw < w) dst[iw] += src[j];
          }
        }
      }
    }
  }
}

void he_uniform(Tensor& t, std::size_t fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (auto& v : t.values) v = rng.uniform(-bound, bound);
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> s, double fill) : shape(std::move(s)) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  values.assign(n, fill);
}

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(int in_channels, int out_channels, int kernel, int stride,
               int pad, Rng* init_rng)
    : in_c_(in_channels),
      out_c_(out_channels),
      k_(kernel),
      stride_(stride),
      pad_(pad),
      weight_(Tensor({static_cast<std::size_t>(out_channels),
                      static_cast<std::size_t>(in_channels),
                      static_cast<std::size_t>(kernel),
                      static_cast<std::size_t>(kernel)})),
      bias_(Tensor({static_cast<std::size_t>(out_channels)})) {
  if (init_rng) {
    he_uniform(weight_, static_cast<std::size_t>(in_c_) * k_ * k_, *init_rng);
  }
  weight_.alloc_grad();
  bias_.alloc_grad();
}

Tensor Conv2d::forward(const Tensor& x, bool train) {
  if (x.shape.size() != 4 || static_cast<int>(x.dim(1)) != in_c_) {
    throw std::invalid_argument("conv2d: bad input shape");
  }
  const int n = static_cast<int>(x.dim(0));
  const int h = static_cast<int>(x.dim(2));
  const int w = static_cast<int>(x.dim(3));
  const int oh = conv_out_size(h, k_, stride_, pad_);
  const int ow = conv_out_size(w, k_, stride_, pad_);
  if (oh <= 0 || ow <= 0) throw std::invalid_argument("conv2d: input too small");

  const std::size_t ckk = static_cast<std::size_t>(in_c_) * k_ * k_;
  const std::size_t spatial = static_cast<std::size_t>(oh) * ow;

  Tensor out({static_cast<std::size_t>(n), static_cast<std::size_t>(out_c_),
              static_cast<std::size_t>(oh), static_cast<std::size_t>(ow)});
  std::vector<double> col(ckk * spatial);
  const std::size_t in_stride = static_cast<std::size_t>(in_c_) * h * w;
  const std::size_t out_stride = static_cast<std::size_t>(out_c_) * spatial;

  for (int s = 0; s < n; ++s) {
    im2col(x.values.data() + s * in_stride, in_c_, h, w, k_, stride_, pad_, oh,
           ow, col.data());
    double* o = out.values.data() + s * out_stride;
    for (int oc = 0; oc < out_c_; ++oc) {
      std::fill(o + oc * spatial, o + (oc + 1) * spatial, bias_.values[oc]);
    }
    gemm_nn(out_c_, spatial, ckk, weight_.values.data(), col.data(), o);
  }

  if (train) cached_input_ = x;
  return out;
}

Tensor Conv2d::backward(const Tensor& grad_out) {
  const Tensor& x = cached_input_;
  const int n = static_cast<int>(x.dim(0));
  const int h = static_cast<int>(x.dim(2));
  const int w = static_cast<int>(x.dim(3));
  const int oh = static_cast<int>(grad_out.dim(2));
  const int ow = static_cast<int>(grad_out.dim(3));
  const std::size_t ckk = static_cast<std::size_t>(in_c_) * k_ * k_;
  const std::size_t spatial = static_cast<std::size_t>(oh) * ow;
  const std::size_t in_stride = static_cast<std::size_t>(in_c_) * h * w;
  const std::size_t out_stride = static_cast<std::size_t>(out_c_) * spatial;

  Tensor grad_in(x.shape);
  std::vector<double> col(ckk * spatial);
  std::vector<double> dcol(ckk * spatial);

  for (int s = 0; s < n; ++s) {
    const double* g = grad_out.values.data() + s * out_stride;
    im2col(x.values.data() + s * in_stride, in_c_, h, w, k_, stride_, pad_, oh,
           ow, col.data());
    // dW += g . col^T ; db += row sums of g
    gemm_nt(out_c_, ckk, spatial, g, col.data(), weight_.grad.data());
    for (int oc = 0; oc < out_c_; ++oc) {
      double acc = 0.0;
      const double* row = g + oc * spatial;
      for (std::size_t j = 0; j < spatial; ++j) acc += row[j];
      bias_.grad[oc] += acc;
    }
    // dcol = W^T . g ; dX = col2im(dcol)
    std::fill(dcol.begin(), dcol.end(), 0.0);
    gemm_tn(ckk, spatial, out_c_, weight_.values.data(), g, dcol.data());
    col2im(dcol.data(), in_c_, h, w, k_, stride_, pad_, oh, ow,
           grad_in.values.data() + s * in_stride);
  }
  return grad_in;
}

// ---------------------------------------------------------------- BatchNorm

BatchNorm::BatchNorm(int channels)
    : channels_(channels),
      gamma_(Tensor({static_cast<std::size_t>(channels)}, 1.0)),
      beta_(Tensor({static_cast<std::size_t>(channels)}, 0.0)),
      running_mean_(Tensor({static_cast<std::size_t>(channels)}, 0.0)),
      running_var_(Tensor({static_cast<std::size_t>(channels)}, 1.0)) {
  gamma_.alloc_grad();
  beta_.alloc_grad();
}

Tensor BatchNorm::forward(const Tensor& x, bool train) {
  if (x.shape.size() != 2 && x.shape.size() != 4) {
    throw std::invalid_argument("batchnorm: expected [N,C] or [N,C,H,W]");
  }
  if (static_cast<int>(x.dim(1)) != channels_) {
    throw std::invalid_argument("batchnorm: channel mismatch");
  }
  const std::size_t n = x.dim(0);
  const std::size_t spatial = x.shape.size() == 4 ? x.dim(2) * x.dim(3) : 1;
  const std::size_t c = static_cast<std::size_t>(channels_);
  const std::size_t per_channel = n * spatial;

  Tensor out(x.shape);

  auto index = [&](std::size_t s, std::size_t ch, std::size_t sp) {
    return (s * c + ch) * spatial + sp;
  };

  if (train) {
    cached_shape_ = x.shape;
    cached_xhat_ = Tensor(x.shape);
    cached_invstd_.assign(c, 0.0);
    for (std::size_t ch = 0; ch < c; ++ch) {
      double mean = 0.0;
      for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t sp = 0; sp < spatial; ++sp) {
          mean += x.values[index(s, ch, sp)];
        }
      }
      mean /= static_cast<double>(per_channel);
      double var = 0.0;
      for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t sp = 0; sp < spatial; ++sp) {
          const double d = x.values[index(s, ch, sp)] - mean;
          var += d * d;
        }
      }
      var /= static_cast<double>(per_channel);

      const double invstd = 1.0 / std::sqrt(var + kEpsilon);
      cached_invstd_[ch] = invstd;
      running_mean_.values[ch] =
          kMomentum * running_mean_.values[ch] + (1.0 - kMomentum) * mean;
      running_var_.values[ch] =
          kMomentum * running_var_.values[ch] + (1.0 - kMomentum) * var;

      const double g = gamma_.values[ch], b = beta_.values[ch];
      for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t sp = 0; sp < spatial; ++sp) {
          const std::size_t i = index(s, ch, sp);
          const double xh = (x.values[i] - mean) * invstd;
          cached_xhat_.values[i] = xh;
          out.values[i] = g * xh + b;
        }
      }
    }
  } else {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double mean = running_mean_.values[ch];
      const double invstd = 1.0 / std::sqrt(running_var_.values[ch] + kEpsilon);
      const double g = gamma_.values[ch], b = beta_.values[ch];
      for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t sp = 0; sp < spatial; ++sp) {
          const std::size_t i = index(s, ch, sp);
          out.values[i] = g * (x.values[i] - mean) * invstd + b;
        }
      }
    }
  }
  return out;
}

Tensor BatchNorm::backward(const Tensor& grad_out) {
  const std::size_t n = cached_shape_[0];
  const std::size_t spatial =
      cached_shape_.size() == 4 ? cached_shape_[2] * cached_shape_[3] : 1;
  const std::size_t c = static_cast<std::size_t>(channels_);
  const double m = static_cast<double>(n * spatial);

  Tensor grad_in(cached_shape_);
  auto index = [&](std::size_t s, std::size_t ch, std::size_t sp) {
    return (s * c + ch) * spatial + sp;
  };

  for (std::size_t ch = 0; ch < c; ++ch) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t sp = 0; sp < spatial; ++sp) {
        const std::size_t i = index(s, ch, sp);
        sum_dy += grad_out.values[i];
        sum_dy_xhat += grad_out.values[i] * cached_xhat_.values[i];
      }
    }
    gamma_.grad[ch] += sum_dy_xhat;
    beta_.grad[ch] += sum_dy;

    const double g = gamma_.values[ch];
    const double invstd = cached_invstd_[ch];
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t sp = 0; sp < spatial; ++sp) {
        const std::size_t i = index(s, ch, sp);
        grad_in.values[i] =
            g * invstd / m *
            (m * grad_out.values[i] - sum_dy -
             cached_xhat_.values[i] * sum_dy_xhat);
      }
    }
  }
  return grad_in;
}

// ---------------------------------------------------------------- ReLU

Tensor ReLU::forward(const Tensor& x, bool train) {
  Tensor out(x.shape);
  if (train) {
    cached_shape_ = x.shape;
    cached_mask_.assign(x.size(), false);
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    const bool pos = x.values[i] > 0.0;
    out.values[i] = pos ? x.values[i] : 0.0;
    if (train && pos) cached_mask_[i] = true;
  }
  return out;
}

Tensor ReLU::backward(const Tensor& grad_out) {
  Tensor grad_in(cached_shape_);
  for (std::size_t i = 0; i < grad_out.size(); ++i) {
    grad_in.values[i] = cached_mask_[i] ? grad_out.values[i] : 0.0;
  }
  return grad_in;
}

// ---------------------------------------------------------------- MaxPool2d

MaxPool2d::MaxPool2d(int kernel, int stride) : k_(kernel), stride_(stride) {}

Tensor MaxPool2d::forward(const Tensor& x, bool train) {
  if (x.shape.size() != 4) throw std::invalid_argument("maxpool: expected NCHW");
  const int n = static_cast<int>(x.dim(0));
  const int c = static_cast<int>(x.dim(1));
  const int h = static_cast<int>(x.dim(2));
  const int w = static_cast<int>(x.dim(3));
  const int oh = (h - k_) / stride_ + 1;
  const int ow = (w - k_) / stride_ + 1;
  if (oh <= 0 || ow <= 0) throw std::invalid_argument("maxpool: input too small");

  Tensor out({static_cast<std::size_t>(n), static_cast<std::size_t>(c),
              static_cast<std::size_t>(oh), static_cast<std::size_t>(ow)});
  if (train) {
    cached_in_shape_ = x.shape;
    cached_argmax_.assign(out.size(), 0);
  }

  std::size_t oi = 0;
  for (int s = 0; s < n; ++s) {
    for (int ch = 0; ch < c; ++ch) {
      const double* plane =
          x.values.data() + (static_cast<std::size_t>(s) * c + ch) * h * w;
      const std::size_t plane_off = (static_cast<std::size_t>(s) * c + ch) *
                                    static_cast<std::size_t>(h) * w;
      for (int i = 0; i < oh; ++i) {
        for (int j = 0; j < ow; ++j, ++oi) {
          const int hi = i * stride_, wj = j * stride_;
          double best = plane[hi * w + wj];
          int best_idx = hi * w + wj;
          for (int ki = 0; ki < k_; ++ki) {
            for (int kj = 0; kj < k_; ++kj) {
              const int idx = (hi + ki) * w + (wj + kj);
              if (plane[idx] > best) {
                best = plane[idx];
                best_idx = idx;
              }
            }
          }
          out.values[oi] = best;
          if (train) cached_argmax_[oi] = plane_off + best_idx;
        }
      }
    }
  }
  return out;
}

Tensor MaxPool2d::backward(const Tensor& grad_out) {
  Tensor grad_in(cached_in_shape_);
  for (std::size_t i = 0; i < grad_out.size(); ++i) {
    grad_in.values[cached_argmax_[i]] += grad_out.values[i];
  }
  return grad_in;
}

// ---------------------------------------------------------------- Flatten

Tensor Flatten::forward(const Tensor& x, bool train) {
  if (train) cached_in_shape_ = x.shape;
  Tensor out;
  out.shape = {x.dim(0), x.size() / x.dim(0)};
  out.values = x.values;
  return out;
}

Tensor Flatten::backward(const Tensor& grad_out) {
  Tensor grad_in;
  grad_in.shape = cached_in_shape_;
  grad_in.values = grad_out.values;
  return grad_in;
}

// ---------------------------------------------------------------- Linear

Linear::Linear(int in_features, int out_features, Rng* init_rng)
    : in_f_(in_features),
      out_f_(out_features),
      weight_(Tensor({static_cast<std::size_t>(out_features),
                      static_cast<std::size_t>(in_features)})),
      bias_(Tensor({static_cast<std::size_t>(out_features)})) {
  if (init_rng) he_uniform(weight_, static_cast<std::size_t>(in_f_), *init_rng);
  weight_.alloc_grad();
  bias_.alloc_grad();
}

Tensor Linear::forward(const Tensor& x, bool train) {
  if (x.shape.size() != 2 || static_cast<int>(x.dim(1)) != in_f_) {
    throw std::invalid_argument("linear: bad input shape");
  }
  const std::size_t n = x.dim(0);
  Tensor out({n, static_cast<std::size_t>(out_f_)});
  for (std::size_t s = 0; s < n; ++s) {
    std::copy(bias_.values.begin(), bias_.values.end(),
              out.values.begin() + s * out_f_);
  }
  gemm_nt(n, out_f_, in_f_, x.values.data(), weight_.values.data(),
          out.values.data());
  if (train) cached_input_ = x;
  return out;
}

Tensor Linear::backward(const Tensor& grad_out) {
  const Tensor& x = cached_input_;
  const std::size_t n = x.dim(0);

  // dW += g^T . x ; db += column sums ; dX = g . W
  gemm_tn(out_f_, in_f_, n, grad_out.values.data(), x.values.data(),
          weight_.grad.data());
  for (std::size_t s = 0; s < n; ++s) {
    for (int o = 0; o < out_f_; ++o) {
      bias_.grad[o] += grad_out.values[s * out_f_ + o];
    }
  }
  Tensor grad_in(x.shape);
  gemm_nn(n, in_f_, out_f_, grad_out.values.data(), weight_.values.data(),
          grad_in.values.data());
  return grad_in;
}

// ---------------------------------------------------------------- Sequential

Tensor Sequential::forward(const Tensor& x, bool train, int stop_after) {
  Tensor cur = x;
  const std::size_t stop =
      stop_after < 0 ? layers_.size() : static_cast<std::size_t>(stop_after) + 1;
  for (std::size_t i = 0; i < stop && i < layers_.size(); ++i) {
    cur = layers_[i]->forward(cur, train);
  }
  return cur;
}

void Sequential::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    g = layers_[i]->backward(g);
  }
}

std::vector<Tensor*> Sequential::parameters() {
  std::vector<Tensor*> out;
  for (auto& l : layers_) {
    for (Tensor* p : l->parameters()) out.push_back(p);
  }
  return out;
}

std::vector<Tensor*> Sequential::buffers() {
  std::vector<Tensor*> out;
  for (auto& l : layers_) {
    for (Tensor* p : l->buffers()) out.push_back(p);
  }
  return out;
}

// ---------------------------------------------------------------- loss

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (auto& v : out) v /= sum;
  return out;
}

double softmax_cross_entropy(const Tensor& logits, std::span<const int> labels,
                             Tensor* grad_out) {
  if (logits.shape.size() != 2 || logits.dim(0) != labels.size()) {
    throw std::invalid_argument("softmax_cross_entropy: shape mismatch");
  }
  const std::size_t n = logits.dim(0);
  const std::size_t classes = logits.dim(1);
  if (grad_out) *grad_out = Tensor(logits.shape);

  double loss = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    const auto probs = softmax(
        std::span<const double>(logits.values.data() + s * classes, classes));
    const int label = labels[s];
    loss -= std::log(std::max(probs[label], 1e-300));
    if (grad_out) {
      for (std::size_t j = 0; j < classes; ++j) {
        grad_out->values[s * classes + j] =
            (probs[j] - (static_cast<int>(j) == label ? 1.0 : 0.0)) /
            static_cast<double>(n);
      }
    }
  }
  return loss / static_cast<double>(n);
}

// ---------------------------------------------------------------- Adam

Adam::Adam(std::vector<Tensor*> params, double lr, double beta1, double beta2,
           double epsilon)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2),
      eps_(epsilon) {
  m_.resize(params_.size());
  v_.resize(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    m_[i].assign(params_[i]->size(), 0.0);
    v_[i].assign(params_[i]->size(), 0.0);
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t p = 0; p < params_.size(); ++p) {
    Tensor& t = *params_[p];
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double g = t.grad[i];
      m_[p][i] = beta1_ * m_[p][i] + (1.0 - beta1_) * g;
      v_[p][i] = beta2_ * v_[p][i] + (1.0 - beta2_) * g * g;
      const double mhat = m_[p][i] / bc1;
      const double vhat = v_[p][i] / bc2;
      t.values[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

void Adam::zero_grad() {
  for (Tensor* p : params_) p->zero_grad();
}

}  // namespace crydet::nn
