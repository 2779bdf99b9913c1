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
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "crydet/dsp.hpp"
#include "crydet/matrix.hpp"
#include "crydet/rng.hpp"

namespace crydet::nn {

/// Dense 64-bit tensor with an optional same-shape gradient buffer.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;
  std::vector<double> grad;  // empty unless the owner allocates it

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s, double fill = 0.0);

  std::size_t size() const { return values.size(); }
  std::size_t dim(std::size_t i) const { return shape[i]; }

  void alloc_grad() { grad.assign(values.size(), 0.0); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

/// Backprop layer. forward(train=true) caches whatever backward needs;
/// forward(train=false) touches no member state beyond reads, so eval-mode
/// inference on a fitted model is safe to share across threads as long as
/// calls do not interleave with training.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual std::string kind() const = 0;
  virtual Tensor forward(const Tensor& x, bool train) = 0;
  virtual Tensor backward(const Tensor& grad_out) = 0;
  virtual std::vector<Tensor*> parameters() { return {}; }
  /// Non-trained state carried with the model (batch-norm running stats).
  virtual std::vector<Tensor*> buffers() { return {}; }
};

class Conv2d : public Layer {
 public:
  Conv2d(int in_channels, int out_channels, int kernel, int stride, int pad,
         Rng* init_rng = nullptr);
  std::string kind() const override { return "conv2d"; }
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Tensor*> parameters() override { return {&weight_, &bias_}; }

  int in_channels() const { return in_c_; }
  int out_channels() const { return out_c_; }
  int kernel() const { return k_; }
  int stride() const { return stride_; }
  int pad() const { return pad_; }

 private:
  int in_c_, out_c_, k_, stride_, pad_;
  Tensor weight_;  // [out_c, in_c, k, k]
  Tensor bias_;    // [out_c]
  Tensor cached_input_;
};

/// Per-channel batch normalization over dim 1 of [N,C,H,W] or [N,C] input.
/// Batch statistics (biased variance) in training; running statistics
/// (momentum 0.9) at eval.
class BatchNorm : public Layer {
 public:
  explicit BatchNorm(int channels);
  std::string kind() const override { return "batchnorm"; }
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Tensor*> parameters() override { return {&gamma_, &beta_}; }
  std::vector<Tensor*> buffers() override {
    return {&running_mean_, &running_var_};
  }

  int channels() const { return channels_; }

  static constexpr double kMomentum = 0.9;
  static constexpr double kEpsilon = 1e-5;

 private:
  int channels_;
  Tensor gamma_, beta_;
  Tensor running_mean_, running_var_;
  // training-pass cache
  Tensor cached_xhat_;
  std::vector<double> cached_invstd_;
  std::vector<std::size_t> cached_shape_;
};

class ReLU : public Layer {
 public:
  std::string kind() const override { return "relu"; }
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  std::vector<bool> cached_mask_;
  std::vector<std::size_t> cached_shape_;
};

class MaxPool2d : public Layer {
 public:
  MaxPool2d(int kernel, int stride);
  std::string kind() const override { return "maxpool"; }
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& grad_out) override;

  int kernel() const { return k_; }
  int stride() const { return stride_; }

 private:
  int k_, stride_;
  std::vector<std::size_t> cached_argmax_;
  std::vector<std::size_t> cached_in_shape_;
};

class Flatten : public Layer {
 public:
  std::string kind() const override { return "flatten"; }
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  std::vector<std::size_t> cached_in_shape_;
};

class Linear : public Layer {
 public:
  Linear(int in_features, int out_features, Rng* init_rng = nullptr);
  std::string kind() const override { return "linear"; }
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Tensor*> parameters() override { return {&weight_, &bias_}; }

  int in_features() const { return in_f_; }
  int out_features() const { return out_f_; }

 private:
  int in_f_, out_f_;
  Tensor weight_;  // [out, in]
  Tensor bias_;
  Tensor cached_input_;
};

/// Ordered layer stack.
class Sequential {
 public:
  Sequential() = default;
  Sequential(Sequential&&) noexcept = default;
  Sequential& operator=(Sequential&&) noexcept = default;

  void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }
  std::size_t size() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_[i]; }
  const Layer& layer(std::size_t i) const { return *layers_[i]; }

  /// Runs layers [0, stop_after]; stop_after < 0 runs all.
  Tensor forward(const Tensor& x, bool train, int stop_after = -1);
  void backward(const Tensor& grad_out);
  std::vector<Tensor*> parameters();
  std::vector<Tensor*> buffers();

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

/// Mean softmax cross-entropy over a [N, classes] logit tensor; labels are
/// class indices. Returns loss and fills grad (d loss / d logits).
double softmax_cross_entropy(const Tensor& logits, std::span<const int> labels,
                             Tensor* grad_out);

/// Row-wise softmax probabilities.
std::vector<double> softmax(std::span<const double> logits);

/// Adam with bias correction.
class Adam {
 public:
  Adam(std::vector<Tensor*> params, double lr, double beta1, double beta2,
       double epsilon);
  void step();
  void zero_grad();

 private:
  std::vector<Tensor*> params_;
  std::vector<std::vector<double>> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

struct TrainConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int epochs = 50;
  int batch_size = 128;
  std::uint64_t rng_seed = 0;
};

enum class Preset { full, desk };

const char* to_string(Preset p);
Preset preset_from_string(const std::string& s);

/// Stacks mel images into a [N, 1, 225, 225] tensor.
Tensor images_to_tensor(std::span<const dsp::MelImage* const> images);

/// Modified AlexNet over 225x225x1 log-mel images, two output classes
/// (index 1 = crying), batch norm after every conv and fully-connected layer
/// except the output, and a 1000-wide last hidden layer whose post-BN+ReLU
/// activations serve as deep spectrum features. The desk preset shrinks conv
/// and first-FC widths 8x for small-corpus runs; the 1000-d feature layer is
/// part of the model contract and keeps its width.
class CnnModel {
 public:
  struct Prediction {
    bool crying;
    double prob_crying;
    double prob_not_crying;
  };

  static CnnModel modified_alexnet(Preset preset, std::uint64_t seed);

  /// Adam-trained softmax cross-entropy; data reshuffled each epoch under the
  /// config seed. Returns mean loss per epoch. Leaves the model in eval mode
  /// with weights passed through float32 quantization, so in-memory behavior
  /// matches a saved-and-reloaded model exactly.
  std::vector<double> train(std::span<const dsp::MelImage* const> images,
                            std::span<const int> labels,
                            const TrainConfig& cfg);

  Prediction predict(const dsp::MelImage& image);
  std::vector<Prediction> predict_batch(
      std::span<const dsp::MelImage* const> images);

  /// Activations of the 1000-wide hidden layer (post BN+ReLU), all >= 0.
  std::vector<double> deep_features(const dsp::MelImage& image);
  Matrix deep_features_batch(std::span<const dsp::MelImage* const> images);

  bool eval_mode() const { return eval_; }
  void set_eval(bool eval) { eval_ = eval; }

  /// Rounds every parameter and buffer through float32.
  void quantize_weights();

  void save(const std::string& path) const;
  static CnnModel load(const std::string& path);

  Sequential& net() { return net_; }
  Preset preset() const { return preset_; }
  std::uint64_t seed() const { return seed_; }
  int deep_feature_tap() const { return deep_tap_; }

 private:
  Sequential net_;
  int deep_tap_ = -1;  // run layers [0, deep_tap_] for deep features
  bool eval_ = false;
  Preset preset_ = Preset::full;
  std::uint64_t seed_ = 0;

  Tensor forward_eval_checked(std::span<const dsp::MelImage* const> images,
                              int stop_after);
};

}  // namespace crydet::nn
