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

#include <cstring>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include "crydet/error.hpp"
#include "crydet/nn.hpp"

#include "json.hpp"

namespace crydet::nn {

namespace {

struct AlexNetWidths {
  int conv1, conv2, conv3, conv4, conv5, fc6;
  // fc7 is the 1000-d deep-feature layer in every preset
};

AlexNetWidths widths_for(Preset p) {
  switch (p) {
    case Preset::full:
      return {96, 256, 384, 384, 256, 4096};
    case Preset::desk:
      return {12, 32, 48, 48, 32, 512};
  }
  throw std::invalid_argument("unknown preset");
}

constexpr int kFc7 = 1000;
constexpr char kCnnMagic[] = "CRYCNN1\n";

}  // namespace

const char* to_string(Preset p) {
  return p == Preset::full ? "full" : "desk";
}

Preset preset_from_string(const std::string& s) {
  if (s == "full") return Preset::full;
  if (s == "desk") return Preset::desk;
  throw std::invalid_argument("unknown preset: " + s);
}

Tensor images_to_tensor(std::span<const dsp::MelImage* const> images) {
  const std::size_t n = images.size();
  const std::size_t side = dsp::kMelImageSize;
  Tensor t({n, 1, side, side});
  for (std::size_t i = 0; i < n; ++i) {
    const auto& v = images[i]->values;
    if (v.size() != side * side) {
      throw std::invalid_argument("images_to_tensor: bad image size");
    }
    double* dst = t.values.data() + i * side * side;
    for (std::size_t j = 0; j < v.size(); ++j) dst[j] = v[j];
  }
  return t;
}

CnnModel CnnModel::modified_alexnet(Preset preset, std::uint64_t seed) {
  const auto w = widths_for(preset);
  Rng rng(hash_seed(seed, "init"));

  CnnModel m;
  m.preset_ = preset;
  m.seed_ = seed;
  auto& net = m.net_;
  // 225 -> 54 -> 26 -> 26 -> 12 -> 12 -> 12 -> 12 -> 5
  net.add(std::make_unique<Conv2d>(1, w.conv1, 11, 4, 0, &rng));
  net.add(std::make_unique<BatchNorm>(w.conv1));
  net.add(std::make_unique<ReLU>());
  net.add(std::make_unique<MaxPool2d>(3, 2));
  net.add(std::make_unique<Conv2d>(w.conv1, w.conv2, 5, 1, 2, &rng));
  net.add(std::make_unique<BatchNorm>(w.conv2));
  net.add(std::make_unique<ReLU>());
  net.add(std::make_unique<MaxPool2d>(3, 2));
  net.add(std::make_unique<Conv2d>(w.conv2, w.conv3, 3, 1, 1, &rng));
  net.add(std::make_unique<BatchNorm>(w.conv3));
  net.add(std::make_unique<ReLU>());
  net.add(std::make_unique<Conv2d>(w.conv3, w.conv4, 3, 1, 1, &rng));
  net.add(std::make_unique<BatchNorm>(w.conv4));
  net.add(std::make_unique<ReLU>());
  net.add(std::make_unique<Conv2d>(w.conv4, w.conv5, 3, 1, 1, &rng));
  net.add(std::make_unique<BatchNorm>(w.conv5));
  net.add(std::make_unique<ReLU>());
  net.add(std::make_unique<MaxPool2d>(3, 2));
  net.add(std::make_unique<Flatten>());
  net.add(std::make_unique<Linear>(5 * 5 * w.conv5, w.fc6, &rng));
  net.add(std::make_unique<BatchNorm>(w.fc6));
  net.add(std::make_unique<ReLU>());
  net.add(std::make_unique<Linear>(w.fc6, kFc7, &rng));
  net.add(std::make_unique<BatchNorm>(kFc7));
  net.add(std::make_unique<ReLU>());
  m.deep_tap_ = static_cast<int>(net.size()) - 1;  // post BN+ReLU of fc7
  net.add(std::make_unique<Linear>(kFc7, 2, &rng));
  return m;
}

std::vector<double> CnnModel::train(
    std::span<const dsp::MelImage* const> images, std::span<const int> labels,
    const TrainConfig& cfg) {
  if (images.empty()) throw std::invalid_argument("cnn::train: empty dataset");
  if (images.size() != labels.size()) {
    throw std::invalid_argument("cnn::train: image/label count mismatch");
  }
  if (cfg.learning_rate <= 0 || cfg.epsilon <= 0 || cfg.epochs <= 0 ||
      cfg.batch_size <= 0 || cfg.beta1 <= 0 || cfg.beta1 >= 1 ||
      cfg.beta2 <= 0 || cfg.beta2 >= 1) {
    throw std::invalid_argument("cnn::train: bad config");
  }
  bool has0 = false, has1 = false;
  for (int l : labels) {
    if (l == 0) has0 = true;
    else if (l == 1) has1 = true;
    else throw std::invalid_argument("cnn::train: labels must be 0/1");
  }
  if (!has0 || !has1) {
    std::cerr << "cnn::train: warning: single-class dataset\n";
  }

  eval_ = false;
  Adam adam(net_.parameters(), cfg.learning_rate, cfg.beta1, cfg.beta2,
            cfg.epsilon);
  Rng rng(hash_seed(cfg.rng_seed, "shuffle"));

  const std::size_t n = images.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  std::vector<double> epoch_losses;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const std::size_t j = i + rng.uniform_index(n - i);
      std::swap(order[i], order[j]);
    }
    double loss_sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t begin = 0; begin < n; begin += cfg.batch_size) {
      const std::size_t end = std::min(n, begin + cfg.batch_size);
      const std::size_t bs = end - begin;
      if (bs < 2 && counted > 0) continue;  // degenerate batch-norm batch

      std::vector<const dsp::MelImage*> batch(bs);
      std::vector<int> y(bs);
      for (std::size_t i = 0; i < bs; ++i) {
        batch[i] = images[order[begin + i]];
        y[i] = labels[order[begin + i]];
      }
      const Tensor x = images_to_tensor(batch);
      const Tensor logits = net_.forward(x, /*train=*/true);
      Tensor grad;
      const double loss = softmax_cross_entropy(logits, y, &grad);
      adam.zero_grad();
      net_.backward(grad);
      adam.step();
      loss_sum += loss * static_cast<double>(bs);
      counted += bs;
    }
    epoch_losses.push_back(loss_sum / static_cast<double>(counted));
  }

  // fix eval behavior to the serialized float32 representation
  quantize_weights();
  eval_ = true;
  return epoch_losses;
}

Tensor CnnModel::forward_eval_checked(
    std::span<const dsp::MelImage* const> images, int stop_after) {
  if (!eval_) {
    throw std::logic_error("cnn: model is in train mode; finish training first");
  }
  const Tensor x = images_to_tensor(images);
  return net_.forward(x, /*train=*/false, stop_after);
}

CnnModel::Prediction CnnModel::predict(const dsp::MelImage& image) {
  const dsp::MelImage* p = &image;
  return predict_batch({&p, 1})[0];
}

std::vector<CnnModel::Prediction> CnnModel::predict_batch(
    std::span<const dsp::MelImage* const> images) {
  const Tensor logits = forward_eval_checked(images, -1);
  std::vector<Prediction> out(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto probs = softmax(
        std::span<const double>(logits.values.data() + i * 2, 2));
    // ties resolve to not_crying
    out[i] = {probs[1] > probs[0], probs[1], probs[0]};
  }
  return out;
}

std::vector<double> CnnModel::deep_features(const dsp::MelImage& image) {
  const dsp::MelImage* p = &image;
  const Matrix m = deep_features_batch({&p, 1});
  return {m.data.begin(), m.data.end()};
}

Matrix CnnModel::deep_features_batch(
    std::span<const dsp::MelImage* const> images) {
  const Tensor t = forward_eval_checked(images, deep_tap_);
  if (t.shape.size() != 2 || t.dim(1) != kFc7) {
    throw std::logic_error("cnn: unexpected deep feature shape");
  }
  Matrix out(images.size(), kFc7);
  out.data = t.values;
  return out;
}

void CnnModel::quantize_weights() {
  auto round_trip = [](Tensor* t) {
    for (auto& v : t->values) v = static_cast<double>(static_cast<float>(v));
  };
  for (Tensor* p : net_.parameters()) round_trip(p);
  for (Tensor* b : net_.buffers()) round_trip(b);
}

namespace {

nlohmann::json layer_descriptor(const Layer& l) {
  nlohmann::json d;
  d["kind"] = l.kind();
  if (const auto* c = dynamic_cast<const Conv2d*>(&l)) {
    d["in"] = c->in_channels();
    d["out"] = c->out_channels();
    d["k"] = c->kernel();
    d["stride"] = c->stride();
    d["pad"] = c->pad();
  } else if (const auto* b = dynamic_cast<const BatchNorm*>(&l)) {
    d["channels"] = b->channels();
  } else if (const auto* p = dynamic_cast<const MaxPool2d*>(&l)) {
    d["k"] = p->kernel();
    d["stride"] = p->stride();
  } else if (const auto* f = dynamic_cast<const Linear*>(&l)) {
    d["in"] = f->in_features();
    d["out"] = f->out_features();
  }
  return d;
}

std::unique_ptr<Layer> layer_from_descriptor(const nlohmann::json& d) {
  const std::string kind = d.at("kind").get<std::string>();
  if (kind == "conv2d") {
    return std::make_unique<Conv2d>(d.at("in").get<int>(), d.at("out").get<int>(),
                                    d.at("k").get<int>(),
                                    d.at("stride").get<int>(),
                                    d.at("pad").get<int>());
  }
  if (kind == "batchnorm") {
    return std::make_unique<BatchNorm>(d.at("channels").get<int>());
  }
  if (kind == "relu") return std::make_unique<ReLU>();
  if (kind == "maxpool") {
    return std::make_unique<MaxPool2d>(d.at("k").get<int>(),
                                       d.at("stride").get<int>());
  }
  if (kind == "flatten") return std::make_unique<Flatten>();
  if (kind == "linear") {
    return std::make_unique<Linear>(d.at("in").get<int>(), d.at("out").get<int>());
  }
  throw DataError("cnn: unknown layer kind in model file: " + kind);
}

}  // namespace

void CnnModel::save(const std::string& path) const {
  auto& self = const_cast<CnnModel&>(*this);

  nlohmann::json meta;
  meta["kind"] = "modified-alexnet";
  meta["preset"] = to_string(preset_);
  meta["seed"] = seed_;
  meta["deep_feature_tap"] = deep_tap_;
  meta["input"] = {1, dsp::kMelImageSize, dsp::kMelImageSize};

  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t i = 0; i < self.net_.size(); ++i) {
    layers.push_back(layer_descriptor(self.net_.layer(i)));
  }
  meta["layers"] = layers;

  // weight blob: per layer, parameters then buffers, in declaration order
  std::vector<float> blob;
  std::uint64_t offset = 0;
  nlohmann::json tensors = nlohmann::json::array();
  for (std::size_t i = 0; i < self.net_.size(); ++i) {
    auto dump = [&](Tensor* t, const char* role) {
      nlohmann::json td;
      td["layer"] = i;
      td["role"] = role;
      td["offset"] = offset;
      td["count"] = t->size();
      tensors.push_back(td);
      for (double v : t->values) blob.push_back(static_cast<float>(v));
      offset += t->size();
    };
    int pi = 0, bi = 0;
    for (Tensor* p : self.net_.layer(i).parameters()) {
      dump(p, pi++ == 0 ? "weight" : "bias");
    }
    for (Tensor* b : self.net_.layer(i).buffers()) {
      dump(b, bi++ == 0 ? "running_mean" : "running_var");
    }
  }
  meta["tensors"] = tensors;

  const std::string header = meta.dump();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cnn: cannot write " + path);
  os.write(kCnnMagic, 8);
  const std::uint64_t len = header.size();
  os.write(reinterpret_cast<const char*>(&len), 8);
  os.write(header.data(), static_cast<std::streamsize>(header.size()));
  os.write(reinterpret_cast<const char*>(blob.data()),
           static_cast<std::streamsize>(blob.size() * sizeof(float)));
  if (!os) throw DataError("cnn: write failed for " + path);
}

CnnModel CnnModel::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cnn: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kCnnMagic, 8) != 0) {
    throw DataError("cnn: bad magic in " + path);
  }
  std::uint64_t len = 0;
  is.read(reinterpret_cast<char*>(&len), 8);
  std::string header(len, '\0');
  is.read(header.data(), static_cast<std::streamsize>(len));
  if (!is) throw DataError("cnn: truncated header in " + path);

  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("cnn: bad header in " + path + ": " + e.what());
  }

  CnnModel m;
  m.preset_ = preset_from_string(meta.at("preset").get<std::string>());
  m.seed_ = meta.at("seed").get<std::uint64_t>();
  m.deep_tap_ = meta.at("deep_feature_tap").get<int>();
  for (const auto& d : meta.at("layers")) {
    m.net_.add(layer_from_descriptor(d));
  }

  for (const auto& td : meta.at("tensors")) {
    const std::size_t layer = td.at("layer").get<std::size_t>();
    const std::string role = td.at("role").get<std::string>();
    const std::uint64_t count = td.at("count").get<std::uint64_t>();

    Tensor* target = nullptr;
    auto params = m.net_.layer(layer).parameters();
    auto buffers = m.net_.layer(layer).buffers();
    if (role == "weight" && !params.empty()) target = params[0];
    else if (role == "bias" && params.size() > 1) target = params[1];
    else if (role == "running_mean" && !buffers.empty()) target = buffers[0];
    else if (role == "running_var" && buffers.size() > 1) target = buffers[1];
    if (!target || target->size() != count) {
      throw DataError("cnn: tensor table mismatch in " + path);
    }
    std::vector<float> raw(count);
    is.read(reinterpret_cast<char*>(raw.data()),
            static_cast<std::streamsize>(count * sizeof(float)));
    if (!is) throw DataError("cnn: truncated blob in " + path);
    for (std::size_t i = 0; i < count; ++i) {
      target->values[i] = static_cast<double>(raw[i]);
    }
  }
  m.eval_ = true;
  return m;
}

}  // namespace crydet::nn
