/* Copyright 2026 The RSRL Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef RSRL_NETWORK_HPP
#define RSRL_NETWORK_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rsrl/canonical_json.hpp"
#include "rsrl/error.hpp"
#include "rsrl/layers.hpp"
#include "rsrl/random.hpp"
#include "rsrl/tensor.hpp"

namespace rsrl {

enum class LayerKind { kConv, kRelu, kMaxPool, kDense, kSoftmax };

struct LayerSpec {
  LayerKind kind = LayerKind::kRelu;
  std::size_t kernel = 0;    // conv: square kernel side
  std::size_t channels = 0;  // conv: output channels
  std::size_t window = 0;    // maxpool
  std::size_t stride = 1;    // conv, maxpool
  std::size_t width = 0;     // dense: output width

  static LayerSpec conv(std::size_t kernel, std::size_t channels, std::size_t stride = 1) {
    return {LayerKind::kConv, kernel, channels, 0, stride, 0};
  }
  static LayerSpec relu() { return {LayerKind::kRelu}; }
  static LayerSpec maxpool(std::size_t window, std::size_t stride) {
    return {LayerKind::kMaxPool, 0, 0, window, stride, 0};
  }
  static LayerSpec dense(std::size_t width) { return {LayerKind::kDense, 0, 0, 0, 1, width}; }
  static LayerSpec softmax() { return {LayerKind::kSoftmax}; }

  bool has_params() const { return kind == LayerKind::kConv || kind == LayerKind::kDense; }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Architecture description. The first layer is always a convolution (named
/// `conv1`); the network ends with a dense layer of width `classes` (named
/// `fc`) followed by softmax.
struct NetworkSpec {
  Shape input;  // H x W x C
  std::vector<LayerSpec> layers;
  std::size_t classes = 0;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;

  /// Output shape of every layer; throws kBadConfig on any inconsistency.
  std::vector<Shape> output_shapes() const {
    if (input.size() != 3 || shape_size(input) == 0) {
      raise(ErrorKind::kBadConfig, "network input must be H x W x C with positive dims");
    }
    if (classes < 2) raise(ErrorKind::kBadConfig, "network needs at least 2 classes");
    if (layers.size() < 3 || layers.front().kind != LayerKind::kConv) {
      raise(ErrorKind::kBadConfig, "first layer must be a convolution");
    }
    const auto& fc = layers[layers.size() - 2];
    if (fc.kind != LayerKind::kDense || fc.width != classes ||
        layers.back().kind != LayerKind::kSoftmax) {
      raise(ErrorKind::kBadConfig, "network must end with dense(" + std::to_string(classes) +
                                       ") followed by softmax");
    }
    std::vector<Shape> shapes;
    Shape cur = input;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const LayerSpec& l = layers[i];
      const std::string where = "layer " + std::to_string(i) + ": ";
      switch (l.kind) {
        case LayerKind::kConv:
          if (cur.size() != 3 || l.kernel == 0 || l.channels == 0 || l.stride == 0 ||
              l.kernel > cur[0] || l.kernel > cur[1]) {
            raise(ErrorKind::kBadConfig, where + "conv does not fit " + shape_string(cur));
          }
          cur = {valid_extent(cur[0], l.kernel, l.stride),
                 valid_extent(cur[1], l.kernel, l.stride), l.channels};
          break;
        case LayerKind::kMaxPool:
          if (cur.size() != 3 || l.window == 0 || l.stride == 0 || l.window > cur[0] ||
              l.window > cur[1]) {
            raise(ErrorKind::kBadConfig, where + "maxpool does not fit " + shape_string(cur));
          }
          cur = {valid_extent(cur[0], l.window, l.stride),
                 valid_extent(cur[1], l.window, l.stride), cur[2]};
          break;
        case LayerKind::kDense:
          if (l.width == 0) raise(ErrorKind::kBadConfig, where + "dense width must be positive");
          cur = {l.width};
          break;
        case LayerKind::kSoftmax:
          if (i + 1 != layers.size()) {
            raise(ErrorKind::kBadConfig, where + "softmax must be the last layer");
          }
          break;
        case LayerKind::kRelu:
          break;
      }
      shapes.push_back(cur);
    }
    return shapes;
  }

  void validate() const { (void)output_shapes(); }

  std::size_t fc_index() const { return layers.size() - 2; }

  /// Layer input shapes (index i is the input of layer i).
  std::vector<Shape> input_shapes() const {
    auto out = output_shapes();
    out.insert(out.begin(), input);
    out.pop_back();
    return out;
  }

  std::vector<std::size_t> param_counts() const {
    const auto ins = input_shapes();
    std::vector<std::size_t> counts;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const LayerSpec& l = layers[i];
      if (l.kind == LayerKind::kConv) {
        counts.push_back(l.kernel * l.kernel * ins[i][2] * l.channels + l.channels);
      } else if (l.kind == LayerKind::kDense) {
        counts.push_back(shape_size(ins[i]) * l.width + l.width);
      } else {
        counts.push_back(0);
      }
    }
    return counts;
  }

  std::vector<std::string> layer_names() const {
    std::vector<std::string> names;
    std::size_t conv = 0, relu = 0, pool = 0, dense = 0;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      switch (layers[i].kind) {
        case LayerKind::kConv: names.push_back("conv" + std::to_string(++conv)); break;
        case LayerKind::kRelu: names.push_back("relu" + std::to_string(++relu)); break;
        case LayerKind::kMaxPool: names.push_back("pool" + std::to_string(++pool)); break;
        case LayerKind::kDense:
          names.push_back(i == fc_index() ? std::string("fc") : "dense" + std::to_string(++dense));
          break;
        case LayerKind::kSoftmax: names.push_back("softmax"); break;
      }
    }
    return names;
  }
};

/// The default desk-scale classifier: conv1 5x5->16, relu, pool 2x2,
/// conv 3x3->32, relu, pool 2x2, dense 64, relu, fc N, softmax.
inline NetworkSpec default_network(Shape input, std::size_t classes) {
  return NetworkSpec{std::move(input),
                     {LayerSpec::conv(5, 16), LayerSpec::relu(), LayerSpec::maxpool(2, 2),
                      LayerSpec::conv(3, 32), LayerSpec::relu(), LayerSpec::maxpool(2, 2),
                      LayerSpec::dense(64), LayerSpec::relu(), LayerSpec::dense(classes),
                      LayerSpec::softmax()},
                     classes};
}

inline Json to_json(const NetworkSpec& spec) {
  Json layers = Json::array();
  for (const LayerSpec& l : spec.layers) {
    switch (l.kind) {
      case LayerKind::kConv:
        layers.push_back({{"type", "conv"}, {"kernel", l.kernel}, {"channels", l.channels},
                          {"stride", l.stride}});
        break;
      case LayerKind::kRelu: layers.push_back({{"type", "relu"}}); break;
      case LayerKind::kMaxPool:
        layers.push_back({{"type", "maxpool"}, {"window", l.window}, {"stride", l.stride}});
        break;
      case LayerKind::kDense: layers.push_back({{"type", "dense"}, {"width", l.width}}); break;
      case LayerKind::kSoftmax: layers.push_back({{"type", "softmax"}}); break;
    }
  }
  return Json{{"input", spec.input}, {"classes", spec.classes}, {"layers", layers}};
}

inline NetworkSpec network_from_json(const Json& j) {
  try {
    NetworkSpec spec;
    spec.input = j.at("input").get<Shape>();
    spec.classes = j.at("classes").get<std::size_t>();
    for (const Json& l : j.at("layers")) {
      const auto type = l.at("type").get<std::string>();
      if (type == "conv") {
        spec.layers.push_back(LayerSpec::conv(l.at("kernel").get<std::size_t>(),
                                              l.at("channels").get<std::size_t>(),
                                              l.value("stride", std::size_t{1})));
      } else if (type == "relu") {
        spec.layers.push_back(LayerSpec::relu());
      } else if (type == "maxpool") {
        spec.layers.push_back(LayerSpec::maxpool(l.at("window").get<std::size_t>(),
                                                 l.at("stride").get<std::size_t>()));
      } else if (type == "dense") {
        spec.layers.push_back(LayerSpec::dense(l.at("width").get<std::size_t>()));
      } else if (type == "softmax") {
        spec.layers.push_back(LayerSpec::softmax());
      } else {
        raise(ErrorKind::kBadConfig, "unknown layer type '" + type + "'");
      }
    }
    spec.validate();
    return spec;
  } catch (const Json::exception& e) {
    raise(ErrorKind::kBadConfig, std::string("network descriptor: ") + e.what());
  }
}

/// One flat parameter vector per layer (empty for parameter-free layers).
/// Convolution: kernel (kh x kw x Cin x Cout) then bias (Cout).
/// Dense: weights (out x in, row-major) then bias (out).
using ParamSet = std::vector<std::vector<double>>;

struct Checkpoint {
  static constexpr std::uint32_t kFormatVersion = 1;

  NetworkSpec spec;
  ParamSet params;
  std::uint32_t round = 0;
  std::uint64_t seed = 0;
  std::vector<double> thresholds;  // drop thresholds used to build this round's training set

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;

  void validate() const {
    const auto counts = spec.param_counts();
    if (params.size() != counts.size()) {
      raise(ErrorKind::kShapeMismatch, "checkpoint has " + std::to_string(params.size()) +
                                           " parameter blocks, spec needs " +
                                           std::to_string(counts.size()));
    }
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (params[i].size() != counts[i]) {
        raise(ErrorKind::kShapeMismatch, "layer " + std::to_string(i) + " has " +
                                             std::to_string(params[i].size()) +
                                             " parameters, spec needs " +
                                             std::to_string(counts[i]));
      }
    }
  }
};

/// Seeded Glorot-uniform weights, zero biases.
inline Checkpoint initialize(const NetworkSpec& spec, std::uint64_t seed) {
  const auto ins = spec.input_shapes();
  const auto counts = spec.param_counts();
  Checkpoint net{spec, ParamSet(spec.layers.size()), 0, seed, {}};
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    if (!l.has_params()) continue;
    std::size_t fan_in = 0, fan_out = 0, n_bias = 0;
    if (l.kind == LayerKind::kConv) {
      fan_in = l.kernel * l.kernel * ins[i][2];
      fan_out = l.kernel * l.kernel * l.channels;
      n_bias = l.channels;
    } else {
      fan_in = shape_size(ins[i]);
      fan_out = l.width;
      n_bias = l.width;
    }
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    CounterRng rng(stream_key(seed, 0x1417, i));
    auto& p = net.params[i];
    p.assign(counts[i], 0.0);
    for (std::size_t k = 0; k + n_bias < p.size(); ++k) p[k] = rng.uniform(-limit, limit);
  }
  return net;
}

namespace detail {

inline Tensor conv_kernel(const NetworkSpec& spec, const ParamSet& params, std::size_t layer,
                          std::size_t in_channels) {
  const LayerSpec& l = spec.layers[layer];
  const auto& p = params[layer];
  const std::size_t n = l.kernel * l.kernel * in_channels * l.channels;
  return Tensor({l.kernel, l.kernel, in_channels, l.channels},
                std::vector<double>(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(n)));
}

}  // namespace detail

/// Every layer output for one image.
struct ActivationRecord {
  Tensor input;
  std::vector<Tensor> outputs;
  std::size_t fc_layer = 0;

  /// Raw output of the first convolution (before its ReLU).
  const Tensor& conv1() const { return outputs.front(); }
  /// Pre-softmax class scores.
  const Tensor& fc() const { return outputs[fc_layer]; }
  const Tensor& probabilities() const { return outputs.back(); }
  const Tensor& layer_input(std::size_t i) const { return i == 0 ? input : outputs[i - 1]; }
};

inline ActivationRecord forward(const Checkpoint& net, const Tensor& image) {
  const NetworkSpec& spec = net.spec;
  if (image.shape() != spec.input) {
    raise(ErrorKind::kShapeMismatch, "image shape " + shape_string(image.shape()) +
                                         " != network input " + shape_string(spec.input));
  }
  ActivationRecord rec{image, {}, spec.fc_index()};
  rec.outputs.reserve(spec.layers.size());
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    const Tensor& in = rec.layer_input(i);
    switch (l.kind) {
      case LayerKind::kConv: {
        Tensor out = conv2d(in, detail::conv_kernel(spec, net.params, i, in.dim(2)), l.stride);
        const auto& p = net.params[i];
        const double* bias = p.data() + (p.size() - l.channels);
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += bias[k % l.channels];
        rec.outputs.push_back(std::move(out));
        break;
      }
      case LayerKind::kRelu: rec.outputs.push_back(relu(in)); break;
      case LayerKind::kMaxPool: rec.outputs.push_back(maxpool(in, l.window, l.stride)); break;
      case LayerKind::kDense: {
        std::span<const double> p = net.params[i];
        rec.outputs.push_back(
            dense(in, p.first(p.size() - l.width), p.last(l.width)));
        break;
      }
      case LayerKind::kSoftmax: rec.outputs.push_back(softmax(in)); break;
    }
  }
  return rec;
}

struct LabeledExample {
  const Tensor* image = nullptr;
  std::size_t label = 0;  // class index in [0, N)
};

struct GradientSet {
  ParamSet grads;
  double loss = 0.0;  // mean cross-entropy over the batch
};

/// Mean softmax cross-entropy over the batch.
inline double batch_loss(const Checkpoint& net, std::span<const LabeledExample> batch) {
  if (batch.empty()) raise(ErrorKind::kEmptyBatch, "loss of an empty batch");
  double total = 0.0;
  for (const auto& ex : batch) {
    if (ex.label >= net.spec.classes) {
      raise(ErrorKind::kShapeMismatch, "label " + std::to_string(ex.label) + " out of range");
    }
    const ActivationRecord rec = forward(net, *ex.image);
    const Tensor& logits = rec.fc();
    double top = logits[0];
    for (double v : logits.values()) top = std::max(top, v);
    double sum = 0.0;
    for (double v : logits.values()) sum += std::exp(v - top);
    total += std::log(sum) + top - logits[ex.label];
  }
  return total / static_cast<double>(batch.size());
}

/// Gradient of the mean cross-entropy loss with respect to every parameter.
inline GradientSet backward(const Checkpoint& net, std::span<const LabeledExample> batch) {
  if (batch.empty()) raise(ErrorKind::kEmptyBatch, "backward on an empty batch");
  const NetworkSpec& spec = net.spec;
  const auto counts = spec.param_counts();
  GradientSet out;
  out.grads.resize(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) out.grads[i].assign(counts[i], 0.0);
  const double scale = 1.0 / static_cast<double>(batch.size());

  for (const auto& ex : batch) {
    if (ex.label >= spec.classes) {
      raise(ErrorKind::kShapeMismatch, "label " + std::to_string(ex.label) + " out of range");
    }
    const ActivationRecord rec = forward(net, *ex.image);
    const Tensor& probs = rec.probabilities();
    out.loss -= std::log(probs[ex.label]) * scale;

    // Softmax and cross-entropy combined: dL/dlogits = p - onehot.
    Tensor grad = probs;
    grad[ex.label] -= 1.0;
    for (double& v : grad.values()) v *= scale;

    for (std::size_t i = spec.fc_index() + 1; i-- > 0;) {
      const LayerSpec& l = spec.layers[i];
      const Tensor& in = rec.layer_input(i);
      auto& g = out.grads[i];
      switch (l.kind) {
        case LayerKind::kConv: {
          const Tensor kernel = detail::conv_kernel(spec, net.params, i, in.dim(2));
          ConvGrads cg = conv2d_backward(in, kernel, l.stride, grad, i != 0);
          for (std::size_t k = 0; k < cg.kernel.size(); ++k) g[k] += cg.kernel[k];
          double* gb = g.data() + cg.kernel.size();
          for (std::size_t k = 0; k < grad.size(); ++k) gb[k % l.channels] += grad[k];
          grad = std::move(cg.input);
          break;
        }
        case LayerKind::kRelu: grad = relu_backward(in, grad); break;
        case LayerKind::kMaxPool: grad = maxpool_backward(in, l.window, l.stride, grad); break;
        case LayerKind::kDense: {
          std::span<const double> p = net.params[i];
          DenseGrads dg = dense_backward(in, p.first(p.size() - l.width), grad);
          for (std::size_t k = 0; k < dg.weights.size(); ++k) g[k] += dg.weights[k];
          for (std::size_t k = 0; k < dg.bias.size(); ++k) g[dg.weights.size() + k] += dg.bias[k];
          grad = std::move(dg.input);
          break;
        }
        case LayerKind::kSoftmax: break;
      }
    }
  }
  return out;
}

/// p' = p - lr * g, elementwise.
inline ParamSet sgd_step(const ParamSet& params, const ParamSet& grads, double learning_rate) {
  if (params.size() != grads.size()) {
    raise(ErrorKind::kShapeMismatch, "sgd_step: parameter/gradient block count differs");
  }
  ParamSet out = params;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size() != grads[i].size()) {
      raise(ErrorKind::kShapeMismatch, "sgd_step: block " + std::to_string(i) + " size differs");
    }
    for (std::size_t k = 0; k < out[i].size(); ++k) out[i][k] -= learning_rate * grads[i][k];
  }
  return out;
}

}  // namespace rsrl

#endif  // RSRL_NETWORK_HPP
