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

#ifndef RSRL_TRAIN_HPP
#define RSRL_TRAIN_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "rsrl/error.hpp"
#include "rsrl/network.hpp"
#include "rsrl/random.hpp"

namespace rsrl {

struct TrainConfig {
  std::size_t epochs = 5;
  std::size_t batch_size = 16;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;

  void validate() const {
    if (epochs < 1) raise(ErrorKind::kBadConfig, "epochs must be >= 1");
    if (batch_size < 1) raise(ErrorKind::kBadConfig, "batch size must be >= 1");
    if (!(learning_rate > 0.0)) raise(ErrorKind::kBadConfig, "learning rate must be > 0");
  }
};

/// Shuffle order for one epoch; depends only on (seed, round, epoch, n).
inline std::vector<std::size_t> epoch_order(std::uint64_t seed, std::uint64_t round,
                                            std::uint64_t epoch, std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  CounterRng rng(stream_key(seed, 0x5348, round, epoch));
  shuffle(std::span<std::size_t>(order), rng);
  return order;
}

/// Mini-batch SGD for `config.epochs` passes, warm-started from `init`.
/// The result is tagged with `round`. Single-threaded; the result is a pure
/// function of the arguments.
inline Checkpoint train(const Checkpoint& init, std::span<const LabeledExample> data,
                        const TrainConfig& config, std::uint32_t round) {
  if (data.empty()) raise(ErrorKind::kEmptyDataset, "training set is empty");
  if (config.epochs < 1) raise(ErrorKind::kBadConfig, "epochs must be >= 1");
  if (config.batch_size < 1) raise(ErrorKind::kBadConfig, "batch size must be >= 1");
  if (config.learning_rate < 0.0) raise(ErrorKind::kBadConfig, "learning rate must be >= 0");
  init.validate();

  Checkpoint net = init;
  net.round = round;
  net.seed = config.seed;
  std::vector<LabeledExample> batch;
  batch.reserve(config.batch_size);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = epoch_order(config.seed, round, epoch, data.size());
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t k = start; k < end; ++k) batch.push_back(data[order[k]]);
      const GradientSet g = backward(net, batch);
      for (std::size_t i = 0; i < net.params.size(); ++i) {
        auto& p = net.params[i];
        const auto& d = g.grads[i];
        for (std::size_t k = 0; k < p.size(); ++k) p[k] -= config.learning_rate * d[k];
      }
    }
  }
  return net;
}

inline std::size_t predict(const Checkpoint& net, const Tensor& image) {
  const ActivationRecord rec = forward(net, image);
  const Tensor& logits = rec.fc();
  return static_cast<std::size_t>(
      std::max_element(logits.values().begin(), logits.values().end()) -
      logits.values().begin());
}

}  // namespace rsrl

#endif  // RSRL_TRAIN_HPP
