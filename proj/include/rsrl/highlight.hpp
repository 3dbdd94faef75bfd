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

#ifndef RSRL_HIGHLIGHT_HPP
#define RSRL_HIGHLIGHT_HPP

// Highlight extraction: compare the conv1 feature maps that two checkpoints
// produce for the same image, pick the channel whose maps correlate least,
// and report the signed difference of that channel's maps.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rsrl/canonical_json.hpp"
#include "rsrl/dataset.hpp"
#include "rsrl/error.hpp"
#include "rsrl/network.hpp"
#include "rsrl/tensor.hpp"

namespace rsrl {

/// 2-D map, row-major.
struct FeatureMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;
};

struct FeatureMapStack {
  std::uint32_t round = 0;
  std::vector<FeatureMap> channels;
};

/// Splits an H x W x C activation into C maps.
inline FeatureMapStack to_stack(const Tensor& activation, std::uint32_t round = 0) {
  if (activation.rank() != 3) {
    raise(ErrorKind::kShapeMismatch, "feature maps must be H x W x C");
  }
  const std::size_t h = activation.dim(0), w = activation.dim(1), c = activation.dim(2);
  FeatureMapStack s{round, std::vector<FeatureMap>(c, FeatureMap{h, w, std::vector<double>(h * w)})};
  for (std::size_t i = 0; i < h * w; ++i)
    for (std::size_t ch = 0; ch < c; ++ch) s.channels[ch].values[i] = activation[i * c + ch];
  return s;
}

/// Pearson correlation of the flattened maps, clamped to [-1, 1].
inline double pearson_corr(const FeatureMap& a, const FeatureMap& b) {
  if (a.height != b.height || a.width != b.width || a.values.size() != b.values.size()) {
    raise(ErrorKind::kShapeMismatch, "correlated maps must have equal dimensions");
  }
  if (a.values.empty()) raise(ErrorKind::kShapeMismatch, "empty map");
  const auto n = static_cast<double>(a.values.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    ma += a.values[i];
    mb += b.values[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double da = a.values[i] - ma, db = b.values[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) raise(ErrorKind::kZeroVariance, "map has zero variance");
  // sqrt(saa * sbb) is exact when a == b, so self-correlation is exactly 1.
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

/// Correlation per channel; nullopt marks a channel excluded for zero variance.
inline std::vector<std::optional<double>> channel_correlations(const FeatureMapStack& current,
                                                               const FeatureMapStack& previous) {
  if (current.channels.size() != previous.channels.size()) {
    raise(ErrorKind::kShapeMismatch, "feature stacks have different channel counts");
  }
  std::vector<std::optional<double>> out;
  for (std::size_t j = 0; j < current.channels.size(); ++j) {
    try {
      out.emplace_back(pearson_corr(current.channels[j], previous.channels[j]));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kZeroVariance) throw;
      out.emplace_back(std::nullopt);
    }
  }
  return out;
}

/// Index of the least-correlated non-degenerate channel; ties go to the
/// lowest index.
inline std::size_t min_corr_channel(const std::vector<std::optional<double>>& corr) {
  std::optional<std::size_t> best;
  for (std::size_t j = 0; j < corr.size(); ++j) {
    if (corr[j] && (!best || *corr[j] < *corr[*best])) best = j;
  }
  if (!best) raise(ErrorKind::kAllChannelsDegenerate, "every channel has zero variance");
  return *best;
}

inline std::size_t min_corr_channel(const FeatureMapStack& current, const FeatureMapStack& previous) {
  return min_corr_channel(channel_correlations(current, previous));
}

inline FeatureMap feature_diff_map(const FeatureMapStack& current, const FeatureMapStack& previous,
                                   std::size_t channel) {
  if (channel >= current.channels.size() || channel >= previous.channels.size()) {
    raise(ErrorKind::kBadChannel, "channel " + std::to_string(channel) + " out of range");
  }
  const FeatureMap& a = current.channels[channel];
  const FeatureMap& b = previous.channels[channel];
  if (a.values.size() != b.values.size()) {
    raise(ErrorKind::kShapeMismatch, "maps have different dimensions");
  }
  FeatureMap d{a.height, a.width, std::vector<double>(a.values.size())};
  for (std::size_t i = 0; i < d.values.size(); ++i) d.values[i] = a.values[i] - b.values[i];
  return d;
}

struct HighlightResult {
  std::size_t channel = 0;  // J
  std::vector<std::optional<double>> correlations;
  FeatureMap diff;
  std::uint32_t current_round = 0;
  std::uint32_t previous_round = 0;
  std::uint32_t lag = 1;
};

inline HighlightResult extract_highlight(const Checkpoint& current, const Checkpoint& previous,
                                         const Tensor& image) {
  if (!(current.spec == previous.spec)) {
    raise(ErrorKind::kSpecMismatch, "highlight needs two checkpoints of the same architecture");
  }
  const FeatureMapStack a = to_stack(forward(current, image).conv1(), current.round);
  const FeatureMapStack b = to_stack(forward(previous, image).conv1(), previous.round);
  HighlightResult r;
  r.correlations = channel_correlations(a, b);
  r.channel = min_corr_channel(r.correlations);
  r.diff = feature_diff_map(a, b, r.channel);
  r.current_round = current.round;
  r.previous_round = previous.round;
  r.lag = current.round >= previous.round ? current.round - previous.round : 0;
  return r;
}

/// Min-max scaling to bytes with round-half-up; a constant map is all zero.
inline std::vector<unsigned char> normalize_to_bytes(const FeatureMap& map) {
  if (map.values.empty()) raise(ErrorKind::kShapeMismatch, "empty difference map");
  const auto [lo, hi] = std::minmax_element(map.values.begin(), map.values.end());
  const double min = *lo, range = *hi - *lo;
  std::vector<unsigned char> out(map.values.size(), 0);
  if (range > 0.0) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = static_cast<unsigned char>(
          std::min(255.0, std::floor((map.values[i] - min) / range * 255.0 + 0.5)));
    }
  }
  return out;
}

inline Json to_json(const HighlightResult& r) {
  Json corr = Json::array();
  Json excluded = Json::array();
  for (std::size_t j = 0; j < r.correlations.size(); ++j) {
    corr.push_back(r.correlations[j] ? Json(*r.correlations[j]) : Json(nullptr));
    if (!r.correlations[j]) excluded.push_back(j);
  }
  const auto [lo, hi] = std::minmax_element(r.diff.values.begin(), r.diff.values.end());
  return Json{{"channel", r.channel},
              {"correlations", corr},
              {"excluded_channels", excluded},
              {"lag", r.lag},
              {"current_round", r.current_round},
              {"previous_round", r.previous_round},
              {"height", r.diff.height},
              {"width", r.diff.width},
              {"diff_min", *lo},
              {"diff_max", *hi}};
}

/// Writes the normalized difference map as a P5 PGM at `path`.
inline void export_highlight(const HighlightResult& r, const std::filesystem::path& path) {
  write_pgm(path, r.diff.height, r.diff.width, normalize_to_bytes(r.diff));
}

}  // namespace rsrl

#endif  // RSRL_HIGHLIGHT_HPP
