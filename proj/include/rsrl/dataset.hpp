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

#ifndef RSRL_DATASET_HPP
#define RSRL_DATASET_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "rsrl/canonical_json.hpp"
#include "rsrl/checkpoint_io.hpp"
#include "rsrl/error.hpp"
#include "rsrl/network.hpp"
#include "rsrl/random.hpp"
#include "rsrl/tensor.hpp"

namespace rsrl {

/// An image with its integer score. Scores are 1-based; the network class
/// index is `score - 1`.
struct ScoredImage {
  std::string id;
  Tensor pixels;  // H x W x C, values in [0, 1]
  int score = 1;

  std::size_t label() const { return static_cast<std::size_t>(score - 1); }
};

struct DatasetStats {
  std::size_t classes = 0;
  std::vector<std::size_t> histogram;  // index = score - 1
  std::size_t total = 0;

  std::size_t count(int score) const { return histogram.at(static_cast<std::size_t>(score - 1)); }

  /// Fraction of samples whose score is in `scores`.
  double share(const std::vector<int>& scores) const {
    if (total == 0) return 0.0;
    std::size_t n = 0;
    for (int s : scores) n += count(s);
    return static_cast<double>(n) / static_cast<double>(total);
  }
};

inline Json to_json(const DatasetStats& stats) {
  return Json{{"classes", stats.classes}, {"histogram", stats.histogram}, {"total", stats.total}};
}

struct Dataset {
  std::size_t classes = 0;
  std::vector<ScoredImage> items;

  std::size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }

  DatasetStats stats() const {
    DatasetStats s{classes, std::vector<std::size_t>(classes, 0), items.size()};
    for (const auto& item : items) ++s.histogram.at(item.label());
    return s;
  }

  /// Views for training/evaluation; valid while this dataset is alive and
  /// unmodified.
  std::vector<LabeledExample> examples() const {
    std::vector<LabeledExample> out;
    out.reserve(items.size());
    for (const auto& item : items) out.push_back({&item.pixels, item.label()});
    return out;
  }

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    out.reserve(items.size());
    for (const auto& item : items) out.push_back(item.id);
    return out;
  }
};

inline void check_item(const ScoredImage& item, std::size_t classes) {
  if (item.score < 1 || static_cast<std::size_t>(item.score) > classes) {
    raise(ErrorKind::kBadScore, "sample '" + item.id + "' has score " +
                                    std::to_string(item.score) + " outside [1, " +
                                    std::to_string(classes) + "]");
  }
  for (double v : item.pixels.values()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      raise(ErrorKind::kBadFormat, "sample '" + item.id + "' has pixel outside [0, 1]");
    }
  }
}

// ---------------------------------------------------------------------------
// Image files: binary PGM (P5, 8-bit) and a flat little-endian raster
// ("RAST", u32 H, u32 W, u32 C, then H*W*C f64 values in [0, 1]).

inline Tensor read_pgm(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) raise(ErrorKind::kMissingFile, path.string());
  const std::string bytes = detail::read_file(path);
  std::size_t pos = 0;
  auto next_token = [&]() {
    for (;;) {
      while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return bytes.substr(start, pos - start);
  };
  if (next_token() != "P5") raise(ErrorKind::kBadFormat, path.string() + ": not a P5 PGM");
  std::size_t w = 0, h = 0, maxval = 0;
  try {
    w = std::stoul(next_token());
    h = std::stoul(next_token());
    maxval = std::stoul(next_token());
  } catch (const std::exception&) {
    raise(ErrorKind::kBadFormat, path.string() + ": bad PGM header");
  }
  if (w == 0 || h == 0 || maxval == 0 || maxval > 255) {
    raise(ErrorKind::kBadFormat, path.string() + ": unsupported PGM dims or maxval");
  }
  ++pos;  // single whitespace after maxval
  if (bytes.size() < pos + w * h) raise(ErrorKind::kBadFormat, path.string() + ": truncated PGM");
  Tensor t({h, w, 1});
  for (std::size_t i = 0; i < w * h; ++i) {
    t[i] = static_cast<double>(static_cast<unsigned char>(bytes[pos + i])) /
           static_cast<double>(maxval);
  }
  return t;
}

inline void write_pgm(const std::filesystem::path& path, std::size_t height, std::size_t width,
                      const std::vector<unsigned char>& pixels) {
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  out.append(pixels.begin(), pixels.end());
  detail::write_file(path, out);
}

inline unsigned char to_byte(double v) {
  return static_cast<unsigned char>(std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5));
}

inline Tensor read_raster(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) raise(ErrorKind::kMissingFile, path.string());
  const std::string bytes = detail::read_file(path);
  detail::ByteReader in(bytes);
  if (in.take(4) != "RAST") raise(ErrorKind::kBadFormat, path.string() + ": not a raster");
  const auto h = in.get<std::uint32_t>(), w = in.get<std::uint32_t>(), c = in.get<std::uint32_t>();
  if (h == 0 || w == 0 || c == 0) raise(ErrorKind::kBadFormat, path.string() + ": zero dims");
  Tensor t({h, w, c});
  for (double& v : t.values()) v = in.get<double>();
  if (!in.done()) raise(ErrorKind::kBadFormat, path.string() + ": trailing bytes");
  return t;
}

inline void write_raster(const std::filesystem::path& path, const Tensor& t) {
  std::string out = "RAST";
  detail::put_le(out, static_cast<std::uint32_t>(t.dim(0)));
  detail::put_le(out, static_cast<std::uint32_t>(t.dim(1)));
  detail::put_le(out, static_cast<std::uint32_t>(t.dim(2)));
  for (double v : t.values()) detail::put_le(out, v);
  detail::write_file(path, out);
}

inline Tensor read_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) raise(ErrorKind::kMissingFile, path.string());
  return path.extension() == ".pgm" ? read_pgm(path) : read_raster(path);
}

// ---------------------------------------------------------------------------
// Manifest: CSV with header `id,path,score`; paths relative to the manifest.

inline Dataset load_manifest(const std::filesystem::path& path, std::size_t classes) {
  if (!std::filesystem::exists(path)) raise(ErrorKind::kMissingFile, path.string());
  if (classes < 2) raise(ErrorKind::kBadConfig, "class count must be >= 2");
  std::ifstream in(path);
  if (!in) raise(ErrorKind::kIoError, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "id,path,score") {
    raise(ErrorKind::kBadFormat, path.string() + ": expected header 'id,path,score'");
  }
  const auto base = path.parent_path();
  Dataset ds{classes, {}};
  std::unordered_set<std::string> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    if (cols.size() != 3) {
      raise(ErrorKind::kBadFormat,
            path.string() + ":" + std::to_string(line_no) + ": expected 3 columns");
    }
    int score = 0;
    try {
      std::size_t used = 0;
      score = std::stoi(cols[2], &used);
      if (used != cols[2].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      raise(ErrorKind::kBadScore, path.string() + ":" + std::to_string(line_no) +
                                      ": score '" + cols[2] + "' is not an integer");
    }
    if (!seen.insert(cols[0]).second) {
      raise(ErrorKind::kDuplicateId, "duplicate id '" + cols[0] + "' in " + path.string());
    }
    ScoredImage item{cols[0], Tensor(), score};
    if (score < 1 || static_cast<std::size_t>(score) > classes) check_item(item, classes);
    item.pixels = read_image(base / cols[1]);
    check_item(item, classes);
    ds.items.push_back(std::move(item));
  }
  return ds;
}

/// Writes `dir/manifest.csv` plus one image per sample under `dir/images/`
/// (PGM for single-channel images, raster otherwise). Returns the manifest
/// path.
inline std::filesystem::path write_manifest(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "images");
  std::string csv = "id,path,score\n";
  for (const auto& item : ds.items) {
    if (item.id.find_first_of(",\n/\\") != std::string::npos) {
      raise(ErrorKind::kBadFormat, "id '" + item.id + "' cannot be written to a manifest");
    }
    const auto& t = item.pixels;
    std::string rel;
    if (t.rank() == 3 && t.dim(2) == 1) {
      rel = "images/" + item.id + ".pgm";
      std::vector<unsigned char> px(t.size());
      for (std::size_t i = 0; i < t.size(); ++i) px[i] = to_byte(t[i]);
      write_pgm(dir / rel, t.dim(0), t.dim(1), px);
    } else {
      rel = "images/" + item.id + ".rast";
      write_raster(dir / rel, t);
    }
    csv += item.id + "," + rel + "," + std::to_string(item.score) + "\n";
  }
  detail::write_file(dir / "manifest.csv", csv);
  return dir / "manifest.csv";
}

// ---------------------------------------------------------------------------
// Synthetic generator.
//
// Each sample has a latent quality g in [0, 1); class c owns the bin
// [c/N, (c+1)/N). Images are blobs on a noisy background whose count and
// contrast grow with g. Ambiguous samples (a fraction of the three largest
// classes) draw g within `ambiguity_width` bin widths of a bin edge shared
// with a neighbour, so their appearance overlaps the adjacent class; all
// other samples draw g from the bin interior, away from both edges.

struct SynthConfig {
  std::size_t classes = 8;
  std::size_t size = 3100;
  std::vector<double> proportions;
  double ambiguity_rate = 0.35;
  double ambiguity_width = 0.25;  // fraction of a bin width
  std::size_t image_size = 16;
  std::uint64_t seed = 0;

  void validate() const {
    if (classes < 2) raise(ErrorKind::kBadConfig, "synthetic: classes must be >= 2");
    if (size == 0) raise(ErrorKind::kBadConfig, "synthetic: size must be positive");
    if (proportions.size() != classes) {
      raise(ErrorKind::kBadConfig, "synthetic: need one proportion per class");
    }
    double sum = 0.0;
    for (double p : proportions) {
      if (!(p >= 0.0)) raise(ErrorKind::kBadConfig, "synthetic: negative proportion");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) raise(ErrorKind::kBadConfig, "synthetic: proportions must sum to 1");
    if (!(ambiguity_rate >= 0.0 && ambiguity_rate <= 1.0)) {
      raise(ErrorKind::kBadConfig, "synthetic: ambiguity rate must be in [0, 1]");
    }
    if (!(ambiguity_width > 0.0 && ambiguity_width < 0.5)) {
      raise(ErrorKind::kBadConfig, "synthetic: ambiguity width must be in (0, 0.5)");
    }
    if (image_size < 8) raise(ErrorKind::kBadConfig, "synthetic: image size must be >= 8");
  }
};

/// Eight score classes shaped like a single-rater aesthetic dataset: score 4
/// holds about half the samples, then 3, then 5; scores 3-5 together hold 87%.
inline std::vector<double> aesthetic_proportions() {
  return {0.005, 0.05, 0.22, 0.45, 0.20, 0.05, 0.02, 0.005};
}

inline SynthConfig default_synth_config() {
  SynthConfig cfg;
  cfg.proportions = aesthetic_proportions();
  return cfg;
}

inline Json to_json(const SynthConfig& c) {
  return Json{{"classes", c.classes},           {"size", c.size},
              {"proportions", c.proportions},   {"ambiguity_rate", c.ambiguity_rate},
              {"ambiguity_width", c.ambiguity_width}, {"image_size", c.image_size},
              {"seed", c.seed}};
}

inline SynthConfig synth_config_from_json(const Json& j) {
  try {
    SynthConfig c = default_synth_config();
    c.classes = j.value("classes", c.classes);
    c.size = j.value("size", c.size);
    if (j.contains("proportions")) {
      c.proportions = j.at("proportions").get<std::vector<double>>();
    } else if (c.classes != 8) {
      c.proportions.assign(c.classes, 1.0 / static_cast<double>(c.classes));
    }
    c.ambiguity_rate = j.value("ambiguity_rate", c.ambiguity_rate);
    c.ambiguity_width = j.value("ambiguity_width", c.ambiguity_width);
    c.image_size = j.value("image_size", c.image_size);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
  } catch (const Json::exception& e) {
    raise(ErrorKind::kBadConfig, std::string("synthetic config: ") + e.what());
  }
}

/// Largest-remainder apportionment of `total` samples; every count is within
/// one of proportion * total. Remainder ties go to the lower class.
inline std::vector<std::size_t> apportion(const std::vector<double>& proportions,
                                          std::size_t total) {
  std::vector<std::size_t> counts(proportions.size());
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < proportions.size(); ++c) {
    const double exact = proportions[c] * static_cast<double>(total);
    counts[c] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[c];
    rem.emplace_back(exact - std::floor(exact), c);
  }
  std::stable_sort(rem.begin(), rem.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++counts[rem[k % rem.size()].second];
  return counts;
}

struct SyntheticDataset {
  Dataset data;
  std::vector<double> latent;  // generative parameter per sample
  std::vector<bool> ambiguous;
};

namespace detail {

inline Tensor render_blobs(double quality, std::size_t side, CounterRng& rng) {
  const double background = 0.12;
  const double contrast = 0.22 + 0.62 * quality;
  const std::size_t blobs = 1 + static_cast<std::size_t>(quality * 4.0);
  const double radius = 2.6;
  Tensor img({side, side, 1}, background);
  const double lo = radius, hi = static_cast<double>(side) - 1.0 - radius;
  for (std::size_t b = 0; b < blobs; ++b) {
    const double cy = rng.uniform(lo, hi), cx = rng.uniform(lo, hi);
    const double amp = contrast + rng.uniform(-0.03, 0.03);
    for (std::size_t y = 0; y < side; ++y) {
      for (std::size_t x = 0; x < side; ++x) {
        const double dy = static_cast<double>(y) - cy, dx = static_cast<double>(x) - cx;
        const double t = 1.0 - (dy * dy + dx * dx) / (radius * radius);
        if (t > 0.0) img.at(y, x, 0) = std::max(img.at(y, x, 0), background + amp * t * t);
      }
    }
  }
  for (double& v : img.values()) {
    // Irwin-Hall(4) noise, standard deviation 0.03.
    const double u = rng.uniform() + rng.uniform() + rng.uniform() + rng.uniform() - 2.0;
    v += u * 0.03 * 1.7320508075688772;
    v = std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5) / 255.0;
  }
  return img;
}

inline std::vector<std::size_t> top_classes(const std::vector<double>& weights, std::size_t k) {
  std::vector<std::size_t> idx(weights.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return weights[a] > weights[b]; });
  idx.resize(std::min(k, idx.size()));
  return idx;
}

}  // namespace detail

inline SyntheticDataset generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  const auto counts = apportion(cfg.proportions, cfg.size);
  std::vector<std::size_t> labels;
  for (std::size_t c = 0; c < counts.size(); ++c) labels.insert(labels.end(), counts[c], c);
  CounterRng order_rng(stream_key(cfg.seed, 0x5359, 0));
  shuffle(std::span<std::size_t>(labels), order_rng);

  const auto middle = detail::top_classes(cfg.proportions, 3);
  const double bin = 1.0 / static_cast<double>(cfg.classes);
  const double eps = cfg.ambiguity_width * bin;
  const int digits = static_cast<int>(std::to_string(cfg.size).size());

  SyntheticDataset out{{cfg.classes, {}}, {}, {}};
  out.data.items.reserve(cfg.size);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::size_t c = labels[i];
    CounterRng rng(stream_key(cfg.seed, 0x5359, 1, i));
    const double lo = static_cast<double>(c) * bin, hi = lo + bin;
    const bool is_middle = std::find(middle.begin(), middle.end(), c) != middle.end();
    const bool ambiguous = is_middle && rng.uniform() < cfg.ambiguity_rate;
    double g = 0.0;
    if (ambiguous) {
      bool upper = rng.uniform() < 0.5;
      if (c == 0) upper = true;
      if (c + 1 == cfg.classes) upper = false;
      const double edge = upper ? hi : lo;
      g = edge + rng.uniform(-eps, eps);
    } else {
      g = rng.uniform(lo + eps, hi - eps);
    }
    std::string id = std::to_string(i);
    id = "s" + std::string(static_cast<std::size_t>(digits) - id.size(), '0') + id;
    out.data.items.push_back(
        {std::move(id), detail::render_blobs(g, cfg.image_size, rng), static_cast<int>(c) + 1});
    out.latent.push_back(g);
    out.ambiguous.push_back(ambiguous);
  }
  return out;
}

/// Seeded random partition; each side keeps the original relative order.
inline std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction,
                                         std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    raise(ErrorKind::kBadFraction, "train fraction must be in (0, 1), got " +
                                       std::to_string(train_fraction));
  }
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  CounterRng rng(stream_key(seed, 0x5350));
  shuffle(std::span<std::size_t>(order), rng);
  const auto n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(ds.size())));
  std::vector<std::size_t> a(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> b(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::pair<Dataset, Dataset> out{{ds.classes, {}}, {ds.classes, {}}};
  for (std::size_t i : a) out.first.items.push_back(ds.items[i]);
  for (std::size_t i : b) out.second.items.push_back(ds.items[i]);
  return out;
}

}  // namespace rsrl

#endif  // RSRL_DATASET_HPP
