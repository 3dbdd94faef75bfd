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

#ifndef RSRL_CHECKPOINT_IO_HPP
#define RSRL_CHECKPOINT_IO_HPP

// Binary checkpoint layout (all integers and floats little-endian):
//   "RSRL"                      4 bytes magic
//   u32  format version
//   u64  length, then canonical JSON architecture descriptor
//   f64[] parameters of each layer in declaration order (counts implied by
//         the descriptor)
//   u64  length, then canonical JSON metadata {round, seed, thresholds}

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <type_traits>
#include <vector>

#include "rsrl/canonical_json.hpp"
#include "rsrl/error.hpp"
#include "rsrl/network.hpp"

namespace rsrl {

namespace detail {

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::uint64_t bits = 0;
  if constexpr (sizeof(T) == 8) {
    bits = std::bit_cast<std::uint64_t>(value);
  } else {
    bits = static_cast<std::uint64_t>(value);
  }
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

class ByteReader {
 public:
  explicit ByteReader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    if constexpr (std::is_same_v<T, double>) {
      return std::bit_cast<double>(bits);
    } else {
      return static_cast<T>(bits);
    }
  }

  std::string take(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) raise(ErrorKind::kBadFormat, "checkpoint truncated");
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::kIoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorKind::kIoError, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) raise(ErrorKind::kIoError, "write failed for " + path.string());
}

}  // namespace detail

inline Json checkpoint_metadata(const Checkpoint& net) {
  return Json{{"round", net.round}, {"seed", net.seed}, {"thresholds", net.thresholds}};
}

inline std::string serialize(const Checkpoint& net) {
  net.validate();
  std::string out = "RSRL";
  detail::put_le(out, Checkpoint::kFormatVersion);
  const std::string arch = canonical_dump(to_json(net.spec));
  detail::put_le(out, static_cast<std::uint64_t>(arch.size()));
  out += arch;
  for (const auto& block : net.params)
    for (double v : block) detail::put_le(out, v);
  const std::string meta = canonical_dump(checkpoint_metadata(net));
  detail::put_le(out, static_cast<std::uint64_t>(meta.size()));
  out += meta;
  return out;
}

inline Checkpoint deserialize(const std::string& bytes) {
  detail::ByteReader in(bytes);
  if (in.take(4) != "RSRL") raise(ErrorKind::kBadFormat, "not a checkpoint (bad magic)");
  const auto version = in.get<std::uint32_t>();
  if (version != Checkpoint::kFormatVersion) {
    raise(ErrorKind::kBadFormat, "unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint net;
  try {
    net.spec = network_from_json(Json::parse(in.take(in.get<std::uint64_t>())));
  } catch (const Json::exception& e) {
    raise(ErrorKind::kBadFormat, std::string("architecture descriptor: ") + e.what());
  }
  for (std::size_t count : net.spec.param_counts()) {
    std::vector<double> block(count);
    for (double& v : block) v = in.get<double>();
    net.params.push_back(std::move(block));
  }
  try {
    const Json meta = Json::parse(in.take(in.get<std::uint64_t>()));
    net.round = meta.at("round").get<std::uint32_t>();
    net.seed = meta.at("seed").get<std::uint64_t>();
    net.thresholds = meta.at("thresholds").get<std::vector<double>>();
  } catch (const Json::exception& e) {
    raise(ErrorKind::kBadFormat, std::string("checkpoint metadata: ") + e.what());
  }
  if (!in.done()) raise(ErrorKind::kBadFormat, "trailing bytes after checkpoint");
  return net;
}

inline void save_checkpoint(const Checkpoint& net, const std::filesystem::path& path) {
  detail::write_file(path, serialize(net));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) raise(ErrorKind::kIoError, "no such file: " + path.string());
  return deserialize(detail::read_file(path));
}

}  // namespace rsrl

#endif  // RSRL_CHECKPOINT_IO_HPP
