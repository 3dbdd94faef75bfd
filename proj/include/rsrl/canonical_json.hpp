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

#ifndef RSRL_CANONICAL_JSON_HPP
#define RSRL_CANONICAL_JSON_HPP

// Canonical JSON text: sorted object keys (nlohmann::json stores objects in a
// std::map), no insignificant whitespace, and every floating-point number
// printed with 17 significant digits so equal values always produce equal
// bytes and parse back to the same double.

#include <cmath>
#include <cstdio>
#include <string>

#include <json.hpp>

#include "rsrl/error.hpp"

namespace rsrl {

using Json = nlohmann::json;

namespace detail {

inline void append_canonical(const Json& j, std::string& out) {
  switch (j.type()) {
    case Json::value_t::object: {
      out += '{';
      bool first = true;
      for (const auto& [key, value] : j.items()) {
        if (!first) out += ',';
        first = false;
        out += Json(key).dump();
        out += ':';
        append_canonical(value, out);
      }
      out += '}';
      break;
    }
    case Json::value_t::array: {
      out += '[';
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ',';
        append_canonical(j[i], out);
      }
      out += ']';
      break;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) raise(ErrorKind::kBadFormat, "non-finite number in JSON output");
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out += buf;
      break;
    }
    default:
      out += j.dump();
  }
}

}  // namespace detail

inline std::string canonical_dump(const Json& j) {
  std::string out;
  detail::append_canonical(j, out);
  return out;
}

}  // namespace rsrl

#endif  // RSRL_CANONICAL_JSON_HPP
