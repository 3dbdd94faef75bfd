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

#ifndef RSRL_ERROR_HPP
#define RSRL_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace rsrl {

enum class ErrorKind {
  kShapeMismatch,
  kEmptyBatch,
  kEmptyDataset,
  kMissingFile,
  kBadScore,
  kDuplicateId,
  kBadConfig,
  kBadFraction,
  kLengthMismatch,
  kEmptyInput,
  kEmptyMatrix,
  kNoSupportedClass,
  kEmptyResult,
  kSpecMismatch,
  kZeroVariance,
  kAllChannelsDegenerate,
  kBadChannel,
  kIoError,
  kBadFormat,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kEmptyBatch: return "EmptyBatch";
    case ErrorKind::kEmptyDataset: return "EmptyDataset";
    case ErrorKind::kMissingFile: return "MissingFile";
    case ErrorKind::kBadScore: return "BadScore";
    case ErrorKind::kDuplicateId: return "DuplicateId";
    case ErrorKind::kBadConfig: return "BadConfig";
    case ErrorKind::kBadFraction: return "BadFraction";
    case ErrorKind::kLengthMismatch: return "LengthMismatch";
    case ErrorKind::kEmptyInput: return "EmptyInput";
    case ErrorKind::kEmptyMatrix: return "EmptyMatrix";
    case ErrorKind::kNoSupportedClass: return "NoSupportedClass";
    case ErrorKind::kEmptyResult: return "EmptyResult";
    case ErrorKind::kSpecMismatch: return "SpecMismatch";
    case ErrorKind::kZeroVariance: return "ZeroVariance";
    case ErrorKind::kAllChannelsDegenerate: return "AllChannelsDegenerate";
    case ErrorKind::kBadChannel: return "BadChannel";
    case ErrorKind::kIoError: return "IoError";
    case ErrorKind::kBadFormat: return "BadFormat";
  }
  return "Unknown";
}

// Every failure raised by the library carries a kind so callers (and the
// CLI exit-code mapping) can dispatch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace rsrl

#endif  // RSRL_ERROR_HPP
