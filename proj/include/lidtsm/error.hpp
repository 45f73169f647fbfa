// lidtsm/error.hpp

// Copyright 2026  The lidtsm Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lidtsm {

enum class ErrorCode {
  kMissingFile,
  kBadContainer,
  kUnsupportedEncoding,
  kMultiChannel,
  kUnwritablePath,
  kEmptyInput,
  kInvalidArgument,
  kTooShort,
  kShapeMismatch,
  kNonFinite,
  kDiverged,
  kConfig,
  kIo,
};

inline std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingFile: return "missing_file";
    case ErrorCode::kBadContainer: return "bad_container";
    case ErrorCode::kUnsupportedEncoding: return "unsupported_encoding";
    case ErrorCode::kMultiChannel: return "multi_channel";
    case ErrorCode::kUnwritablePath: return "unwritable_path";
    case ErrorCode::kEmptyInput: return "empty_input";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kTooShort: return "too_short";
    case ErrorCode::kShapeMismatch: return "shape_mismatch";
    case ErrorCode::kNonFinite: return "non_finite";
    case ErrorCode::kDiverged: return "diverged";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

/// Every failure in the library surfaces as this exception; code() is stable
/// and machine-readable, what() carries the human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string &message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string &message) {
  if (!condition) fail(code, message);
}

}  // namespace lidtsm
