// Copyright 2026 The fairlds Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lds {

enum class ErrorKind {
  kInvalidInput,
  kDimension,
  kNumeric,
  kSupportMismatch,
  kPrecondition,
  kLowYield,
  kBackend,
  kBackendLost,
  kIncompatibleBackend,
  kUnsupportedOp,
  kPipeline,
  kParse,
  kCorruption,
  kVersion,
  kMissingArtifact,
  kIo,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library. The kind drives CLI exit codes and
/// lets callers branch without a deep class hierarchy.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) throw Error(kind, message);
}

}  // namespace lds
