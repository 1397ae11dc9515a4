// Copyright 2026 The fairlds Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "lds/backend.hpp"

namespace lds {

inline constexpr int kWireVersion = 1;

// One JSON object per line. Arrays travel as {"rows", "cols", "f32le"} where
// f32le is base64 (standard alphabet, padded) of rows*cols little-endian
// 32-bit floats in row-major order. See docs/wire_protocol.md.

struct Handshake {
  int version = kWireVersion;
  std::size_t dim = 0;
  std::vector<std::string> attributes;
  bool can_sample = true;
  bool can_score = true;
  bool can_transform = false;
};

enum class WireOp { kSamplePrior, kScore, kTransform };

std::string_view to_string(WireOp op);

struct WireRequest {
  std::uint64_t id = 0;
  WireOp op = WireOp::kScore;
  std::size_t n = 0;       // sample_prior
  std::uint64_t seed = 0;  // sample_prior
  LatentSet array;         // score, transform
};

enum class WireStatus { kOk, kError, kUnsupported };

struct WireResponse {
  std::uint64_t id = 0;
  WireStatus status = WireStatus::kOk;
  std::string message;
  LatentSet array;
};

std::string encode_f32(const LatentSet& values);
/// Throws kBackend unless `text` decodes to exactly rows*cols floats.
LatentSet decode_f32(std::string_view text, std::size_t rows, std::size_t cols);

std::string encode_handshake(const Handshake& h);
std::string encode_request(const WireRequest& r);
std::string encode_response(const WireResponse& r);

// Parsers throw kBackend with the offending line attached. A request whose
// "op" is not recognized throws kUnsupportedOp.
Handshake parse_handshake(std::string_view line);
WireRequest parse_request(std::string_view line);
WireResponse parse_response(std::string_view line);

/// Best-effort id of a line that failed to parse; 0 when none is readable.
std::uint64_t salvage_id(std::string_view line);

struct ExternalConfig {
  int timeout_ms = 30000;
};

/// Backend proxied to a child process (run through /bin/sh -c) speaking the
/// wire protocol on its standard streams. One request in flight at a time.
class ExternalBackend final : public Backend {
 public:
  ExternalBackend(const std::string& command, ExternalConfig config);
  ~ExternalBackend() override;
  ExternalBackend(const ExternalBackend&) = delete;
  ExternalBackend& operator=(const ExternalBackend&) = delete;

  const BackendInfo& info() const override { return info_; }
  LatentSet sample_prior(std::size_t n, Rng& rng) override;
  ScoreMatrix score(const LatentSet& latents) override;
  LatentSet transform(const LatentSet& latents) override;

  /// Closes the child's input and reaps it, killing it after a grace period.
  void close();

 private:
  WireResponse call(WireRequest request);
  std::string read_line();
  void write_line(const std::string& line);

  std::string command_;
  ExternalConfig config_;
  int fd_ = -1;
  int pid_ = -1;
  std::string buffer_;
  std::uint64_t next_id_ = 1;
  BackendInfo info_;
};

std::unique_ptr<ExternalBackend> spawn_external(const std::string& command,
                                                ExternalConfig config = {});

}  // namespace lds
