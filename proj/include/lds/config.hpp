// Copyright 2026 The fairlds Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "lds/sampler.hpp"
#include "lds/synthetic.hpp"

namespace lds {

enum class BackendKind { kSynthetic, kExec };
enum class ReportFormat { kTable, kStructured };

struct BackendSelection {
  BackendKind kind = BackendKind::kSynthetic;
  std::string command;  // exec only
  int timeout_ms = 30000;

  bool operator==(const BackendSelection&) const = default;
};

struct SyntheticSettings {
  SkewedWorldOptions world;
  std::uint64_t backend_seed = 0;
  TransformSpec transform;
  std::string transform_attribute;

  bool operator==(const SyntheticSettings&) const = default;
};

/// Everything a command needs. An empty schema means "derive from the
/// backend": every backend attribute, with the first one as the only target.
struct RunConfig {
  PipelineConfig pipeline;
  BackendSelection backend;
  SyntheticSettings synthetic;
  std::string artifacts = "artifacts";
  ReportFormat format = ReportFormat::kTable;

  bool operator==(const RunConfig&) const = default;
};

/// The synthetic world used when the config does not describe one.
SkewedWorldOptions default_world();
RunConfig default_run_config();

/// INI-style document: `[section]` headers, `key = value` lines, `#` or `;`
/// comments. Unknown sections or keys, bad values, duplicate keys and a
/// total_n not divisible by the subgroup count are parse errors naming the
/// key and line.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);

/// Canonical document listing every key; parse_config(emit_config(c)) == c.
std::string emit_config(const RunConfig& config);

/// SHA-256 of the canonical document minus the [output] section, so moving
/// the artifact directory does not change it.
std::string config_digest(const RunConfig& config);

/// "synthetic" or "exec:<command>".
BackendSelection parse_backend_flag(std::string_view flag);

std::unique_ptr<Backend> make_backend(const RunConfig& config);

/// Fills an empty schema from the backend and validates the pipeline config.
void resolve_schema(RunConfig& config, const BackendInfo& info);

}  // namespace lds
