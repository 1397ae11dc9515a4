// Copyright 2026 The fairlds Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lds/config.hpp"

namespace lds {

// Artifact file names inside the artifact directory.
inline constexpr const char* kBoundariesFile = "boundaries.lds";
inline constexpr const char* kFairSetFile = "fair_set.ldsl";
inline constexpr const char* kMixturesFile = "mixtures.lds";
inline constexpr const char* kFairReportFile = "fair_report.lds";
inline constexpr const char* kMetricsReportFile = "metrics_report.lds";
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kLockFile = ".lock";

/// Exit status for an error kind: parse 2, precondition 3, backend 4,
/// pipeline 5, io/corruption 6.
int exit_code(ErrorKind kind);

// Each command writes its artifacts plus the manifest and returns the text
// to print (a table or the structured payload, per config.format).

std::string cmd_boundaries_train(const RunConfig& config);
std::string cmd_sample_fair(const RunConfig& config);
std::string cmd_sample_ablation(const RunConfig& config, AblationVariant variant);
std::string cmd_sweep(const RunConfig& config, SweepParam param, const std::vector<double>& values);
std::string cmd_metrics_report(const RunConfig& config);
/// `classifier` defaults to the configured backend.
std::string cmd_audit_classifier(const RunConfig& config, const std::string& attribute,
                                 const std::optional<BackendSelection>& classifier);
/// `transform` defaults to the configured backend; scoring always uses it.
std::string cmd_audit_transform(const RunConfig& config, const std::vector<std::string>& attributes,
                                const std::optional<BackendSelection>& transform);

}  // namespace lds
