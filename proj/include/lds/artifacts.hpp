// Copyright 2026 The fairlds Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lds/audit.hpp"
#include "lds/sampler.hpp"

namespace lds {

inline constexpr int kArtifactVersion = 1;
/// "LDSL", u32 version, u64 rows, u64 cols; all little-endian.
inline constexpr std::size_t kLatentHeaderBytes = 24;

enum class ArtifactKind { kBoundary, kGmm, kLatentSet, kReport };

std::string_view to_string(ArtifactKind kind);
ArtifactKind parse_artifact_kind(std::string_view name);

std::string sha256_hex(std::string_view data);

/// Text envelope: a `lds-artifact <version>` line, `key: value` metadata,
/// a `---` line, then the payload. The payload digest is computed on render.
struct Envelope {
  int version = kArtifactVersion;
  ArtifactKind kind = ArtifactKind::kReport;
  std::uint64_t seed = 0;
  std::string config_digest;
  std::string created;
  std::string payload;
};

std::string render_envelope(const Envelope& envelope);
/// Throws kVersion for a newer format and kCorruption on a digest mismatch
/// or a damaged header. `source` names the file in messages.
Envelope parse_envelope(std::string_view text, const std::string& source);

/// UTC ISO-8601 time, taken from SOURCE_DATE_EPOCH when set.
std::string creation_timestamp();

std::string read_file(const std::string& path);
/// Writes through a temporary file and rename.
void write_file(const std::string& path, std::string_view bytes);
bool file_exists(const std::string& path);

std::string encode_latent_file(const LatentSet& latents);
LatentSet decode_latent_file(std::string_view bytes, const std::string& source);

std::string boundaries_payload(const std::vector<SemanticBoundary>& boundaries);
std::vector<SemanticBoundary> parse_boundaries_payload(std::string_view payload);

/// One entry per subgroup; subgroups that produced no mixture are null.
std::string mixtures_payload(const std::vector<AttributeLabel>& targets,
                             const std::vector<std::optional<GaussianMixture>>& mixtures);
std::vector<std::optional<GaussianMixture>> parse_mixtures_payload(std::string_view payload);

std::string fairness_payload(const std::string& title, const FairnessReport& fair,
                             const FairnessReport& baseline);
FairnessReport parse_fairness_payload(std::string_view payload, FairnessReport* baseline);
std::string sweep_payload(const SweepReport& report);
std::string error_audit_payload(const ErrorAuditReport& report);
std::string alternation_payload(const AlternationReport& report);

/// Latent-set metadata kept in the sidecar: subgroup order and sizes.
struct LatentSetMeta {
  std::vector<std::string> target_names;
  std::vector<AttributeLabel> targets;
  std::vector<std::size_t> counts;
  std::vector<Provenance> provenance;
  std::string data_sha256;
};

std::string latent_meta_payload(const LatentSetMeta& meta);
LatentSetMeta parse_latent_meta_payload(std::string_view payload);

/// Writes `<path>` (binary) and `<path>.meta` (envelope). Returns the
/// sidecar text.
std::string save_fair_set(const std::string& path, const FairLatentSet& set,
                          const Envelope& header);
/// Reads both files, checks digests, and splits rows back into subgroups.
std::vector<SubgroupLatentSet> load_fair_set(const std::string& path, LatentSetMeta* meta = nullptr,
                                             Envelope* header = nullptr);

}  // namespace lds
