// Copyright 2026 The fairlds Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lds/boundaries.hpp"
#include "lds/density.hpp"
#include "lds/editing.hpp"
#include "lds/metrics.hpp"

namespace lds {

struct PipelineConfig {
  AttributeSchema schema;
  double alpha_magnitude = 3.0;
  std::size_t n_edit = 2500;
  std::size_t gmm_k = 10;
  std::size_t total_n = 10000;
  double beta = 0.1;
  double extreme_fraction = 0.02;
  std::size_t corpus_n = 50000;
  bool resample_gmm_check = false;
  std::size_t resample_retry_cap = 10;
  double min_acceptance = 0.01;
  double pseudo_count = 0.5;
  double orthogonality_threshold = 0.2;
  bool allow_non_orthogonal = false;
  EmConfig em;
  SvmConfig svm;
  std::uint64_t seed = 0;

  std::size_t per_subgroup() const { return total_n / schema.subgroup_count(); }
  void validate() const;

  bool operator==(const PipelineConfig&) const = default;
};

struct FairLatentSet {
  std::vector<SubgroupLatentSet> subgroups;  // ordered by subgroup index
  PipelineConfig config;

  std::size_t size() const;
  /// Every subgroup's codes stacked in subgroup order.
  LatentSet stacked() const;
  /// Target label of each stacked row (membership, not re-scoring).
  std::vector<AttributeLabel> membership() const;
};

/// Subgroup sampling result together with its fitted mixture, if any.
struct SubgroupRun {
  SubgroupLatentSet set;
  std::optional<GaussianMixture> mixture;
};

/// Edit toward `target`, filter by label, fit a GMM, sample `n` codes. A
/// low-yield filter triggers one doubling of n_edit before failing.
SubgroupRun conditional_sample(Backend& backend, const std::vector<SemanticBoundary>& boundaries,
                               const AttributeLabel& target, std::size_t n,
                               const PipelineConfig& config, Rng& rng);

FairLatentSet compose_fair_set(std::vector<SubgroupLatentSet> parts, const PipelineConfig& config);

struct PipelineResult {
  FairLatentSet fair;
  std::vector<SemanticBoundary> boundaries;
  std::vector<std::optional<GaussianMixture>> mixtures;
  FairnessReport report;
  FairnessReport baseline;
};

/// Boundaries for the schema's target attributes, trained on a fresh corpus.
std::vector<SemanticBoundary> train_target_boundaries(Backend& backend, const PipelineConfig& config);

/// Labels of `latents` over the schema, re-scored by the backend. Rows the
/// backend cannot score are dropped and counted in `skipped`.
std::vector<AttributeLabel> rescore_labels(Backend& backend, const LatentSet& latents,
                                           const AttributeSchema& schema,
                                           std::size_t* skipped = nullptr);

/// Distribution of `total_n` unshifted prior draws on the baseline stream.
JointDistribution baseline_distribution(Backend& backend, const PipelineConfig& config);

PipelineResult run_pipeline(Backend& backend, const PipelineConfig& config,
                            const std::vector<SemanticBoundary>* boundaries = nullptr);

enum class AblationVariant { kFull, kNoEdit, kNoFilter, kNoGmm };

std::string_view to_string(AblationVariant v);
AblationVariant parse_variant(std::string_view name);

/// full: run_pipeline. no_edit: filter raw prior draws, then fit and sample.
/// no_filter: fit directly on edited codes. no_gmm: output edited codes.
PipelineResult run_ablation(AblationVariant variant, Backend& backend, const PipelineConfig& config,
                            const std::vector<SemanticBoundary>* boundaries = nullptr);

enum class SweepParam { kAlpha, kNEdit, kGmmK };

std::string_view to_string(SweepParam p);
SweepParam parse_sweep_param(std::string_view name);

struct SweepEntry {
  double value = 0.0;
  std::optional<FairnessReport> report;
  std::string error;  // set when the point failed
};

struct SweepReport {
  SweepParam param = SweepParam::kAlpha;
  std::vector<SweepEntry> entries;
  FairnessReport baseline;
};

/// One run_pipeline per value under the same seed; failed points are
/// recorded and the sweep continues.
SweepReport hyperparameter_sweep(SweepParam param, const std::vector<double>& values,
                                 Backend& backend, const PipelineConfig& config,
                                 const std::vector<SemanticBoundary>* boundaries = nullptr);

}  // namespace lds
