// Copyright 2026 The fairlds Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lds/backend.hpp"

namespace lds {

struct ScoredCorpus {
  LatentSet latents;
  ScoreMatrix scores;
  std::vector<std::string> attributes;
};

struct BoundaryMeta {
  std::size_t corpus_size = 0;
  double extreme_fraction = 0.0;
  double train_accuracy = 0.0;
};

/// Hyperplane for one attribute: unit normal pointing toward the positive
/// class plus the intercept of the trained classifier. Editing uses only the
/// normal.
struct SemanticBoundary {
  std::string attribute;
  LatentCode normal;
  double intercept = 0.0;
  BoundaryMeta meta;
};

struct SvmConfig {
  double lambda = 1e-3;
  std::size_t epochs = 2000;
  std::uint64_t seed = 0;

  bool operator==(const SvmConfig&) const = default;
};

struct ExtremeSets {
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
};

struct OrthogonalityReport {
  Eigen::MatrixXd cosines;
  std::vector<std::pair<std::size_t, std::size_t>> flagged;  // i < j with |cos| > threshold
  double threshold = 0.2;
};

/// Draws `n` prior codes and scores them for every backend attribute.
ScoredCorpus collect_corpus(Backend& backend, std::size_t n, Rng& rng);

/// The ceil(fraction * N) highest and lowest scores. Ties go to the lower
/// original index first.
ExtremeSets select_extremes(std::span<const double> scores, double fraction);
ExtremeSets select_extremes(const ScoredCorpus& corpus, const std::string& attribute,
                            double fraction);

/// Linear SVM (L2-regularized hinge loss) trained by Pegasos-style stochastic
/// subgradient descent with step 1/(lambda t) and suffix averaging. Inputs are
/// centered and divided by one pooled standard deviation; the learned
/// hyperplane is mapped back to raw coordinates and unit-normalized.
SemanticBoundary train_boundary(const LatentSet& positives, const LatentSet& negatives,
                                const SvmConfig& config, std::string attribute = {});

OrthogonalityReport orthogonality_matrix(std::span<const SemanticBoundary> boundaries,
                                         double warn_threshold = 0.2);

struct BoundaryTrainingConfig {
  std::size_t corpus_n = 50000;
  double extreme_fraction = 0.02;
  SvmConfig svm;
};

/// Corpus collection + extremes + SVM for every listed attribute.
std::vector<SemanticBoundary> train_boundaries(Backend& backend,
                                               const std::vector<std::string>& attributes,
                                               const BoundaryTrainingConfig& config, Rng& rng);

}  // namespace lds
