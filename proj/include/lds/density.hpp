// Copyright 2026 The fairlds Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "lds/backend.hpp"

namespace lds {

enum class CovarianceMode { kDiagonal, kFull };

struct FitMeta {
  double log_likelihood = 0.0;  // total over the training set, nats
  std::size_t iterations = 0;   // M-steps taken by the winning restart
  std::size_t restarts = 0;
  bool converged = false;
  std::vector<double> trace;  // log-likelihood before each M-step, then final
};

/// Finite Gaussian mixture in the edit space. Diagonal mode keeps one variance
/// vector per component (`variances`, k x dim); full mode keeps `covariances`.
struct GaussianMixture {
  CovarianceMode mode = CovarianceMode::kDiagonal;
  Eigen::VectorXd weights;
  Eigen::MatrixXd means;
  Eigen::MatrixXd variances;
  std::vector<Eigen::MatrixXd> covariances;
  FitMeta fit_meta;

  std::size_t k() const { return static_cast<std::size_t>(weights.size()); }
  std::size_t dim() const { return static_cast<std::size_t>(means.cols()); }
  /// Throws unless weights lie on the simplex and covariances are usable.
  void validate() const;
};

struct EmConfig {
  CovarianceMode mode = CovarianceMode::kDiagonal;
  double variance_floor = 1e-6;
  std::size_t n_init = 3;
  std::size_t max_iterations = 200;
  double tolerance = 1e-4;  // relative log-likelihood change
  std::size_t min_points_per_component = 10;

  bool operator==(const EmConfig&) const = default;
};

/// Best-of-n_init EM fit with k-means++ seeding. Every fit asserts that the
/// log-likelihood never decreases by more than 1e-9 * max(1, |LL|).
GaussianMixture fit_gmm(const LatentSet& latents, std::size_t k, const EmConfig& config, Rng& rng);

/// ln sum_j w_j N(z; mu_j, Sigma_j), via log-sum-exp.
double gmm_log_density(const GaussianMixture& model, const CodeRef& z);

/// Sum of gmm_log_density over the rows of `latents`.
double gmm_log_likelihood(const GaussianMixture& model, const LatentSet& latents);

LatentSet sample_gmm(const GaussianMixture& model, std::size_t n, Rng& rng);

/// True for every row whose target-column labels equal `target` exactly.
/// Rows with a non-finite score never match.
std::vector<bool> label_mask(const ScoreMatrix& scores, const AttributeLabel& target,
                             const std::vector<std::size_t>& target_columns);

struct FilterResult {
  LatentSet kept;
  std::size_t input_count = 0;
  double acceptance_rate = 0.0;
};

/// Keeps, in order, the codes whose target labels match. Throws a low-yield
/// error when the acceptance rate falls below `min_acceptance`.
FilterResult filter_by_label(const LatentSet& latents, const AttributeLabel& target,
                             Backend& backend, const std::vector<std::size_t>& target_columns,
                             double min_acceptance = 0.01);

struct Provenance {
  std::size_t n_edited = 0;
  std::size_t n_kept_after_filter = 0;
  std::size_t n_gmm_sampled = 0;
  std::size_t shortfall = 0;  // requested minus delivered codes
  std::size_t resample_rejections = 0;
};

struct SubgroupLatentSet {
  AttributeLabel target;
  LatentSet latents;
  Provenance provenance;
};

}  // namespace lds
