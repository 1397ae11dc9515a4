// Copyright 2026 The fairlds Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "lds/boundaries.hpp"

namespace lds {

/// Signed magnitudes per target boundary: alpha_i > 0 iff target bit i is 1.
struct EditPlan {
  std::vector<SemanticBoundary> boundaries;
  std::vector<double> alphas;
  AttributeLabel target;

  static EditPlan make(std::vector<SemanticBoundary> boundaries, const AttributeLabel& target,
                       double magnitude);
};

struct EditOptions {
  double orthogonality_threshold = 0.2;
  /// Apply the multi-attribute edit even when normals are far from orthogonal.
  bool allow_non_orthogonal = false;
};

/// n^T z; the boundary intercept is deliberately not part of the distance.
double signed_distance(const CodeRef& z, const SemanticBoundary& boundary);

/// Moves z onto the hyperplane through the origin, then `alpha` along the
/// normal: z - (n^T z) n + alpha n.
LatentCode edit_single(const CodeRef& z, const SemanticBoundary& boundary, double alpha);

/// z - sum_i [(n_i^T z) n_i - alpha_i n_i], all distances taken on the input.
LatentCode edit_multi(const CodeRef& z, const EditPlan& plan, const EditOptions& options = {});

/// Row-wise edit_multi; the plan is validated once.
LatentSet edit_set(const LatentSet& latents, const EditPlan& plan, const EditOptions& options = {});

/// Throws a precondition error listing boundary pairs whose |cos| exceeds the
/// threshold, unless the options allow it.
void validate_plan(const EditPlan& plan, const EditOptions& options);

/// n_edit prior draws pushed through edit_multi.
LatentSet build_edit_batch(Backend& backend, const EditPlan& plan, std::size_t n_edit, Rng& rng,
                           const EditOptions& options = {});

}  // namespace lds
