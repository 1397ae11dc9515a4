// Copyright 2026 The fairlds Authors
// SPDX-License-Identifier: Apache-2.0

#include "lds/editing.hpp"

#include <cmath>
#include <sstream>

namespace lds {

namespace {

constexpr double kUnitTolerance = 1e-9;

void require_unit(const SemanticBoundary& b) {
  require(std::abs(b.normal.norm() - 1.0) <= kUnitTolerance, ErrorKind::kInvalidInput,
          "boundary '" + b.attribute + "' does not have a unit normal");
}

}  // namespace

EditPlan EditPlan::make(std::vector<SemanticBoundary> boundaries, const AttributeLabel& target,
                        double magnitude) {
  require(std::isfinite(magnitude) && magnitude > 0.0, ErrorKind::kInvalidInput,
          "edit magnitude must be positive");
  require(boundaries.size() == target.size(), ErrorKind::kDimension,
          "edit plan needs one boundary per target bit");
  EditPlan plan;
  plan.boundaries = std::move(boundaries);
  plan.target = target;
  for (std::size_t i = 0; i < target.size(); ++i) {
    plan.alphas.push_back(target[i] ? magnitude : -magnitude);
  }
  return plan;
}

double signed_distance(const CodeRef& z, const SemanticBoundary& boundary) {
  require(z.size() == boundary.normal.size(), ErrorKind::kDimension,
          "signed_distance: dimension mismatch");
  return boundary.normal.dot(z);
}

LatentCode edit_single(const CodeRef& z, const SemanticBoundary& boundary, double alpha) {
  require(z.size() == boundary.normal.size(), ErrorKind::kDimension,
          "edit_single: dimension mismatch");
  require_unit(boundary);
  const double d = boundary.normal.dot(z);
  return z - d * boundary.normal + alpha * boundary.normal;
}

void validate_plan(const EditPlan& plan, const EditOptions& options) {
  require(!plan.boundaries.empty(), ErrorKind::kInvalidInput, "edit plan has no boundaries");
  require(plan.alphas.size() == plan.boundaries.size() &&
              plan.target.size() == plan.boundaries.size(),
          ErrorKind::kDimension, "edit plan: boundaries, alphas and target differ in length");
  const auto dim = plan.boundaries.front().normal.size();
  for (std::size_t i = 0; i < plan.boundaries.size(); ++i) {
    require(plan.boundaries[i].normal.size() == dim, ErrorKind::kDimension,
            "edit plan: boundary dimensions differ");
    require_unit(plan.boundaries[i]);
    const double a = plan.alphas[i];
    require(std::isfinite(a) && (plan.target[i] ? a > 0.0 : a < 0.0), ErrorKind::kInvalidInput,
            "edit plan: alpha sign must follow the target bit");
  }
  if (plan.boundaries.size() < 2 || options.allow_non_orthogonal) return;
  const auto report = orthogonality_matrix(plan.boundaries, options.orthogonality_threshold);
  if (report.flagged.empty()) return;
  std::ostringstream msg;
  msg << "boundary normals are not near-orthogonal (|cos| > " << options.orthogonality_threshold
      << "):";
  for (const auto& [i, j] : report.flagged) {
    msg << " (" << plan.boundaries[i].attribute << ", " << plan.boundaries[j].attribute
        << ": " << report.cosines(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))
        << ")";
  }
  fail(ErrorKind::kPrecondition, msg.str());
}

namespace {

LatentCode apply_plan(const CodeRef& z, const EditPlan& plan) {
  LatentCode out = z;
  for (std::size_t i = 0; i < plan.boundaries.size(); ++i) {
    const auto& n = plan.boundaries[i].normal;
    out -= (n.dot(z) - plan.alphas[i]) * n;
  }
  return out;
}

}  // namespace

LatentCode edit_multi(const CodeRef& z, const EditPlan& plan, const EditOptions& options) {
  validate_plan(plan, options);
  require(z.size() == plan.boundaries.front().normal.size(), ErrorKind::kDimension,
          "edit_multi: dimension mismatch");
  return apply_plan(z, plan);
}

LatentSet edit_set(const LatentSet& latents, const EditPlan& plan, const EditOptions& options) {
  validate_plan(plan, options);
  require(latents.cols() == plan.boundaries.front().normal.size(), ErrorKind::kDimension,
          "edit_set: dimension mismatch");
  LatentSet out(latents.rows(), latents.cols());
  for (Eigen::Index i = 0; i < latents.rows(); ++i) {
    out.row(i) = apply_plan(latents.row(i).transpose(), plan).transpose();
  }
  return out;
}

LatentSet build_edit_batch(Backend& backend, const EditPlan& plan, std::size_t n_edit, Rng& rng,
                           const EditOptions& options) {
  require(n_edit >= 1, ErrorKind::kInvalidInput, "build_edit_batch: n_edit must be >= 1");
  validate_plan(plan, options);
  require(static_cast<std::size_t>(plan.boundaries.front().normal.size()) == backend.info().dim,
          ErrorKind::kDimension, "build_edit_batch: boundaries do not match backend dimension");
  LatentSet prior(static_cast<Eigen::Index>(n_edit),
                  static_cast<Eigen::Index>(backend.info().dim));
  for (std::size_t begin = 0; begin < n_edit; begin += kMaxBatch) {
    const std::size_t count = std::min(kMaxBatch, n_edit - begin);
    LatentSet chunk = backend.sample_prior(count, rng);
    require(chunk.rows() == static_cast<Eigen::Index>(count) && chunk.cols() == prior.cols(),
            ErrorKind::kBackend, "backend returned a prior batch of the wrong shape");
    prior.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(count)) = chunk;
  }
  return edit_set(prior, plan, options);
}

}  // namespace lds
