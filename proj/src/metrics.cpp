// Copyright 2026 The fairlds Authors
// SPDX-License-Identifier: Apache-2.0

#include "lds/metrics.hpp"

#include <cmath>
#include <numeric>

namespace lds {

namespace {

constexpr double kSimplexTolerance = 1e-9;

void check_simplex(std::span<const double> p, const char* name) {
  double sum = 0.0;
  for (double v : p) {
    require(std::isfinite(v) && v >= 0.0, ErrorKind::kInvalidInput,
            std::string(name) + ": probabilities must be finite and non-negative");
    sum += v;
  }
  require(std::abs(sum - 1.0) <= kSimplexTolerance, ErrorKind::kInvalidInput,
          std::string(name) + ": probabilities sum to " + std::to_string(sum));
}

}  // namespace

JointDistribution::JointDistribution(AttributeSchema schema, std::vector<double> mass,
                                     double smoothing, std::size_t sample_count,
                                     std::vector<std::size_t> cell_counts)
    : schema_(std::move(schema)),
      mass_(std::move(mass)),
      total_(0.0),
      counts_(std::move(cell_counts)),
      smoothing_(smoothing),
      sample_count_(sample_count) {
  require(mass_.size() == schema_.cell_count(), ErrorKind::kDimension,
          "joint distribution needs one mass per attribute cell");
  for (double v : mass_) {
    require(std::isfinite(v) && v >= 0.0, ErrorKind::kInvalidInput, "invalid cell mass");
    total_ += v;
  }
  require(total_ > 0.0, ErrorKind::kInvalidInput, "joint distribution has no mass");
  require(counts_.empty() || counts_.size() == mass_.size(), ErrorKind::kDimension,
          "cell counts must match the cell table");
  probs_.resize(mass_.size());
  for (std::size_t c = 0; c < mass_.size(); ++c) probs_[c] = mass_[c] / total_;
}

JointDistribution JointDistribution::from_probabilities(AttributeSchema schema,
                                                        std::vector<double> probs) {
  check_simplex(probs, "joint distribution");
  return JointDistribution(std::move(schema), std::move(probs), 0.0, 0);
}

std::size_t JointDistribution::target_of(std::size_t cell) const {
  const std::size_t n = schema_.attribute_count();
  std::size_t idx = 0;
  for (auto a : schema_.target_indices()) idx = (idx << 1) | ((cell >> (n - 1 - a)) & 1u);
  return idx;
}

std::size_t JointDistribution::context_of(std::size_t cell) const {
  const std::size_t n = schema_.attribute_count();
  std::size_t idx = 0;
  for (auto a : schema_.context_indices()) idx = (idx << 1) | ((cell >> (n - 1 - a)) & 1u);
  return idx;
}

// Marginals sum masses before normalizing, so with zero smoothing they equal
// raw frequencies exactly.
std::vector<double> JointDistribution::target_marginal() const {
  std::vector<double> m(schema_.subgroup_count(), 0.0);
  for (std::size_t c = 0; c < mass_.size(); ++c) m[target_of(c)] += mass_[c];
  for (double& v : m) v /= total_;
  return m;
}

std::vector<std::size_t> JointDistribution::subgroup_counts() const {
  if (counts_.empty()) return {};
  std::vector<std::size_t> out(schema_.subgroup_count(), 0);
  for (std::size_t c = 0; c < counts_.size(); ++c) out[target_of(c)] += counts_[c];
  return out;
}

std::vector<double> JointDistribution::context_conditional(std::size_t subgroup) const {
  require(subgroup < schema_.subgroup_count(), ErrorKind::kInvalidInput,
          "subgroup index out of range");
  std::vector<double> cond(std::size_t{1} << schema_.context_count(), 0.0);
  double denom = 0.0;
  for (std::size_t c = 0; c < mass_.size(); ++c) {
    if (target_of(c) != subgroup) continue;
    cond[context_of(c)] += mass_[c];
    denom += mass_[c];
  }
  require(denom > 0.0, ErrorKind::kSupportMismatch,
          "conditional undefined: subgroup " + std::to_string(subgroup) + " has zero mass");
  for (double& v : cond) v /= denom;
  return cond;
}

JointDistribution estimate_distribution(std::span<const AttributeLabel> labels,
                                        const AttributeSchema& schema, double pseudo_count) {
  require(!labels.empty(), ErrorKind::kInvalidInput, "estimate_distribution: no labels");
  require(std::isfinite(pseudo_count) && pseudo_count >= 0.0, ErrorKind::kInvalidInput,
          "pseudo_count must be >= 0");
  std::vector<double> mass(schema.cell_count(), pseudo_count);
  std::vector<std::size_t> counts(schema.cell_count(), 0);
  const std::size_t n = schema.attribute_count();
  for (const auto& label : labels) {
    require(label.size() == n, ErrorKind::kDimension,
            "label has " + std::to_string(label.size()) + " bits, schema has " +
                std::to_string(n) + " attributes");
    std::size_t cell = 0;
    for (std::size_t i = 0; i < n; ++i) cell = (cell << 1) | label[i];
    mass[cell] += 1.0;
    counts[cell] += 1;
  }
  return JointDistribution(schema, std::move(mass), pseudo_count, labels.size(),
                           std::move(counts));
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  require(p.size() == q.size(), ErrorKind::kDimension, "kl_divergence: length mismatch");
  check_simplex(p, "kl_divergence p");
  check_simplex(q, "kl_divergence q");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    require(q[i] > 0.0, ErrorKind::kSupportMismatch,
            "kl_divergence: q is zero where p is positive (index " + std::to_string(i) + ")");
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return kl;
}

double imbalance_score(const JointDistribution& dist) {
  const auto marginal = dist.target_marginal();
  const std::vector<double> uniform(marginal.size(), 1.0 / static_cast<double>(marginal.size()));
  return kl_divergence(marginal, uniform);
}

FairnessReport fairness_discrepancy(const JointDistribution& fair,
                                    const JointDistribution& reference, double beta,
                                    std::string reference_id) {
  require(fair.schema() == reference.schema(), ErrorKind::kInvalidInput,
          "fairness_discrepancy: schemas differ");
  require(std::isfinite(beta) && beta >= 0.0, ErrorKind::kInvalidInput, "beta must be >= 0");

  FairnessReport report;
  report.beta = beta;
  report.imbalance = imbalance_score(fair);
  report.smoothing = fair.smoothing();
  report.sample_count = fair.sample_count();
  report.per_subgroup_counts = fair.subgroup_counts();
  report.reference_id = std::move(reference_id);

  const auto weights = fair.target_marginal();
  double cond = 0.0;
  for (std::size_t a = 0; a < weights.size(); ++a) {
    if (weights[a] == 0.0) continue;
    cond += weights[a] * kl_divergence(fair.context_conditional(a), reference.context_conditional(a));
  }
  report.conditional_kl = cond;
  report.discrepancy = report.imbalance + beta * cond;
  return report;
}

std::vector<std::size_t> subgroup_counts(std::span<const AttributeLabel> labels,
                                         const AttributeSchema& schema) {
  std::vector<std::size_t> counts(schema.subgroup_count(), 0);
  for (const auto& label : labels) {
    require(label.size() == schema.attribute_count(), ErrorKind::kDimension,
            "label/schema length mismatch");
    counts[subgroup_index(label.select(schema.target_indices()), schema.target_count())] += 1;
  }
  return counts;
}

}  // namespace lds
