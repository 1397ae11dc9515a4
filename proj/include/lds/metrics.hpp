// Copyright 2026 The fairlds Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include "lds/core.hpp"

namespace lds {

/// Smoothed empirical distribution over all 2^(m+m') attribute cells. Cells
/// are indexed big-endian over the schema's attribute order.
class JointDistribution {
 public:
  /// Builds from unnormalized cell masses (counts plus pseudo-counts).
  JointDistribution(AttributeSchema schema, std::vector<double> mass, double smoothing,
                    std::size_t sample_count, std::vector<std::size_t> cell_counts = {});

  /// Wraps an explicit probability table; used for analytic references.
  static JointDistribution from_probabilities(AttributeSchema schema, std::vector<double> probs);

  const AttributeSchema& schema() const { return schema_; }
  const std::vector<double>& probs() const { return probs_; }
  double smoothing() const { return smoothing_; }
  std::size_t sample_count() const { return sample_count_; }
  /// Raw per-cell counts; empty for analytic distributions.
  const std::vector<std::size_t>& cell_counts() const { return counts_; }
  /// Raw counts aggregated per target subgroup; empty for analytic distributions.
  std::vector<std::size_t> subgroup_counts() const;

  /// P(A_t), indexed by subgroup_index over the schema's target order.
  std::vector<double> target_marginal() const;
  /// P(A_c | a_t) for one target subgroup, indexed big-endian over context order.
  std::vector<double> context_conditional(std::size_t subgroup) const;

 private:
  std::size_t target_of(std::size_t cell) const;
  std::size_t context_of(std::size_t cell) const;

  AttributeSchema schema_;
  std::vector<double> mass_;
  double total_;
  std::vector<double> probs_;
  std::vector<std::size_t> counts_;
  double smoothing_;
  std::size_t sample_count_;
};

struct FairnessReport {
  double imbalance = 0.0;        // f_u, nats
  double conditional_kl = 0.0;   // weighted context-conditional divergence, nats
  double discrepancy = 0.0;      // f = f_u + beta * conditional_kl
  double beta = 0.0;
  std::vector<std::size_t> per_subgroup_counts;
  std::size_t sample_count = 0;
  double smoothing = 0.0;
  std::string reference_id;
};

/// probs[c] = (count(c) + pseudo) / (N + pseudo * cells).
JointDistribution estimate_distribution(std::span<const AttributeLabel> labels,
                                        const AttributeSchema& schema, double pseudo_count = 0.5);

/// Sum p log(p/q) in nats with 0 log 0 = 0.
double kl_divergence(std::span<const double> p, std::span<const double> q);

/// KL of the target marginal against the uniform distribution over 2^m cells.
double imbalance_score(const JointDistribution& dist);

FairnessReport fairness_discrepancy(const JointDistribution& fair,
                                    const JointDistribution& reference, double beta,
                                    std::string reference_id = {});

/// Raw per-subgroup counts of the target bits among `labels`.
std::vector<std::size_t> subgroup_counts(std::span<const AttributeLabel> labels,
                                         const AttributeSchema& schema);

}  // namespace lds
