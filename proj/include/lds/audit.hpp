// Copyright 2026 The fairlds Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "lds/density.hpp"

namespace lds {

/// Printed at the top of every audit table.
inline constexpr const char* kCircularityNote =
    "ground truth = subgroup membership assigned by the generating scorer; "
    "a biased scorer biases these rates";

struct ErrorAuditReport {
  std::string attribute;
  std::vector<AttributeLabel> subgroups;
  std::vector<double> error_rates;  // NaN when every sample was skipped
  std::vector<std::size_t> sizes;
  std::vector<std::size_t> skipped;
  /// Unweighted means of the subgroup rates, split by the audited bit.
  double positive_mean = 0.0;
  double negative_mean = 0.0;
};

/// Error rate per subgroup: fraction of scorable samples whose classifier
/// label differs from the subgroup's bit for `attribute`. `target_names`
/// gives the attribute of each subgroup bit.
ErrorAuditReport classifier_error_audit(const std::vector<SubgroupLatentSet>& sets,
                                        const std::vector<std::string>& target_names,
                                        Backend& classifier, const std::string& attribute);

struct AlternationReport {
  std::vector<std::string> attributes;
  std::vector<AttributeLabel> subgroups;
  /// rates[a][s]: share of subgroup s whose label for attributes[a] changed.
  std::vector<std::vector<double>> rates;
  std::vector<std::size_t> sizes;
  std::vector<std::size_t> skipped;
};

/// Scores each input before and after `transform` with `scorer`. Items the
/// transform or scorer fails on are skipped and excluded from the rates.
AlternationReport transform_alternation_audit(const std::vector<SubgroupLatentSet>& sets,
                                              Backend& transform, Backend& scorer,
                                              const std::vector<std::string>& attributes);

std::string format_table(const ErrorAuditReport& report);
std::string format_table(const AlternationReport& report);

}  // namespace lds
