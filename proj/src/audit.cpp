// Copyright 2026 The fairlds Authors
// SPDX-License-Identifier: Apache-2.0

#include "lds/audit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace lds {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::size_t position_of(const std::vector<std::string>& names, const std::string& name) {
  const auto it = std::find(names.begin(), names.end(), name);
  require(it != names.end(), ErrorKind::kInvalidInput, "audit: unknown attribute '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

double mean_of(const std::vector<double>& xs) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double x : xs) {
    if (std::isnan(x)) continue;
    sum += x;
    ++n;
  }
  return n == 0 ? kNaN : sum / static_cast<double>(n);
}

std::string percent(double x) {
  if (std::isnan(x)) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * x);
  return buf;
}

std::string render(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    width.resize(std::max(width.size(), row.size()), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) out << "  ";
      out << row[c];
      if (c + 1 < row.size()) out << std::string(width[c] - row[c].size(), ' ');
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace

ErrorAuditReport classifier_error_audit(const std::vector<SubgroupLatentSet>& sets,
                                        const std::vector<std::string>& target_names,
                                        Backend& classifier, const std::string& attribute) {
  require(!sets.empty(), ErrorKind::kInvalidInput, "audit: no subgroup sets");
  const std::size_t bit = position_of(target_names, attribute);
  const std::size_t column = attribute_columns(classifier.info(), {attribute}).front();

  ErrorAuditReport report;
  report.attribute = attribute;
  std::vector<double> pos;
  std::vector<double> neg;
  for (const auto& set : sets) {
    require(set.latents.rows() > 0, ErrorKind::kInvalidInput,
            "audit: subgroup " + set.target.to_string() + " is empty");
    require(set.target.size() == target_names.size(), ErrorKind::kDimension,
            "audit: subgroup label does not match the target attributes");
    const ScoreMatrix scores = score_batch(classifier, set.latents);
    const std::uint8_t truth = set.target[bit];
    std::size_t wrong = 0;
    std::size_t skipped = 0;
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
      const double s = scores(i, static_cast<Eigen::Index>(column));
      if (!std::isfinite(s)) {
        ++skipped;
        continue;
      }
      if ((s >= 0.0 ? 1u : 0u) != truth) ++wrong;
    }
    const auto n = static_cast<std::size_t>(set.latents.rows());
    const double rate =
        skipped == n ? kNaN : static_cast<double>(wrong) / static_cast<double>(n - skipped);
    report.subgroups.push_back(set.target);
    report.error_rates.push_back(rate);
    report.sizes.push_back(n);
    report.skipped.push_back(skipped);
    (truth ? pos : neg).push_back(rate);
  }
  report.positive_mean = mean_of(pos);
  report.negative_mean = mean_of(neg);
  return report;
}

AlternationReport transform_alternation_audit(const std::vector<SubgroupLatentSet>& sets,
                                              Backend& transform, Backend& scorer,
                                              const std::vector<std::string>& attributes) {
  require(!sets.empty(), ErrorKind::kInvalidInput, "audit: no subgroup sets");
  require(!attributes.empty(), ErrorKind::kInvalidInput, "audit: no attributes to audit");
  require(transform.info().can_transform, ErrorKind::kUnsupportedOp,
          "audit: backend has no transform capability");
  const auto columns = attribute_columns(scorer.info(), attributes);

  AlternationReport report;
  report.attributes = attributes;
  report.rates.assign(attributes.size(), {});
  for (const auto& set : sets) {
    require(set.latents.rows() > 0, ErrorKind::kInvalidInput,
            "audit: subgroup " + set.target.to_string() + " is empty");
    const ScoreMatrix before = score_batch(scorer, set.latents);
    const LatentSet moved = transform_batch(transform, set.latents);
    require(moved.rows() == set.latents.rows() && moved.cols() == set.latents.cols(),
            ErrorKind::kBackend, "audit: transform changed the batch shape");

    std::vector<bool> usable(static_cast<std::size_t>(moved.rows()));
    for (Eigen::Index i = 0; i < moved.rows(); ++i) {
      bool ok = moved.row(i).allFinite();
      for (std::size_t c : columns) ok = ok && std::isfinite(before(i, static_cast<Eigen::Index>(c)));
      usable[static_cast<std::size_t>(i)] = ok;
    }
    LatentSet kept_after(moved.rows(), moved.cols());
    Eigen::Index kept = 0;
    for (Eigen::Index i = 0; i < moved.rows(); ++i) {
      if (usable[static_cast<std::size_t>(i)]) kept_after.row(kept++) = moved.row(i);
    }
    const ScoreMatrix after = score_batch(scorer, kept_after.topRows(kept));

    std::vector<std::size_t> changed(attributes.size(), 0);
    std::size_t counted = 0;
    Eigen::Index j = 0;
    for (Eigen::Index i = 0; i < moved.rows(); ++i) {
      if (!usable[static_cast<std::size_t>(i)]) continue;
      const Eigen::Index row = j++;
      bool ok = true;
      for (std::size_t c : columns) ok = ok && std::isfinite(after(row, static_cast<Eigen::Index>(c)));
      if (!ok) {
        usable[static_cast<std::size_t>(i)] = false;
        continue;
      }
      ++counted;
      for (std::size_t a = 0; a < columns.size(); ++a) {
        const auto c = static_cast<Eigen::Index>(columns[a]);
        if ((before(i, c) >= 0.0) != (after(row, c) >= 0.0)) ++changed[a];
      }
    }
    const auto n = static_cast<std::size_t>(set.latents.rows());
    for (std::size_t a = 0; a < attributes.size(); ++a) {
      report.rates[a].push_back(counted == 0 ? kNaN
                                             : static_cast<double>(changed[a]) /
                                                   static_cast<double>(counted));
    }
    report.subgroups.push_back(set.target);
    report.sizes.push_back(n);
    report.skipped.push_back(n - counted);
  }
  return report;
}

std::string format_table(const ErrorAuditReport& report) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"subgroup", "n", "skipped", "error(" + report.attribute + ")"});
  for (std::size_t s = 0; s < report.subgroups.size(); ++s) {
    rows.push_back({report.subgroups[s].to_string(), std::to_string(report.sizes[s]),
                    std::to_string(report.skipped[s]), percent(report.error_rates[s])});
  }
  rows.push_back({report.attribute + "=1 mean", "", "", percent(report.positive_mean)});
  rows.push_back({report.attribute + "=0 mean", "", "", percent(report.negative_mean)});
  return std::string("# classifier error audit\n# ") + kCircularityNote + "\n" + render(rows);
}

std::string format_table(const AlternationReport& report) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"subgroup", "n", "skipped"};
  for (const auto& a : report.attributes) header.push_back("alt(" + a + ")");
  rows.push_back(std::move(header));
  for (std::size_t s = 0; s < report.subgroups.size(); ++s) {
    std::vector<std::string> row{report.subgroups[s].to_string(), std::to_string(report.sizes[s]),
                                 std::to_string(report.skipped[s])};
    for (const auto& r : report.rates) row.push_back(percent(r[s]));
    rows.push_back(std::move(row));
  }
  return std::string("# transform alternation audit\n# ") + kCircularityNote + "\n" + render(rows);
}

}  // namespace lds
