// Copyright 2026 The fairlds Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "lds/sampler.hpp"
#include "lds/synthetic.hpp"

namespace lds::testing {

// Axis-aligned world: identity mapping, attribute i planted on e_i.
inline SyntheticSpec axis_spec(std::size_t dim, std::vector<std::string> names,
                               ScoreMode mode = ScoreMode::kTanh) {
  SyntheticSpec spec;
  spec.dim = dim;
  spec.base_dim = dim;
  spec.mapping = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  spec.offset = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
  spec.mode = mode;
  for (std::size_t i = 0; i < names.size(); ++i) {
    PlantedAttribute a;
    a.name = names[i];
    a.normal = Eigen::VectorXd::Unit(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(i));
    spec.attributes.push_back(a);
  }
  spec.prior.push_back(PriorComponent{1.0, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim)), 1.0});
  return spec;
}

// Small threshold-skew world with two targets and one context attribute.
inline SkewedWorldOptions small_world(std::uint64_t seed, std::size_t dim = 16) {
  SkewedWorldOptions o;
  o.dim = dim;
  o.attributes = {"a0", "a1", "c0"};
  o.positive_rates = {0.15, 0.2, 0.3};
  o.threshold_skew = true;
  o.seed = seed;
  return o;
}

inline PipelineConfig small_config(std::uint64_t seed, std::vector<std::string> targets = {"a0", "a1"}) {
  PipelineConfig c;
  c.schema = AttributeSchema::from_names({"a0", "a1", "c0"}, targets);
  c.total_n = 1000;
  c.corpus_n = 5000;
  c.n_edit = 1500;
  c.seed = seed;
  return c;
}

}  // namespace lds::testing
