// Copyright 2026 The fairlds Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lds/error.hpp"

namespace lds {

// Latent codes live in the backend-declared edit space. Sets are row-major so
// that each code is a contiguous row.
using LatentCode = Eigen::VectorXd;
using LatentSet = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ScoreMatrix = LatentSet;
using CodeRef = Eigen::Ref<const Eigen::VectorXd>;

/// Ordered attribute names split into target attributes (which must end up
/// uniformly distributed) and context attributes (whose conditional
/// distribution given the targets should be preserved).
class AttributeSchema {
 public:
  AttributeSchema() = default;
  /// Context attributes are every index not listed in `target_indices`, in
  /// schema order.
  AttributeSchema(std::vector<std::string> names, std::vector<std::size_t> target_indices);
  AttributeSchema(std::vector<std::string> names, std::vector<std::size_t> target_indices,
                  std::vector<std::size_t> context_indices);

  static AttributeSchema from_names(std::vector<std::string> names,
                                    const std::vector<std::string>& targets);

  const std::vector<std::string>& names() const { return names_; }
  const std::vector<std::size_t>& target_indices() const { return targets_; }
  const std::vector<std::size_t>& context_indices() const { return contexts_; }

  std::size_t attribute_count() const { return names_.size(); }
  std::size_t target_count() const { return targets_.size(); }
  std::size_t context_count() const { return contexts_.size(); }
  std::size_t subgroup_count() const { return std::size_t{1} << targets_.size(); }
  std::size_t cell_count() const { return std::size_t{1} << names_.size(); }

  std::size_t index_of(const std::string& name) const;
  std::vector<std::string> target_names() const;

  bool operator==(const AttributeSchema&) const = default;

 private:
  void validate() const;

  std::vector<std::string> names_;
  std::vector<std::size_t> targets_;
  std::vector<std::size_t> contexts_;
};

/// Binary attribute vector; every entry is 0 or 1.
class AttributeLabel {
 public:
  AttributeLabel() = default;
  explicit AttributeLabel(std::vector<std::uint8_t> bits);

  std::size_t size() const { return bits_.size(); }
  std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  /// Restricts a full label to the given attribute positions.
  AttributeLabel select(std::span<const std::size_t> indices) const;
  std::string to_string() const;

  bool operator==(const AttributeLabel&) const = default;

 private:
  std::vector<std::uint8_t> bits_;
};

/// Unit step labeling: bit i is 1 iff scores[i] >= 0.
AttributeLabel make_label(std::span<const double> scores);

double dot(const CodeRef& a, const CodeRef& b);

/// Big-endian encoding: bit 0 is the most significant position.
std::size_t subgroup_index(const AttributeLabel& label, std::size_t m);
AttributeLabel subgroup_label(std::size_t index, std::size_t m);

/// Seeded random stream. Equal (seed, stream) pairs give identical draws.
/// Not thread-safe; derive one stream per task instead of sharing.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  double normal();
  double uniform();
  std::uint64_t next_u64();
  std::size_t index(std::size_t n);

  /// Independent child stream keyed by `substream`; does not advance this one.
  Rng derive(std::uint64_t substream) const;

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

std::uint64_t mix64(std::uint64_t x);

/// Counter-based generator usable wherever a UniformRandomBitGenerator is
/// expected. Cheap to construct, used for hash-keyed noise.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t state) : state_(state) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()();

 private:
  std::uint64_t state_;
};

void require_finite(const LatentSet& set, const char* what);

}  // namespace lds
