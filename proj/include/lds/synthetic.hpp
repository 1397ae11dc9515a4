// Copyright 2026 The fairlds Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "lds/backend.hpp"

namespace lds {

/// Ground truth for one planted attribute. The score is
///   tanh(steepness * (normal.w - offset + bump * sigmoid((u - bump_threshold) / bump_width)))
/// plus seeded noise, where u = bump_direction.w (or its absolute value when
/// two-sided). With bump = 0 the score is a monotone function of a single
/// projection. A bump raises the score inside one region of the latent space,
/// so edits toward the negative side land on the wrong label there.
struct PlantedAttribute {
  std::string name;
  LatentCode normal;
  double offset = 0.0;
  double steepness = 1.0;
  double noise = 0.0;
  double bump = 0.0;
  LatentCode bump_direction;
  double bump_threshold = 0.0;
  double bump_width = 0.1;
  bool bump_two_sided = true;
};

/// Isotropic Gaussian in the base space.
struct PriorComponent {
  double weight = 1.0;
  LatentCode mean;
  double scale = 1.0;
};

enum class ScoreMode { kTanh, kLinear };

struct TransformSpec {
  enum class Kind { kNone, kIdentity, kMajorityRegressor };
  Kind kind = Kind::kNone;
  std::size_t attribute = 0;
  double gamma = 1.0;
  double center = 0.0;

  bool operator==(const TransformSpec&) const = default;
};

struct SyntheticSpec {
  std::size_t dim = 0;       // edit space
  std::size_t base_dim = 0;  // sampling space
  Eigen::MatrixXd mapping;   // dim x base_dim
  LatentCode offset;         // dim
  std::vector<PlantedAttribute> attributes;
  std::vector<PriorComponent> prior;
  ScoreMode mode = ScoreMode::kTanh;
  TransformSpec transform;
};

class SyntheticBackend final : public Backend {
 public:
  SyntheticBackend(SyntheticSpec spec, std::uint64_t seed);

  const BackendInfo& info() const override { return info_; }
  LatentSet sample_prior(std::size_t n, Rng& rng) override;
  ScoreMatrix score(const LatentSet& latents) override;
  LatentSet transform(const LatentSet& latents) override;

  /// Noise-free part of the score for one latent and attribute.
  double clean_score(const CodeRef& w, std::size_t attribute) const;

  /// Planted ground truth; meant for test oracles, not for the pipeline.
  const SyntheticSpec& ground_truth() const { return spec_; }
  std::uint64_t seed() const { return seed_; }

 private:
  SyntheticSpec spec_;
  std::uint64_t seed_;
  BackendInfo info_;
  std::vector<double> cumulative_weights_;
};

std::unique_ptr<SyntheticBackend> make_synthetic(SyntheticSpec spec, std::uint64_t seed);

/// Hash of a latent's bit pattern, keyed by `seed`.
std::uint64_t hash_latent(const CodeRef& w, std::uint64_t seed);

struct FlipRule {
  std::size_t attribute = 0;  // backend column whose label gets flipped
  double rate = 0.0;
  /// (column, bit) pairs that must all hold on the inner labels; empty = always.
  std::vector<std::pair<std::size_t, std::uint8_t>> when;
};

/// Classifier with planted errors: wraps a scorer and flips one attribute's
/// label for a seeded, latent-keyed fraction of the inputs matching a rule.
class FlipClassifier final : public Backend {
 public:
  FlipClassifier(Backend& inner, FlipRule rule, std::uint64_t seed);

  const BackendInfo& info() const override { return inner_.info(); }
  LatentSet sample_prior(std::size_t n, Rng& rng) override { return inner_.sample_prior(n, rng); }
  ScoreMatrix score(const LatentSet& latents) override;

 private:
  Backend& inner_;
  FlipRule rule_;
  std::uint64_t seed_;
};

/// Knobs for the standard skewed test world: orthonormal planted normals, a
/// base-space mixture with one pair of components per attribute (a product
/// mixture), and an optional anisotropic mapping.
struct SkewedWorldOptions {
  std::size_t dim = 64;
  std::vector<std::string> attributes;
  /// Prior weight of the positive-side component, one per attribute.
  std::vector<double> positive_rates;
  /// Offset of each component along its normal, in prior standard deviations.
  double separation = 3.0;
  /// Single Gaussian prior; skew comes from shifting each attribute's
  /// decision threshold to its positive-rate quantile instead.
  bool threshold_skew = false;
  double steepness = 1.0;
  double noise = 0.0;
  /// Bump height and the threshold (in prior standard deviations along the
  /// bump direction) beyond which it switches on.
  double bump = 0.0;
  double bump_threshold = 2.0;
  double bump_width = 0.1;
  bool bump_two_sided = true;
  /// Largest/smallest singular value of the mapping (1 = rotation).
  double anisotropy = 1.0;
  ScoreMode mode = ScoreMode::kTanh;
  std::uint64_t seed = 0;

  bool operator==(const SkewedWorldOptions&) const = default;
};

SyntheticSpec make_skewed_spec(const SkewedWorldOptions& options);

/// Condition number of a mapping matrix from its singular values.
double condition_number(const Eigen::MatrixXd& m);

}  // namespace lds
