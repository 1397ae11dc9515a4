// Copyright 2026 The fairlds Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "lds/core.hpp"

namespace lds {

/// Largest number of latents carried in a single backend request.
inline constexpr std::size_t kMaxBatch = 4096;

struct BackendInfo {
  std::size_t dim = 0;
  std::vector<std::string> attributes;
  bool can_sample = true;
  bool can_score = true;
  bool can_transform = false;
};

/// Generator + attribute scorer (+ optional transform) seen through the edit
/// space. Scores are a deterministic function of the latent for one instance.
/// Rows of a score matrix may contain NaN for inputs the backend could not
/// score; callers treat those as skipped.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual const BackendInfo& info() const = 0;

  /// Draws `n` codes from the backend's prior in edit space.
  virtual LatentSet sample_prior(std::size_t n, Rng& rng) = 0;

  /// One score row per latent, one column per attribute, order preserved.
  virtual ScoreMatrix score(const LatentSet& latents) = 0;

  /// Latent-to-latent black box (e.g. a restoration model). Rows may be NaN for
  /// items the transform failed on.
  virtual LatentSet transform(const LatentSet& latents);
};

/// Scores in chunks of at most kMaxBatch rows.
ScoreMatrix score_batch(Backend& backend, const LatentSet& latents);
LatentSet transform_batch(Backend& backend, const LatentSet& latents);

/// Column position of each schema attribute in the backend's attribute list.
std::vector<std::size_t> attribute_columns(const BackendInfo& info,
                                           const std::vector<std::string>& names);

}  // namespace lds
