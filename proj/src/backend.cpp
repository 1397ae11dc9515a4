// Copyright 2026 The fairlds Authors
// SPDX-License-Identifier: Apache-2.0

#include "lds/backend.hpp"

#include <algorithm>

namespace lds {

LatentSet Backend::transform(const LatentSet&) {
  fail(ErrorKind::kUnsupportedOp, "backend does not provide a transform");
}

ScoreMatrix score_batch(Backend& backend, const LatentSet& latents) {
  const auto& info = backend.info();
  require(latents.rows() == 0 || static_cast<std::size_t>(latents.cols()) == info.dim,
          ErrorKind::kDimension,
          "score_batch: latents have " + std::to_string(latents.cols()) +
              " columns, backend dim is " + std::to_string(info.dim));
  const auto n = static_cast<std::size_t>(latents.rows());
  ScoreMatrix out(latents.rows(), static_cast<Eigen::Index>(info.attributes.size()));
  for (std::size_t begin = 0; begin < n; begin += kMaxBatch) {
    const std::size_t count = std::min(kMaxBatch, n - begin);
    const auto b = static_cast<Eigen::Index>(begin);
    const auto c = static_cast<Eigen::Index>(count);
    ScoreMatrix chunk = backend.score(latents.middleRows(b, c));
    require(chunk.rows() == c && chunk.cols() == out.cols(), ErrorKind::kBackend,
            "backend returned a score matrix of the wrong shape");
    out.middleRows(b, c) = chunk;
  }
  return out;
}

LatentSet transform_batch(Backend& backend, const LatentSet& latents) {
  const auto& info = backend.info();
  require(info.can_transform, ErrorKind::kUnsupportedOp, "backend does not provide a transform");
  require(latents.rows() == 0 || static_cast<std::size_t>(latents.cols()) == info.dim,
          ErrorKind::kDimension, "transform_batch: dimension mismatch");
  const auto n = static_cast<std::size_t>(latents.rows());
  LatentSet out(latents.rows(), latents.cols());
  for (std::size_t begin = 0; begin < n; begin += kMaxBatch) {
    const std::size_t count = std::min(kMaxBatch, n - begin);
    const auto b = static_cast<Eigen::Index>(begin);
    const auto c = static_cast<Eigen::Index>(count);
    LatentSet chunk = backend.transform(latents.middleRows(b, c));
    require(chunk.rows() == c && chunk.cols() == latents.cols(), ErrorKind::kBackend,
            "backend returned a transform batch of the wrong shape");
    out.middleRows(b, c) = chunk;
  }
  return out;
}

std::vector<std::size_t> attribute_columns(const BackendInfo& info,
                                           const std::vector<std::string>& names) {
  std::vector<std::size_t> cols;
  cols.reserve(names.size());
  for (const auto& name : names) {
    auto it = std::find(info.attributes.begin(), info.attributes.end(), name);
    require(it != info.attributes.end(), ErrorKind::kIncompatibleBackend,
            "backend does not score attribute '" + name + "'");
    cols.push_back(static_cast<std::size_t>(it - info.attributes.begin()));
  }
  return cols;
}

}  // namespace lds
