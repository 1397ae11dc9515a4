// Copyright 2026 The fairlds Authors
// SPDX-License-Identifier: Apache-2.0

#include "lds/boundaries.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lds {

ScoredCorpus collect_corpus(Backend& backend, std::size_t n, Rng& rng) {
  require(n >= 100, ErrorKind::kInvalidInput, "collect_corpus: need at least 100 samples");
  const auto& info = backend.info();
  require(info.can_sample && info.can_score, ErrorKind::kUnsupportedOp,
          "collect_corpus: backend must sample and score");
  ScoredCorpus corpus;
  corpus.attributes = info.attributes;
  corpus.latents.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(info.dim));
  for (std::size_t begin = 0; begin < n; begin += kMaxBatch) {
    const std::size_t count = std::min(kMaxBatch, n - begin);
    LatentSet chunk = backend.sample_prior(count, rng);
    require(chunk.rows() == static_cast<Eigen::Index>(count) &&
                chunk.cols() == static_cast<Eigen::Index>(info.dim),
            ErrorKind::kBackend, "backend returned a prior batch of the wrong shape");
    corpus.latents.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(count)) =
        chunk;
  }
  corpus.scores = score_batch(backend, corpus.latents);
  require(corpus.latents.allFinite() && corpus.scores.allFinite(), ErrorKind::kBackend,
          "collect_corpus: backend produced non-finite values");
  return corpus;
}

ExtremeSets select_extremes(std::span<const double> scores, double fraction) {
  require(fraction > 0.0 && fraction <= 0.5, ErrorKind::kInvalidInput,
          "select_extremes: fraction must lie in (0, 0.5]");
  const std::size_t n = scores.size();
  const auto count = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  require(count >= 1 && 2 * count <= n, ErrorKind::kInvalidInput,
          "select_extremes: positive and negative sets would overlap");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  ExtremeSets sets;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  sets.positives.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  sets.negatives.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
  return sets;
}

ExtremeSets select_extremes(const ScoredCorpus& corpus, const std::string& attribute,
                            double fraction) {
  auto it = std::find(corpus.attributes.begin(), corpus.attributes.end(), attribute);
  require(it != corpus.attributes.end(), ErrorKind::kInvalidInput,
          "corpus has no attribute '" + attribute + "'");
  const auto col = static_cast<Eigen::Index>(it - corpus.attributes.begin());
  std::vector<double> column(static_cast<std::size_t>(corpus.scores.rows()));
  for (Eigen::Index i = 0; i < corpus.scores.rows(); ++i) {
    column[static_cast<std::size_t>(i)] = corpus.scores(i, col);
  }
  return select_extremes(column, fraction);
}

SemanticBoundary train_boundary(const LatentSet& positives, const LatentSet& negatives,
                                const SvmConfig& config, std::string attribute) {
  require(positives.rows() > 0 && negatives.rows() > 0, ErrorKind::kInvalidInput,
          "train_boundary: both classes need examples");
  require(positives.cols() == negatives.cols() && positives.cols() > 0, ErrorKind::kDimension,
          "train_boundary: class dimensions differ");
  require(config.lambda > 0.0 && config.epochs > 0, ErrorKind::kInvalidInput,
          "train_boundary: lambda and epochs must be positive");
  require_finite(positives, "train_boundary positives");
  require_finite(negatives, "train_boundary negatives");

  const Eigen::Index d = positives.cols();
  const Eigen::Index n = positives.rows() + negatives.rows();
  LatentSet stacked(n, d);
  stacked.topRows(positives.rows()) = positives;
  stacked.bottomRows(negatives.rows()) = negatives;

  // Work in an order that depends only on coordinates, so that swapping the
  // classes negates every update (and every reduction) exactly.
  std::vector<std::size_t> canonical(static_cast<std::size_t>(n));
  std::iota(canonical.begin(), canonical.end(), std::size_t{0});
  std::stable_sort(canonical.begin(), canonical.end(), [&](std::size_t a, std::size_t b) {
    const auto ra = stacked.row(static_cast<Eigen::Index>(a));
    const auto rb = stacked.row(static_cast<Eigen::Index>(b));
    return std::lexicographical_compare(ra.data(), ra.data() + d, rb.data(), rb.data() + d);
  });
  LatentSet raw(n, d);
  std::vector<double> y(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto src = static_cast<Eigen::Index>(canonical[static_cast<std::size_t>(i)]);
    raw.row(i) = stacked.row(src);
    y[static_cast<std::size_t>(i)] = src < positives.rows() ? 1.0 : -1.0;
  }

  // One pooled scale for every coordinate: per-coordinate scaling would change
  // the margin geometry and tilt the mapped-back normal.
  const Eigen::RowVectorXd mean = raw.colwise().mean();
  double scale = std::sqrt((raw.rowwise() - mean).array().square().sum() /
                           static_cast<double>(n * d));
  if (!(scale > 0.0)) scale = 1.0;
  const Eigen::RowVectorXd sd = Eigen::RowVectorXd::Constant(d, scale);
  // Standardized features plus a constant bias feature.
  LatentSet x(n, d + 1);
  x.leftCols(d) = (raw.rowwise() - mean).array().rowwise() / sd.array();
  x.col(d).setOnes();

  Rng rng(config.seed, 0x73766dULL);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d + 1);
  Eigen::VectorXd avg = Eigen::VectorXd::Zero(d + 1);
  std::size_t averaged = 0;
  std::size_t t = 0;
  const double radius = 1.0 / std::sqrt(config.lambda);
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    for (std::size_t idx : order) {
      ++t;
      const double eta = 1.0 / (config.lambda * static_cast<double>(t));
      const auto xi = x.row(static_cast<Eigen::Index>(idx)).transpose();
      const double yi = y[idx];
      const double margin = yi * w.dot(xi);
      w *= 1.0 - eta * config.lambda;
      if (margin < 1.0) w += (eta * yi) * xi;
      // Pegasos projection onto the ball that contains the optimum.
      const double wn = w.norm();
      if (wn > radius) w *= radius / wn;
      // Suffix averaging over the second half of training.
      if (2 * epoch >= config.epochs) {
        ++averaged;
        avg += (w - avg) / static_cast<double>(averaged);
      }
    }
  }
  const Eigen::VectorXd& solution = averaged > 0 ? avg : w;
  require(solution.allFinite(), ErrorKind::kNumeric, "train_boundary: SVM weights diverged");

  Eigen::VectorXd w_raw = solution.head(d).array() / sd.transpose().array();
  const double b_raw = solution[d] - (solution.head(d).array() * mean.transpose().array() /
                                      sd.transpose().array()).sum();
  const double norm = w_raw.norm();
  require(std::isfinite(norm) && norm > 0.0, ErrorKind::kNumeric,
          "train_boundary: degenerate (zero) weight vector");

  SemanticBoundary b;
  b.attribute = std::move(attribute);
  b.normal = w_raw / norm;
  b.intercept = b_raw / norm;
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = raw.row(i).dot(b.normal.transpose()) + b.intercept;
    if ((s >= 0.0) == (y[static_cast<std::size_t>(i)] > 0.0)) ++correct;
  }
  b.meta.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
  return b;
}

OrthogonalityReport orthogonality_matrix(std::span<const SemanticBoundary> boundaries,
                                         double warn_threshold) {
  require(boundaries.size() >= 2, ErrorKind::kInvalidInput,
          "orthogonality_matrix: need at least two boundaries");
  const auto dim = boundaries.front().normal.size();
  for (const auto& b : boundaries) {
    require(b.normal.size() == dim, ErrorKind::kDimension,
            "orthogonality_matrix: boundary dimensions differ");
  }
  OrthogonalityReport report;
  report.threshold = warn_threshold;
  const auto k = static_cast<Eigen::Index>(boundaries.size());
  report.cosines.resize(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    report.cosines(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < k; ++j) {
      const double c = boundaries[static_cast<std::size_t>(i)].normal.dot(
          boundaries[static_cast<std::size_t>(j)].normal);
      report.cosines(i, j) = c;
      report.cosines(j, i) = c;
      if (std::abs(c) > warn_threshold) {
        report.flagged.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      }
    }
  }
  return report;
}

std::vector<SemanticBoundary> train_boundaries(Backend& backend,
                                               const std::vector<std::string>& attributes,
                                               const BoundaryTrainingConfig& config, Rng& rng) {
  const ScoredCorpus corpus = collect_corpus(backend, config.corpus_n, rng);
  std::vector<SemanticBoundary> out;
  for (const auto& name : attributes) {
    const ExtremeSets sets = select_extremes(corpus, name, config.extreme_fraction);
    LatentSet pos(static_cast<Eigen::Index>(sets.positives.size()), corpus.latents.cols());
    LatentSet neg(static_cast<Eigen::Index>(sets.negatives.size()), corpus.latents.cols());
    for (std::size_t i = 0; i < sets.positives.size(); ++i) {
      pos.row(static_cast<Eigen::Index>(i)) =
          corpus.latents.row(static_cast<Eigen::Index>(sets.positives[i]));
    }
    for (std::size_t i = 0; i < sets.negatives.size(); ++i) {
      neg.row(static_cast<Eigen::Index>(i)) =
          corpus.latents.row(static_cast<Eigen::Index>(sets.negatives[i]));
    }
    SemanticBoundary b = train_boundary(pos, neg, config.svm, name);
    b.meta.corpus_size = config.corpus_n;
    b.meta.extreme_fraction = config.extreme_fraction;
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace lds
