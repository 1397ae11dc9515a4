// Copyright 2026 The fairlds Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "lds/density.hpp"
#include "lds/synthetic.hpp"
#include "support/worlds.hpp"

using namespace lds;
using doctest::Approx;

namespace {

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an lds::Error");
  return ErrorKind::kIo;
}

GaussianMixture standard(std::size_t dim) {
  GaussianMixture g;
  g.weights = Eigen::VectorXd::Ones(1);
  g.means = Eigen::MatrixXd::Zero(1, static_cast<Eigen::Index>(dim));
  g.variances = Eigen::MatrixXd::Ones(1, static_cast<Eigen::Index>(dim));
  return g;
}

void check_monotone(const FitMeta& m) {
  for (std::size_t i = 1; i < m.trace.size(); ++i) {
    CHECK(m.trace[i] >= m.trace[i - 1] - 1e-9 * std::max(1.0, std::abs(m.trace[i - 1])));
  }
}

}  // namespace

TEST_CASE("k = 1 on two points is the closed-form MLE") {
  LatentSet x(2, 2);
  x << 0, 0, 2, 0;
  EmConfig cfg;
  cfg.min_points_per_component = 1;
  Rng rng(1, 1);
  const auto g = fit_gmm(x, 1, cfg, rng);
  CHECK(g.weights[0] == 1.0);
  CHECK(std::abs(g.means(0, 0) - 1.0) <= 1e-12);
  CHECK(std::abs(g.means(0, 1)) <= 1e-12);
  CHECK(std::abs(g.variances(0, 0) - (1.0 + 1e-6)) <= 1e-12);
  CHECK(std::abs(g.variances(0, 1) - 1e-6) <= 1e-15);
  check_monotone(g.fit_meta);

  cfg.mode = CovarianceMode::kFull;
  Rng rng2(1, 1);
  const auto f = fit_gmm(x, 1, cfg, rng2);
  CHECK(std::abs(f.covariances.at(0)(0, 0) - (1.0 + 1e-6)) <= 1e-12);
  CHECK(std::abs(f.covariances.at(0)(0, 1)) <= 1e-12);
}

TEST_CASE("log density of the standard normal at the origin") {
  const auto g = standard(2);
  CHECK(gmm_log_density(g, Eigen::VectorXd::Zero(2)) ==
        Approx(-std::log(2.0 * std::numbers::pi)).epsilon(1e-14));

  auto dup = standard(2);
  dup.weights = Eigen::VectorXd::Constant(2, 0.5);
  dup.means = Eigen::MatrixXd::Zero(2, 2);
  dup.variances = Eigen::MatrixXd::Ones(2, 2);
  Rng rng(3, 3);
  for (int i = 0; i < 20; ++i) {
    Eigen::VectorXd z(2);
    z << rng.normal() * 3, rng.normal() * 3;
    CHECK(gmm_log_density(dup, z) == Approx(gmm_log_density(g, z)).epsilon(1e-12));
  }

  auto far = standard(1);
  CHECK(std::isfinite(gmm_log_density(far, Eigen::VectorXd::Constant(1, 60.0))));
  CHECK(kind_of([&] { gmm_log_density(g, Eigen::VectorXd::Zero(3)); }) == ErrorKind::kDimension);
}

TEST_CASE("sampling respects weights and collapsed variances") {
  GaussianMixture g;
  g.weights.resize(2);
  g.weights << 1.0, 0.0;
  g.means.resize(2, 2);
  g.means << 5, -5, 100, 100;
  g.variances = Eigen::MatrixXd::Constant(2, 2, 1e-12);
  Rng rng(4, 4);
  const auto s = sample_gmm(g, 1000, rng);
  CHECK((s.rowwise() - g.means.row(0)).cwiseAbs().maxCoeff() < 1e-4);

  GaussianMixture two;
  two.weights.resize(2);
  two.weights << 0.3, 0.7;
  two.means.resize(2, 1);
  two.means << -2, 4;
  two.variances = Eigen::MatrixXd::Ones(2, 1);
  Rng r2(5, 5);
  const auto t = sample_gmm(two, 50000, r2);
  CHECK(t.mean() == Approx(0.3 * -2 + 0.7 * 4).epsilon(0.01));

  GaussianMixture bad = two;
  bad.weights << 0.5, 0.6;
  CHECK(kind_of([&] { sample_gmm(bad, 10, r2); }) == ErrorKind::kInvalidInput);
}

TEST_CASE("EM separates well-spaced clusters") {
  Rng rng(6, 6);
  LatentSet x(600, 3);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double c = i < 200 ? -10.0 : 10.0;
    for (Eigen::Index j = 0; j < 3; ++j) x(i, j) = c + rng.normal() * 0.5;
  }
  for (auto mode : {CovarianceMode::kDiagonal, CovarianceMode::kFull}) {
    EmConfig cfg;
    cfg.mode = mode;
    Rng r(7, 7);
    const auto g = fit_gmm(x, 2, cfg, r);
    const Eigen::Index lo = g.means(0, 0) < g.means(1, 0) ? 0 : 1;
    CHECK(g.weights[lo] == Approx(1.0 / 3.0).epsilon(1e-6));
    CHECK(g.means(lo, 0) == Approx(-10.0).epsilon(0.02));
    CHECK(g.means(1 - lo, 0) == Approx(10.0).epsilon(0.02));
    CHECK(g.fit_meta.restarts == 3);
    CHECK(g.fit_meta.converged);
    CHECK(g.fit_meta.log_likelihood == Approx(gmm_log_likelihood(g, x)).epsilon(1e-9));
    check_monotone(g.fit_meta);
  }
}

TEST_CASE("fit_gmm rejects degenerate input") {
  EmConfig cfg;
  Rng rng(8, 8);
  LatentSet few(15, 2);
  few.setRandom();
  CHECK(kind_of([&] { fit_gmm(few, 2, cfg, rng); }) == ErrorKind::kInvalidInput);
  LatentSet same = LatentSet::Ones(50, 2);
  CHECK(kind_of([&] { fit_gmm(same, 2, cfg, rng); }) == ErrorKind::kNumeric);
  CHECK(kind_of([&] { fit_gmm(same, 0, cfg, rng); }) == ErrorKind::kInvalidInput);
}

TEST_CASE("filter_by_label keeps matching codes in order") {
  SyntheticBackend be(testing::axis_spec(2, {"a"}, ScoreMode::kLinear), 1);
  LatentSet x(100, 2);
  for (Eigen::Index i = 0; i < 100; ++i) {
    x(i, 0) = i < 37 ? 1.0 + static_cast<double>(i) : -1.0 - static_cast<double>(i);
    x(i, 1) = static_cast<double>(i);
  }
  const auto r = filter_by_label(x, AttributeLabel({1}), be, {0});
  CHECK(r.kept.rows() == 37);
  CHECK(r.input_count == 100);
  CHECK(r.acceptance_rate == Approx(0.37));
  for (Eigen::Index i = 0; i < 37; ++i) CHECK(r.kept(i, 1) == static_cast<double>(i));

  LatentSet neg = LatentSet::Constant(50, 2, -1.0);
  CHECK(kind_of([&] { filter_by_label(neg, AttributeLabel({1}), be, {0}); }) == ErrorKind::kLowYield);

  ScoreMatrix s(3, 1);
  s << 0.0, NAN, -0.5;
  const auto mask = label_mask(s, AttributeLabel({1}), {0});
  CHECK(mask == std::vector<bool>{true, false, false});
}
