// Copyright 2026 The fairlds Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "lds/audit.hpp"
#include "lds/synthetic.hpp"
#include "support/worlds.hpp"

using namespace lds;

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

// Prior draws split into the four (a, b) subgroups by their true labels.
std::vector<SubgroupLatentSet> partition(SyntheticBackend& be, std::size_t n, std::uint64_t seed) {
  Rng rng(seed, 0);
  const auto x = be.sample_prior(n, rng);
  const auto s = be.score(x);
  std::vector<std::vector<Eigen::Index>> rows(4);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const std::size_t g = (s(i, 0) >= 0.0 ? 2u : 0u) + (s(i, 1) >= 0.0 ? 1u : 0u);
    rows[g].push_back(i);
  }
  std::vector<SubgroupLatentSet> out;
  for (std::size_t g = 0; g < 4; ++g) {
    SubgroupLatentSet set;
    set.target = subgroup_label(g, 2);
    set.latents = x(rows[g], Eigen::all);
    out.push_back(set);
  }
  return out;
}

class ConstantClassifier final : public Backend {
 public:
  explicit ConstantClassifier(double value, std::size_t nan_every = 0)
      : value_(value), nan_every_(nan_every) {
    info_.dim = 4;
    info_.attributes = {"a", "b", "c"};
  }
  const BackendInfo& info() const override { return info_; }
  LatentSet sample_prior(std::size_t, Rng&) override { return {}; }
  ScoreMatrix score(const LatentSet& latents) override {
    ScoreMatrix out = ScoreMatrix::Constant(latents.rows(), 3, value_);
    if (nan_every_ > 0) {
      for (Eigen::Index i = 0; i < out.rows(); i += static_cast<Eigen::Index>(nan_every_)) {
        out(i, 0) = NAN;
      }
    }
    return out;
  }

 private:
  double value_;
  std::size_t nan_every_;
  BackendInfo info_;
};

const std::vector<std::string> kTargets{"a", "b"};

}  // namespace

TEST_CASE("the generating scorer audits itself at zero error") {
  SyntheticBackend be(testing::axis_spec(4, {"a", "b", "c"}, ScoreMode::kLinear), 1);
  const auto sets = partition(be, 4000, 1);
  const auto r = classifier_error_audit(sets, kTargets, be, "a");
  REQUIRE(r.error_rates.size() == 4);
  for (double e : r.error_rates) CHECK(e == 0.0);
  CHECK(r.positive_mean == 0.0);
  CHECK(r.negative_mean == 0.0);
  CHECK(r.sizes[0] == static_cast<std::size_t>(sets[0].latents.rows()));
}

TEST_CASE("planted flips show up in the right subgroups") {
  SyntheticBackend be(testing::axis_spec(4, {"a", "b", "c"}, ScoreMode::kLinear), 1);
  const auto sets = partition(be, 20000, 2);
  const auto copy = sets;

  FlipClassifier cond(be, {0, 1.0, {{1, 1}}}, 5);
  auto r = classifier_error_audit(sets, kTargets, cond, "a");
  CHECK(r.error_rates == std::vector<double>{0.0, 1.0, 0.0, 1.0});

  FlipClassifier some(be, {0, 0.2, {}}, 5);
  r = classifier_error_audit(sets, kTargets, some, "a");
  for (double e : r.error_rates) CHECK(std::abs(e - 0.2) <= 0.015);

  for (std::size_t g = 0; g < 4; ++g) CHECK(sets[g].latents == copy[g].latents);
}

TEST_CASE("a constant classifier errs on exactly one side") {
  SyntheticBackend be(testing::axis_spec(4, {"a", "b", "c"}, ScoreMode::kLinear), 1);
  const auto sets = partition(be, 2000, 3);
  ConstantClassifier yes(1.0);
  const auto r = classifier_error_audit(sets, kTargets, yes, "a");
  CHECK(r.error_rates == std::vector<double>{1.0, 1.0, 0.0, 0.0});
  CHECK(r.positive_mean == 0.0);
  CHECK(r.negative_mean == 1.0);

  ConstantClassifier holes(1.0, 2);
  const auto h = classifier_error_audit(sets, kTargets, holes, "a");
  for (std::size_t g = 0; g < 4; ++g) {
    CHECK(h.skipped[g] == (h.sizes[g] + 1) / 2);
  }

  ConstantClassifier none(NAN);
  const auto n = classifier_error_audit(sets, kTargets, none, "a");
  CHECK(std::isnan(n.error_rates[0]));

  CHECK(kind_of([&] { classifier_error_audit(sets, kTargets, yes, "zzz"); }) == ErrorKind::kInvalidInput);
  auto hollow = sets;
  hollow[1].latents.resize(0, 4);
  CHECK(kind_of([&] { classifier_error_audit(hollow, kTargets, yes, "a"); }) == ErrorKind::kInvalidInput);
}

TEST_CASE("transform alternation") {
  auto spec = testing::axis_spec(4, {"a", "b", "c"}, ScoreMode::kLinear);
  spec.transform.kind = TransformSpec::Kind::kIdentity;
  SyntheticBackend id(spec, 1);
  const auto sets = partition(id, 4000, 4);
  const auto copy = sets;

  auto r = transform_alternation_audit(sets, id, id, {"a", "b"});
  REQUIRE(r.rates.size() == 2);
  for (const auto& row : r.rates) {
    for (double v : row) CHECK(v == 0.0);
  }

  spec.transform = {TransformSpec::Kind::kMajorityRegressor, 0, 1.0, 0.5};
  SyntheticBackend reg(spec, 1);
  r = transform_alternation_audit(sets, reg, id, {"a", "b"});
  // Subgroups with a = 0 are the ones pulled across the boundary.
  CHECK(r.rates[0][0] >= 0.99);
  CHECK(r.rates[0][1] >= 0.99);
  CHECK(r.rates[0][2] == 0.0);
  CHECK(r.rates[0][3] == 0.0);
  for (double v : r.rates[1]) CHECK(v == 0.0);
  for (std::size_t g = 0; g < 4; ++g) CHECK(sets[g].latents == copy[g].latents);

  const auto table = format_table(r);
  CHECK(table.find(kCircularityNote) != std::string::npos);
  CHECK(table.find("100.0") != std::string::npos);
}
