// Copyright 2026 The fairlds Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "lds/core.hpp"

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

}  // namespace

TEST_CASE("make_label uses the unit step with H(0) = 1") {
  std::vector<double> a{0.7, -0.2};
  CHECK(make_label(a).bits() == std::vector<std::uint8_t>{1, 0});
  std::vector<double> b{0.0};
  CHECK(make_label(b).bits() == std::vector<std::uint8_t>{1});
  std::vector<double> c{-1e-9, 1e-9, 0.0};
  CHECK(make_label(c).bits() == std::vector<std::uint8_t>{0, 1, 1});
  std::vector<double> d{-0.0};
  CHECK(make_label(d)[0] == 1);
  std::vector<double> bad{NAN};
  CHECK(kind_of([&] { make_label(bad); }) == ErrorKind::kInvalidInput);
}

TEST_CASE("dot") {
  Eigen::VectorXd e1(2), e2(2), v(2), ones(3);
  e1 << 1, 0;
  e2 << 0, 1;
  v << 2, 3;
  ones << 1, 1, 1;
  CHECK(dot(e1, e2) == 0.0);
  CHECK(dot(v, e1) == 2.0);
  CHECK(dot(ones, ones) == 3.0);
  CHECK(kind_of([&] { dot(e1, ones); }) == ErrorKind::kDimension);
}

TEST_CASE("subgroup index is big-endian over target order") {
  CHECK(subgroup_index(AttributeLabel({0, 0}), 2) == 0);
  CHECK(subgroup_index(AttributeLabel({1, 1}), 2) == 3);
  CHECK(subgroup_index(AttributeLabel({1, 0}), 2) == 2);
  CHECK(subgroup_index(AttributeLabel({1, 0, 1}), 3) == 5);
  for (std::size_t m = 1; m <= 5; ++m) {
    for (std::size_t i = 0; i < (std::size_t{1} << m); ++i) {
      CHECK(subgroup_index(subgroup_label(i, m), m) == i);
    }
  }
  CHECK(kind_of([] { subgroup_index(AttributeLabel({1, 0}), 3); }) == ErrorKind::kDimension);
  CHECK(kind_of([] { subgroup_label(4, 2); }) == ErrorKind::kInvalidInput);
}

TEST_CASE("schema splits targets from context attributes") {
  const auto s = AttributeSchema::from_names({"gender", "age", "glasses"}, {"age"});
  CHECK(s.target_indices() == std::vector<std::size_t>{1});
  CHECK(s.context_indices() == std::vector<std::size_t>{0, 2});
  CHECK(s.subgroup_count() == 2);
  CHECK(s.cell_count() == 8);
  CHECK(s.target_names() == std::vector<std::string>{"age"});
  CHECK(kind_of([] { AttributeSchema::from_names({"a"}, {"b"}); }) == ErrorKind::kInvalidInput);
  CHECK(kind_of([] { AttributeSchema::from_names({"a", "a"}, {"a"}); }) == ErrorKind::kInvalidInput);
  CHECK(kind_of([] { AttributeSchema({"a", "b"}, {}); }) == ErrorKind::kInvalidInput);
  CHECK(kind_of([] { AttributeSchema({"a", "b"}, {0}, {0}); }) == ErrorKind::kInvalidInput);
}

TEST_CASE("labels validate bits and restrict to positions") {
  const AttributeLabel l({1, 0, 1});
  const std::vector<std::size_t> idx{2, 1};
  CHECK(l.select(idx).bits() == std::vector<std::uint8_t>{1, 0});
  CHECK(l.to_string() == "101");
  CHECK(kind_of([] { AttributeLabel({2}); }) == ErrorKind::kInvalidInput);
}

TEST_CASE("rng streams are reproducible and independent") {
  Rng a(7, 1), b(7, 1), c(7, 2), d(8, 1);
  std::vector<double> xa, xb, xc, xd;
  for (int i = 0; i < 16; ++i) {
    xa.push_back(a.normal());
    xb.push_back(b.normal());
    xc.push_back(c.normal());
    xd.push_back(d.normal());
  }
  CHECK(xa == xb);
  CHECK(xa != xc);
  CHECK(xa != xd);

  Rng parent(3, 9);
  Rng twin(3, 9);
  Rng child1 = parent.derive(4);
  Rng child2 = parent.derive(4);
  CHECK(child1.next_u64() == child2.next_u64());
  CHECK(parent.next_u64() == twin.next_u64());
  CHECK(parent.derive(5).next_u64() != parent.derive(4).next_u64());

  Rng u(1, 1);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform();
    CHECK((x >= 0.0 && x < 1.0));
    CHECK(u.index(7) < 7);
  }
}
