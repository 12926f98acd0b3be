#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "dynfl/error.hpp"
#include "dynfl/metric.hpp"

using namespace dynfl;
using Catch::Matchers::WithinAbs;

namespace {
std::vector<std::vector<double>> line3() {
  // Points on a line at 0, 0.5, 1.5.
  return {{0.0, 0.5, 1.5}, {0.5, 0.0, 1.0}, {1.5, 1.0, 0.0}};
}
}  // namespace

TEST_CASE("from_matrix accepts a valid metric") {
  const MetricSpace m = MetricSpace::from_matrix(line3());
  REQUIRE(m.size() == 3);
  REQUIRE(m.dist(0, 2) == 1.5);
  REQUIRE(m.dist(2, 0) == 1.5);
  REQUIRE(m.diameter() == 1.5);
  REQUIRE(m.min_positive_distance() == 0.5);
  REQUIRE_FALSE(m.is_star());
}

TEST_CASE("from_matrix rejects malformed input") {
  auto d = line3();
  SECTION("non-square") {
    d[1].pop_back();
    REQUIRE_THROWS_AS(MetricSpace::from_matrix(d), Error);
  }
  SECTION("nonzero diagonal") {
    d[0][0] = 0.1;
    REQUIRE_THROWS_AS(MetricSpace::from_matrix(d), Error);
  }
  SECTION("negative entry") {
    d[0][1] = -0.5;
    d[1][0] = -0.5;
    REQUIRE_THROWS_AS(MetricSpace::from_matrix(d), Error);
  }
  SECTION("asymmetry") {
    d[0][1] = 0.6;
    REQUIRE_THROWS_AS(MetricSpace::from_matrix(d), Error);
  }
  SECTION("triangle violation") {
    d[0][2] = 100.0;
    d[2][0] = 100.0;
    REQUIRE_THROWS_AS(MetricSpace::from_matrix(d), Error);
  }
  SECTION("empty") {
    REQUIRE_THROWS_AS(MetricSpace::from_matrix({}), Error);
  }
}

TEST_CASE("star distances") {
  const MetricSpace s = MetricSpace::star(4, 0.25);
  REQUIRE(s.size() == 5);
  REQUIRE(s.is_star());
  REQUIRE(s.dist(0, 3) == 0.25);
  REQUIRE(s.dist(3, 0) == 0.25);
  REQUIRE(s.dist(1, 4) == 0.5);
  REQUIRE(s.dist(2, 2) == 0.0);
  REQUIRE(s.diameter() == 0.5);
  REQUIRE(s.min_positive_distance() == 0.25);
  REQUIRE_THROWS_AS(MetricSpace::star(0, 0.25), Error);
  REQUIRE_THROWS_AS(MetricSpace::star(3, 0.0), Error);
}

TEST_CASE("star to_matrix matches the symbolic distances") {
  const MetricSpace s = MetricSpace::star(3, 0.1);
  const auto d = s.to_matrix();
  const MetricSpace dense = MetricSpace::from_matrix(d);
  for (int i = 0; i < s.size(); ++i)
    for (int j = 0; j < s.size(); ++j)
      REQUIRE(dense.dist(i, j) == s.dist(i, j));
}

TEST_CASE("normalize rescales to diameter 1") {
  // Distances {0.5, 1, 1.5} scale to {1/3, 2/3, 1}; all clear the 1/4 floor.
  const MetricSpace m = MetricSpace::from_matrix(line3());
  const NormalizedMetric nm = normalize(m, 4);
  REQUIRE_THAT(nm.base.dist(0, 1), WithinAbs(1.0 / 3.0, 1e-12));
  REQUIRE_THAT(nm.base.dist(1, 2), WithinAbs(2.0 / 3.0, 1e-12));
  REQUIRE_THAT(nm.base.dist(0, 2), WithinAbs(1.0, 1e-12));
  REQUIRE(nm.upsilon == 4);
}

TEST_CASE("normalize clamps tiny distances up to 1/upsilon") {
  const MetricSpace m = MetricSpace::from_matrix(
      {{0.0, 0.001, 1.0}, {0.001, 0.0, 1.0}, {1.0, 1.0, 0.0}});
  const NormalizedMetric nm = normalize(m, 10);
  REQUIRE_THAT(nm.base.dist(0, 1), WithinAbs(0.1, 1e-12));
  REQUIRE_THAT(nm.base.dist(0, 2), WithinAbs(1.0, 1e-12));
  REQUIRE(nm.base.dist(1, 1) == 0.0);  // co-located stays co-located
}

TEST_CASE("normalize is idempotent on already-normalized input") {
  const MetricSpace m = MetricSpace::from_matrix(line3());
  const NormalizedMetric once = normalize(m, 8);
  const NormalizedMetric twice = normalize(once.base, 8);
  for (int i = 0; i < m.size(); ++i)
    for (int j = 0; j < m.size(); ++j)
      REQUIRE_THAT(twice.base.dist(i, j), WithinAbs(once.base.dist(i, j), 1e-12));
}

TEST_CASE("normalize keeps large stars symbolic") {
  const MetricSpace s = MetricSpace::star(1000, 0.125);
  const NormalizedMetric nm = normalize(s, 64);
  REQUIRE(nm.base.is_star());
  REQUIRE(nm.base.star_leaves() == 1000);
  REQUIRE(nm.base.star_eps() == 0.5);
  REQUIRE(nm.base.diameter() == 1.0);
}

TEST_CASE("normalize falls back to dense for a star below the floor") {
  // upsilon = 1 forces every positive distance up to 1, which is no longer a
  // star shape (leaf-leaf would need to be 2).
  const MetricSpace s = MetricSpace::star(3, 0.2);
  const NormalizedMetric nm = normalize(s, 1);
  REQUIRE_FALSE(nm.base.is_star());
  REQUIRE(nm.base.dist(0, 1) == 1.0);
  REQUIRE(nm.base.dist(1, 2) == 1.0);
}

TEST_CASE("normalize single point and invalid upsilon") {
  const MetricSpace one = MetricSpace::from_matrix({{0.0}});
  REQUIRE(normalize(one, 4).base.size() == 1);
  REQUIRE_THROWS_AS(normalize(one, 0), Error);
}
