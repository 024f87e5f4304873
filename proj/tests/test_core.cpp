#include "doctest.h"

#include <algorithm>
#include <vector>

#include "r2opt/core.hpp"
#include "r2opt/random.hpp"
#include "r2opt/scalarize.hpp"

using namespace r2opt;

namespace {

ObjectiveVector random_vec(RandomStream& rng, std::size_t m, int levels = 4) {
  // Coarse grid so ties and dominance are common.
  std::vector<double> v(m);
  for (auto& x : v) x = static_cast<double>(rng.index(levels));
  return ObjectiveVector(v);
}

ObjectiveSet random_set(RandomStream& rng, std::size_t m, std::size_t n) {
  std::vector<ObjectiveVector> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back(random_vec(rng, m));
  return ObjectiveSet(pts);
}

bool same_elements(const ObjectiveSet& a, const ObjectiveSet& b) {
  if (a.size() != b.size()) return false;
  return std::all_of(a.begin(), a.end(), [&](const ObjectiveVector& y) { return b.contains(y); });
}

}  // namespace

TEST_CASE("ObjectiveVector rejects empty and non-finite input") {
  CHECK_THROWS_AS(ObjectiveVector(std::vector<double>{}), std::invalid_argument);
  CHECK_THROWS_AS(ObjectiveVector({1.0, std::numeric_limits<double>::quiet_NaN()}), std::invalid_argument);
  CHECK_THROWS_AS(ObjectiveVector({std::numeric_limits<double>::infinity()}), std::invalid_argument);
}

TEST_CASE("ObjectiveSet dedups and fixes its dimension") {
  ObjectiveSet s{{1, 2}, {1, 2}, {0, 3}};
  CHECK(s.size() == 2);
  CHECK(s[0] == ObjectiveVector{1, 2});
  CHECK_FALSE(s.insert(ObjectiveVector{0, 3}));
  CHECK_THROWS_AS(s.insert(ObjectiveVector{1, 2, 3}), DimensionError);
  CHECK_THROWS_AS(ObjectiveSet({{1, 2}, {1, 2, 3}}), DimensionError);
}

TEST_CASE("InputVector clamps into its box") {
  Box box{{0, 0}, {1, 2}};
  InputVector x({-1, 3}, box);
  CHECK(x[0] == 0.0);
  CHECK(x[1] == 2.0);
}

TEST_CASE("dominates examples") {
  ObjectiveVector a{1, 2};
  CHECK(dominates(a, a, Dominance::weak));
  CHECK_FALSE(dominates(a, a, Dominance::strict));
  ObjectiveVector p{2, 3}, q{1, 3};
  CHECK_FALSE(dominates(p, q, Dominance::strong));
  CHECK(dominates(p, q, Dominance::strict));
  CHECK_THROWS_AS(dominates(a, ObjectiveVector{1, 2, 3}, Dominance::weak), DimensionError);
}

TEST_CASE("in_dominated_region examples") {
  ObjectiveSet s{{1, 1}};
  CHECK(in_dominated_region({0, 0}, s));
  CHECK_FALSE(in_dominated_region({2, 0}, s));
  CHECK(in_dominated_region({1, 1}, s));
  CHECK_THROWS_AS(in_dominated_region({1, 1, 1}, s), DimensionError);
}

TEST_CASE("set_dominates examples") {
  CHECK(set_dominates(ObjectiveSet{{2, 2}}, ObjectiveSet{{1, 1}}, Dominance::weak));
  CHECK_FALSE(set_dominates(ObjectiveSet{{1, 1}}, ObjectiveSet{{1, 1}}, Dominance::strict));
  CHECK(set_dominates(ObjectiveSet{{2, 1}, {1, 2}}, ObjectiveSet{{1, 1}}, Dominance::strict));
  CHECK_THROWS_AS(set_dominates(ObjectiveSet{{1, 1}}, ObjectiveSet{{1, 1, 1}}, Dominance::weak), DimensionError);
}

TEST_CASE("pareto_front examples") {
  CHECK(same_elements(pareto_front(ObjectiveSet{{1, 1}}), ObjectiveSet{{1, 1}}));
  CHECK(same_elements(pareto_front(ObjectiveSet{{1, 2}, {2, 1}, {1, 1}}), ObjectiveSet{{1, 2}, {2, 1}}));
  CHECK(same_elements(pareto_front(ObjectiveSet{{1, 1}, {1, 1}}), ObjectiveSet{{1, 1}}));
  CHECK(pareto_front(ObjectiveSet{}).empty());
}

TEST_CASE("domination order properties on random triples") {
  RandomStream rng(11);
  for (int t = 0; t < 5000; ++t) {
    const std::size_t m = 1 + rng.index(4);
    auto a = random_vec(rng, m), b = random_vec(rng, m), c = random_vec(rng, m);
    CHECK(dominates(a, a, Dominance::weak));
    if (dominates(a, b, Dominance::weak) && dominates(b, c, Dominance::weak)) CHECK(dominates(a, c, Dominance::weak));
    if (dominates(a, b, Dominance::strict)) CHECK(dominates(a, b, Dominance::weak));
    if (dominates(a, b, Dominance::strong)) CHECK(dominates(a, b, Dominance::strict));
  }
}

TEST_CASE("pareto_front matches pairwise oracle, is idempotent and explains removals") {
  RandomStream rng(12);
  for (int t = 0; t < 400; ++t) {
    const std::size_t m = 2 + rng.index(3);
    auto y = random_set(rng, m, 1 + rng.index(25));
    auto front = pareto_front(y);
    // Independent O(n^2) oracle.
    ObjectiveSet oracle(m);
    for (const auto& a : y) {
      bool dominated = false;
      for (const auto& b : y) dominated = dominated || dominates(b, a, Dominance::strict);
      if (!dominated) oracle.insert(a);
    }
    CHECK(same_elements(front, oracle));
    CHECK(same_elements(pareto_front(front), front));
    for (const auto& a : y) {
      if (front.contains(a)) continue;
      CHECK(std::any_of(front.begin(), front.end(), [&](const auto& b) { return dominates(b, a, Dominance::strict); }));
    }
  }
}

TEST_CASE("set domination is transitive") {
  RandomStream rng(13);
  int chains = 0;
  for (int t = 0; t < 3000; ++t) {
    auto a = random_set(rng, 2, 1 + rng.index(4));
    auto b = random_set(rng, 2, 1 + rng.index(4));
    auto c = random_set(rng, 2, 1 + rng.index(4));
    if (set_dominates(a, b, Dominance::weak) && set_dominates(b, c, Dominance::weak)) {
      ++chains;
      CHECK(set_dominates(a, c, Dominance::weak));
    }
  }
  CHECK(chains > 0);
}

TEST_CASE("argmax of strictly monotone scalarisations lies on the front") {
  RandomStream rng(14);
  for (int t = 0; t < 300; ++t) {
    const std::size_t m = 2 + rng.index(2);
    auto pool = random_set(rng, m, 2 + rng.index(20));
    auto front = pareto_front(pool);
    std::vector<double> w(m);
    double sum = 0;
    for (auto& x : w) sum += (x = 0.05 + rng.uniform());
    for (auto& x : w) x /= sum;
    const std::vector<ScalarisationParams> kinds = {
        Linear{w}, AugChebyshev{std::vector<double>(m, 4.0), w, 0.1}};
    for (const auto& s : kinds) {
      double best = -1e300;
      for (const auto& y : pool) best = std::max(best, scalarise(s, y));
      for (const auto& y : pool) {
        if (scalarise(s, y) == best) CHECK(front.contains(y));
      }
    }
  }
}
