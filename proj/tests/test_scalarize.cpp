#include "doctest.h"

#include <cmath>
#include <numbers>
#include <vector>

#include "r2opt/scalarize.hpp"

using namespace r2opt;

namespace {

std::vector<double> random_simplex_positive(RandomStream& rng, std::size_t m) {
  std::vector<double> w(m);
  double sum = 0;
  for (auto& x : w) sum += (x = 0.01 + rng.uniform());
  for (auto& x : w) x /= sum;
  return w;
}

std::vector<double> random_point(RandomStream& rng, std::size_t m, double lo = -1, double hi = 2) {
  std::vector<double> v(m);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

}  // namespace

TEST_CASE("scalarise examples") {
  CHECK(scalarise(Chebyshev{{1, 1}, {0.5, 0.5}}, ObjectiveVector{1, 1}) == 0.0);
  CHECK(scalarise(Linear{{1, 0}}, ObjectiveVector{3, 7}) == 3.0);
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(scalarise(HypervolumeScalarisation{{0, 0}, {r, r}}, ObjectiveVector{1, 1}) ==
        doctest::Approx(std::numbers::pi / 2).epsilon(1e-14));
  CHECK(scalarise(IgdPlus{{1, 1}, 2, 1}, ObjectiveVector{2, 2}) == 0.0);
}

TEST_CASE("scalarise hand evaluations of every family") {
  ObjectiveVector y{1, 3};
  CHECK(scalarise(Lp{{2, 4}, {0.5, 0.5}, 1}, y) == doctest::Approx(-1.0));
  CHECK(scalarise(Lp{{4, 7}, {0.5, 0.5}, 2}, y) == doctest::Approx(-2.5));
  CHECK(scalarise(Chebyshev{{2, 5}, {0.25, 0.75}}, y) == doctest::Approx(-1.5));
  CHECK(scalarise(AugChebyshev{{2, 5}, {0.25, 0.75}, 0.1}, y) == doctest::Approx(-1.5 + 0.1 * 2.5));
  CHECK(scalarise(Igd{{4, 7}, 2, 1}, y) == doctest::Approx(-5.0));
  CHECK(scalarise(Igd{{4, 7}, 2, 2}, y) == doctest::Approx(-25.0));
  CHECK(scalarise(IgdPlus{{0, 7}, 2, 1}, y) == doctest::Approx(-4.0));
}

TEST_CASE("hypervolume constant is the positive-orthant ball volume") {
  CHECK(hypervolume_constant(1) == doctest::Approx(1.0));
  CHECK(hypervolume_constant(2) == doctest::Approx(std::numbers::pi / 4));
  CHECK(hypervolume_constant(3) == doctest::Approx(std::numbers::pi / 6));
  // Both evaluation branches agree where they meet.
  const double direct = std::pow(std::numbers::pi, 10.5) / (std::pow(2.0, 21) * std::tgamma(11.5));
  CHECK(hypervolume_constant(21) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("hypervolume scalarisation is zero when the nadir clamp is active") {
  HypervolumeScalarisation s{{0, 0, 0}, {0.6, 0.8, 0.0}};
  CHECK_THROWS_AS(scalarise(s, ObjectiveVector{1, 1, 1}), std::invalid_argument);
  const double r = 1.0 / std::sqrt(3.0);
  s.direction = {r, r, r};
  CHECK(scalarise(s, ObjectiveVector{2, -0.5, 2}) == 0.0);
  CHECK(scalarise(s, ObjectiveVector{-1, -1, -1}) == 0.0);
}

TEST_CASE("invalid parameters and dimension mismatch are errors") {
  CHECK_THROWS_AS(scalarise(Linear{{0.5, 0.6}}, ObjectiveVector{1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(scalarise(Linear{{-0.5, 1.5}}, ObjectiveVector{1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(scalarise(Lp{{0, 0}, {0.5, 0.5}, 0.5}, ObjectiveVector{1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(scalarise(AugChebyshev{{0, 0}, {0.5, 0.5}, -1}, ObjectiveVector{1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(scalarise(Igd{{0, 0}, 2, 0.5}, ObjectiveVector{1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(scalarise(HypervolumeScalarisation{{0, 0}, {1, 1}}, ObjectiveVector{1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(scalarise(Linear{{0.5, 0.5}}, ObjectiveVector{1, 1, 1}), DimensionError);
}

TEST_CASE("apply_transform examples") {
  auto t = [](ObjectiveVector lo, ObjectiveVector hi, ObjectiveVector y) {
    return apply_transform(ObjectiveTransform{std::move(lo), std::move(hi)}, y);
  };
  CHECK(t({0, 0}, {1, 1}, {0.3, 0.7}) == ObjectiveVector{0.3, 0.7});
  CHECK(t({0, 0}, {2, 4}, {1, 1}) == ObjectiveVector{0.5, 0.25});
  CHECK(t({-1, -1}, {1, 1}, {-1, 1}) == ObjectiveVector{0, 1});
  CHECK(t({0, 0}, {1, 1}, {2, -1}) == ObjectiveVector{2, -1});
  CHECK_THROWS_AS(t({0, 1}, {1, 1}, {0, 0}), std::invalid_argument);
}

TEST_CASE("monotonicity of the monotone families") {
  RandomStream rng(21);
  for (int t = 0; t < 5000; ++t) {
    const std::size_t m = 2 + rng.index(3);
    auto base = random_point(rng, m);
    std::vector<double> up(base), strong(base);
    for (std::size_t k = 0; k < m; ++k) {
      if (rng.bernoulli(0.5)) up[k] += rng.uniform();
      strong[k] += 0.01 + rng.uniform();
    }
    ObjectiveVector y0(base), y1(up), y2(strong);
    auto w = random_simplex_positive(rng, m);
    auto ideal = random_point(rng, m);
    auto dir = sample_positive_sphere(m, rng);
    const std::vector<ScalarisationParams> weak_kinds = {
        Linear{w}, Chebyshev{ideal, w}, AugChebyshev{ideal, w, 0.2}, HypervolumeScalarisation{ideal, dir},
        IgdPlus{ideal, 2, 1}, IgdPlus{ideal, 1, 3}};
    for (const auto& s : weak_kinds) CHECK(scalarise(s, y1) >= scalarise(s, y0));
    const std::vector<ScalarisationParams> strict_kinds = {Linear{w}, Chebyshev{ideal, w}, AugChebyshev{ideal, w, 0.2}};
    for (const auto& s : strict_kinds) CHECK(scalarise(s, y2) > scalarise(s, y0));
  }
}

TEST_CASE("plain IGD is not monotone: witness pair") {
  Igd s{{1, 1}, 2, 1};
  ObjectiveVector better{3, 1}, worse{1, 1};
  CHECK(dominates(better, worse, Dominance::strict));
  CHECK(scalarise(s, better) < scalarise(s, worse));
  CHECK_FALSE(is_monotone(ScalarisationKind::igd));
  CHECK(is_monotone(ScalarisationKind::igd_plus));
}

TEST_CASE("sample_params examples and invariants") {
  RandomStream rng(22);
  ObjectiveVector u0{0.25, 0.75};
  auto fin = sample_params(Chebyshev{{0, 0}, {0.5, 0.5}}, FiniteUniform{{u0}}, rng, 50);
  for (const auto& p : fin) CHECK(std::get<Chebyshev>(p).ideal == std::vector<double>{0.25, 0.75});

  auto simp = sample_params(Linear{{0.5, 0.5}}, UniformSimplex{2}, rng, 2000);
  for (const auto& p : simp) {
    const auto& w = std::get<Linear>(p).weights;
    CHECK(w[0] >= 0);
    CHECK(w[1] >= 0);
    CHECK(std::abs(w[0] + w[1] - 1.0) <= 1e-12);
  }

  const double r = 1.0 / std::sqrt(3.0);
  auto sph = sample_params(HypervolumeScalarisation{{0, 0, 0}, {r, r, r}}, UniformPositiveSphere{3}, rng, 100000);
  double mean[3] = {0, 0, 0};
  for (const auto& p : sph) {
    const auto& l = std::get<HypervolumeScalarisation>(p).direction;
    double n2 = 0;
    for (int k = 0; k < 3; ++k) {
      CHECK(l[k] > 0);
      n2 += l[k] * l[k];
      mean[k] += l[k] / 100000.0;
    }
    CHECK(std::abs(std::sqrt(n2) - 1.0) <= 1e-12);
  }
  CHECK(std::abs(mean[0] - mean[1]) < 0.01);
  CHECK(std::abs(mean[1] - mean[2]) < 0.01);
  CHECK(std::abs(mean[0] - mean[2]) < 0.01);
  CHECK_THROWS(sample_params(Linear{{0.5, 0.5}}, UniformSimplex{2}, rng, 0));
}

TEST_CASE("sample_params is deterministic given the stream state") {
  RandomStream a(5), b(5);
  auto pa = sample_params(Chebyshev{{0, 0}, {0.5, 0.5}}, UniformSimplex{2}, a, 10);
  auto pb = sample_params(Chebyshev{{0, 0}, {0.5, 0.5}}, UniformSimplex{2}, b, 10);
  for (std::size_t i = 0; i < 10; ++i) CHECK(std::get<Chebyshev>(pa[i]).weights == std::get<Chebyshev>(pb[i]).weights);
}

TEST_CASE("bank evaluation matches scalarise for every kind") {
  RandomStream rng(23);
  const std::size_t m = 3;
  const std::vector<ScalarisationParams> bases = {
      Linear{{0.2, 0.3, 0.5}}, Lp{{1, 1, 1}, {0.2, 0.3, 0.5}, 3}, Chebyshev{{1, 1, 1}, {0.2, 0.3, 0.5}},
      AugChebyshev{{1, 1, 1}, {0.2, 0.3, 0.5}, 0.05}, Igd{{1, 1, 1}, 2, 2}, IgdPlus{{1, 1, 1}, 1.5, 1}};
  for (const auto& base : bases) {
    std::vector<ScalarisationParams> params;
    if (std::holds_alternative<Igd>(base) || std::holds_alternative<IgdPlus>(base)) {
      std::vector<ObjectiveVector> refs;
      for (int i = 0; i < 5; ++i) refs.emplace_back(random_point(rng, m));
      params = sample_params(base, FiniteUniform{refs}, rng, 20);
    } else {
      params = sample_params(base, UniformSimplex{m}, rng, 20);
    }
    ScalarisationBank bank(params);
    for (int t = 0; t < 20; ++t) {
      auto y = random_point(rng, m);
      for (std::size_t j = 0; j < bank.size(); ++j) {
        CHECK(bank.value(j, y) == doctest::Approx(scalarise(params[j], y)).epsilon(1e-13));
      }
    }
  }
  const double r = 1.0 / std::sqrt(3.0);
  auto hv = sample_params(HypervolumeScalarisation{{0, 0, 0}, {r, r, r}}, UniformPositiveSphere{3}, rng, 20);
  ScalarisationBank bank(hv);
  for (int t = 0; t < 20; ++t) {
    auto y = random_point(rng, m);
    for (std::size_t j = 0; j < bank.size(); ++j) CHECK(bank.value(j, y) == doctest::Approx(scalarise(hv[j], y)).epsilon(1e-13));
  }
  std::vector<ScalarisationParams> mixed = {Linear{{0.5, 0.5}}, Chebyshev{{0, 0}, {0.5, 0.5}}};
  CHECK_THROWS(ScalarisationBank(mixed));
}
