#include "doctest.h"

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "r2opt/greedy.hpp"

using namespace r2opt;

namespace {

CandidatePool three_point_pool() { return CandidatePool{{}, {{3, 1}, {1, 3}, {2, 2}}}; }

CandidatePool quarter_circle(std::size_t n) {
  CandidatePool pool;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = 0.5 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1);
    pool.images.push_back({std::cos(t), std::sin(t)});
  }
  return pool;
}

CandidatePool random_pool(RandomStream& rng, std::size_t m, std::size_t n) {
  CandidatePool pool;
  auto Y = oracle::random_set(rng, m, n);
  pool.images = Y.elements();
  return pool;
}

}  // namespace

TEST_CASE("greedy_maximise examples") {
  ExactHypervolumeUtility hv(ObjectiveVector{0, 0});
  auto pool = three_point_pool();
  auto t1 = greedy_maximise(pool, hv, 1);
  CHECK(t1.picks == std::vector<std::size_t>{2});
  CHECK(t1.gains[0] == doctest::Approx(4.0));
  auto t2 = greedy_maximise(pool, hv, 2);
  CHECK(t2.picks == std::vector<std::size_t>{2, 0});
  CHECK(t2.gains[1] == doctest::Approx(1.0));
  CHECK(t2.utilities[1] == doctest::Approx(5.0));

  CandidatePool one{{}, {{2, 3}}};
  auto t3 = greedy_maximise(one, hv, 3);
  CHECK(t3.picks == std::vector<std::size_t>{0, 0, 0});
  CHECK(t3.gains[0] == doctest::Approx(6.0));
  CHECK(t3.gains[1] == 0.0);
  CHECK(t3.gains[2] == 0.0);
  CHECK_THROWS(greedy_maximise(CandidatePool{}, hv, 1));
  CHECK_THROWS(greedy_maximise(pool, hv, 0));
}

TEST_CASE("brute_force_optimum examples") {
  ExactHypervolumeUtility hv(ObjectiveVector{0, 0});
  auto pool = three_point_pool();
  CHECK(brute_force_optimum(pool, hv, 2).value == doctest::Approx(5.0));
  CHECK(brute_force_optimum(pool, hv, 5).value == doctest::Approx(hv.evaluate(ObjectiveSet(pool.images))));
  CHECK(brute_force_optimum(pool, hv, 1).value == doctest::Approx(4.0));
  CHECK(brute_force_optimum(pool, hv, 1).indices == std::vector<std::size_t>{2});
  auto big = quarter_circle(200);
  CHECK_THROWS(brute_force_optimum(big, hv, 4));
}

TEST_CASE("nemhauser_check examples") {
  ExactHypervolumeUtility hv(ObjectiveVector{0, 0});
  auto pool = three_point_pool();
  auto t = greedy_maximise(pool, hv, 2);
  auto r = nemhauser_check(t, 5.0, 2, 2);
  CHECK(r.holds);
  CHECK(r.bound_rhs == doctest::Approx((1 - std::exp(-1.0)) * 5.0));
  auto many = greedy_maximise(pool, hv, 6);
  CHECK(many.utilities.back() == doctest::Approx(brute_force_optimum(pool, hv, 3).value));
  CHECK(nemhauser_check(many, brute_force_optimum(pool, hv, 3).value, 3, 6).holds);
  CHECK(nemhauser_check(t, 0.0, 2, 2).holds);
}

TEST_CASE("approx_bound_epsilon examples") {
  std::vector<double> big(3, 1.0);
  CHECK(approx_bound_epsilon(0.1, 2, 3, 1u << 30, big).epsilon < 1e-3);
  // P = 1 keeps only the last term.
  auto e = approx_bound_epsilon(0.1, 1, 3, 10, {2.0, 2.0, 2.0});
  CHECK(e.epsilon == doctest::Approx(2.0 * std::sqrt(2.0 * std::log(120.0) / 10.0)).epsilon(1e-14));
  CHECK(e.cap == doctest::Approx(e.epsilon).epsilon(1e-14));
  auto one = approx_bound_epsilon(0.5, 2, 1, 2, {1.0});
  CHECK(one.epsilon == doctest::Approx(std::sqrt(std::log(8.0))).epsilon(1e-14));
  CHECK(one.epsilon == doctest::Approx(1.44203).epsilon(1e-5));
  CHECK_THROWS(approx_bound_epsilon(1.0, 2, 1, 2, {1.0}));
  CHECK_THROWS(approx_bound_epsilon(0.5, 2, 2, 2, {1.0}));
  CHECK_THROWS(approx_bound_epsilon(0.5, 2, 1, 2, {-1.0}));
}

TEST_CASE("the sequence form never exceeds the cap for constant C") {
  RandomStream rng(51);
  for (int t = 0; t < 200; ++t) {
    const std::size_t P = 1 + rng.index(6), N = 1 + rng.index(30), J = 1 + rng.index(100);
    const double C = rng.uniform(0.1, 5);
    auto e = approx_bound_epsilon(0.05, P, N, J, std::vector<double>(N, C));
    CHECK(e.epsilon <= e.cap * (1 + 1e-12));
  }
}

TEST_CASE("greedy gains are non-increasing under frozen banks; nemhauser holds exhaustively") {
  RandomStream rng(52);
  for (int t = 0; t < 60; ++t) {
    const std::size_t m = 2 + rng.index(2);
    auto pool = random_pool(rng, m, 4 + rng.index(9));
    const std::size_t P = 1 + rng.index(4);
    auto refs = oracle::random_set(rng, m, 4);
    std::vector<std::unique_ptr<SetUtility>> us;
    us.push_back(std::make_unique<ExactHypervolumeUtility>(ObjectiveVector(std::vector<double>(m, 0.0))));
    auto igd = exact_utility(igd_spec(refs, 2, 1, true));
    auto d1 = d1_spec(refs, sample_simplex(m, rng));
    auto d1_exact = exact_utility(d1);
    const double lo = pool_floor(static_cast<const BankUtility&>(*d1_exact).bank(), pool.images);
    us.push_back(std::make_unique<BankUtility>(static_cast<const BankUtility&>(*d1_exact).bank(), lo));
    us.push_back(std::make_unique<BankUtility>(static_cast<const BankUtility&>(*igd).bank(),
                                               pool_floor(static_cast<const BankUtility&>(*igd).bank(), pool.images)));
    us.push_back(bank_utility(standard_r2_spec(std::vector<double>(m, 1.0)), rng, 64, &pool.images));
    for (const auto& u : us) {
      auto trace = greedy_maximise(pool, *u, 2 * P);
      for (std::size_t n = 1; n < trace.gains.size(); ++n) CHECK(trace.gains[n] <= trace.gains[n - 1] + 1e-9);
      for (std::size_t n = 1; n < trace.utilities.size(); ++n) CHECK(trace.utilities[n] >= trace.utilities[n - 1] - 1e-12);
      const double opt = brute_force_optimum(pool, *u, P).value;
      for (std::size_t N = 1; N <= 2 * P; ++N) CHECK(nemhauser_check(trace, opt, P, N).holds);
    }
  }
}

TEST_CASE("approx greedy with a frozen bank is exact greedy on that bank") {
  auto pool = quarter_circle(500);
  auto spec = standard_r2_spec({1, 1});
  RandomStream a(53), b(53);
  auto approx = approx_greedy_maximise(pool, spec, 256, 8, ResamplePolicy::frozen, a);
  ScalarisationBank bank(sample_params(spec.base, spec.dist, b, 256));
  const double lo = pool_floor(bank, pool.images);
  BankUtility u(bank, lo);
  auto exact = greedy_maximise(pool, u, 8);
  CHECK(approx.picks == exact.picks);
  CHECK(approx.gains == exact.gains);
  CHECK(approx.utilities == exact.utilities);
}

TEST_CASE("per-round approx greedy is reproducible") {
  auto pool = quarter_circle(300);
  auto spec = standard_r2_spec({1, 1});
  RandomStream a(54), b(54);
  auto t1 = approx_greedy_maximise(pool, spec, 1, 10, ResamplePolicy::per_call, a);
  auto t2 = approx_greedy_maximise(pool, spec, 1, 10, ResamplePolicy::per_call, b);
  CHECK(t1.picks == t2.picks);
  CHECK(t1.gains == t2.gains);
  ExactHypervolumeUtility hv(ObjectiveVector{0, 0});
  RandomStream c(54);
  auto t3 = approx_greedy_maximise(pool, spec, 1, 10, ResamplePolicy::per_call, c, &hv);
  CHECK(t3.picks == t1.picks);
  for (std::size_t n = 1; n < t3.utilities.size(); ++n) CHECK(t3.utilities[n] >= t3.utilities[n - 1]);
}

TEST_CASE("hypersphere standard R2: early gains strictly decrease for most seeds") {
  auto pool = quarter_circle(2000);
  auto spec = standard_r2_spec({1, 1});
  int ok = 0;
  RandomStream master(55);
  for (int s = 0; s < 100; ++s) {
    RandomStream rng = master.child(static_cast<std::uint64_t>(s));
    auto t = approx_greedy_maximise(pool, spec, 128, 5, ResamplePolicy::frozen, rng);
    bool dec = true;
    for (std::size_t n = 1; n < 5; ++n) dec = dec && t.gains[n] < t.gains[n - 1];
    ok += dec;
  }
  CHECK(ok >= 95);
}
