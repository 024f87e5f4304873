#include "r2opt/greedy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>

namespace r2opt {

namespace {

std::size_t argmax_gain(const CandidatePool& pool, const GainTracker& tracker, double& best_gain) {
  best_gain = -std::numeric_limits<double>::infinity();
  std::size_t best = 0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const double g = tracker.gain(pool.images[i].values());
    if (g > best_gain) {
      best_gain = g;
      best = i;
    }
  }
  return best;
}

double choose(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

}  // namespace

void CandidatePool::validate() const {
  if (images.empty()) throw std::invalid_argument("CandidatePool: empty pool");
  const std::size_t m = images.front().size();
  for (const auto& y : images) {
    if (y.size() != m) throw DimensionError("CandidatePool: image dimension mismatch");
  }
  if (!inputs.empty()) {
    if (inputs.size() != images.size()) throw std::invalid_argument("CandidatePool: inputs and images misaligned");
    const std::size_t d = inputs.front().size();
    for (const auto& x : inputs) {
      if (x.size() != d) throw DimensionError("CandidatePool: input dimension mismatch");
    }
  }
}

GreedyTrace greedy_maximise(const CandidatePool& pool, const SetUtility& utility, std::size_t N) {
  pool.validate();
  if (N == 0) throw std::invalid_argument("greedy_maximise: N must be positive");
  if (pool.images.front().size() != utility.dim()) throw DimensionError("greedy_maximise: dimension mismatch");
  GreedyTrace trace;
  trace.floor = utility.floor();
  auto tracker = utility.tracker();
  for (std::size_t n = 0; n < N; ++n) {
    double g = 0.0;
    const std::size_t pick = argmax_gain(pool, *tracker, g);
    tracker->add(pool.images[pick].values());
    trace.picks.push_back(pick);
    trace.gains.push_back(g);
    trace.utilities.push_back(tracker->utility());
  }
  return trace;
}

GreedyTrace approx_greedy_maximise(const CandidatePool& pool, const R2UtilitySpec& spec, std::size_t J, std::size_t N,
                                   ResamplePolicy resample, RandomStream& rng, const SetUtility* reporter) {
  pool.validate();
  spec.validate();
  if (J == 0) throw std::invalid_argument("approx_greedy_maximise: J must be positive");
  if (N == 0) throw std::invalid_argument("approx_greedy_maximise: N must be positive");
  if (resample == ResamplePolicy::frozen) {
    ScalarisationBank bank(sample_params(spec.base, spec.dist, rng, J));
    const double lo = resolve_floor(spec, bank, &pool.images);
    BankUtility u(std::move(bank), lo);
    GreedyTrace trace = greedy_maximise(pool, u, N);
    if (reporter) {
      auto rep = reporter->tracker();
      trace.floor = reporter->floor();
      for (std::size_t n = 0; n < N; ++n) {
        rep->add(pool.images[trace.picks[n]].values());
        trace.utilities[n] = rep->utility();
      }
    }
    return trace;
  }
  GreedyTrace trace;
  std::unique_ptr<GainTracker> rep = reporter ? reporter->tracker() : nullptr;
  for (std::size_t n = 0; n < N; ++n) {
    ScalarisationBank bank(sample_params(spec.base, spec.dist, rng, J));
    const double lo = resolve_floor(spec, bank, &pool.images);
    if (n == 0) trace.floor = reporter ? reporter->floor() : lo;
    BankUtility u(std::move(bank), lo);
    auto tracker = u.tracker();
    for (std::size_t p : trace.picks) tracker->add(pool.images[p].values());
    double g = 0.0;
    const std::size_t pick = argmax_gain(pool, *tracker, g);
    tracker->add(pool.images[pick].values());
    trace.picks.push_back(pick);
    trace.gains.push_back(g);
    if (rep) {
      rep->add(pool.images[pick].values());
      trace.utilities.push_back(rep->utility());
    } else {
      trace.utilities.push_back(tracker->utility());
    }
  }
  return trace;
}

SubsetOptimum brute_force_optimum(const CandidatePool& pool, const SetUtility& utility, std::size_t P, double budget) {
  pool.validate();
  if (P == 0) throw std::invalid_argument("brute_force_optimum: P must be positive");
  const std::size_t n = pool.size();
  const std::size_t kmax = std::min(P, n);
  double count = 0.0;
  for (std::size_t k = 1; k <= kmax; ++k) count += choose(n, k);
  if (count > budget) {
    throw std::invalid_argument("brute_force_optimum: " + std::to_string(count) + " subsets exceed the budget");
  }
  SubsetOptimum best{{}, -std::numeric_limits<double>::infinity()};
  std::vector<std::size_t> idx;
  for (std::size_t k = 1; k <= kmax; ++k) {
    idx.resize(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    for (;;) {
      ObjectiveSet Y(pool.images.front().size());
      for (std::size_t i : idx) Y.insert(pool.images[i]);
      const double v = utility.evaluate(Y);
      if (v > best.value) best = {idx, v};
      // Next k-combination in lexicographic order.
      std::size_t i = k;
      while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
      if (i == 0) break;
      ++idx[i - 1];
      for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
  return best;
}

BoundReport nemhauser_check(const GreedyTrace& trace, double opt_value, std::size_t P, std::size_t N) {
  if (P == 0 || N == 0) throw std::invalid_argument("nemhauser_check: P and N must be positive");
  if (trace.utilities.size() < N) throw std::invalid_argument("nemhauser_check: trace shorter than N");
  BoundReport r;
  r.P = P;
  r.N = N;
  r.achieved = trace.utilities[N - 1];
  const double factor = 1.0 - std::exp(-static_cast<double>(N) / static_cast<double>(P));
  r.bound_rhs = trace.floor + factor * (opt_value - trace.floor);
  r.holds = r.achieved >= r.bound_rhs;
  return r;
}

EpsilonTerms approx_bound_epsilon(double delta, std::size_t P, std::size_t N, std::size_t J,
                                  const std::vector<double>& C_seq) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("approx_bound_epsilon: delta must lie in (0, 1)");
  if (P == 0 || N == 0 || J == 0) throw std::invalid_argument("approx_bound_epsilon: P, N, J must be positive");
  if (C_seq.size() != N) throw std::invalid_argument("approx_bound_epsilon: C_seq must have length N");
  for (double c : C_seq) {
    if (!(std::isfinite(c) && c >= 0.0)) throw std::invalid_argument("approx_bound_epsilon: C_seq must be non-negative");
  }
  const double log_term = std::log(4.0 * static_cast<double>(N) / delta);
  const double scale = std::sqrt(2.0 / static_cast<double>(J) * log_term);
  const double rho = 1.0 - 1.0 / static_cast<double>(P);
  double sum = 0.0;
  for (std::size_t n = 1; n <= N; ++n) sum += C_seq[n - 1] * std::pow(rho, static_cast<double>(N - n));
  EpsilonTerms out;
  out.epsilon = scale * sum;
  out.cap = C_seq.front() * static_cast<double>(P) * std::sqrt(2.0 * log_term / static_cast<double>(J));
  return out;
}

BoundReport approx_bound_check(const GreedyTrace& trace, double opt_value, std::size_t P, std::size_t N, double delta,
                               std::size_t J, const std::vector<double>& C_seq, bool use_cap) {
  BoundReport r = nemhauser_check(trace, opt_value, P, N);
  const auto eps = approx_bound_epsilon(delta, P, N, J, C_seq);
  r.delta = delta;
  r.J = J;
  r.epsilon = use_cap ? eps.cap : eps.epsilon;
  r.bound_rhs -= r.epsilon;
  r.holds = r.achieved >= r.bound_rhs;
  return r;
}

}  // namespace r2opt
