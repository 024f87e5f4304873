#pragma once

#include <cstddef>
#include <vector>

#include "r2opt/core.hpp"
#include "r2opt/r2util.hpp"

namespace r2opt {

/// Finite candidate inputs with precomputed images.
struct CandidatePool {
  std::vector<InputVector> inputs;  // empty, or aligned with images
  std::vector<ObjectiveVector> images;

  void validate() const;
  [[nodiscard]] std::size_t size() const { return images.size(); }
};

/// utilities[n] is the utility after n+1 picks, gains[n] the gain of pick n.
struct GreedyTrace {
  std::vector<std::size_t> picks;
  std::vector<double> gains;
  std::vector<double> utilities;
  double floor = 0.0;  // utility of the empty selection
};

/// Exact greedy under a deterministic utility. Ties go to the lowest index.
/// A pick may repeat once every remaining gain is zero.
GreedyTrace greedy_maximise(const CandidatePool& pool, const SetUtility& utility, std::size_t N);

/// Greedy on the MC estimate with J atoms. Frozen: one bank for every round.
/// Per-round: a fresh bank each round, which with J = 1 is random
/// scalarisation. Recorded utilities come from reporter when given,
/// otherwise from the bank that chose each pick.
GreedyTrace approx_greedy_maximise(const CandidatePool& pool, const R2UtilitySpec& spec, std::size_t J, std::size_t N,
                                   ResamplePolicy resample, RandomStream& rng, const SetUtility* reporter = nullptr);

struct SubsetOptimum {
  std::vector<std::size_t> indices;
  double value = 0.0;
};

/// Exhaustive maximum over subsets of size 1..P. Throws if the number of
/// subsets exceeds budget.
SubsetOptimum brute_force_optimum(const CandidatePool& pool, const SetUtility& utility, std::size_t P,
                                  double budget = 1e6);

struct BoundReport {
  std::size_t P = 0;
  std::size_t N = 0;
  double delta = 0.0;
  std::size_t J = 0;
  double epsilon = 0.0;
  double bound_rhs = 0.0;
  double achieved = 0.0;
  bool holds = false;
};

/// achieved = utility after N picks; bound = floor + (1 - e^{-N/P}) (opt - floor).
BoundReport nemhauser_check(const GreedyTrace& trace, double opt_value, std::size_t P, std::size_t N);

struct EpsilonTerms {
  double epsilon = 0.0;  // sqrt(2/J log(4N/delta)) sum_n C_{n-1} (1 - 1/P)^{N-n}
  double cap = 0.0;      // C_0 P sqrt(2 log(4N/delta) / J)
};

EpsilonTerms approx_bound_epsilon(double delta, std::size_t P, std::size_t N, std::size_t J,
                                  const std::vector<double>& C_seq);

/// As nemhauser_check with the additive penalty epsilon (the cap when
/// use_cap, else the sequence form) subtracted from the right-hand side.
BoundReport approx_bound_check(const GreedyTrace& trace, double opt_value, std::size_t P, std::size_t N, double delta,
                               std::size_t J, const std::vector<double>& C_seq, bool use_cap = true);

}  // namespace r2opt
