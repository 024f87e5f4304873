#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "r2opt/core.hpp"
#include "r2opt/r2util.hpp"

namespace r2opt {

enum class ProblemKind { hypersphere, dtlz2, gmm, toy1d };

/// A synthetic problem in maximisation orientation.
///
/// hypersphere: angles in [0, pi/2]^(M-1) mapped onto the unit sphere in the
///   non-negative orthant; every image is Pareto optimal.
/// dtlz2: the standard DTLZ2 negated; x in [0,1]^D, the first M-1
///   coordinates position, the rest distance (optimal at 0.5).
/// gmm: two objectives on [0,1]^2, each a sum of three isotropic Gaussian
///   densities w exp(-|x-c|^2 / 2s^2) / (2 pi s^2) with
///     f1: (1.0, (0.2,0.8), 0.10), (0.6, (0.75,0.25), 0.12), (0.4, (0.5,0.5), 0.08)
///     f2: (1.0, (0.8,0.7), 0.10), (0.6, (0.3,0.2), 0.12), (0.4, (0.55,0.9), 0.08)
/// toy1d: f1 = cos(pi x/2) + 0.1 sin(6 pi x), f2 = sin(pi x/2) + 0.1 cos(6 pi x) on [0,1].
struct ProblemSpec {
  std::string name;
  ProblemKind kind = ProblemKind::hypersphere;
  std::size_t D = 0;
  std::size_t M = 0;
  Box box;
  /// True when the native formulation minimises and is negated here.
  bool negated = false;
  /// Bounds on every objective over the whole box.
  std::vector<double> range_lower;
  std::vector<double> range_upper;

  void validate() const;
};

ProblemSpec hypersphere_problem(std::size_t M);
ProblemSpec dtlz2_problem(std::size_t D, std::size_t M);
ProblemSpec gmm_problem();
ProblemSpec toy1d_problem();

/// By name: hypersphere, dtlz2, gmm, toy1d. D and M apply where configurable
/// (hypersphere ignores D; gmm and toy1d ignore both).
ProblemSpec make_problem(const std::string& name, std::size_t D, std::size_t M);
std::vector<std::string> problem_names();

/// Noise-free f(x). Throws if x lies outside the box by more than 1e-12.
ObjectiveVector evaluate(const ProblemSpec& problem, const InputVector& x);

std::string describe(const ProblemSpec& problem);
std::uint64_t digest(const ProblemSpec& problem);

/// Adds i.i.d. N(0, sigma_m^2) with sigma_m = sigma_fraction * range_m.
struct NoiseWrapper {
  ProblemSpec inner;
  double sigma_fraction = 0.0;

  [[nodiscard]] std::vector<double> sigma() const;
  [[nodiscard]] ObjectiveVector evaluate(const InputVector& x, RandomStream& rng) const;
};

/// Dense non-dominated approximation of the Pareto front.
struct ReferenceFront {
  ObjectiveSet points;
  std::uint64_t problem_digest = 0;
  std::size_t resolution = 0;
  std::uint64_t seed = 0;
  bool from_cache = false;
  /// utility-spec digest -> maximum utility.
  std::map<std::uint64_t, double> utility_cache;
};

/// resolution samples, then the non-dominated filter. Hypersphere and dtlz2
/// sample their Pareto sets directly (angles, or position coordinates with
/// distance coordinates at 0.5); gmm and toy1d sample the box uniformly.
/// With cache_dir, fronts are read from and written to a versioned text
/// file keyed by problem digest, resolution and the stream key.
ReferenceFront reference_front(const ProblemSpec& problem, std::size_t resolution, RandomStream& rng,
                               const std::optional<std::string>& cache_dir = std::nullopt);

/// U on the front: exact where available, otherwise the spec's frozen bank
/// or J fresh atoms. Memoised per spec digest and J in front.utility_cache.
double max_utility(ReferenceFront& front, const R2UtilitySpec& spec, RandomStream& rng, std::size_t J = 100000);

/// mean_j max_i s_j(points_i). Two-objective Chebyshev banks over a
/// non-dominated set use a binary search per atom.
double bank_max_over_set(const ScalarisationBank& bank, const ObjectiveSet& points);

}  // namespace r2opt
