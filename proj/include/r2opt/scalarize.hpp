#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "r2opt/core.hpp"
#include "r2opt/random.hpp"

namespace r2opt {

// Scalarisation families. All map R^M to R and are maximised. Vectors are
// plain std::vector so parameter sets can be built from config without
// the finiteness checks of ObjectiveVector getting in the way of zero weights.

struct Linear {
  std::vector<double> weights;  // simplex
};

struct Lp {
  std::vector<double> ideal;
  std::vector<double> weights;  // simplex
  double p = 2.0;
};

struct Chebyshev {
  std::vector<double> ideal;
  std::vector<double> weights;  // simplex
};

struct AugChebyshev {
  std::vector<double> ideal;
  std::vector<double> weights;  // simplex
  double gamma = 0.0;
};

/// Polar form of the hypervolume indicator: c_M * min_m(max(0, y_m - nadir_m) / direction_m)^M.
struct HypervolumeScalarisation {
  std::vector<double> nadir;
  std::vector<double> direction;  // strictly positive, unit L2 norm
};

/// -||reference - y||_p^q
struct Igd {
  std::vector<double> reference;
  double p = 2.0;
  double q = 1.0;
};

/// -||max(reference - y, 0)||_p^q
struct IgdPlus {
  std::vector<double> reference;
  double p = 2.0;
  double q = 1.0;
};

using ScalarisationParams = std::variant<Linear, Lp, Chebyshev, AugChebyshev, HypervolumeScalarisation, Igd, IgdPlus>;

enum class ScalarisationKind { linear, lp, chebyshev, aug_chebyshev, hypervolume, igd, igd_plus };

ScalarisationKind kind_of(const ScalarisationParams& params);
std::size_t dim_of(const ScalarisationParams& params);
std::string to_string(ScalarisationKind kind);
ScalarisationKind scalarisation_kind_from_string(const std::string& name);

/// Weakly monotone over all of R^M. Only plain IGD is not.
bool is_monotone(ScalarisationKind kind);

/// Throws std::invalid_argument if the parameters break their invariants.
void validate(const ScalarisationParams& params);

/// pi^(M/2) / (2^M Gamma(M/2 + 1)), the volume of the positive orthant of the unit M-ball.
double hypervolume_constant(std::size_t dim);

double scalarise(const ScalarisationParams& params, std::span<const double> y);
double scalarise(const ScalarisationParams& params, const ObjectiveVector& y);

/// Per-objective affine map of [lower, upper] onto [0, 1]. Not clamped.
struct ObjectiveTransform {
  ObjectiveVector lower;
  ObjectiveVector upper;

  void validate() const;
  [[nodiscard]] std::size_t dim() const { return lower.size(); }
  void apply(std::span<const double> y, std::span<double> out) const;
};

ObjectiveVector apply_transform(const ObjectiveTransform& t, const ObjectiveVector& y);

// Parameter distributions p(theta).

struct UniformSimplex {
  std::size_t dim = 0;
};

struct UniformPositiveSphere {
  std::size_t dim = 0;
};

/// Uniform over a finite set of reference points.
struct FiniteUniform {
  std::vector<ObjectiveVector> references;
};

using ParamDistribution = std::variant<UniformSimplex, UniformPositiveSphere, FiniteUniform>;

std::vector<double> sample_simplex(std::size_t dim, RandomStream& rng);
std::vector<double> sample_positive_sphere(std::size_t dim, RandomStream& rng);

/// Draws count i.i.d. parameter sets. The distribution supplies the random
/// component (weights, direction or reference point); every other field is
/// copied from base.
std::vector<ScalarisationParams> sample_params(const ScalarisationParams& base, const ParamDistribution& dist,
                                               RandomStream& rng, std::size_t count);

/// Packed parameters of one scalarisation kind for tight evaluation loops.
/// Sample j has probability mass 1/J.
class ScalarisationBank {
 public:
  ScalarisationBank() = default;
  explicit ScalarisationBank(const std::vector<ScalarisationParams>& params);

  [[nodiscard]] std::size_t size() const { return count_; }
  [[nodiscard]] std::size_t dim() const { return dim_; }
  [[nodiscard]] ScalarisationKind kind() const { return kind_; }
  [[nodiscard]] bool empty() const { return count_ == 0; }

  [[nodiscard]] double value(std::size_t j, std::span<const double> y) const;
  /// out[j] = s_j(y) for all j.
  void values(std::span<const double> y, std::span<double> out) const;

  /// Hypervolume banks can compare in the monotone "radius" space
  /// min_m(max(0, y_m - nadir_m) / direction_m), avoiding the power.
  [[nodiscard]] double hv_radius(std::size_t j, std::span<const double> y) const;
  [[nodiscard]] double hv_constant() const { return hv_const_; }

 private:
  ScalarisationKind kind_ = ScalarisationKind::linear;
  std::size_t dim_ = 0;
  std::size_t count_ = 0;
  std::vector<double> point_;   // ideal / nadir / reference, J x M
  std::vector<double> weight_;  // weights or inverse direction, J x M
  std::vector<double> p_;
  std::vector<double> q_;
  std::vector<double> gamma_;
  double hv_const_ = 0.0;
};

}  // namespace r2opt
