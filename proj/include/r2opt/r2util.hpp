#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "r2opt/core.hpp"
#include "r2opt/random.hpp"
#include "r2opt/scalarize.hpp"

namespace r2opt {

enum class ResamplePolicy { frozen, per_call };

/// U(Y) = E_{theta ~ dist}[max_{y in Y} s_theta(y)].
///
/// base carries the scalarisation kind and every parameter the distribution
/// does not draw. floor is the value assigned to the empty set; greedy
/// bookkeeping relies on it being a lower bound of every s_theta on the
/// points considered. Unset, it resolves to the lowest scalarised value over
/// the candidate pool at hand (see pool_floor).
struct R2UtilitySpec {
  ScalarisationParams base;
  ParamDistribution dist;
  std::size_t J = 1024;
  std::optional<std::vector<ScalarisationParams>> sample_bank;
  ResamplePolicy resample = ResamplePolicy::frozen;
  std::optional<double> floor;

  void validate() const;
  [[nodiscard]] std::size_t dim() const { return dim_of(base); }
  [[nodiscard]] ScalarisationKind kind() const { return kind_of(base); }
};

/// Chebyshev with uniform simplex weights around an ideal point.
R2UtilitySpec standard_r2_spec(std::vector<double> ideal, std::size_t J = 1024);
/// Polar hypervolume scalarisation with uniform directions.
R2UtilitySpec hypervolume_spec(std::vector<double> nadir, std::size_t J = 1024);
R2UtilitySpec igd_spec(const ObjectiveSet& references, double p = 2.0, double q = 1.0, bool plus = true);
R2UtilitySpec d1_spec(const ObjectiveSet& references, std::vector<double> weights);

/// Canonical text form including the frozen bank, if any. Equal specs give
/// equal strings.
std::string describe(const R2UtilitySpec& spec);
std::uint64_t digest(const R2UtilitySpec& spec);

/// The frozen bank if present; otherwise J fresh draws from rng.
ScalarisationBank draw_bank(const R2UtilitySpec& spec, RandomStream& rng, std::size_t J);
ScalarisationBank draw_bank(const R2UtilitySpec& spec, RandomStream& rng);
/// A copy of spec with J parameters drawn into sample_bank.
R2UtilitySpec freeze(R2UtilitySpec spec, RandomStream& rng);

struct UtilityValue {
  double value = 0.0;
  std::optional<double> std_error;  // MC standard error; empty for exact values
  std::size_t J = 0;                // samples used, 0 for exact
};

UtilityValue mc_utility(const R2UtilitySpec& spec, const ObjectiveSet& Y, RandomStream& rng);
UtilityValue mc_utility(const ScalarisationBank& bank, const ObjectiveSet& Y);

/// Lebesgue volume of the union of boxes [eta, y]. M = 1 or 2: any |Y|.
/// M = 3 or 4: inclusion-exclusion over the non-dominated part, at most 12 points.
UtilityValue exact_hypervolume(const ObjectiveSet& Y, const ObjectiveVector& eta);

/// (1/|R|) sum_r max_y s_r(y) with s the IGD or IGD+ scalarisation; equals -(IGD)^q.
UtilityValue igd_utility(const ObjectiveSet& Y, const ObjectiveSet& references, double p, double q, bool plus);
/// (1/|R|) sum_r max_y s^Chb_(r, w)(y); equals -D1.
UtilityValue d1_utility(const ObjectiveSet& Y, const ObjectiveSet& references, const std::vector<double>& weights);

/// Incremental evaluator for a growing set. The empty state has utility floor.
class GainTracker {
 public:
  virtual ~GainTracker() = default;
  /// U(Y + c) - U(Y).
  [[nodiscard]] virtual double gain(std::span<const double> c) const = 0;
  virtual void add(std::span<const double> c) = 0;
  [[nodiscard]] virtual double utility() const = 0;
  [[nodiscard]] virtual std::size_t size() const = 0;
};

/// A deterministic set utility: an exact evaluator or an R2 utility under
/// a frozen bank.
class SetUtility {
 public:
  virtual ~SetUtility() = default;
  /// Throws std::invalid_argument on the empty set.
  [[nodiscard]] virtual double evaluate(const ObjectiveSet& Y) const = 0;
  [[nodiscard]] virtual double floor() const = 0;
  [[nodiscard]] virtual std::size_t dim() const = 0;
  [[nodiscard]] virtual std::unique_ptr<GainTracker> tracker() const = 0;
  [[nodiscard]] virtual std::string describe() const = 0;
};

/// Mean over a bank of the best scalarised value. Every bank atom has mass 1/J,
/// so a bank holding each reference once is the exact finite-uniform utility.
class BankUtility final : public SetUtility {
 public:
  explicit BankUtility(ScalarisationBank bank, double floor = 0.0);

  [[nodiscard]] double evaluate(const ObjectiveSet& Y) const override;
  [[nodiscard]] double floor() const override { return floor_; }
  [[nodiscard]] std::size_t dim() const override { return bank_.dim(); }
  [[nodiscard]] std::unique_ptr<GainTracker> tracker() const override;
  [[nodiscard]] std::string describe() const override;

  [[nodiscard]] const ScalarisationBank& bank() const { return bank_; }
  /// Per-atom best values over Y, J entries.
  void best_values(const ObjectiveSet& Y, std::vector<double>& out) const;

 private:
  ScalarisationBank bank_;
  double floor_;
};

class ExactHypervolumeUtility final : public SetUtility {
 public:
  explicit ExactHypervolumeUtility(ObjectiveVector eta);

  [[nodiscard]] double evaluate(const ObjectiveSet& Y) const override;
  [[nodiscard]] double floor() const override { return 0.0; }
  [[nodiscard]] std::size_t dim() const override { return eta_.size(); }
  [[nodiscard]] std::unique_ptr<GainTracker> tracker() const override;
  [[nodiscard]] std::string describe() const override;

 private:
  ObjectiveVector eta_;
};

/// An exact evaluator for spec when one exists: hypervolume for M <= 2 (any
/// set) and finite-uniform distributions (every atom once). Otherwise null.
/// allow_small_sets also admits hypervolume for M in {3, 4}, valid only on
/// sets within the inclusion-exclusion limit.
/// An unset floor resolves against pool, or to 0 without one.
std::unique_ptr<SetUtility> exact_utility(const R2UtilitySpec& spec, bool allow_small_sets = false,
                                          const std::vector<ObjectiveVector>* pool = nullptr);

/// The frozen bank of spec if present, else J draws from rng. Floor as above.
std::unique_ptr<SetUtility> bank_utility(const R2UtilitySpec& spec, RandomStream& rng, std::size_t J,
                                         const std::vector<ObjectiveVector>* pool = nullptr);

/// min over atoms and points of s_j(y); a valid floor for greedy over that pool.
double pool_floor(const ScalarisationBank& bank, const std::vector<ObjectiveVector>& pool);
double resolve_floor(const R2UtilitySpec& spec, const ScalarisationBank& bank,
                     const std::vector<ObjectiveVector>* pool);

/// U(Y + c) - U(Y) with U(empty) = floor.
double marginal_gain(const SetUtility& utility, const ObjectiveSet& Y, const ObjectiveVector& c);

/// U(Y_R) - U(Y).
double r2_metric(const SetUtility& utility, const ObjectiveSet& Y, const ObjectiveSet& Y_R);
/// As above with one bank drawn from rng and shared by both terms.
double r2_metric(const R2UtilitySpec& spec, const ObjectiveSet& Y, const ObjectiveSet& Y_R, RandomStream& rng);

}  // namespace r2opt
