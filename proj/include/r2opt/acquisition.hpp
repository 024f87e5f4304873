#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "r2opt/r2util.hpp"
#include "r2opt/surrogate.hpp"

namespace r2opt {

enum class AcquisitionKind { eui, aeui, thompson, ucb, random_scalarisation, mixed, random };

std::string to_string(AcquisitionKind kind);
AcquisitionKind acquisition_kind_from_string(const std::string& name);

/// A(x) = a_delta + b_delta * trace_sd(x).
struct AdjustmentConfig {
  double a_delta = 0.0;
  double b_delta = 0.0;
  double delta = 0.1;

  void validate() const;
};

enum class MixingRule { threshold, bernoulli };

struct MixingConfig {
  MixingRule rule = MixingRule::threshold;
  double p = 0.0;
};

struct AcquisitionSpec {
  AcquisitionKind kind = AcquisitionKind::eui;
  /// Scalarisation family and distribution. A frozen bank on this spec is
  /// reused by every call; otherwise each call draws J fresh atoms.
  R2UtilitySpec utility;
  std::size_t J = 256;
  std::size_t H = 128;
  double beta = 2.0;
  AdjustmentConfig adjustment;
  MixingConfig mixing;
  /// Maps model outputs before scalarising; its widths also rescale trace_sd.
  std::optional<ObjectiveTransform> transform;

  void validate() const;
};

struct CandidateSet {
  std::size_t count = 0;  // 0 means 512 * D
  std::size_t polish_steps = 20;
  /// Thompson samples jointly at this many candidates plus the data.
  std::size_t thompson_limit = 1024;

  [[nodiscard]] std::size_t resolved_count(std::size_t dim) const { return count ? count : 512 * dim; }
};

/// Randomly shifted Kronecker sequence with the generalised golden ratio,
/// mapped into box.
std::vector<InputVector> kronecker_candidates(const Box& box, std::size_t K, RandomStream& rng);

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// EUI (and its adjusted variants) at arbitrary inputs with every random
/// quantity drawn once at construction, so values over candidates share one
/// bank and one set of model-sample noise.
///
/// Noise-free models: the baseline is the observed data and f(x) draws are
/// mu(x) + sigma(x) z_h. Noisy models: each draw h samples the latent
/// function at the data and conditions f(x) on it.
class AcquisitionFunction {
 public:
  AcquisitionFunction(const GpModel& model, const AcquisitionSpec& spec, double lambda, RandomStream& rng);

  /// Value with a standard error over both model draws and atoms.
  [[nodiscard]] Estimate estimate(const InputVector& x) const { return evaluate(x, true); }
  [[nodiscard]] double operator()(const InputVector& x) const { return evaluate(x, false).value; }
  [[nodiscard]] const ScalarisationBank& bank() const { return bank_; }
  [[nodiscard]] double lambda() const { return lambda_; }

 private:
  void transformed(std::span<const double> y, std::span<double> out) const;
  [[nodiscard]] Estimate evaluate(const InputVector& x, bool with_error) const;
  [[nodiscard]] double gain(std::span<const double> y, std::span<const double> baseline, double* columns) const;

  const GpModel* model_;
  AcquisitionKind kind_;
  double beta_;
  double lambda_;
  AdjustmentConfig adjustment_;
  std::optional<ObjectiveTransform> transform_;
  std::vector<double> scale_;
  ScalarisationBank bank_;
  std::size_t H_ = 1;
  bool conditional_ = false;
  Eigen::MatrixXd z_;                      // H x M
  std::vector<double> baseline_;           // H x J, or J when shared
  std::vector<Eigen::MatrixXd> weights_;   // per output n x H: K^-1 F_h in model space
  std::vector<Eigen::MatrixXd> prior_chol_;
  mutable std::vector<double> scratch_;
};

/// EUI at x with fresh draws from rng. Never negative.
Estimate eui_estimate(const GpModel& model, const AcquisitionSpec& spec, const InputVector& x, RandomStream& rng);

/// a_delta + b_delta * trace_sd(x); scale as in GpModel::trace_sd.
double adjustment(const GpModel& model, const AdjustmentConfig& config, const InputVector& x,
                  std::span<const double> scale = {});

/// 1 for AEUI, 0 for EUI-like kinds. Mixed: threshold gives 1 iff n <= p N_total;
/// bernoulli draws from rng.
double mixing_lambda(const AcquisitionSpec& spec, std::size_t n, std::size_t N_total, RandomStream& rng);

struct AcquisitionResult {
  InputVector x;
  double value = 0.0;   // NaN for the random baseline
  double lambda = 0.0;  // NaN unless the kind uses an adjustment
  std::size_t evaluations = 0;
};

/// Maximises the spec's acquisition over Kronecker candidates in box, then
/// polishes the incumbent coordinate-wise with step halving. n is the
/// 1-based iteration. Thompson is not polished.
AcquisitionResult acquire(const GpModel& model, const AcquisitionSpec& spec, const CandidateSet& candidates,
                          const Box& box, std::size_t n, std::size_t N_total, RandomStream& rng);

struct AeuiTerms {
  double epsilon1 = 0.0;  // sqrt(2/min(J,H) log(12N/delta)) sum_n C_{n-1} (1 - 1/P)^{N-n}
  double epsilon2 = 0.0;  // 2 sum_n A_n e^{-(N-n)/P}
};

AeuiTerms aeui_bound_terms(double delta, std::size_t P, std::size_t N, std::size_t J, std::size_t H,
                           const std::vector<double>& C_seq, const std::vector<double>& adjustment_values);

}  // namespace r2opt
