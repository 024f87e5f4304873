#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "r2opt/core.hpp"
#include "r2opt/random.hpp"

namespace r2opt {

struct Dataset {
  std::vector<InputVector> inputs;
  std::vector<ObjectiveVector> outputs;

  void validate() const;
  [[nodiscard]] std::size_t size() const { return inputs.size(); }
  [[nodiscard]] std::size_t input_dim() const { return inputs.empty() ? 0 : inputs.front().size(); }
  [[nodiscard]] std::size_t output_dim() const { return outputs.empty() ? 0 : outputs.front().size(); }
  void append(InputVector x, ObjectiveVector y);
};

/// Hyperparameters of one output in model space: lengthscales act on inputs
/// mapped to the unit cube, variances on standardised outputs.
struct GpOutputHyper {
  std::vector<double> lengthscales;
  double signal_variance = 1.0;
  double noise_variance = 0.0;
};

struct GpHyperparams {
  std::vector<GpOutputHyper> outputs;
};

struct GammaPrior {
  double shape = 3.0;
  double rate = 6.0;
};

struct FitOptions {
  /// Condition on these instead of maximising the marginal likelihood.
  std::optional<GpHyperparams> fixed;
  /// Pin the noise variance (model space); 0 gives a noise-free likelihood.
  std::optional<double> fixed_noise;
  /// Input box mapped to the unit cube. Defaults to the data's bounding box.
  std::optional<Box> input_box;
  double log_lower = -6.907755278982137;  // log(1e-3)
  double log_upper = 6.907755278982137;   // log(1e3)
  std::size_t starts = 8;
  std::size_t max_evaluations = 400;      // per start and output
  double min_step = 1.0 / 64.0;           // log-space step at which search stops
  /// Prior on every lengthscale; the search then maximises likelihood plus
  /// log prior. Unset: maximum likelihood.
  std::optional<GammaPrior> lengthscale_prior;
};

class FactorisationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-output predictive moments in original units.
struct PosteriorBatch {
  Eigen::MatrixXd means;                   // k x M
  std::vector<Eigen::MatrixXd> covariances;  // M matrices, k x k
};

/// Independent-output GP regression with a squared-exponential ARD kernel.
/// Prior mean is zero on standardised outputs, i.e. the data mean in
/// original units. Immutable after fit.
class GpModel {
 public:
  static GpModel fit(const Dataset& data, const FitOptions& options, RandomStream& rng);

  /// observation_noise adds the noise variance to the diagonal.
  [[nodiscard]] PosteriorBatch posterior(const std::vector<InputVector>& points, bool observation_noise = false) const;
  /// H draws of the latent function, each k x M.
  [[nodiscard]] std::vector<Eigen::MatrixXd> sample_joint(const std::vector<InputVector>& points, std::size_t H,
                                                          RandomStream& rng) const;
  /// sqrt(sum_m var_m(x)) in original units; optional per-output scale divides
  /// each standard deviation first.
  [[nodiscard]] double trace_sd(const InputVector& x, bool observation_noise = false,
                                std::span<const double> scale = {}) const;

  /// Marginal mean and variance of every output at one point (original units).
  void predict(std::span<const double> x, std::span<double> mean, std::span<double> var,
               bool observation_noise = false) const;

  [[nodiscard]] const GpHyperparams& hyperparams() const { return hyper_; }
  [[nodiscard]] const Dataset& data() const { return data_; }
  [[nodiscard]] std::size_t input_dim() const { return data_.input_dim(); }
  [[nodiscard]] std::size_t output_dim() const { return data_.output_dim(); }
  [[nodiscard]] bool noise_free() const { return noise_free_; }
  [[nodiscard]] double output_mean(std::size_t m) const { return y_mean_[m]; }
  [[nodiscard]] double output_scale(std::size_t m) const { return y_scale_[m]; }
  /// signal (+ noise) variance in original units, the far-field variance.
  [[nodiscard]] double prior_variance(std::size_t m, bool observation_noise = false) const;
  [[nodiscard]] double jitter(std::size_t m) const { return jitter_[m]; }

  /// Log marginal likelihood of output m's standardised data under h.
  [[nodiscard]] double log_marginal_likelihood(std::size_t m, const GpOutputHyper& h) const;
  [[nodiscard]] double log_marginal_likelihood(std::size_t m) const;
  /// sum_d log Gamma(l_d; shape, rate), up to a constant.
  [[nodiscard]] static double log_prior(const GpOutputHyper& h, const GammaPrior& prior);
  /// Search objective at each multi-start initial point; empty under fixed hyperparameters.
  [[nodiscard]] const std::vector<double>& start_log_likelihoods(std::size_t m) const { return start_lml_[m]; }

  /// Unit-cube coordinates of x.
  [[nodiscard]] Eigen::VectorXd to_unit(std::span<const double> x) const;
  /// Training inputs in unit-cube coordinates, n x D.
  [[nodiscard]] const Eigen::MatrixXd& unit_inputs() const { return X_; }
  /// Standardised training outputs of output m.
  [[nodiscard]] const Eigen::VectorXd& standardised_outputs(std::size_t m) const { return Y_[m]; }
  /// Cholesky factor of the regularised train covariance for output m.
  [[nodiscard]] const Eigen::MatrixXd& cholesky(std::size_t m) const { return L_[m]; }
  [[nodiscard]] const Eigen::VectorXd& alpha(std::size_t m) const { return alpha_[m]; }

  /// Kernel between unit-cube points under output m's hyperparameters.
  [[nodiscard]] double kernel(std::size_t m, const Eigen::Ref<const Eigen::VectorXd>& a,
                              const Eigen::Ref<const Eigen::VectorXd>& b) const;
  [[nodiscard]] Eigen::VectorXd cross_kernel(std::size_t m, const Eigen::Ref<const Eigen::VectorXd>& u) const;

 private:
  GpModel() = default;
  void condition();

  Dataset data_;
  GpHyperparams hyper_;
  bool noise_free_ = false;
  std::vector<double> lower_, width_;
  std::vector<double> y_mean_, y_scale_;
  Eigen::MatrixXd X_;
  std::vector<Eigen::VectorXd> Y_;
  std::vector<Eigen::MatrixXd> L_;
  std::vector<Eigen::VectorXd> alpha_;
  std::vector<double> jitter_;
  std::vector<std::vector<double>> start_lml_;
};

/// Lower Cholesky factor of A, or of A + jitter I when A is numerically
/// singular, escalating jitter from 1e-10 s to 1e-4 s by factors of 10.
/// Throws FactorisationError past the limit.
Eigen::MatrixXd jittered_cholesky(const Eigen::MatrixXd& A, double s, double* used_jitter = nullptr);

/// F with F F^T = A for symmetric PSD A, via pivoted LDL^T with negative
/// pivots clamped to zero. Rank-deficient A is exact, not jittered.
Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& A);

}  // namespace r2opt
