#include "r2opt/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace r2opt {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Standardiser {
  double mean = 0.0;
  double scale = 1.0;
};

Standardiser standardise(const std::vector<ObjectiveVector>& ys, std::size_t m) {
  const double n = static_cast<double>(ys.size());
  double mean = 0.0;
  for (const auto& y : ys) mean += y[m] / n;
  double ss = 0.0;
  for (const auto& y : ys) ss += (y[m] - mean) * (y[m] - mean);
  double sd = ys.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  // Constant outputs keep unit scale so the signal variance floors instead.
  if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) sd = 1.0;
  return {mean, sd};
}

Eigen::MatrixXd se_gram(const Eigen::MatrixXd& Xs, double s) {
  const Eigen::Index n = Xs.rows();
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = s;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double d2 = (Xs.row(i) - Xs.row(j)).squaredNorm();
      K(i, j) = K(j, i) = s * std::exp(-0.5 * d2);
    }
  }
  return K;
}

Eigen::MatrixXd scaled(const Eigen::MatrixXd& X, const std::vector<double>& ls) {
  Eigen::MatrixXd Xs = X;
  for (Eigen::Index d = 0; d < X.cols(); ++d) Xs.col(d) /= ls[static_cast<std::size_t>(d)];
  return Xs;
}

double lml_of(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GpOutputHyper& h,
              double* used_jitter = nullptr) {
  Eigen::MatrixXd K = se_gram(scaled(X, h.lengthscales), h.signal_variance);
  K.diagonal().array() += h.noise_variance;
  Eigen::MatrixXd L;
  try {
    L = jittered_cholesky(K, h.signal_variance, used_jitter);
  } catch (const FactorisationError&) {
    return kNegInf;
  }
  const Eigen::VectorXd a = L.triangularView<Eigen::Lower>().solve(y);
  const double n = static_cast<double>(y.size());
  return -0.5 * a.squaredNorm() - L.diagonal().array().log().sum() - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

struct Packing {
  std::size_t dim = 0;
  bool free_noise = true;
  double fixed_noise = 0.0;

  [[nodiscard]] std::size_t size() const { return dim + 1 + (free_noise ? 1 : 0); }

  [[nodiscard]] GpOutputHyper unpack(const std::vector<double>& theta) const {
    GpOutputHyper h;
    h.lengthscales.resize(dim);
    for (std::size_t d = 0; d < dim; ++d) h.lengthscales[d] = std::exp(theta[d]);
    h.signal_variance = std::exp(theta[dim]);
    h.noise_variance = free_noise ? std::exp(theta[dim + 1]) : fixed_noise;
    return h;
  }
};

// Noise-free fits prefer hyperparameters whose covariance factors without
// jitter, since any jitter breaks exact interpolation.
struct Score {
  bool jittered = true;
  double lml = kNegInf;
};

bool better(const Score& a, const Score& b, bool noise_free) {
  if (noise_free && a.jittered != b.jittered) return !a.jittered;
  return a.lml > b.lml;
}

}  // namespace

void Dataset::validate() const {
  if (inputs.size() != outputs.size()) throw std::invalid_argument("Dataset: inputs and outputs misaligned");
  for (const auto& x : inputs) {
    if (x.size() != input_dim()) throw DimensionError("Dataset: input dimension mismatch");
  }
  for (const auto& y : outputs) {
    if (y.size() != output_dim()) throw DimensionError("Dataset: output dimension mismatch");
  }
}

void Dataset::append(InputVector x, ObjectiveVector y) {
  if (!inputs.empty() && (x.size() != input_dim() || y.size() != output_dim())) {
    throw DimensionError("Dataset::append: dimension mismatch");
  }
  inputs.push_back(std::move(x));
  outputs.push_back(std::move(y));
}

Eigen::MatrixXd jittered_cholesky(const Eigen::MatrixXd& A, double s, double* used_jitter) {
  const double scale = s > 0.0 ? s : 1.0;
  {
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() == Eigen::Success) {
      Eigen::MatrixXd L = llt.matrixL();
      const auto d = L.diagonal().array();
      // Accept the plain factor only when it is far from singular.
      if (L.allFinite() && d.minCoeff() > 0.0 && d.square().minCoeff() >= 1e-12 * d.square().maxCoeff()) {
        if (used_jitter) *used_jitter = 0.0;
        return L;
      }
    }
  }
  for (double rel = 1e-10; rel <= 1e-4 * (1.0 + 1e-9); rel *= 10.0) {
    Eigen::MatrixXd B = A;
    B.diagonal().array() += rel * scale;
    Eigen::LLT<Eigen::MatrixXd> llt(B);
    if (llt.info() == Eigen::Success) {
      Eigen::MatrixXd L = llt.matrixL();
      if (L.allFinite() && (L.diagonal().array() > 0.0).all()) {
        if (used_jitter) *used_jitter = rel * scale;
        return L;
      }
    }
  }
  throw FactorisationError("Cholesky factorisation failed after jitter escalation to 1e-4");
}

Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& A) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  if (ldlt.info() != Eigen::Success) throw FactorisationError("psd_factor: LDLT failed");
  const Eigen::VectorXd d = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXd L = ldlt.matrixL();
  L = L * d.asDiagonal();
  Eigen::MatrixXd out = ldlt.transpositionsP().transpose() * L;
  if (!out.allFinite()) throw FactorisationError("psd_factor: non-finite factor");
  return out;
}

GpModel GpModel::fit(const Dataset& data, const FitOptions& options, RandomStream& rng) {
  data.validate();
  if (data.size() < 2) throw std::invalid_argument("GpModel::fit: need at least 2 data points");
  const std::size_t D = data.input_dim();
  const std::size_t M = data.output_dim();
  GpModel model;
  model.data_ = data;

  if (options.input_box) {
    options.input_box->validate();
    if (options.input_box->dim() != D) throw DimensionError("GpModel::fit: box dimension mismatch");
    model.lower_ = options.input_box->lower;
    model.width_.resize(D);
    for (std::size_t d = 0; d < D; ++d) model.width_[d] = options.input_box->upper[d] - options.input_box->lower[d];
  } else {
    model.lower_.assign(D, std::numeric_limits<double>::infinity());
    std::vector<double> upper(D, -std::numeric_limits<double>::infinity());
    for (const auto& x : data.inputs) {
      for (std::size_t d = 0; d < D; ++d) {
        model.lower_[d] = std::min(model.lower_[d], x[d]);
        upper[d] = std::max(upper[d], x[d]);
      }
    }
    model.width_.resize(D);
    for (std::size_t d = 0; d < D; ++d) {
      model.width_[d] = upper[d] > model.lower_[d] ? upper[d] - model.lower_[d] : 1.0;
    }
  }

  const std::size_t n = data.size();
  model.X_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(D));
  for (std::size_t i = 0; i < n; ++i) model.X_.row(static_cast<Eigen::Index>(i)) = model.to_unit(data.inputs[i].coords());

  model.Y_.resize(M);
  model.y_mean_.resize(M);
  model.y_scale_.resize(M);
  for (std::size_t m = 0; m < M; ++m) {
    const auto st = standardise(data.outputs, m);
    model.y_mean_[m] = st.mean;
    model.y_scale_[m] = st.scale;
    model.Y_[m].resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) model.Y_[m](static_cast<Eigen::Index>(i)) = (data.outputs[i][m] - st.mean) / st.scale;
  }

  model.noise_free_ = options.fixed_noise && *options.fixed_noise == 0.0;
  if (options.fixed) {
    if (options.fixed->outputs.size() != M) throw DimensionError("GpModel::fit: fixed hyperparameters for wrong M");
    for (const auto& h : options.fixed->outputs) {
      if (h.lengthscales.size() != D) throw DimensionError("GpModel::fit: fixed lengthscales for wrong D");
      if (!(h.signal_variance > 0.0) || !(h.noise_variance >= 0.0) ||
          std::any_of(h.lengthscales.begin(), h.lengthscales.end(), [](double l) { return !(l > 0.0); })) {
        throw std::invalid_argument("GpModel::fit: fixed hyperparameters must be positive");
      }
    }
    model.hyper_ = *options.fixed;
    model.start_lml_.resize(M);
    if (options.fixed_noise) {
      for (auto& h : model.hyper_.outputs) h.noise_variance = *options.fixed_noise;
    }
    model.noise_free_ = std::all_of(model.hyper_.outputs.begin(), model.hyper_.outputs.end(),
                                    [](const GpOutputHyper& h) { return h.noise_variance == 0.0; });
    model.condition();
    return model;
  }

  if (options.lengthscale_prior && !(options.lengthscale_prior->shape > 0.0 && options.lengthscale_prior->rate > 0.0)) {
    throw std::invalid_argument("GpModel::fit: prior shape and rate must be positive");
  }
  Packing pack{D, !options.fixed_noise.has_value(), options.fixed_noise.value_or(0.0)};
  const std::size_t P = pack.size();
  const double lo = options.log_lower, hi = options.log_upper;
  auto clamp = [&](double v) { return std::clamp(v, lo, hi); };

  model.hyper_.outputs.resize(M);
  model.start_lml_.resize(M);
  for (std::size_t m = 0; m < M; ++m) {
    RandomStream starts_rng = rng.child(static_cast<std::uint64_t>(m));
    auto objective = [&](const std::vector<double>& theta, double* jit) {
      const auto h = pack.unpack(theta);
      const double lml = lml_of(model.X_, model.Y_[m], h, jit);
      return options.lengthscale_prior ? lml + log_prior(h, *options.lengthscale_prior) : lml;
    };
    std::vector<double> best_theta;
    Score best;
    for (std::size_t s = 0; s < std::max<std::size_t>(1, options.starts); ++s) {
      std::vector<double> theta(P);
      if (s == 0) {
        for (std::size_t d = 0; d < D; ++d) theta[d] = std::log(0.5);
        theta[D] = 0.0;
        if (pack.free_noise) theta[D + 1] = std::log(1e-2);
      } else {
        for (std::size_t d = 0; d < D; ++d) theta[d] = starts_rng.uniform(std::log(0.05), std::log(5.0));
        theta[D] = starts_rng.uniform(std::log(0.1), std::log(10.0));
        if (pack.free_noise) theta[D + 1] = starts_rng.uniform(std::log(1e-3), std::log(0.3));
      }
      for (auto& v : theta) v = clamp(v);
      Score f;
      double jit = 0.0;
      f.lml = objective(theta, &jit);
      f.jittered = jit > 0.0;
      model.start_lml_[m].push_back(f.lml);
      std::size_t evals = 1;
      double step = 1.0;
      while (step >= options.min_step && evals < options.max_evaluations) {
        bool improved = false;
        for (std::size_t i = 0; i < P && evals < options.max_evaluations; ++i) {
          for (double dir : {1.0, -1.0}) {
            std::vector<double> cand = theta;
            cand[i] = clamp(theta[i] + dir * step);
            if (cand[i] == theta[i]) continue;
            Score fc;
            fc.lml = objective(cand, &jit);
            fc.jittered = jit > 0.0;
            ++evals;
            if (better(fc, f, model.noise_free_)) {
              theta = std::move(cand);
              f = fc;
              improved = true;
              break;
            }
          }
        }
        if (!improved) step *= 0.5;
      }
      if (best_theta.empty() || better(f, best, model.noise_free_)) {
        best = f;
        best_theta = theta;
      }
    }
    model.hyper_.outputs[m] = pack.unpack(best_theta);
  }
  model.condition();
  return model;
}

void GpModel::condition() {
  const std::size_t M = Y_.size();
  L_.resize(M);
  alpha_.resize(M);
  jitter_.resize(M);
  for (std::size_t m = 0; m < M; ++m) {
    const auto& h = hyper_.outputs[m];
    Eigen::MatrixXd K = se_gram(scaled(X_, h.lengthscales), h.signal_variance);
    K.diagonal().array() += h.noise_variance;
    L_[m] = jittered_cholesky(K, h.signal_variance, &jitter_[m]);
    alpha_[m] = L_[m].triangularView<Eigen::Lower>().transpose().solve(L_[m].triangularView<Eigen::Lower>().solve(Y_[m]));
  }
}

Eigen::VectorXd GpModel::to_unit(std::span<const double> x) const {
  if (x.size() != lower_.size()) throw DimensionError("GpModel: input dimension mismatch");
  Eigen::VectorXd u(static_cast<Eigen::Index>(x.size()));
  for (std::size_t d = 0; d < x.size(); ++d) u(static_cast<Eigen::Index>(d)) = (x[d] - lower_[d]) / width_[d];
  return u;
}

double GpModel::kernel(std::size_t m, const Eigen::Ref<const Eigen::VectorXd>& a,
                       const Eigen::Ref<const Eigen::VectorXd>& b) const {
  const auto& h = hyper_.outputs[m];
  double d2 = 0.0;
  for (Eigen::Index d = 0; d < a.size(); ++d) {
    const double z = (a(d) - b(d)) / h.lengthscales[static_cast<std::size_t>(d)];
    d2 += z * z;
  }
  return h.signal_variance * std::exp(-0.5 * d2);
}

Eigen::VectorXd GpModel::cross_kernel(std::size_t m, const Eigen::Ref<const Eigen::VectorXd>& u) const {
  Eigen::VectorXd k(X_.rows());
  for (Eigen::Index i = 0; i < X_.rows(); ++i) k(i) = kernel(m, X_.row(i).transpose(), u);
  return k;
}

double GpModel::prior_variance(std::size_t m, bool observation_noise) const {
  const auto& h = hyper_.outputs[m];
  return (h.signal_variance + (observation_noise ? h.noise_variance : 0.0)) * y_scale_[m] * y_scale_[m];
}

double GpModel::log_marginal_likelihood(std::size_t m, const GpOutputHyper& h) const { return lml_of(X_, Y_[m], h); }

double GpModel::log_prior(const GpOutputHyper& h, const GammaPrior& prior) {
  double s = 0.0;
  for (double l : h.lengthscales) s += (prior.shape - 1.0) * std::log(l) - prior.rate * l;
  return s;
}

double GpModel::log_marginal_likelihood(std::size_t m) const { return lml_of(X_, Y_[m], hyper_.outputs[m]); }

void GpModel::predict(std::span<const double> x, std::span<double> mean, std::span<double> var,
                      bool observation_noise) const {
  const Eigen::VectorXd u = to_unit(x);
  for (std::size_t m = 0; m < Y_.size(); ++m) {
    const auto& h = hyper_.outputs[m];
    const Eigen::VectorXd k = cross_kernel(m, u);
    const Eigen::VectorXd v = L_[m].triangularView<Eigen::Lower>().solve(k);
    const double mu = k.dot(alpha_[m]);
    double s2 = std::max(0.0, h.signal_variance - v.squaredNorm());
    if (observation_noise) s2 += h.noise_variance;
    mean[m] = y_mean_[m] + y_scale_[m] * mu;
    var[m] = y_scale_[m] * y_scale_[m] * s2;
  }
}

PosteriorBatch GpModel::posterior(const std::vector<InputVector>& points, bool observation_noise) const {
  if (points.empty()) throw std::invalid_argument("GpModel::posterior: no points");
  const auto k = static_cast<Eigen::Index>(points.size());
  const std::size_t M = Y_.size();
  Eigen::MatrixXd U(k, X_.cols());
  for (Eigen::Index i = 0; i < k; ++i) U.row(i) = to_unit(points[static_cast<std::size_t>(i)].coords());
  PosteriorBatch out;
  out.means.resize(k, static_cast<Eigen::Index>(M));
  out.covariances.resize(M);
  for (std::size_t m = 0; m < M; ++m) {
    const auto& h = hyper_.outputs[m];
    Eigen::MatrixXd Ks(X_.rows(), k);
    for (Eigen::Index j = 0; j < k; ++j) Ks.col(j) = cross_kernel(m, U.row(j).transpose());
    const Eigen::MatrixXd V = L_[m].triangularView<Eigen::Lower>().solve(Ks);
    Eigen::MatrixXd C(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) C(i, j) = C(j, i) = kernel(m, U.row(i).transpose(), U.row(j).transpose());
    }
    C.noalias() -= V.transpose() * V;
    C = 0.5 * (C + C.transpose());
    for (Eigen::Index i = 0; i < k; ++i) C(i, i) = std::max(0.0, C(i, i));
    if (observation_noise) C.diagonal().array() += h.noise_variance;
    const double s2 = y_scale_[m] * y_scale_[m];
    out.means.col(static_cast<Eigen::Index>(m)) = (Ks.transpose() * alpha_[m]).array() * y_scale_[m] + y_mean_[m];
    out.covariances[m] = C * s2;
  }
  return out;
}

std::vector<Eigen::MatrixXd> GpModel::sample_joint(const std::vector<InputVector>& points, std::size_t H,
                                                   RandomStream& rng) const {
  if (H == 0) throw std::invalid_argument("GpModel::sample_joint: H must be positive");
  const auto post = posterior(points, false);
  const auto k = static_cast<Eigen::Index>(points.size());
  const std::size_t M = Y_.size();
  std::vector<Eigen::MatrixXd> factors(M);
  for (std::size_t m = 0; m < M; ++m) factors[m] = psd_factor(post.covariances[m]);
  std::vector<Eigen::MatrixXd> out(H, Eigen::MatrixXd(k, static_cast<Eigen::Index>(M)));
  Eigen::VectorXd z(k);
  for (std::size_t h = 0; h < H; ++h) {
    for (std::size_t m = 0; m < M; ++m) {
      for (Eigen::Index i = 0; i < k; ++i) z(i) = rng.normal();
      out[h].col(static_cast<Eigen::Index>(m)) =
          post.means.col(static_cast<Eigen::Index>(m)) + factors[m] * z;
    }
  }
  return out;
}

double GpModel::trace_sd(const InputVector& x, bool observation_noise, std::span<const double> scale) const {
  const std::size_t M = Y_.size();
  std::vector<double> mean(M), var(M);
  predict(x.coords(), mean, var, observation_noise);
  double total = 0.0;
  for (std::size_t m = 0; m < M; ++m) total += scale.empty() ? var[m] : var[m] / (scale[m] * scale[m]);
  return std::sqrt(total);
}

}  // namespace r2opt
