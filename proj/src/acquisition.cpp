#include "r2opt/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace r2opt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool uses_adjustment(AcquisitionKind k) { return k == AcquisitionKind::aeui || k == AcquisitionKind::mixed; }

// Unique positive root of x^(D+1) = x + 1.
double generalised_golden(std::size_t D) {
  double x = 2.0;
  for (int i = 0; i < 64; ++i) x = std::pow(1.0 + x, 1.0 / static_cast<double>(D + 1));
  return x;
}

}  // namespace

std::string to_string(AcquisitionKind kind) {
  switch (kind) {
    case AcquisitionKind::eui: return "eui";
    case AcquisitionKind::aeui: return "aeui";
    case AcquisitionKind::thompson: return "thompson";
    case AcquisitionKind::ucb: return "ucb";
    case AcquisitionKind::random_scalarisation: return "random_scalarisation";
    case AcquisitionKind::mixed: return "mixed";
    case AcquisitionKind::random: return "random";
  }
  return "unknown";
}

AcquisitionKind acquisition_kind_from_string(const std::string& name) {
  for (auto k : {AcquisitionKind::eui, AcquisitionKind::aeui, AcquisitionKind::thompson, AcquisitionKind::ucb,
                 AcquisitionKind::random_scalarisation, AcquisitionKind::mixed, AcquisitionKind::random}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown acquisition kind: " + name);
}

void AdjustmentConfig::validate() const {
  if (!(a_delta >= 0.0) || !(b_delta >= 0.0)) throw std::invalid_argument("AdjustmentConfig: a_delta, b_delta must be >= 0");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("AdjustmentConfig: delta must lie in (0, 1)");
}

void AcquisitionSpec::validate() const {
  if (kind == AcquisitionKind::random) return;
  utility.validate();
  if (J == 0 || H == 0) throw std::invalid_argument("AcquisitionSpec: J and H must be positive");
  if (!(beta >= 0.0)) throw std::invalid_argument("AcquisitionSpec: beta must be >= 0");
  adjustment.validate();
  if (!(mixing.p >= 0.0 && mixing.p <= 1.0)) throw std::invalid_argument("AcquisitionSpec: mixing p must lie in [0, 1]");
  if (transform) {
    transform->validate();
    if (transform->dim() != utility.dim()) throw DimensionError("AcquisitionSpec: transform dimension mismatch");
  }
}

std::vector<InputVector> kronecker_candidates(const Box& box, std::size_t K, RandomStream& rng) {
  box.validate();
  if (K == 0) throw std::invalid_argument("kronecker_candidates: K must be positive");
  const std::size_t D = box.dim();
  const double phi = generalised_golden(D);
  std::vector<double> alpha(D), shift(D);
  for (std::size_t d = 0; d < D; ++d) {
    alpha[d] = std::fmod(std::pow(1.0 / phi, static_cast<double>(d + 1)), 1.0);
    shift[d] = rng.uniform();
  }
  std::vector<InputVector> out;
  out.reserve(K);
  std::vector<double> x(D);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t d = 0; d < D; ++d) {
      double u = shift[d] + static_cast<double>(k) * alpha[d];
      u -= std::floor(u);
      x[d] = box.lower[d] + u * (box.upper[d] - box.lower[d]);
    }
    out.emplace_back(x, box);
  }
  return out;
}

AcquisitionFunction::AcquisitionFunction(const GpModel& model, const AcquisitionSpec& spec, double lambda,
                                         RandomStream& rng)
    : model_(&model),
      kind_(spec.kind),
      beta_(spec.beta),
      lambda_(lambda),
      adjustment_(spec.adjustment),
      transform_(spec.transform) {
  spec.validate();
  if (kind_ == AcquisitionKind::random || kind_ == AcquisitionKind::thompson) {
    throw std::invalid_argument("AcquisitionFunction: kind has no pointwise acquisition");
  }
  const std::size_t M = model.output_dim();
  if (spec.utility.dim() != M) throw DimensionError("AcquisitionFunction: utility dimension differs from model outputs");
  if (transform_) {
    for (std::size_t m = 0; m < M; ++m) scale_.push_back(transform_->upper[m] - transform_->lower[m]);
  }
  RandomStream bank_rng = rng.child("bank");
  RandomStream sample_rng = rng.child("samples");
  if (kind_ == AcquisitionKind::random_scalarisation) {
    bank_ = ScalarisationBank(sample_params(spec.utility.base, spec.utility.dist, bank_rng, 1));
  } else {
    bank_ = draw_bank(spec.utility, bank_rng, spec.J);
  }
  const std::size_t J = bank_.size();
  const auto& data = model.data();
  const std::size_t n = data.size();
  scratch_.resize(2 * M + J);
  std::vector<double> ty(M), vals(J);

  auto fold_baseline = [&](std::span<const double> y, double* base) {
    transformed(y, ty);
    bank_.values(ty, vals);
    for (std::size_t j = 0; j < J; ++j) base[j] = std::max(base[j], vals[j]);
  };

  if (kind_ == AcquisitionKind::ucb) {
    H_ = 1;
    baseline_.assign(J, -std::numeric_limits<double>::infinity());
    std::vector<double> mu(M), var(M), y(M);
    for (std::size_t i = 0; i < n; ++i) {
      model.predict(data.inputs[i].coords(), mu, var);
      for (std::size_t m = 0; m < M; ++m) y[m] = mu[m] + beta_ * std::sqrt(var[m]);
      fold_baseline(y, baseline_.data());
    }
    return;
  }

  H_ = spec.H;
  z_.resize(static_cast<Eigen::Index>(H_), static_cast<Eigen::Index>(M));
  if (model.noise_free()) {
    for (std::size_t h = 0; h < H_; ++h) {
      for (std::size_t m = 0; m < M; ++m) z_(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(m)) = sample_rng.normal();
    }
    baseline_.assign(J, -std::numeric_limits<double>::infinity());
    for (const auto& y : data.outputs) fold_baseline(y.values(), baseline_.data());
    return;
  }

  conditional_ = true;
  RandomStream data_rng = sample_rng.child("data");
  const auto F = model.sample_joint(data.inputs, H_, data_rng);
  for (std::size_t h = 0; h < H_; ++h) {
    for (std::size_t m = 0; m < M; ++m) z_(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(m)) = sample_rng.normal();
  }
  baseline_.assign(H_ * J, -std::numeric_limits<double>::infinity());
  std::vector<double> y(M);
  for (std::size_t h = 0; h < H_; ++h) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t m = 0; m < M; ++m) y[m] = F[h](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m));
      fold_baseline(y, baseline_.data() + h * J);
    }
  }
  const Eigen::MatrixXd& X = model.unit_inputs();
  weights_.resize(M);
  prior_chol_.resize(M);
  for (std::size_t m = 0; m < M; ++m) {
    Eigen::MatrixXd K(X.rows(), X.rows());
    for (Eigen::Index a = 0; a < X.rows(); ++a) {
      for (Eigen::Index b = 0; b <= a; ++b) K(a, b) = K(b, a) = model.kernel(m, X.row(a).transpose(), X.row(b).transpose());
    }
    prior_chol_[m] = jittered_cholesky(K, model.hyperparams().outputs[m].signal_variance);
    Eigen::MatrixXd Fs(X.rows(), static_cast<Eigen::Index>(H_));
    for (std::size_t h = 0; h < H_; ++h) {
      Fs.col(static_cast<Eigen::Index>(h)) =
          (F[h].col(static_cast<Eigen::Index>(m)).array() - model.output_mean(m)) / model.output_scale(m);
    }
    const Eigen::MatrixXd& L = prior_chol_[m];
    weights_[m] = L.triangularView<Eigen::Lower>().transpose().solve(L.triangularView<Eigen::Lower>().solve(Fs));
  }
}

void AcquisitionFunction::transformed(std::span<const double> y, std::span<double> out) const {
  if (transform_) {
    transform_->apply(y, out);
  } else {
    std::copy(y.begin(), y.end(), out.begin());
  }
}

double AcquisitionFunction::gain(std::span<const double> y, std::span<const double> baseline, double* columns) const {
  const std::size_t M = y.size();
  const std::size_t J = bank_.size();
  std::span<double> ty(scratch_.data(), M);
  std::span<double> vals(scratch_.data() + 2 * M, J);
  transformed(y, ty);
  bank_.values(ty, vals);
  double total = 0.0;
  for (std::size_t j = 0; j < J; ++j) {
    const double g = std::max(0.0, vals[j] - baseline[j]);
    total += g;
    if (columns) columns[j] += g;
  }
  return total / static_cast<double>(J);
}

Estimate AcquisitionFunction::evaluate(const InputVector& x, bool with_error) const {
  const GpModel& model = *model_;
  const std::size_t M = model.output_dim();
  const std::size_t J = bank_.size();
  std::vector<double> mu(M), var(M), y(M);
  std::vector<double> columns(with_error ? J : 0, 0.0);
  double* cols = with_error ? columns.data() : nullptr;
  Eigen::MatrixXd cmean;
  std::vector<double> sd(M);
  if (conditional_) {
    const Eigen::VectorXd u = model.to_unit(x.coords());
    cmean.resize(static_cast<Eigen::Index>(H_), static_cast<Eigen::Index>(M));
    for (std::size_t m = 0; m < M; ++m) {
      const Eigen::VectorXd k = model.cross_kernel(m, u);
      cmean.col(static_cast<Eigen::Index>(m)) =
          (weights_[m].transpose() * k).array() * model.output_scale(m) + model.output_mean(m);
      const Eigen::VectorXd v = prior_chol_[m].triangularView<Eigen::Lower>().solve(k);
      const double s2 = std::max(0.0, model.hyperparams().outputs[m].signal_variance - v.squaredNorm());
      sd[m] = std::sqrt(s2) * model.output_scale(m);
    }
  } else {
    model.predict(x.coords(), mu, var);
    for (std::size_t m = 0; m < M; ++m) sd[m] = std::sqrt(var[m]);
  }

  const std::size_t H = kind_ == AcquisitionKind::ucb ? 1 : H_;
  double sum = 0.0, sq = 0.0;
  for (std::size_t h = 0; h < H; ++h) {
    const auto hi = static_cast<Eigen::Index>(h);
    for (std::size_t m = 0; m < M; ++m) {
      const auto mi = static_cast<Eigen::Index>(m);
      if (kind_ == AcquisitionKind::ucb) {
        y[m] = mu[m] + beta_ * sd[m];
      } else if (conditional_) {
        y[m] = cmean(hi, mi) + sd[m] * z_(hi, mi);
      } else {
        y[m] = mu[m] + sd[m] * z_(hi, mi);
      }
    }
    const std::span<const double> base(baseline_.data() + (conditional_ ? h * J : 0), J);
    const double g = gain(y, base, cols);
    sum += g;
    sq += g * g;
  }
  const double Hd = static_cast<double>(H);
  const double Jd = static_cast<double>(J);
  Estimate out;
  out.value = sum / Hd;
  if (with_error) {
    // Crossed design: row means vary with the model draw, column means with the atom.
    const double var_h = H > 1 ? std::max(0.0, (sq - sum * sum / Hd) / (Hd - 1.0)) : 0.0;
    double var_j = 0.0;
    if (J > 1) {
      double cs = 0.0, cq = 0.0;
      for (double c : columns) {
        cs += c / Hd;
        cq += (c / Hd) * (c / Hd);
      }
      var_j = std::max(0.0, (cq - cs * cs / Jd) / (Jd - 1.0));
    }
    out.std_error = std::sqrt(var_h / Hd + var_j / Jd);
  }
  if (uses_adjustment(kind_) && lambda_ != 0.0) {
    out.value += lambda_ * adjustment(model, adjustment_, x, scale_);
  }
  return out;
}

Estimate eui_estimate(const GpModel& model, const AcquisitionSpec& spec, const InputVector& x, RandomStream& rng) {
  AcquisitionSpec plain = spec;
  plain.kind = AcquisitionKind::eui;
  AcquisitionFunction f(model, plain, 0.0, rng);
  return f.estimate(x);
}

double adjustment(const GpModel& model, const AdjustmentConfig& config, const InputVector& x,
                  std::span<const double> scale) {
  config.validate();
  if (config.b_delta == 0.0) return config.a_delta;
  return config.a_delta + config.b_delta * model.trace_sd(x, false, scale);
}

double mixing_lambda(const AcquisitionSpec& spec, std::size_t n, std::size_t N_total, RandomStream& rng) {
  switch (spec.kind) {
    case AcquisitionKind::aeui: return 1.0;
    case AcquisitionKind::mixed:
      if (spec.mixing.rule == MixingRule::threshold) {
        return static_cast<double>(n) <= spec.mixing.p * static_cast<double>(N_total) + 1e-9 ? 1.0 : 0.0;
      }
      return rng.bernoulli(spec.mixing.p) ? 1.0 : 0.0;
    default: return 0.0;
  }
}

namespace {

AcquisitionResult thompson_acquire(const GpModel& model, const AcquisitionSpec& spec,
                                   const std::vector<InputVector>& cands, RandomStream& rng) {
  const std::size_t M = model.output_dim();
  const auto& data = model.data();
  std::vector<InputVector> pts(cands);
  pts.insert(pts.end(), data.inputs.begin(), data.inputs.end());
  RandomStream bank_rng = rng.child("bank");
  RandomStream sample_rng = rng.child("samples");
  const ScalarisationBank bank = draw_bank(spec.utility, bank_rng, spec.J);
  const auto F = model.sample_joint(pts, 1, sample_rng).front();
  const std::size_t J = bank.size();
  std::vector<double> y(M), ty(M), vals(J), base(J, -std::numeric_limits<double>::infinity());
  auto image = [&](std::size_t row) {
    for (std::size_t m = 0; m < M; ++m) y[m] = F(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(m));
    if (spec.transform) {
      spec.transform->apply(y, ty);
    } else {
      ty = y;
    }
    bank.values(ty, vals);
  };
  for (std::size_t i = cands.size(); i < pts.size(); ++i) {
    image(i);
    for (std::size_t j = 0; j < J; ++j) base[j] = std::max(base[j], vals[j]);
  }
  AcquisitionResult best;
  best.value = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < cands.size(); ++c) {
    image(c);
    double total = 0.0;
    for (std::size_t j = 0; j < J; ++j) total += std::max(0.0, vals[j] - base[j]);
    total /= static_cast<double>(J);
    if (total > best.value) {
      best.value = total;
      best.x = cands[c];
    }
  }
  best.lambda = kNaN;
  best.evaluations = cands.size();
  return best;
}

}  // namespace

AcquisitionResult acquire(const GpModel& model, const AcquisitionSpec& spec, const CandidateSet& candidates,
                          const Box& box, std::size_t n, std::size_t N_total, RandomStream& rng) {
  spec.validate();
  box.validate();
  const std::size_t D = box.dim();
  const std::size_t K = candidates.resolved_count(D);
  if (K == 0) throw std::invalid_argument("acquire: empty candidate set");
  RandomStream cand_rng = rng.child("candidates");

  if (spec.kind == AcquisitionKind::random) {
    std::vector<double> x(D);
    for (std::size_t d = 0; d < D; ++d) x[d] = cand_rng.uniform(box.lower[d], box.upper[d]);
    return {InputVector(x, box), kNaN, kNaN, 0};
  }
  if (model.input_dim() != D) throw DimensionError("acquire: box dimension differs from model inputs");

  auto cands = kronecker_candidates(box, K, cand_rng);
  if (spec.kind == AcquisitionKind::thompson) {
    cands.resize(std::min(cands.size(), std::max<std::size_t>(1, candidates.thompson_limit)));
    return thompson_acquire(model, spec, cands, rng);
  }

  RandomStream lambda_rng = rng.child("lambda");
  const double lambda = mixing_lambda(spec, n, N_total, lambda_rng);
  AcquisitionFunction f(model, spec, lambda, rng);

  AcquisitionResult best;
  best.value = -std::numeric_limits<double>::infinity();
  best.lambda = uses_adjustment(spec.kind) ? lambda : kNaN;
  for (const auto& c : cands) {
    const double v = f(c);
    ++best.evaluations;
    if (v > best.value) {
      best.value = v;
      best.x = c;
    }
  }

  std::vector<double> step(D);
  const double spacing = std::pow(static_cast<double>(K), -1.0 / static_cast<double>(D));
  for (std::size_t d = 0; d < D; ++d) step[d] = 0.5 * spacing * (box.upper[d] - box.lower[d]);
  std::vector<double> x(best.x.begin(), best.x.end());
  for (std::size_t r = 0; r < candidates.polish_steps; ++r) {
    bool improved = false;
    for (std::size_t d = 0; d < D; ++d) {
      for (double dir : {1.0, -1.0}) {
        std::vector<double> trial = x;
        trial[d] = std::clamp(x[d] + dir * step[d], box.lower[d], box.upper[d]);
        if (trial[d] == x[d]) continue;
        InputVector cand(trial, box);
        const double v = f(cand);
        ++best.evaluations;
        if (v > best.value) {
          best.value = v;
          best.x = std::move(cand);
          x = std::move(trial);
          improved = true;
          break;
        }
      }
    }
    if (!improved) {
      for (auto& s : step) s *= 0.5;
    }
  }
  return best;
}

AeuiTerms aeui_bound_terms(double delta, std::size_t P, std::size_t N, std::size_t J, std::size_t H,
                           const std::vector<double>& C_seq, const std::vector<double>& adjustment_values) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("aeui_bound_terms: delta must lie in (0, 1)");
  if (P == 0 || N == 0) throw std::invalid_argument("aeui_bound_terms: P and N must be positive");
  if (C_seq.size() != N || adjustment_values.size() != N) {
    throw std::invalid_argument("aeui_bound_terms: sequences must have length N");
  }
  for (double c : C_seq) {
    if (!(std::isfinite(c) && c >= 0.0)) throw std::invalid_argument("aeui_bound_terms: C_seq must be non-negative");
  }
  for (double a : adjustment_values) {
    if (!(std::isfinite(a) && a >= 0.0)) throw std::invalid_argument("aeui_bound_terms: adjustments must be non-negative");
  }
  AeuiTerms out;
  const double Pd = static_cast<double>(P);
  // J = H = 0 stands for exact utility and expectation.
  const std::size_t JH = J == 0 ? H : (H == 0 ? J : std::min(J, H));
  if (JH != 0) {
    const double scale = std::sqrt(2.0 / static_cast<double>(JH) * std::log(12.0 * static_cast<double>(N) / delta));
    const double rho = 1.0 - 1.0 / Pd;
    double sum = 0.0;
    for (std::size_t k = 1; k <= N; ++k) sum += C_seq[k - 1] * std::pow(rho, static_cast<double>(N - k));
    out.epsilon1 = scale * sum;
  }
  double sum = 0.0;
  for (std::size_t k = 1; k <= N; ++k) sum += adjustment_values[k - 1] * std::exp(-static_cast<double>(N - k) / Pd);
  out.epsilon2 = 2.0 * sum;
  return out;
}

}  // namespace r2opt
