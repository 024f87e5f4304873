#include "r2opt/scalarize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace r2opt {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

constexpr double kSimplexTol = 1e-12;

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

void check_simplex(const std::vector<double>& w, const char* what) {
  require(!w.empty(), std::string(what) + ": empty weight vector");
  double sum = 0.0;
  for (double x : w) {
    require(std::isfinite(x) && x >= 0.0, std::string(what) + ": weights must be non-negative");
    sum += x;
  }
  require(std::abs(sum - 1.0) <= kSimplexTol, std::string(what) + ": weights must sum to 1");
}

void check_finite_vec(const std::vector<double>& v, std::size_t dim, const char* what) {
  require(v.size() == dim, std::string(what) + ": dimension mismatch");
  for (double x : v) require(std::isfinite(x), std::string(what) + ": entries must be finite");
}

void check_dim(std::size_t params, std::size_t y) {
  if (params != y) {
    throw DimensionError("scalarise: dimension mismatch (" + std::to_string(params) + " vs " + std::to_string(y) + ")");
  }
}

double pow_norm(double sum_pow, double p, double q) {
  // (sum |.|^p)^(q/p)
  if (p == 2.0 && q == 1.0) return std::sqrt(sum_pow);
  if (p == q) return sum_pow;
  return std::pow(sum_pow, q / p);
}

double abs_pow(double x, double p) {
  const double a = std::abs(x);
  if (p == 2.0) return a * a;
  if (p == 1.0) return a;
  return std::pow(a, p);
}

double int_pow(double x, std::size_t m) {
  double r = 1.0;
  for (std::size_t i = 0; i < m; ++i) r *= x;
  return r;
}

double chebyshev_value(const double* ideal, const double* w, std::span<const double> y) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < y.size(); ++m) worst = std::max(worst, w[m] * (ideal[m] - y[m]));
  return -worst;
}

double linear_value(const double* w, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t m = 0; m < y.size(); ++m) s += w[m] * y[m];
  return s;
}

double lp_value(const double* ideal, const double* w, double p, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t m = 0; m < y.size(); ++m) s += abs_pow(w[m] * (ideal[m] - y[m]), p);
  return -pow_norm(s, p, 1.0);
}

double igd_value(const double* ref, double p, double q, bool plus, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t m = 0; m < y.size(); ++m) {
    double d = ref[m] - y[m];
    if (plus) d = std::max(d, 0.0);
    s += abs_pow(d, p);
  }
  return -pow_norm(s, p, q);
}

double hv_radius_raw(const double* nadir, const double* inv_dir, std::span<const double> y) {
  double r = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < y.size(); ++m) r = std::min(r, std::max(0.0, y[m] - nadir[m]) * inv_dir[m]);
  return r;
}

}  // namespace

ScalarisationKind kind_of(const ScalarisationParams& params) {
  return static_cast<ScalarisationKind>(params.index());
}

std::size_t dim_of(const ScalarisationParams& params) {
  return std::visit(overloaded{
                        [](const Linear& s) { return s.weights.size(); },
                        [](const Lp& s) { return s.ideal.size(); },
                        [](const Chebyshev& s) { return s.ideal.size(); },
                        [](const AugChebyshev& s) { return s.ideal.size(); },
                        [](const HypervolumeScalarisation& s) { return s.nadir.size(); },
                        [](const Igd& s) { return s.reference.size(); },
                        [](const IgdPlus& s) { return s.reference.size(); },
                    },
                    params);
}

std::string to_string(ScalarisationKind kind) {
  switch (kind) {
    case ScalarisationKind::linear: return "linear";
    case ScalarisationKind::lp: return "lp";
    case ScalarisationKind::chebyshev: return "chebyshev";
    case ScalarisationKind::aug_chebyshev: return "aug_chebyshev";
    case ScalarisationKind::hypervolume: return "hypervolume";
    case ScalarisationKind::igd: return "igd";
    case ScalarisationKind::igd_plus: return "igd_plus";
  }
  return "unknown";
}

ScalarisationKind scalarisation_kind_from_string(const std::string& name) {
  for (int k = 0; k <= static_cast<int>(ScalarisationKind::igd_plus); ++k) {
    if (to_string(static_cast<ScalarisationKind>(k)) == name) return static_cast<ScalarisationKind>(k);
  }
  throw std::invalid_argument("unknown scalarisation kind: " + name);
}

bool is_monotone(ScalarisationKind kind) { return kind != ScalarisationKind::igd && kind != ScalarisationKind::lp; }

void validate(const ScalarisationParams& params) {
  std::visit(overloaded{
                 [](const Linear& s) { check_simplex(s.weights, "Linear"); },
                 [](const Lp& s) {
                   check_finite_vec(s.ideal, s.ideal.size(), "Lp");
                   require(s.weights.size() == s.ideal.size(), "Lp: dimension mismatch");
                   check_simplex(s.weights, "Lp");
                   require(s.p >= 1.0, "Lp: p must be >= 1");
                 },
                 [](const Chebyshev& s) {
                   check_finite_vec(s.ideal, s.ideal.size(), "Chebyshev");
                   require(s.weights.size() == s.ideal.size(), "Chebyshev: dimension mismatch");
                   check_simplex(s.weights, "Chebyshev");
                 },
                 [](const AugChebyshev& s) {
                   check_finite_vec(s.ideal, s.ideal.size(), "AugChebyshev");
                   require(s.weights.size() == s.ideal.size(), "AugChebyshev: dimension mismatch");
                   check_simplex(s.weights, "AugChebyshev");
                   require(std::isfinite(s.gamma) && s.gamma >= 0.0, "AugChebyshev: gamma must be >= 0");
                 },
                 [](const HypervolumeScalarisation& s) {
                   require(!s.nadir.empty(), "Hypervolume: empty nadir");
                   check_finite_vec(s.nadir, s.nadir.size(), "Hypervolume");
                   require(s.direction.size() == s.nadir.size(), "Hypervolume: dimension mismatch");
                   double norm2 = 0.0;
                   for (double l : s.direction) {
                     require(std::isfinite(l) && l > 0.0, "Hypervolume: direction must be strictly positive");
                     norm2 += l * l;
                   }
                   require(std::abs(std::sqrt(norm2) - 1.0) <= kSimplexTol, "Hypervolume: direction must have unit norm");
                 },
                 [](const Igd& s) {
                   require(!s.reference.empty(), "Igd: empty reference");
                   check_finite_vec(s.reference, s.reference.size(), "Igd");
                   require(s.p >= 1.0 && s.q >= 1.0, "Igd: p, q must be >= 1");
                 },
                 [](const IgdPlus& s) {
                   require(!s.reference.empty(), "IgdPlus: empty reference");
                   check_finite_vec(s.reference, s.reference.size(), "IgdPlus");
                   require(s.p >= 1.0 && s.q >= 1.0, "IgdPlus: p, q must be >= 1");
                 },
             },
             params);
}

double hypervolume_constant(std::size_t dim) {
  const double m = static_cast<double>(dim);
  if (dim > 20) {
    return std::exp(0.5 * m * std::log(std::numbers::pi) - m * std::numbers::ln2 - std::lgamma(0.5 * m + 1.0));
  }
  return std::pow(std::numbers::pi, 0.5 * m) / (std::pow(2.0, m) * std::tgamma(0.5 * m + 1.0));
}

double scalarise(const ScalarisationParams& params, std::span<const double> y) {
  validate(params);
  check_dim(dim_of(params), y.size());
  return std::visit(overloaded{
                        [&](const Linear& s) { return linear_value(s.weights.data(), y); },
                        [&](const Lp& s) { return lp_value(s.ideal.data(), s.weights.data(), s.p, y); },
                        [&](const Chebyshev& s) { return chebyshev_value(s.ideal.data(), s.weights.data(), y); },
                        [&](const AugChebyshev& s) {
                          return chebyshev_value(s.ideal.data(), s.weights.data(), y) +
                                 s.gamma * linear_value(s.weights.data(), y);
                        },
                        [&](const HypervolumeScalarisation& s) {
                          std::vector<double> inv(s.direction.size());
                          for (std::size_t m = 0; m < inv.size(); ++m) inv[m] = 1.0 / s.direction[m];
                          return hypervolume_constant(y.size()) * int_pow(hv_radius_raw(s.nadir.data(), inv.data(), y), y.size());
                        },
                        [&](const Igd& s) { return igd_value(s.reference.data(), s.p, s.q, false, y); },
                        [&](const IgdPlus& s) { return igd_value(s.reference.data(), s.p, s.q, true, y); },
                    },
                    params);
}

double scalarise(const ScalarisationParams& params, const ObjectiveVector& y) { return scalarise(params, y.values()); }

void ObjectiveTransform::validate() const {
  if (lower.size() == 0 || lower.size() != upper.size()) throw DimensionError("ObjectiveTransform: dimension mismatch");
  for (std::size_t m = 0; m < lower.size(); ++m) {
    if (!(upper[m] > lower[m])) throw std::invalid_argument("ObjectiveTransform: degenerate bounds");
  }
}

void ObjectiveTransform::apply(std::span<const double> y, std::span<double> out) const {
  for (std::size_t m = 0; m < y.size(); ++m) out[m] = (y[m] - lower[m]) / (upper[m] - lower[m]);
}

ObjectiveVector apply_transform(const ObjectiveTransform& t, const ObjectiveVector& y) {
  t.validate();
  if (y.size() != t.dim()) throw DimensionError("apply_transform: dimension mismatch");
  std::vector<double> out(y.size());
  t.apply(y.values(), out);
  return ObjectiveVector(std::move(out));
}

std::vector<double> sample_simplex(std::size_t dim, RandomStream& rng) {
  std::vector<double> w(dim);
  double sum = 0.0;
  for (auto& x : w) {
    x = rng.exponential();
    sum += x;
  }
  if (!(sum > 0.0)) {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(dim));
    return w;
  }
  for (auto& x : w) x /= sum;
  return w;
}

std::vector<double> sample_positive_sphere(std::size_t dim, RandomStream& rng) {
  std::vector<double> l(dim);
  for (;;) {
    double norm2 = 0.0;
    for (auto& x : l) {
      x = std::abs(rng.normal());
      norm2 += x * x;
    }
    const double norm = std::sqrt(norm2);
    bool positive = norm > 0.0;
    for (auto& x : l) {
      x /= norm;
      positive = positive && x > 0.0;
    }
    if (positive) return l;
  }
}

std::vector<ScalarisationParams> sample_params(const ScalarisationParams& base, const ParamDistribution& dist,
                                               RandomStream& rng, std::size_t count) {
  if (count == 0) throw std::invalid_argument("sample_params: count must be positive");
  const std::size_t dim = dim_of(base);
  std::vector<ScalarisationParams> out;
  out.reserve(count);
  std::visit(
      overloaded{
          [&](const UniformSimplex& d) {
            if (d.dim != dim) throw DimensionError("sample_params: simplex dimension mismatch");
            for (std::size_t i = 0; i < count; ++i) {
              ScalarisationParams p = base;
              auto w = sample_simplex(dim, rng);
              std::visit(overloaded{
                             [&](Linear& s) { s.weights = w; },
                             [&](Lp& s) { s.weights = w; },
                             [&](Chebyshev& s) { s.weights = w; },
                             [&](AugChebyshev& s) { s.weights = w; },
                             [](auto&) { throw std::invalid_argument("sample_params: kind has no simplex weights"); },
                         },
                         p);
              out.push_back(std::move(p));
            }
          },
          [&](const UniformPositiveSphere& d) {
            if (d.dim != dim) throw DimensionError("sample_params: sphere dimension mismatch");
            auto* hv = std::get_if<HypervolumeScalarisation>(&base);
            if (!hv) throw std::invalid_argument("sample_params: positive sphere needs the hypervolume kind");
            for (std::size_t i = 0; i < count; ++i) {
              HypervolumeScalarisation s = *hv;
              s.direction = sample_positive_sphere(dim, rng);
              out.emplace_back(std::move(s));
            }
          },
          [&](const FiniteUniform& d) {
            if (d.references.empty()) throw std::invalid_argument("sample_params: empty reference set");
            for (std::size_t i = 0; i < count; ++i) {
              const auto& ref = d.references[rng.index(d.references.size())];
              if (ref.size() != dim) throw DimensionError("sample_params: reference dimension mismatch");
              std::vector<double> r(ref.begin(), ref.end());
              ScalarisationParams p = base;
              std::visit(overloaded{
                             [&](Lp& s) { s.ideal = r; },
                             [&](Chebyshev& s) { s.ideal = r; },
                             [&](AugChebyshev& s) { s.ideal = r; },
                             [&](HypervolumeScalarisation& s) { s.nadir = r; },
                             [&](Igd& s) { s.reference = r; },
                             [&](IgdPlus& s) { s.reference = r; },
                             [](Linear&) { throw std::invalid_argument("sample_params: linear has no reference point"); },
                         },
                         p);
              out.push_back(std::move(p));
            }
          },
      },
      dist);
  return out;
}

ScalarisationBank::ScalarisationBank(const std::vector<ScalarisationParams>& params) {
  if (params.empty()) return;
  kind_ = kind_of(params.front());
  dim_ = dim_of(params.front());
  count_ = params.size();
  point_.assign(count_ * dim_, 0.0);
  weight_.assign(count_ * dim_, 0.0);
  p_.assign(count_, 1.0);
  q_.assign(count_, 1.0);
  gamma_.assign(count_, 0.0);
  hv_const_ = hypervolume_constant(dim_);
  for (std::size_t j = 0; j < count_; ++j) {
    const auto& prm = params[j];
    validate(prm);
    if (kind_of(prm) != kind_ || dim_of(prm) != dim_) {
      throw std::invalid_argument("ScalarisationBank: all parameters must share kind and dimension");
    }
    double* pt = point_.data() + j * dim_;
    double* wt = weight_.data() + j * dim_;
    std::visit(overloaded{
                   [&](const Linear& s) { std::copy(s.weights.begin(), s.weights.end(), wt); },
                   [&](const Lp& s) {
                     std::copy(s.ideal.begin(), s.ideal.end(), pt);
                     std::copy(s.weights.begin(), s.weights.end(), wt);
                     p_[j] = s.p;
                   },
                   [&](const Chebyshev& s) {
                     std::copy(s.ideal.begin(), s.ideal.end(), pt);
                     std::copy(s.weights.begin(), s.weights.end(), wt);
                   },
                   [&](const AugChebyshev& s) {
                     std::copy(s.ideal.begin(), s.ideal.end(), pt);
                     std::copy(s.weights.begin(), s.weights.end(), wt);
                     gamma_[j] = s.gamma;
                   },
                   [&](const HypervolumeScalarisation& s) {
                     std::copy(s.nadir.begin(), s.nadir.end(), pt);
                     for (std::size_t m = 0; m < dim_; ++m) wt[m] = 1.0 / s.direction[m];
                   },
                   [&](const Igd& s) {
                     std::copy(s.reference.begin(), s.reference.end(), pt);
                     p_[j] = s.p;
                     q_[j] = s.q;
                   },
                   [&](const IgdPlus& s) {
                     std::copy(s.reference.begin(), s.reference.end(), pt);
                     p_[j] = s.p;
                     q_[j] = s.q;
                   },
               },
               prm);
  }
}

double ScalarisationBank::hv_radius(std::size_t j, std::span<const double> y) const {
  return hv_radius_raw(point_.data() + j * dim_, weight_.data() + j * dim_, y);
}

double ScalarisationBank::value(std::size_t j, std::span<const double> y) const {
  const double* pt = point_.data() + j * dim_;
  const double* wt = weight_.data() + j * dim_;
  switch (kind_) {
    case ScalarisationKind::linear: return linear_value(wt, y);
    case ScalarisationKind::lp: return lp_value(pt, wt, p_[j], y);
    case ScalarisationKind::chebyshev: return chebyshev_value(pt, wt, y);
    case ScalarisationKind::aug_chebyshev: return chebyshev_value(pt, wt, y) + gamma_[j] * linear_value(wt, y);
    case ScalarisationKind::hypervolume: return hv_const_ * int_pow(hv_radius_raw(pt, wt, y), dim_);
    case ScalarisationKind::igd: return igd_value(pt, p_[j], q_[j], false, y);
    case ScalarisationKind::igd_plus: return igd_value(pt, p_[j], q_[j], true, y);
  }
  return 0.0;
}

void ScalarisationBank::values(std::span<const double> y, std::span<double> out) const {
  if (y.size() != dim_) throw DimensionError("ScalarisationBank: dimension mismatch");
  for (std::size_t j = 0; j < count_; ++j) out[j] = value(j, y);
}

}  // namespace r2opt
