#include "r2opt/r2util.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace r2opt {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_nonempty(const ObjectiveSet& Y, const char* what) {
  if (Y.empty()) throw std::invalid_argument(std::string(what) + ": empty set");
}

void require_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw DimensionError(std::string(what) + ": dimension mismatch");
}

void put(std::ostringstream& os, const std::vector<double>& v) {
  os << '[';
  char buf[32];
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", v[i]);
    os << (i ? "," : "") << buf;
  }
  os << ']';
}

void put(std::ostringstream& os, double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  os << buf;
}

void put(std::ostringstream& os, const ScalarisationParams& p) {
  os << to_string(kind_of(p)) << '{';
  std::visit(overloaded{
                 [&](const Linear& s) { put(os, s.weights); },
                 [&](const Lp& s) {
                   put(os, s.ideal);
                   put(os, s.weights);
                   put(os, s.p);
                 },
                 [&](const Chebyshev& s) {
                   put(os, s.ideal);
                   put(os, s.weights);
                 },
                 [&](const AugChebyshev& s) {
                   put(os, s.ideal);
                   put(os, s.weights);
                   put(os, s.gamma);
                 },
                 [&](const HypervolumeScalarisation& s) {
                   put(os, s.nadir);
                   put(os, s.direction);
                 },
                 [&](const Igd& s) {
                   put(os, s.reference);
                   put(os, s.p);
                   os << ',';
                   put(os, s.q);
                 },
                 [&](const IgdPlus& s) {
                   put(os, s.reference);
                   put(os, s.p);
                   os << ',';
                   put(os, s.q);
                 },
             },
             p);
  os << '}';
}

std::vector<ScalarisationParams> every_reference(const R2UtilitySpec& spec, const FiniteUniform& dist) {
  // One atom per reference, in order. Reuses sample_params to fill the fields.
  std::vector<ScalarisationParams> out;
  out.reserve(dist.references.size());
  for (const auto& r : dist.references) {
    RandomStream unused(0);
    auto one = sample_params(spec.base, FiniteUniform{{r}}, unused, 1);
    out.push_back(std::move(one.front()));
  }
  return out;
}

std::vector<double> flat(std::span<const double> v) { return {v.begin(), v.end()}; }

ObjectiveSet clip_to_nadir(const ObjectiveSet& Y, const ObjectiveVector& eta) {
  // Points not strictly above eta in every coordinate span no volume.
  std::vector<ObjectiveVector> pts;
  for (const auto& y : Y) {
    bool positive = true;
    for (std::size_t m = 0; m < y.size(); ++m) positive = positive && y[m] > eta[m];
    if (positive) pts.push_back(y);
  }
  return pts.empty() ? ObjectiveSet(eta.size()) : ObjectiveSet(std::move(pts));
}

double hv_sweep_2d(const ObjectiveSet& Y, const ObjectiveVector& eta) {
  std::vector<std::pair<double, double>> pts;
  pts.reserve(Y.size());
  for (const auto& y : Y) pts.emplace_back(y[0], y[1]);
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  double area = 0.0;
  double covered = eta[1];
  for (const auto& [x, h] : pts) {
    if (h > covered) {
      area += (x - eta[0]) * (h - covered);
      covered = h;
    }
  }
  return area;
}

double hv_inclusion_exclusion(const ObjectiveSet& Y, const ObjectiveVector& eta) {
  const std::size_t n = Y.size();
  const std::size_t m = eta.size();
  double total = 0.0;
  std::vector<double> corner(m);
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    std::fill(corner.begin(), corner.end(), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n; ++i) {
      if (!(mask & (1u << i))) continue;
      for (std::size_t k = 0; k < m; ++k) corner[k] = std::min(corner[k], Y[i][k]);
    }
    double vol = 1.0;
    for (std::size_t k = 0; k < m; ++k) vol *= corner[k] - eta[k];
    total += (std::popcount(mask) % 2 == 1) ? vol : -vol;
  }
  return total;
}

constexpr std::size_t kInclusionExclusionLimit = 12;

class BankTracker final : public GainTracker {
 public:
  explicit BankTracker(const BankUtility& u) : u_(u), best_(u.bank().size(), kNegInf) {}

  double gain(std::span<const double> c) const override {
    const auto& bank = u_.bank();
    const std::size_t J = bank.size();
    double g = 0.0;
    if (count_ == 0) {
      for (std::size_t j = 0; j < J; ++j) g += bank.value(j, c);
      return g / static_cast<double>(J) - u_.floor();
    }
    for (std::size_t j = 0; j < J; ++j) g += std::max(0.0, bank.value(j, c) - best_[j]);
    return g / static_cast<double>(J);
  }

  void add(std::span<const double> c) override {
    require_dim(c.size(), u_.dim(), "BankTracker::add");
    const auto& bank = u_.bank();
    for (std::size_t j = 0; j < bank.size(); ++j) best_[j] = std::max(best_[j], bank.value(j, c));
    ++count_;
  }

  double utility() const override {
    if (count_ == 0) return u_.floor();
    return std::accumulate(best_.begin(), best_.end(), 0.0) / static_cast<double>(best_.size());
  }

  std::size_t size() const override { return count_; }

 private:
  const BankUtility& u_;
  std::vector<double> best_;
  std::size_t count_ = 0;
};

class HypervolumeTracker final : public GainTracker {
 public:
  explicit HypervolumeTracker(const ExactHypervolumeUtility& u) : u_(u), set_(u.dim()) {}

  double gain(std::span<const double> c) const override {
    ObjectiveVector y(flat(c));
    if (set_.contains(y)) return 0.0;
    return u_.evaluate(set_.with(y)) - value_;
  }

  void add(std::span<const double> c) override {
    set_.insert(ObjectiveVector(flat(c)));
    ++count_;
    value_ = u_.evaluate(set_);
  }

  double utility() const override { return value_; }
  std::size_t size() const override { return count_; }

 private:
  const ExactHypervolumeUtility& u_;
  ObjectiveSet set_;
  double value_ = 0.0;
  std::size_t count_ = 0;
};

}  // namespace

void R2UtilitySpec::validate() const {
  r2opt::validate(base);
  const std::size_t m = dim_of(base);
  const ScalarisationKind k = kind_of(base);
  std::visit(overloaded{
                 [&](const UniformSimplex& d) {
                   if (d.dim != m) throw DimensionError("R2UtilitySpec: simplex dimension mismatch");
                   if (k == ScalarisationKind::hypervolume || k == ScalarisationKind::igd ||
                       k == ScalarisationKind::igd_plus) {
                     throw std::invalid_argument("R2UtilitySpec: kind has no simplex weights");
                   }
                 },
                 [&](const UniformPositiveSphere& d) {
                   if (d.dim != m) throw DimensionError("R2UtilitySpec: sphere dimension mismatch");
                   if (k != ScalarisationKind::hypervolume) {
                     throw std::invalid_argument("R2UtilitySpec: positive sphere needs the hypervolume kind");
                   }
                 },
                 [&](const FiniteUniform& d) {
                   if (d.references.empty()) throw std::invalid_argument("R2UtilitySpec: empty reference set");
                   for (const auto& r : d.references) {
                     if (r.size() != m) throw DimensionError("R2UtilitySpec: reference dimension mismatch");
                   }
                   if (k == ScalarisationKind::linear) {
                     throw std::invalid_argument("R2UtilitySpec: linear has no reference point");
                   }
                 },
             },
             dist);
  if (J == 0) throw std::invalid_argument("R2UtilitySpec: J must be positive");
  if (floor && !std::isfinite(*floor)) throw std::invalid_argument("R2UtilitySpec: floor must be finite");
  if (sample_bank) {
    if (sample_bank->empty()) throw std::invalid_argument("R2UtilitySpec: empty sample bank");
    for (const auto& p : *sample_bank) {
      if (kind_of(p) != k || dim_of(p) != m) throw std::invalid_argument("R2UtilitySpec: bank inconsistent with kind");
    }
  }
}

R2UtilitySpec standard_r2_spec(std::vector<double> ideal, std::size_t J) {
  const std::size_t m = ideal.size();
  R2UtilitySpec s{Chebyshev{std::move(ideal), std::vector<double>(m, 1.0 / static_cast<double>(m))},
                  UniformSimplex{m}, J};
  return s;
}

R2UtilitySpec hypervolume_spec(std::vector<double> nadir, std::size_t J) {
  const std::size_t m = nadir.size();
  R2UtilitySpec s{HypervolumeScalarisation{std::move(nadir), std::vector<double>(m, 1.0 / std::sqrt(static_cast<double>(m)))},
                  UniformPositiveSphere{m}, J};
  s.floor = 0.0;
  return s;
}

R2UtilitySpec igd_spec(const ObjectiveSet& references, double p, double q, bool plus) {
  require_nonempty(references, "igd_spec");
  auto r0 = flat(references[0].values());
  ScalarisationParams base = plus ? ScalarisationParams(IgdPlus{r0, p, q}) : ScalarisationParams(Igd{r0, p, q});
  R2UtilitySpec s{std::move(base), FiniteUniform{references.elements()}, references.size()};
  return s;
}

R2UtilitySpec d1_spec(const ObjectiveSet& references, std::vector<double> weights) {
  require_nonempty(references, "d1_spec");
  R2UtilitySpec s{Chebyshev{flat(references[0].values()), std::move(weights)}, FiniteUniform{references.elements()},
                  references.size()};
  return s;
}

std::string describe(const R2UtilitySpec& spec) {
  std::ostringstream os;
  os << "r2utility{base=";
  put(os, spec.base);
  os << ";dist=";
  std::visit(overloaded{
                 [&](const UniformSimplex& d) { os << "simplex(" << d.dim << ")"; },
                 [&](const UniformPositiveSphere& d) { os << "sphere(" << d.dim << ")"; },
                 [&](const FiniteUniform& d) {
                   os << "finite(";
                   for (const auto& r : d.references) put(os, flat(r.values()));
                   os << ")";
                 },
             },
             spec.dist);
  os << ";J=" << spec.J << ";resample=" << (spec.resample == ResamplePolicy::frozen ? "frozen" : "per_call")
     << ";floor=";
  if (spec.floor) {
    put(os, *spec.floor);
  } else {
    os << "pool";
  }
  if (spec.sample_bank) {
    os << ";bank=";
    for (const auto& p : *spec.sample_bank) put(os, p);
  }
  os << '}';
  return os.str();
}

std::uint64_t digest(const R2UtilitySpec& spec) { return fnv1a64(describe(spec)); }

ScalarisationBank draw_bank(const R2UtilitySpec& spec, RandomStream& rng, std::size_t J) {
  spec.validate();
  if (spec.sample_bank && spec.resample == ResamplePolicy::frozen) return ScalarisationBank(*spec.sample_bank);
  return ScalarisationBank(sample_params(spec.base, spec.dist, rng, J));
}

ScalarisationBank draw_bank(const R2UtilitySpec& spec, RandomStream& rng) { return draw_bank(spec, rng, spec.J); }

R2UtilitySpec freeze(R2UtilitySpec spec, RandomStream& rng) {
  spec.validate();
  spec.sample_bank = sample_params(spec.base, spec.dist, rng, spec.J);
  spec.resample = ResamplePolicy::frozen;
  return spec;
}

UtilityValue mc_utility(const ScalarisationBank& bank, const ObjectiveSet& Y) {
  require_nonempty(Y, "mc_utility");
  if (bank.empty()) throw std::invalid_argument("mc_utility: empty bank");
  require_dim(Y.dim(), bank.dim(), "mc_utility");
  const std::size_t J = bank.size();
  std::vector<double> best(J, kNegInf);
  for (const auto& y : Y) {
    for (std::size_t j = 0; j < J; ++j) best[j] = std::max(best[j], bank.value(j, y.values()));
  }
  const double mean = std::accumulate(best.begin(), best.end(), 0.0) / static_cast<double>(J);
  double ss = 0.0;
  for (double b : best) ss += (b - mean) * (b - mean);
  const double sd = J > 1 ? std::sqrt(ss / static_cast<double>(J - 1)) : 0.0;
  return {mean, sd / std::sqrt(static_cast<double>(J)), J};
}

UtilityValue mc_utility(const R2UtilitySpec& spec, const ObjectiveSet& Y, RandomStream& rng) {
  require_nonempty(Y, "mc_utility");
  return mc_utility(draw_bank(spec, rng), Y);
}

UtilityValue exact_hypervolume(const ObjectiveSet& Y, const ObjectiveVector& eta) {
  const std::size_t m = eta.size();
  if (!Y.empty()) require_dim(Y.dim(), m, "exact_hypervolume");
  if (m > 4) throw std::invalid_argument("exact_hypervolume: only M <= 4 is supported");
  auto clipped = clip_to_nadir(Y, eta);
  if (clipped.empty()) return {0.0, std::nullopt, 0};
  if (m == 1) {
    double best = kNegInf;
    for (const auto& y : clipped) best = std::max(best, y[0]);
    return {best - eta[0], std::nullopt, 0};
  }
  if (m == 2) return {hv_sweep_2d(clipped, eta), std::nullopt, 0};
  auto front = pareto_front(clipped);
  if (front.size() > kInclusionExclusionLimit) {
    throw std::invalid_argument("exact_hypervolume: more than 12 non-dominated points for M >= 3");
  }
  return {hv_inclusion_exclusion(front, eta), std::nullopt, 0};
}

UtilityValue igd_utility(const ObjectiveSet& Y, const ObjectiveSet& references, double p, double q, bool plus) {
  require_nonempty(Y, "igd_utility");
  require_nonempty(references, "igd_utility");
  auto spec = igd_spec(references, p, q, plus);
  spec.validate();
  BankUtility u(ScalarisationBank(every_reference(spec, std::get<FiniteUniform>(spec.dist))));
  return {u.evaluate(Y), std::nullopt, 0};
}

UtilityValue d1_utility(const ObjectiveSet& Y, const ObjectiveSet& references, const std::vector<double>& weights) {
  require_nonempty(Y, "d1_utility");
  require_nonempty(references, "d1_utility");
  auto spec = d1_spec(references, weights);
  spec.validate();
  BankUtility u(ScalarisationBank(every_reference(spec, std::get<FiniteUniform>(spec.dist))));
  return {u.evaluate(Y), std::nullopt, 0};
}

BankUtility::BankUtility(ScalarisationBank bank, double floor) : bank_(std::move(bank)), floor_(floor) {
  if (bank_.empty()) throw std::invalid_argument("BankUtility: empty bank");
  if (!std::isfinite(floor_)) throw std::invalid_argument("BankUtility: floor must be finite");
}

void BankUtility::best_values(const ObjectiveSet& Y, std::vector<double>& out) const {
  require_nonempty(Y, "BankUtility");
  require_dim(Y.dim(), bank_.dim(), "BankUtility");
  out.assign(bank_.size(), kNegInf);
  for (const auto& y : Y) {
    for (std::size_t j = 0; j < bank_.size(); ++j) out[j] = std::max(out[j], bank_.value(j, y.values()));
  }
}

double BankUtility::evaluate(const ObjectiveSet& Y) const {
  std::vector<double> best;
  best_values(Y, best);
  return std::accumulate(best.begin(), best.end(), 0.0) / static_cast<double>(best.size());
}

std::unique_ptr<GainTracker> BankUtility::tracker() const { return std::make_unique<BankTracker>(*this); }

std::string BankUtility::describe() const {
  return "bank(" + to_string(bank_.kind()) + ", J=" + std::to_string(bank_.size()) + ")";
}

ExactHypervolumeUtility::ExactHypervolumeUtility(ObjectiveVector eta) : eta_(std::move(eta)) {
  if (eta_.size() > 4) throw std::invalid_argument("ExactHypervolumeUtility: only M <= 4 is supported");
}

double ExactHypervolumeUtility::evaluate(const ObjectiveSet& Y) const {
  require_nonempty(Y, "ExactHypervolumeUtility");
  return exact_hypervolume(Y, eta_).value;
}

std::unique_ptr<GainTracker> ExactHypervolumeUtility::tracker() const {
  return std::make_unique<HypervolumeTracker>(*this);
}

std::string ExactHypervolumeUtility::describe() const { return "exact_hypervolume" + to_string(eta_); }

std::unique_ptr<SetUtility> exact_utility(const R2UtilitySpec& spec, bool allow_small_sets,
                                          const std::vector<ObjectiveVector>* pool) {
  spec.validate();
  if (const auto* fin = std::get_if<FiniteUniform>(&spec.dist)) {
    ScalarisationBank bank(every_reference(spec, *fin));
    const double lo = resolve_floor(spec, bank, pool);
    return std::make_unique<BankUtility>(std::move(bank), lo);
  }
  if (const auto* hv = std::get_if<HypervolumeScalarisation>(&spec.base);
      hv && std::holds_alternative<UniformPositiveSphere>(spec.dist)) {
    const std::size_t m = hv->nadir.size();
    if (m <= 2 || (allow_small_sets && m <= 4)) return std::make_unique<ExactHypervolumeUtility>(ObjectiveVector(hv->nadir));
  }
  return nullptr;
}

std::unique_ptr<SetUtility> bank_utility(const R2UtilitySpec& spec, RandomStream& rng, std::size_t J,
                                         const std::vector<ObjectiveVector>* pool) {
  auto bank = draw_bank(spec, rng, J);
  const double lo = resolve_floor(spec, bank, pool);
  return std::make_unique<BankUtility>(std::move(bank), lo);
}

double resolve_floor(const R2UtilitySpec& spec, const ScalarisationBank& bank,
                     const std::vector<ObjectiveVector>* pool) {
  if (spec.floor) return *spec.floor;
  if (pool && !pool->empty()) return pool_floor(bank, *pool);
  return 0.0;
}

double pool_floor(const ScalarisationBank& bank, const std::vector<ObjectiveVector>& pool) {
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& y : pool) {
    require_dim(y.size(), bank.dim(), "pool_floor");
    for (std::size_t j = 0; j < bank.size(); ++j) lo = std::min(lo, bank.value(j, y.values()));
  }
  return lo;
}

double marginal_gain(const SetUtility& utility, const ObjectiveSet& Y, const ObjectiveVector& c) {
  if (Y.contains(c)) return 0.0;
  const double before = Y.empty() ? utility.floor() : utility.evaluate(Y);
  return utility.evaluate(Y.with(c)) - before;
}

double r2_metric(const SetUtility& utility, const ObjectiveSet& Y, const ObjectiveSet& Y_R) {
  return utility.evaluate(Y_R) - utility.evaluate(Y);
}

double r2_metric(const R2UtilitySpec& spec, const ObjectiveSet& Y, const ObjectiveSet& Y_R, RandomStream& rng) {
  BankUtility u(draw_bank(spec, rng), spec.floor.value_or(0.0));
  return r2_metric(u, Y, Y_R);
}

}  // namespace r2opt
