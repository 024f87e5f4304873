#include "r2opt/bench.hpp"

#include <algorithm>
#include <array>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace r2opt {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kCacheVersion = 1;

struct Bump {
  double w, cx, cy, s;
};

constexpr std::array<Bump, 3> kGmm1{{{1.0, 0.2, 0.8, 0.10}, {0.6, 0.75, 0.25, 0.12}, {0.4, 0.5, 0.5, 0.08}}};
constexpr std::array<Bump, 3> kGmm2{{{1.0, 0.8, 0.7, 0.10}, {0.6, 0.3, 0.2, 0.12}, {0.4, 0.55, 0.9, 0.08}}};

double mixture(const std::array<Bump, 3>& bumps, double x, double y) {
  double v = 0.0;
  for (const auto& b : bumps) {
    const double d2 = (x - b.cx) * (x - b.cx) + (y - b.cy) * (y - b.cy);
    v += b.w * std::exp(-d2 / (2.0 * b.s * b.s)) / (2.0 * kPi * b.s * b.s);
  }
  return v;
}

void eval_into(const ProblemSpec& p, std::span<const double> x, std::vector<double>& f) {
  f.assign(p.M, 0.0);
  switch (p.kind) {
    case ProblemKind::hypersphere: {
      double prod = 1.0;
      for (std::size_t m = 0; m + 1 < p.M; ++m) {
        f[m] = prod * std::cos(x[m]);
        prod *= std::sin(x[m]);
      }
      f[p.M - 1] = prod;
      break;
    }
    case ProblemKind::dtlz2: {
      double g = 0.0;
      for (std::size_t i = p.M - 1; i < p.D; ++i) g += (x[i] - 0.5) * (x[i] - 0.5);
      // f_m = (1+g) prod_{i < M-1-m} cos(x_i pi/2) * sin(x_{M-1-m} pi/2) for m > 0.
      for (std::size_t m = 0; m < p.M; ++m) {
        double v = 1.0 + g;
        const std::size_t k = p.M - 1 - m;
        for (std::size_t i = 0; i < k; ++i) v *= std::cos(0.5 * kPi * x[i]);
        if (m > 0) v *= std::sin(0.5 * kPi * x[k]);
        f[m] = -v;
      }
      break;
    }
    case ProblemKind::gmm:
      f[0] = mixture(kGmm1, x[0], x[1]);
      f[1] = mixture(kGmm2, x[0], x[1]);
      break;
    case ProblemKind::toy1d:
      f[0] = std::cos(0.5 * kPi * x[0]) + 0.1 * std::sin(6.0 * kPi * x[0]);
      f[1] = std::sin(0.5 * kPi * x[0]) + 0.1 * std::cos(6.0 * kPi * x[0]);
      break;
  }
}

std::vector<double> gmm_upper() {
  // Grid maximum with a margin covering the grid spacing.
  std::vector<double> best(2, 0.0);
  const int n = 400;
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      const double x = static_cast<double>(i) / n, y = static_cast<double>(j) / n;
      best[0] = std::max(best[0], mixture(kGmm1, x, y));
      best[1] = std::max(best[1], mixture(kGmm2, x, y));
    }
  }
  for (auto& b : best) b *= 1.001;
  return best;
}

std::string cache_path(const std::string& dir, std::uint64_t digest, std::size_t resolution, std::uint64_t seed) {
  char name[96];
  std::snprintf(name, sizeof name, "front-%016" PRIx64 "-%zu-%016" PRIx64 ".txt", digest, resolution, seed);
  return (std::filesystem::path(dir) / name).string();
}

std::optional<ObjectiveSet> read_cache(const std::string& path, std::uint64_t digest, std::size_t resolution,
                                       std::uint64_t seed, std::size_t M) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::string tag;
  int version = 0;
  std::string dig_hex;
  std::size_t res = 0, dim = 0, count = 0;
  std::uint64_t sd = 0;
  std::string k1, k2, k3, k4, k5;
  in >> tag >> version >> k1 >> dig_hex >> k2 >> res >> k3 >> sd >> k4 >> dim >> k5 >> count;
  if (!in || tag != "r2opt-front" || version != kCacheVersion || k1 != "problem" || k2 != "resolution" ||
      k3 != "seed" || k4 != "dim" || k5 != "count") {
    return std::nullopt;
  }
  if (std::stoull(dig_hex, nullptr, 16) != digest || res != resolution || sd != seed || dim != M) return std::nullopt;
  std::vector<ObjectiveVector> pts;
  pts.reserve(count);
  std::string tok;
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> v(M);
    for (auto& x : v) {
      if (!(in >> tok)) return std::nullopt;
      x = std::strtod(tok.c_str(), nullptr);
    }
    pts.emplace_back(std::move(v));
  }
  return ObjectiveSet(std::move(pts));
}

void write_cache(const std::string& path, const ObjectiveSet& pts, std::uint64_t digest, std::size_t resolution,
                 std::uint64_t seed) {
  std::filesystem::create_directories(std::filesystem::path(path).parent_path());
  const std::string tmp = path + ".tmp" + std::to_string(reinterpret_cast<std::uintptr_t>(&pts));
  {
    std::ofstream out(tmp);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, digest);
    out << "r2opt-front " << kCacheVersion << "\nproblem " << buf << "\nresolution " << resolution << "\nseed " << seed
        << "\ndim " << pts.dim() << "\ncount " << pts.size() << "\n";
    for (const auto& y : pts) {
      for (std::size_t m = 0; m < y.size(); ++m) {
        std::snprintf(buf, sizeof buf, "%.17g", y[m]);
        out << (m ? " " : "") << buf;
      }
      out << "\n";
    }
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

void ProblemSpec::validate() const {
  box.validate();
  if (box.dim() != D) throw DimensionError("ProblemSpec: box dimension differs from D");
  if (M < 2) throw std::invalid_argument("ProblemSpec: M must be at least 2");
  if (range_lower.size() != M || range_upper.size() != M) throw DimensionError("ProblemSpec: ranges must have length M");
  for (std::size_t m = 0; m < M; ++m) {
    if (!(range_upper[m] > range_lower[m])) throw std::invalid_argument("ProblemSpec: empty objective range");
  }
}

ProblemSpec hypersphere_problem(std::size_t M) {
  if (M < 2) throw std::invalid_argument("hypersphere_problem: M must be at least 2");
  ProblemSpec p;
  p.name = "hypersphere";
  p.kind = ProblemKind::hypersphere;
  p.M = M;
  p.D = M - 1;
  p.box = Box{std::vector<double>(p.D, 0.0), std::vector<double>(p.D, 0.5 * kPi)};
  p.range_lower.assign(M, 0.0);
  p.range_upper.assign(M, 1.0);
  return p;
}

ProblemSpec dtlz2_problem(std::size_t D, std::size_t M) {
  if (M < 2) throw std::invalid_argument("dtlz2_problem: M must be at least 2");
  if (D < M) throw std::invalid_argument("dtlz2_problem: D must be at least M");
  ProblemSpec p;
  p.name = "dtlz2";
  p.kind = ProblemKind::dtlz2;
  p.D = D;
  p.M = M;
  p.box = Box::unit(D);
  p.negated = true;
  const double gmax = 0.25 * static_cast<double>(D - M + 1);
  p.range_lower.assign(M, -(1.0 + gmax));
  p.range_upper.assign(M, 0.0);
  return p;
}

ProblemSpec gmm_problem() {
  static const std::vector<double> upper = gmm_upper();
  ProblemSpec p;
  p.name = "gmm";
  p.kind = ProblemKind::gmm;
  p.D = 2;
  p.M = 2;
  p.box = Box::unit(2);
  p.range_lower.assign(2, 0.0);
  p.range_upper = upper;
  return p;
}

ProblemSpec toy1d_problem() {
  ProblemSpec p;
  p.name = "toy1d";
  p.kind = ProblemKind::toy1d;
  p.D = 1;
  p.M = 2;
  p.box = Box::unit(1);
  p.range_lower.assign(2, -0.1);
  p.range_upper.assign(2, 1.1);
  return p;
}

ProblemSpec make_problem(const std::string& name, std::size_t D, std::size_t M) {
  if (name == "hypersphere") return hypersphere_problem(M);
  if (name == "dtlz2") return dtlz2_problem(D, M);
  if (name == "gmm") return gmm_problem();
  if (name == "toy1d") return toy1d_problem();
  throw std::invalid_argument("unknown problem: " + name);
}

std::vector<std::string> problem_names() { return {"hypersphere", "dtlz2", "gmm", "toy1d"}; }

ObjectiveVector evaluate(const ProblemSpec& problem, const InputVector& x) {
  if (x.size() != problem.D) throw DimensionError("evaluate: input dimension differs from the problem");
  for (std::size_t d = 0; d < problem.D; ++d) {
    if (x[d] < problem.box.lower[d] - 1e-12 || x[d] > problem.box.upper[d] + 1e-12) {
      throw std::invalid_argument("evaluate: input outside the problem box");
    }
  }
  std::vector<double> f;
  eval_into(problem, x.coords(), f);
  return ObjectiveVector(std::move(f));
}

std::string describe(const ProblemSpec& problem) {
  std::ostringstream os;
  char buf[32];
  os << problem.name << " D=" << problem.D << " M=" << problem.M << " box=";
  for (std::size_t d = 0; d < problem.D; ++d) {
    std::snprintf(buf, sizeof buf, "%.17g", problem.box.lower[d]);
    os << (d ? "," : "") << "[" << buf;
    std::snprintf(buf, sizeof buf, "%.17g", problem.box.upper[d]);
    os << ":" << buf << "]";
  }
  return os.str();
}

std::uint64_t digest(const ProblemSpec& problem) { return fnv1a64(describe(problem)); }

std::vector<double> NoiseWrapper::sigma() const {
  if (!(sigma_fraction >= 0.0)) throw std::invalid_argument("NoiseWrapper: sigma_fraction must be >= 0");
  std::vector<double> s(inner.M);
  for (std::size_t m = 0; m < inner.M; ++m) s[m] = sigma_fraction * (inner.range_upper[m] - inner.range_lower[m]);
  return s;
}

ObjectiveVector NoiseWrapper::evaluate(const InputVector& x, RandomStream& rng) const {
  const auto s = sigma();
  ObjectiveVector f = r2opt::evaluate(inner, x);
  if (sigma_fraction == 0.0) return f;
  std::vector<double> y(f.begin(), f.end());
  for (std::size_t m = 0; m < y.size(); ++m) y[m] += s[m] * rng.normal();
  return ObjectiveVector(std::move(y));
}

ReferenceFront reference_front(const ProblemSpec& problem, std::size_t resolution, RandomStream& rng,
                               const std::optional<std::string>& cache_dir) {
  problem.validate();
  if (resolution == 0) throw std::invalid_argument("reference_front: resolution must be positive");
  ReferenceFront front;
  front.problem_digest = digest(problem);
  front.resolution = resolution;
  front.seed = rng.key();
  std::string path;
  if (cache_dir) {
    path = cache_path(*cache_dir, front.problem_digest, resolution, front.seed);
    if (auto pts = read_cache(path, front.problem_digest, resolution, front.seed, problem.M)) {
      front.points = std::move(*pts);
      front.from_cache = true;
      return front;
    }
  }
  RandomStream draws = rng.child("reference-front");
  std::vector<ObjectiveVector> images;
  images.reserve(resolution);
  std::vector<double> x(problem.D), f;
  for (std::size_t i = 0; i < resolution; ++i) {
    for (std::size_t d = 0; d < problem.D; ++d) {
      const bool distance = problem.kind == ProblemKind::dtlz2 && d + 1 >= problem.M;
      x[d] = distance ? 0.5 : draws.uniform(problem.box.lower[d], problem.box.upper[d]);
    }
    eval_into(problem, x, f);
    images.emplace_back(f);
  }
  front.points = pareto_front(ObjectiveSet(std::move(images)));
  if (cache_dir) write_cache(path, front.points, front.problem_digest, resolution, front.seed);
  return front;
}

double bank_max_over_set(const ScalarisationBank& bank, const ObjectiveSet& points) {
  if (points.empty()) throw std::invalid_argument("bank_max_over_set: empty set");
  if (bank.empty()) throw std::invalid_argument("bank_max_over_set: empty bank");
  if (points.dim() != bank.dim()) throw DimensionError("bank_max_over_set: dimension mismatch");
  const std::size_t J = bank.size();
  const std::size_t n = points.size();
  if (bank.kind() == ScalarisationKind::chebyshev && bank.dim() == 2 && n > 2) {
    std::vector<const ObjectiveVector*> sorted(n);
    for (std::size_t i = 0; i < n; ++i) sorted[i] = &points[i];
    std::sort(sorted.begin(), sorted.end(), [](auto a, auto b) { return (*a)[0] < (*b)[0]; });
    bool strict = true;
    for (std::size_t i = 1; i < n && strict; ++i) {
      strict = (*sorted[i])[0] > (*sorted[i - 1])[0] && (*sorted[i])[1] < (*sorted[i - 1])[1];
    }
    if (strict) {
      // min(increasing, decreasing) along the front is unimodal in the index.
      double total = 0.0;
      for (std::size_t j = 0; j < J; ++j) {
        auto s = [&](std::size_t i) { return bank.value(j, sorted[i]->values()); };
        std::size_t lo = 0, hi = n - 1;
        while (lo < hi) {
          const std::size_t mid = lo + (hi - lo) / 2;
          if (s(mid + 1) > s(mid)) {
            lo = mid + 1;
          } else {
            hi = mid;
          }
        }
        total += s(lo);
      }
      return total / static_cast<double>(J);
    }
  }
  std::vector<double> best(J, -std::numeric_limits<double>::infinity()), vals(J);
  for (const auto& y : points) {
    bank.values(y.values(), vals);
    for (std::size_t j = 0; j < J; ++j) best[j] = std::max(best[j], vals[j]);
  }
  double total = 0.0;
  for (double b : best) total += b;
  return total / static_cast<double>(J);
}

double max_utility(ReferenceFront& front, const R2UtilitySpec& spec, RandomStream& rng, std::size_t J) {
  if (front.points.empty()) throw std::invalid_argument("max_utility: empty front");
  const std::uint64_t key = digest(spec) ^ (0x9e3779b97f4a7c15ULL * (J + 1));
  if (auto it = front.utility_cache.find(key); it != front.utility_cache.end()) return it->second;
  double value;
  if (auto exact = exact_utility(spec, false, &front.points.elements())) {
    value = exact->evaluate(front.points);
  } else {
    value = bank_max_over_set(draw_bank(spec, rng, J), front.points);
  }
  front.utility_cache.emplace(key, value);
  return value;
}

}  // namespace r2opt
