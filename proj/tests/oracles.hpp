#pragma once

// Independent reference implementations used only by tests.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "r2opt/core.hpp"
#include "r2opt/random.hpp"

namespace oracle {

/// Exact dominated volume by coordinate compression: every grid cell between
/// consecutive distinct coordinates is either fully covered or not.
inline double grid_hypervolume(const r2opt::ObjectiveSet& Y, const r2opt::ObjectiveVector& eta) {
  const std::size_t m = eta.size();
  std::vector<std::vector<double>> axes(m);
  for (std::size_t k = 0; k < m; ++k) {
    axes[k].push_back(eta[k]);
    for (const auto& y : Y) {
      if (y[k] > eta[k]) axes[k].push_back(y[k]);
    }
    std::sort(axes[k].begin(), axes[k].end());
    axes[k].erase(std::unique(axes[k].begin(), axes[k].end()), axes[k].end());
  }
  std::vector<std::size_t> idx(m, 0);
  double total = 0.0;
  for (;;) {
    bool valid = true;
    for (std::size_t k = 0; k < m; ++k) valid = valid && idx[k] + 1 < axes[k].size();
    if (valid) {
      double vol = 1.0;
      std::vector<double> upper(m);
      for (std::size_t k = 0; k < m; ++k) {
        vol *= axes[k][idx[k] + 1] - axes[k][idx[k]];
        upper[k] = axes[k][idx[k] + 1];
      }
      const bool covered = std::any_of(Y.begin(), Y.end(), [&](const r2opt::ObjectiveVector& y) {
        for (std::size_t k = 0; k < m; ++k) {
          if (y[k] < upper[k]) return false;
        }
        return true;
      });
      if (covered) total += vol;
    }
    // Odometer increment.
    std::size_t k = 0;
    while (k < m) {
      if (++idx[k] + 1 < axes[k].size()) break;
      idx[k] = 0;
      ++k;
    }
    if (k == m) break;
  }
  return total;
}

/// -(IGD_{p,q})^q straight from the indicator definition.
inline double neg_igd_pow(const r2opt::ObjectiveSet& Y, const r2opt::ObjectiveSet& refs, double p, double q,
                          bool plus) {
  double acc = 0.0;
  for (const auto& r : refs) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& y : Y) {
      double s = 0.0;
      for (std::size_t k = 0; k < r.size(); ++k) {
        double d = r[k] - y[k];
        if (plus) d = std::max(d, 0.0);
        s += std::pow(std::abs(d), p);
      }
      best = std::min(best, std::pow(s, 1.0 / p));
    }
    acc += std::pow(best, q);
  }
  const double indicator = std::pow(acc / static_cast<double>(refs.size()), 1.0 / q);
  return -std::pow(indicator, q);
}

/// -D1 straight from the indicator definition.
inline double neg_d1(const r2opt::ObjectiveSet& Y, const r2opt::ObjectiveSet& refs, const std::vector<double>& w) {
  double acc = 0.0;
  for (const auto& r : refs) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& y : Y) {
      double worst = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < r.size(); ++k) worst = std::max(worst, w[k] * (r[k] - y[k]));
      best = std::min(best, worst);
    }
    acc += best;
  }
  return -acc / static_cast<double>(refs.size());
}

inline r2opt::ObjectiveSet random_set(r2opt::RandomStream& rng, std::size_t m, std::size_t n, double lo = 0.0,
                                      double hi = 1.0) {
  std::vector<r2opt::ObjectiveVector> pts;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v(m);
    for (auto& x : v) x = rng.uniform(lo, hi);
    pts.emplace_back(v);
  }
  return r2opt::ObjectiveSet(pts);
}

}  // namespace oracle
