#include "r2opt/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace r2opt {

namespace {

void check_finite(std::span<const double> v, const char* what) {
  if (v.empty()) throw std::invalid_argument(std::string(what) + ": dimension must be at least 1");
  for (double x : v) {
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + ": entries must be finite");
  }
}

void check_dims(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(a) + " vs " +
                         std::to_string(b) + ")");
  }
}

}  // namespace

ObjectiveVector::ObjectiveVector(std::vector<double> values) : values_(std::move(values)) {
  check_finite(values_, "ObjectiveVector");
}

ObjectiveVector::ObjectiveVector(std::initializer_list<double> values)
    : ObjectiveVector(std::vector<double>(values)) {}

ObjectiveSet::ObjectiveSet(std::vector<ObjectiveVector> points) {
  if (points.empty()) return;
  dim_ = points.front().size();
  for (const auto& p : points) check_dims(p.size(), dim_, "ObjectiveSet");
  // Sort an index to find duplicates in O(n log n), keep first occurrences.
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return points[i] < points[j]; });
  std::vector<char> keep(points.size(), 1);
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (points[order[k]] == points[order[k - 1]]) keep[order[k]] = 0;
  }
  elems_.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (keep[i]) elems_.push_back(std::move(points[i]));
  }
}

ObjectiveSet::ObjectiveSet(std::initializer_list<ObjectiveVector> points)
    : ObjectiveSet(std::vector<ObjectiveVector>(points)) {}

bool ObjectiveSet::insert(const ObjectiveVector& y) {
  if (dim_ == 0) dim_ = y.size();
  check_dims(y.size(), dim_, "ObjectiveSet::insert");
  if (contains(y)) return false;
  elems_.push_back(y);
  return true;
}

bool ObjectiveSet::contains(const ObjectiveVector& y) const {
  return std::find(elems_.begin(), elems_.end(), y) != elems_.end();
}

ObjectiveSet ObjectiveSet::with(const ObjectiveVector& c) const {
  ObjectiveSet out = *this;
  out.insert(c);
  return out;
}

void Box::validate() const {
  if (lower.empty() || lower.size() != upper.size()) throw std::invalid_argument("Box: bad dimensions");
  for (std::size_t d = 0; d < lower.size(); ++d) {
    if (!(std::isfinite(lower[d]) && std::isfinite(upper[d]) && upper[d] > lower[d])) {
      throw std::invalid_argument("Box: need finite lower < upper");
    }
  }
}

Box Box::unit(std::size_t dim) { return {std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)}; }

InputVector::InputVector(std::vector<double> coords) : coords_(std::move(coords)) {
  check_finite(coords_, "InputVector");
}

InputVector::InputVector(std::vector<double> coords, const Box& box) : coords_(std::move(coords)) {
  check_finite(coords_, "InputVector");
  check_dims(coords_.size(), box.dim(), "InputVector");
  for (std::size_t d = 0; d < coords_.size(); ++d) coords_[d] = std::clamp(coords_[d], box.lower[d], box.upper[d]);
}

bool dominates(std::span<const double> a, std::span<const double> b, Dominance mode) {
  check_dims(a.size(), b.size(), "dominates");
  bool all_ge = true;
  bool all_gt = true;
  bool any_gt = false;
  for (std::size_t m = 0; m < a.size(); ++m) {
    if (a[m] < b[m]) all_ge = false;
    if (a[m] > b[m]) {
      any_gt = true;
    } else {
      all_gt = false;
    }
  }
  switch (mode) {
    case Dominance::weak:
      return all_ge;
    case Dominance::strict:
      return all_ge && any_gt;
    case Dominance::strong:
      return all_gt;
  }
  return false;
}

bool dominates(const ObjectiveVector& a, const ObjectiveVector& b, Dominance mode) {
  return dominates(a.values(), b.values(), mode);
}

bool in_dominated_region(const ObjectiveVector& point, const ObjectiveSet& set) {
  if (!set.empty()) check_dims(point.size(), set.dim(), "in_dominated_region");
  return std::any_of(set.begin(), set.end(),
                     [&](const ObjectiveVector& y) { return dominates(y, point, Dominance::weak); });
}

bool set_dominates(const ObjectiveSet& a, const ObjectiveSet& b, Dominance mode) {
  if (!a.empty() && !b.empty()) check_dims(a.dim(), b.dim(), "set_dominates");
  if (mode == Dominance::strong) throw std::invalid_argument("set_dominates: only weak and strict are defined");
  const bool weak = std::all_of(b.begin(), b.end(), [&](const ObjectiveVector& y) { return in_dominated_region(y, a); });
  if (!weak || mode == Dominance::weak) return weak;
  return std::any_of(a.begin(), a.end(), [&](const ObjectiveVector& y) { return !in_dominated_region(y, b); });
}

ObjectiveSet pareto_front(const ObjectiveSet& set) {
  const std::size_t n = set.size();
  if (n == 0) return ObjectiveSet(set.dim());
  // In lexicographically descending order a point can only be strictly
  // dominated by points before it, and by transitivity it suffices to check
  // the points already kept.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return set[j] < set[i]; });
  std::vector<char> keep(n, 0);
  if (set.dim() == 2) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i : order) {
      if (set[i][1] > best) {
        keep[i] = 1;
        best = set[i][1];
      }
    }
  } else {
    std::vector<std::size_t> kept;
    for (std::size_t i : order) {
      const bool dominated = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
        return dominates(set[k], set[i], Dominance::weak);  // elements are distinct
      });
      if (!dominated) {
        kept.push_back(i);
        keep[i] = 1;
      }
    }
  }
  ObjectiveSet out(set.dim());
  std::vector<ObjectiveVector> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (keep[i]) pts.push_back(set[i]);
  }
  return pts.empty() ? out : ObjectiveSet(std::move(pts));
}

std::string to_string(const ObjectiveVector& y) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (std::size_t m = 0; m < y.size(); ++m) os << (m ? ", " : "") << y[m];
  os << ')';
  return os.str();
}

}  // namespace r2opt
