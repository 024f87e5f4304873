#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace r2opt {

/// Thrown when two vectors or sets that must share a dimension do not.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A point in objective space. Maximisation convention throughout.
class ObjectiveVector {
 public:
  ObjectiveVector() = default;
  explicit ObjectiveVector(std::vector<double> values);
  ObjectiveVector(std::initializer_list<double> values);

  [[nodiscard]] std::size_t size() const { return values_.size(); }
  [[nodiscard]] double operator[](std::size_t m) const { return values_[m]; }
  [[nodiscard]] std::span<const double> values() const { return values_; }
  [[nodiscard]] auto begin() const { return values_.begin(); }
  [[nodiscard]] auto end() const { return values_.end(); }

  friend bool operator==(const ObjectiveVector&, const ObjectiveVector&) = default;
  /// Lexicographic order; used only for deterministic bookkeeping.
  friend bool operator<(const ObjectiveVector& a, const ObjectiveVector& b) { return a.values_ < b.values_; }

 private:
  std::vector<double> values_;
};

/// Finite set of objective vectors of uniform dimension. Elements are
/// distinct under exact floating-point equality and keep insertion order.
class ObjectiveSet {
 public:
  ObjectiveSet() = default;
  explicit ObjectiveSet(std::size_t dim) : dim_(dim) {}
  explicit ObjectiveSet(std::vector<ObjectiveVector> points);
  ObjectiveSet(std::initializer_list<ObjectiveVector> points);

  /// Inserts y unless an equal element is present. Returns true if inserted.
  bool insert(const ObjectiveVector& y);
  [[nodiscard]] bool contains(const ObjectiveVector& y) const;
  /// A copy with c added.
  [[nodiscard]] ObjectiveSet with(const ObjectiveVector& c) const;

  [[nodiscard]] std::size_t size() const { return elems_.size(); }
  [[nodiscard]] bool empty() const { return elems_.empty(); }
  /// 0 until the dimension is fixed by construction or the first insert.
  [[nodiscard]] std::size_t dim() const { return dim_; }
  [[nodiscard]] const ObjectiveVector& operator[](std::size_t i) const { return elems_[i]; }
  [[nodiscard]] const std::vector<ObjectiveVector>& elements() const { return elems_; }
  [[nodiscard]] auto begin() const { return elems_.begin(); }
  [[nodiscard]] auto end() const { return elems_.end(); }

 private:
  std::size_t dim_ = 0;
  std::vector<ObjectiveVector> elems_;
};

/// Axis-aligned box of feasible inputs.
struct Box {
  std::vector<double> lower;
  std::vector<double> upper;

  [[nodiscard]] std::size_t dim() const { return lower.size(); }
  void validate() const;
  static Box unit(std::size_t dim);
};

/// A point in input space, clamped into its box at construction.
class InputVector {
 public:
  InputVector() = default;
  explicit InputVector(std::vector<double> coords);
  InputVector(std::vector<double> coords, const Box& box);

  [[nodiscard]] std::size_t size() const { return coords_.size(); }
  [[nodiscard]] double operator[](std::size_t d) const { return coords_[d]; }
  [[nodiscard]] std::span<const double> coords() const { return coords_; }
  [[nodiscard]] auto begin() const { return coords_.begin(); }
  [[nodiscard]] auto end() const { return coords_.end(); }

  friend bool operator==(const InputVector&, const InputVector&) = default;

 private:
  std::vector<double> coords_;
};

enum class Dominance { weak, strict, strong };

bool dominates(const ObjectiveVector& a, const ObjectiveVector& b, Dominance mode);
bool dominates(std::span<const double> a, std::span<const double> b, Dominance mode);

/// True iff some element of the set weakly dominates point.
bool in_dominated_region(const ObjectiveVector& point, const ObjectiveSet& set);

/// Containment of weakly dominated regions. Strict containment is decided by
/// a witness: some element of a lies outside the region dominated by b.
bool set_dominates(const ObjectiveSet& a, const ObjectiveSet& b, Dominance mode);

/// Elements not strictly dominated by any other element.
ObjectiveSet pareto_front(const ObjectiveSet& set);

std::string to_string(const ObjectiveVector& y);

}  // namespace r2opt
