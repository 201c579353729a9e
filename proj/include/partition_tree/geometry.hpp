#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <variant>
#include <vector>

#include "partition_tree/data.hpp"

namespace partition_tree {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// [lo, hi), or [lo, hi] when closed_hi is set. Unbounded sides use +-inf.
struct Interval {
  double lo = -kInfinity;
  double hi = kInfinity;
  bool closed_hi = false;

  double length() const { return hi - lo; }
  bool bounded() const { return lo > -kInfinity && hi < kInfinity; }
  bool contains(double v) const { return v >= lo && (v < hi || (closed_hi && v == hi)); }

  friend bool operator==(const Interval&, const Interval&) = default;
};

// Subset of a categorical alphabet {0, ..., alphabet_size - 1}.
class CategorySet {
 public:
  CategorySet() = default;
  explicit CategorySet(std::size_t alphabet_size);

  static CategorySet full(std::size_t alphabet_size);
  static CategorySet of(std::size_t alphabet_size, std::span<const std::int32_t> codes);

  std::size_t alphabet_size() const { return alphabet_size_; }
  bool contains(std::int32_t code) const {
    return code >= 0 && static_cast<std::size_t>(code) < alphabet_size_ &&
           ((words_[static_cast<std::size_t>(code) >> 6] >> (code & 63)) & 1ULL);
  }
  void insert(std::int32_t code);
  void erase(std::int32_t code);
  std::size_t count() const;
  bool empty() const { return count() == 0; }
  std::vector<std::int32_t> members() const;

  CategorySet operator&(const CategorySet& other) const;
  CategorySet minus(const CategorySet& other) const;
  bool is_subset_of(const CategorySet& other) const;

  friend bool operator==(const CategorySet&, const CategorySet&) = default;

 private:
  std::size_t alphabet_size_ = 0;
  std::vector<std::uint64_t> words_;
};

using Side = std::variant<Interval, CategorySet>;

// Product cell A = A_X x A_Y: one side per schema column, tagged with the
// column's role so both projections are recoverable.
class Cell {
 public:
  Cell() = default;
  Cell(std::vector<Side> sides, std::vector<Role> roles);

  std::size_t dimension() const { return sides_.size(); }
  const Side& side(std::size_t c) const { return sides_[c]; }
  Role role(std::size_t c) const { return roles_[c]; }
  const Interval& interval(std::size_t c) const { return std::get<Interval>(sides_[c]); }
  const CategorySet& categories(std::size_t c) const { return std::get<CategorySet>(sides_[c]); }
  bool is_continuous(std::size_t c) const { return std::holds_alternative<Interval>(sides_[c]); }

  void set_side(std::size_t c, Side side) { sides_[c] = std::move(side); }

  friend bool operator==(const Cell&, const Cell&) = default;

 private:
  std::vector<Side> sides_;
  std::vector<Role> roles_;
};

bool side_contains(const Side& side, double value);
double side_measure(const Side& side);  // length, or subset size

// Point-in-cell test over all coordinates.
bool contains(const Cell& cell, const Point& z);
// Membership of the covariate (resp. outcome) part of z in A_X (resp. A_Y).
bool contains_x(const Cell& cell, const Point& z);
bool contains_y(const Cell& cell, const Point& z);

// mu_Y(A_Y): Lebesgue length over continuous outcome sides times counting
// measure over categorical outcome sides. Empty products are 1.
double mu_y(const Cell& cell);
// mu_Y of the outcome projection with the side of column c replaced.
double mu_y_with_side(const Cell& cell, std::size_t c, const Side& replacement);

// phi(u) = u / (1 + u), with phi(inf) = 1.
double bounded_transform(double u);

// phi(||continuous side lengths||_2) + sum_k (|S_k| - 1) / (|Sigma_k| - 1)
// over all coordinates of the joint cell; singleton alphabets contribute 0.
double diameter(const Cell& cell);

struct CellStats {
  std::size_t n_xy = 0;
  std::size_t n_x = 0;
  double mu_y = 1.0;

  friend bool operator==(const CellStats&, const CellStats&) = default;
};

// Data-dependent truncation of the outcome space; categorical outcome
// coordinates keep their full alphabet. The upper face is closed.
struct OutcomeBox {
  std::vector<std::size_t> columns;  // outcome columns, schema order
  std::vector<Side> sides;           // parallel to columns
  std::vector<double> padding;       // delta_j, 0 for categorical

  double volume() const;
  bool contains(const Point& z) const;
  const Side& side_for(std::size_t column) const;

  friend bool operator==(const OutcomeBox&, const OutcomeBox&) = default;
};

// Side j = [min_j - delta_j, max_j + delta_j] with delta_j = factor * (max_j - min_j).
// A constant coordinate becomes [m - 0.5, m + 0.5].
OutcomeBox build_outcome_box(const Dataset& data, double expansion_factor);
OutcomeBox build_outcome_box(const Dataset& data, std::span<const RowIndex> rows, double expansion_factor);

// X sides unbounded (continuous) or full (categorical); Y sides from the box.
Cell root_cell(const Schema& schema, const OutcomeBox& box);

nlohmann::json outcome_box_to_json(const OutcomeBox& box);
OutcomeBox outcome_box_from_json(const nlohmann::json& doc, const Schema& schema);

}  // namespace partition_tree
