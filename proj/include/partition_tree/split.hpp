#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "partition_tree/data.hpp"
#include "partition_tree/geometry.hpp"

namespace partition_tree {

// Left child takes values < threshold, or <= threshold when inclusive.
// Gain-based splits always use exclusive midpoints; the inclusive form only
// appears when exploration bounds an unbounded side at the in-leaf maximum.
struct ThresholdTest {
  double threshold = 0.0;
  bool inclusive = false;
  friend bool operator==(const ThresholdTest&, const ThresholdTest&) = default;
};

// Left child takes codes in `left`; everything else goes right.
struct SubsetTest {
  CategorySet left;
  friend bool operator==(const SubsetTest&, const SubsetTest&) = default;
};

struct SplitSpec {
  std::size_t coordinate = 0;
  Role role = Role::covariate;
  std::variant<ThresholdTest, SubsetTest> test;

  bool goes_left(double value) const;
  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

std::pair<Side, Side> split_side(const Side& parent, const SplitSpec& split);
std::pair<Cell, Cell> split_cell(const Cell& parent, const SplitSpec& split);

struct FeasibilityConfig {
  std::size_t min_samples_leaf = 1;    // min n_xy per child
  std::size_t min_samples_leaf_x = 1;  // min n_x per child (never below 1)
  double min_target_volume = 0.0;      // per continuous Y side, fraction of the box side

  void validate() const;
  friend bool operator==(const FeasibilityConfig&, const FeasibilityConfig&) = default;
};

struct GainRecord {
  SplitSpec split;
  double gain = 0.0;
  CellStats left;
  CellStats right;
};

// Empirical log-loss reduction of replacing `parent` by `left` and `right`.
// Terms with n_xy = 0 contribute 0. Throws ConsistencyError when the child
// joint counts do not add up to the parent's.
double empirical_gain(const CellStats& parent, const CellStats& left, const CellStats& right,
                      std::size_t n_total);

// Count/volume feasibility of a candidate pair of children.
bool children_feasible(const CellStats& left, const CellStats& right, const FeasibilityConfig& feas);

// ---- continuous coordinates ----------------------------------------------

struct ContinuousScanInput {
  std::size_t coordinate = 0;
  Role role = Role::covariate;
  std::span<const double> x_values;   // sorted; covariate members of A_X (X-splits only)
  std::span<const double> xy_values;  // sorted; joint members of A
  CellStats parent;
  Interval side;                // parent side on this coordinate
  double mu_other = 1.0;        // Y-splits: mu_Y of the other outcome sides
  double min_child_length = 0;  // Y-splits: shortest admissible child side
};

struct CandidateEval {
  double threshold = 0.0;
  CellStats left;
  CellStats right;
  double gain = 0.0;
  bool feasible = false;
};

// Midpoints between consecutive distinct values of a sorted sequence, each
// adjusted so that `value < t` reproduces the split of the sequence.
std::vector<double> midpoint_candidates(std::span<const double> sorted);

// Every candidate threshold with its counts and gain, in increasing order.
std::vector<CandidateEval> scan_continuous(const ContinuousScanInput& in, const FeasibilityConfig& feas,
                                           std::size_t n_total);

// Feasible candidate of maximal gain; ties go to the smaller threshold.
std::optional<GainRecord> best_continuous_split(const ContinuousScanInput& in, const FeasibilityConfig& feas,
                                                std::size_t n_total);

// ---- categorical coordinates --------------------------------------------

// a: joint count of the category inside the leaf. b: covariate count (X-splits)
// or mu_Y of the outcome side restricted to the category (Y-splits).
struct CategoryStat {
  std::int32_t code = 0;
  std::size_t a = 0;
  double b = 0.0;
};

struct CategoricalScanInput {
  std::size_t coordinate = 0;
  Role role = Role::covariate;
  std::vector<CategoryStat> stats;  // one per category of the parent side
  CategorySet side;
  CellStats parent;
};

// Sorts the categories with b > 0 by a/b and scans the prefix cuts. Categories
// of the side with b = 0 follow the left child.
std::optional<GainRecord> best_categorical_split(const CategoricalScanInput& in, const FeasibilityConfig& feas,
                                                 std::size_t n_total);

// ---- whole leaf -----------------------------------------------------------

struct LeafView {
  const Dataset& data;
  const Cell& cell;
  std::span<const RowIndex> x_members;   // rows with x in A_X
  std::span<const RowIndex> xy_members;  // rows with (x, y) in A
  CellStats stats;
};

// Builders shared by best_split and by tests that drive one coordinate.
ContinuousScanInput continuous_scan_input(const LeafView& leaf, std::size_t column, const OutcomeBox& box,
                                          const FeasibilityConfig& feas, std::vector<double>& x_buffer,
                                          std::vector<double>& xy_buffer);
CategoricalScanInput categorical_scan_input(const LeafView& leaf, std::size_t column);

// Best admissible one-coordinate split of the leaf. `covariate_mask`, when
// given, limits the covariate columns searched; outcome columns are always
// searched. Ties go to the lower column index.
std::optional<GainRecord> best_split(const LeafView& leaf, const FeasibilityConfig& feas, const OutcomeBox& box,
                                     const std::vector<std::size_t>* covariate_mask, std::size_t n_total);

}  // namespace partition_tree
