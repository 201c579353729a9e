#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "partition_tree/data.hpp"
#include "partition_tree/geometry.hpp"
#include "partition_tree/model.hpp"
#include "partition_tree/random.hpp"
#include "partition_tree/split.hpp"

namespace partition_tree {

struct FitConfig {
  // Total split budget k_N; defaults to floor(N^0.4).
  std::optional<std::size_t> max_splits;
  // Share alpha of the budget spent on exploration splits, floor(alpha * k_N).
  double exploration_fraction = 0.0;
  FeasibilityConfig feasibility;
  double expansion_factor = 0.01;
  // Fraction of covariates drawn for each leaf's split search.
  double max_features = 1.0;
  std::uint64_t seed = 0;
  double density_floor = 1e-12;

  void validate() const;
  std::size_t resolve_max_splits(std::size_t n_train) const;
  std::size_t exploration_budget(std::size_t max_splits) const;

  friend bool operator==(const FitConfig&, const FitConfig&) = default;
};

nlohmann::json fit_config_to_json(const FitConfig& config);
FitConfig fit_config_from_json(const nlohmann::json& doc);

struct TreeNode {
  Cell cell;
  CellStats stats;
  std::optional<SplitSpec> split;  // set on internal nodes
  std::size_t left = 0;
  std::size_t right = 0;
  double gain = 0.0;  // realized empirical gain of the split
  bool exploration = false;

  bool is_leaf() const { return !split.has_value(); }
};

class PartitionTree final : public ConditionalDensityModel {
 public:
  // `nodes` in pre-order with child indices; validated.
  PartitionTree(Schema schema, OutcomeBox box, FitConfig config, std::size_t n_train, std::size_t max_splits,
                std::vector<TreeNode> nodes);

  const Schema& schema() const override { return schema_; }
  const OutcomeBox& outcome_box() const override { return box_; }
  double density_floor() const override { return config_.density_floor; }
  const FitConfig& config() const { return config_; }
  std::size_t n_train() const { return n_train_; }
  std::size_t max_splits() const { return max_splits_; }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t n_leaves() const;
  std::size_t n_internal() const { return nodes_.size() - n_leaves(); }
  std::size_t n_exploration_splits() const;

  // Node index of the leaf whose cell contains z (z inside the box).
  std::size_t leaf_of(const Point& z) const;
  // Leaves whose covariate projection contains x, left to right.
  std::vector<std::size_t> slice_leaves(const Point& x) const;

  // n_xy / (n_x * mu_Y) of a leaf; 0 when n_x = 0.
  double leaf_value(std::size_t node) const;

  double density(const Point& z) const override;
  double normalizer(const Point& x) const override;
  PredictiveDensity predictive_density(const Point& x) const override;

  nlohmann::json to_json() const override;
  static PartitionTree from_json(const nlohmann::json& doc);
  // Tree document without schema and box, as embedded in forest files.
  nlohmann::json body_to_json() const;
  static PartitionTree from_body(const nlohmann::json& body, const Schema& schema, const OutcomeBox& box,
                                 const std::string& location);

 private:
  Schema schema_;
  OutcomeBox box_;
  FitConfig config_;
  std::size_t n_train_ = 0;
  std::size_t max_splits_ = 0;
  std::vector<TreeNode> nodes_;
};

// Grows a tree on all rows of `data`.
PartitionTree fit_tree(const Dataset& data, const FitConfig& config);
// Grows a tree on `rows` (repetitions count with multiplicity) using a given
// truncation box, which must contain every training outcome.
PartitionTree fit_tree(const Dataset& data, std::span<const RowIndex> rows, const OutcomeBox& box,
                       const FitConfig& config);

// Geometric split of one leaf along its longest side: midpoint for bounded
// continuous sides, the in-leaf extreme for unbounded ones, a random
// singleton for categorical sides. nullopt when no side can be split.
std::optional<SplitSpec> exploration_split(const LeafView& leaf, Rng& rng);

// Per-side length used to pick the exploration coordinate: phi(length) for
// continuous sides, (|S| - 1) / (|Sigma| - 1) for categorical ones.
double exploration_side_length(const Cell& cell, std::size_t column);

}  // namespace partition_tree
