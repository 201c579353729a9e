#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "partition_tree/tree.hpp"

namespace partition_tree {

struct ForestConfig {
  std::size_t n_trees = 25;
  double max_samples = 1.0;   // bootstrap size as a fraction of N
  double max_features = 1.0;  // covariates searched per leaf, as a fraction
  FitConfig base;             // base.max_features and base.seed are overridden per tree
  std::uint64_t seed = 0;
  // When false every tree sees the full dataset in its original order.
  bool bootstrap = true;

  void validate() const;
  friend bool operator==(const ForestConfig&, const ForestConfig&) = default;
};

nlohmann::json forest_config_to_json(const ForestConfig& config);
ForestConfig forest_config_from_json(const nlohmann::json& doc);

inline constexpr std::size_t kDefaultRefinementCap = 1'000'000;

class PartitionForest final : public ConditionalDensityModel {
 public:
  PartitionForest(Schema schema, OutcomeBox box, ForestConfig config, std::vector<PartitionTree> trees);

  const Schema& schema() const override { return schema_; }
  const OutcomeBox& outcome_box() const override { return box_; }
  double density_floor() const override { return config_.base.density_floor; }
  const ForestConfig& config() const { return config_; }
  const std::vector<PartitionTree>& trees() const { return trees_; }

  double density(const Point& z) const override;
  double normalizer(const Point& x) const override;
  // Common refinement of the per-tree slices; throws ResourceError when the
  // refinement would exceed kDefaultRefinementCap bins.
  PredictiveDensity predictive_density(const Point& x) const override;
  PredictiveDensity predictive_density(const Point& x, std::size_t max_bins) const;

  nlohmann::json to_json() const override;
  static PartitionForest from_json(const nlohmann::json& doc);

 private:
  Schema schema_;
  OutcomeBox box_;
  ForestConfig config_;
  std::vector<PartitionTree> trees_;
};

// Per-tree seed derived from (forest seed, tree index).
std::uint64_t tree_seed(std::uint64_t forest_seed, std::size_t tree_index);
// Bootstrap rows of tree b: ceil(max_samples * n) draws with replacement.
std::vector<RowIndex> bootstrap_rows(std::size_t n_rows, double max_samples, std::uint64_t forest_seed,
                                     std::size_t tree_index);

// threads = 0 picks PARTITION_TREE_THREADS, or the hardware concurrency.
PartitionForest fit_forest(const Dataset& data, const ForestConfig& config, std::size_t threads = 0);

std::size_t resolve_threads(std::size_t requested);

}  // namespace partition_tree
