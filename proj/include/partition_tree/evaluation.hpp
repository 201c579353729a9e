#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "partition_tree/data.hpp"
#include "partition_tree/forest.hpp"
#include "partition_tree/model.hpp"
#include "partition_tree/synthetic.hpp"
#include "partition_tree/tree.hpp"

namespace partition_tree {

struct LogLossReport {
  double value = 0.0;
  std::size_t n = 0;
  // rows whose normalized density fell below the floor (out of box or empty bin)
  std::size_t floored_rows = 0;
};

LogLossReport log_loss(const ConditionalDensityModel& model, const Dataset& data);
double rmse(const ConditionalDensityModel& model, const Dataset& data);
double accuracy(const ConditionalDensityModel& model, const Dataset& data);

struct ImportanceVector {
  std::vector<std::size_t> columns;  // covariate columns, schema order
  std::vector<double> values;
  bool has_x_splits = false;
};

enum class ImportanceDenominator {
  x_splits,   // sum of gains over X-splits; values sum to 1
  all_nodes,  // sum of gains over every internal node
};

ImportanceVector feature_importance(const PartitionTree& tree,
                                    ImportanceDenominator denominator = ImportanceDenominator::x_splits);
// Mean of the per-tree vectors over trees that have at least one X-split.
ImportanceVector feature_importance(const PartitionForest& forest,
                                    ImportanceDenominator denominator = ImportanceDenominator::x_splits);
ImportanceVector feature_importance(const ConditionalDensityModel& model,
                                    ImportanceDenominator denominator = ImportanceDenominator::x_splits);

// Monte Carlo estimate of E_X int |fhat(X, y) - f(X, y)| dy for a truth with
// one continuous outcome: n_mc covariate draws, 64 midpoints per bin, plus
// the truth mass outside the outcome box.
double l1_error(const ConditionalDensityModel& model, const TruthDensity& truth, std::size_t n_mc,
                std::uint64_t seed, bool normalized = true);

enum class Metric { logloss, rmse, accuracy };
std::string_view to_string(Metric metric);
std::optional<Metric> parse_metric(std::string_view name);

struct MetricResult {
  Metric metric = Metric::logloss;
  double value = 0.0;
  std::size_t n = 0;
  std::size_t floored_rows = 0;
};

MetricResult evaluate_metric(const ConditionalDensityModel& model, const Dataset& data, Metric metric);

// Row indices of each fold for a seeded shuffle.
std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n_rows, std::size_t folds, std::uint64_t seed);

using ModelFactory = std::function<std::unique_ptr<ConditionalDensityModel>(const Dataset& train)>;

// Fits on k-1 folds and scores the held-out fold; one result per metric,
// averaged over folds (row counts and floored rows summed).
std::vector<MetricResult> cross_validate(const Dataset& data, std::size_t folds, std::uint64_t seed,
                                         const ModelFactory& fit, const std::vector<Metric>& metrics);

// Hex FNV-1a digest of a config document's compact dump.
std::string config_digest(const nlohmann::json& config);
nlohmann::json metric_to_json(const MetricResult& result, std::uint64_t seed, const std::string& digest);

}  // namespace partition_tree
