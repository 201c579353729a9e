#pragma once

// Shared experiment protocol: split budget chosen by 5-fold CV on the
// training rows from multiples of the default budget.

#include <cmath>
#include <functional>
#include <memory>

#include "partition_tree/evaluation.hpp"
#include "partition_tree/forest.hpp"
#include "partition_tree/tree.hpp"

namespace protocol {

using namespace partition_tree;

inline std::size_t cv_budget(const Dataset& train, const std::function<std::unique_ptr<ConditionalDensityModel>(
                                                        const Dataset&, std::size_t)>& fit) {
  const std::size_t k_n = FitConfig{}.resolve_max_splits(train.n_rows());
  std::size_t best_k = k_n;
  double best = INFINITY;
  for (std::size_t mult : {1u, 2u, 4u, 8u}) {
    const std::size_t k = k_n * mult;
    auto factory = [&](const Dataset& d) { return fit(d, k); };
    const double cv = cross_validate(train, 5, 9, factory, {Metric::logloss}).front().value;
    if (cv < best) {
      best = cv;
      best_k = k;
    }
  }
  return best_k;
}

inline PartitionTree tuned_tree(const Dataset& train, FitConfig base) {
  base.max_splits = cv_budget(train, [&](const Dataset& d, std::size_t k) -> std::unique_ptr<ConditionalDensityModel> {
    FitConfig c = base;
    c.max_splits = k;
    return std::make_unique<PartitionTree>(fit_tree(d, c));
  });
  return fit_tree(train, base);
}

inline PartitionForest tuned_forest(const Dataset& train, ForestConfig config) {
  config.base.max_splits =
      cv_budget(train, [&](const Dataset& d, std::size_t k) -> std::unique_ptr<ConditionalDensityModel> {
        ForestConfig c = config;
        c.base.max_splits = k;
        return std::make_unique<PartitionForest>(fit_forest(d, c));
      });
  return fit_forest(train, config);
}

}  // namespace protocol
