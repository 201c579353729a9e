#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <vector>

#include "partition_tree/data.hpp"
#include "partition_tree/geometry.hpp"

namespace partition_tree {

// One piece of a piecewise-constant outcome density.
struct OutcomeBin {
  std::vector<Side> sides;  // parallel to PredictiveDensity::outcome_columns
  double value = 0.0;       // unnormalized density on the bin
  double volume = 0.0;      // mu_Y of the bin
};

// The histogram over the outcome box induced by a fixed covariate query.
struct PredictiveDensity {
  std::vector<std::size_t> outcome_columns;
  std::vector<OutcomeBin> bins;
  double normalizer = 0.0;        // sum of value * volume
  bool uniform_fallback = false;  // normalizer was 0; density is 1 / box_volume
  double box_volume = 0.0;

  double normalized_value(const OutcomeBin& bin) const {
    return uniform_fallback ? 1.0 / box_volume : bin.value / normalizer;
  }
  double mass(const OutcomeBin& bin) const { return normalized_value(bin) * bin.volume; }
  // Index of the bin containing the outcome part of z, or npos.
  std::size_t find_bin(const Point& z) const;
  // Normalized density at the outcome part of z (0 outside every bin).
  double evaluate(const Point& z) const;
  double total_mass() const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

// Common query surface of fitted trees and forests.
class ConditionalDensityModel {
 public:
  virtual ~ConditionalDensityModel() = default;

  virtual const Schema& schema() const = 0;
  virtual const OutcomeBox& outcome_box() const = 0;
  virtual double density_floor() const = 0;

  // Unnormalized estimate at a joint point; 0 outside the outcome box.
  virtual double density(const Point& z) const = 0;
  // Integral of the unnormalized estimate over the outcome box at x.
  virtual double normalizer(const Point& x) const = 0;
  virtual PredictiveDensity predictive_density(const Point& x) const = 0;

  virtual nlohmann::json to_json() const = 0;

  // Normalized density at z, using the uniform fallback when the
  // normalizer vanishes.
  double normalized_density(const Point& z) const;
  // log(max(normalized density, floor)).
  double log_density(const Point& z) const;
  // Conditional mean (one continuous outcome) or most probable category
  // (all-categorical outcome), written into the outcome entries of x.
  Point point_predict(const Point& x) const;
};

void save_model(const std::filesystem::path& path, const ConditionalDensityModel& model);
std::unique_ptr<ConditionalDensityModel> load_model(const std::filesystem::path& path);
std::unique_ptr<ConditionalDensityModel> model_from_json(const nlohmann::json& doc);

inline constexpr int kModelFormatVersion = 1;

}  // namespace partition_tree
