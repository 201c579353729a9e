#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "partition_tree/data.hpp"
#include "partition_tree/geometry.hpp"
#include "partition_tree/random.hpp"

namespace partition_tree {

// A known conditional density over one continuous outcome.
class TruthDensity {
 public:
  virtual ~TruthDensity() = default;
  virtual const Schema& schema() const = 0;
  virtual std::size_t outcome_column() const = 0;
  // Closed interval outside which f(x, .) vanishes.
  virtual Interval outcome_support() const = 0;
  // Full joint point with the outcome entry left at 0.
  virtual Point sample_covariates(Rng& rng) const = 0;
  virtual double density(const Point& z) const = 0;
};

enum class GeneratorKind { step_uniform, heteroscedastic_gaussian, piecewise_constant_grid };
enum class MeanShape { sine, friedman };

std::string_view to_string(GeneratorKind kind);
std::optional<GeneratorKind> parse_generator(std::string_view name);

struct SyntheticParams {
  GeneratorKind kind = GeneratorKind::step_uniform;
  // Extra covariates drawn like the informative ones but unrelated to y.
  std::size_t noise_covariates = 0;
  // heteroscedastic_gaussian: sigma(x) = sigma0 + lambda * |m(x)|.
  MeanShape shape = MeanShape::sine;
  double sigma0 = 0.1;
  double lambda = 0.5;
  // piecewise_constant_grid: grid x grid cells over [0,1)^2 with random weights.
  std::size_t grid = 4;
  std::uint64_t structure_seed = 1;
};

//  step_uniform:           x0 ~ U[-1,1]; y ~ U[0,1) if x0 < 0, else U[1,2)
//  heteroscedastic_gaussian (sine):     x0 ~ U[0,pi], m = sin(2 x0), y truncated to [-3,3]
//  heteroscedastic_gaussian (friedman): x0..x7 ~ U[0,1], m = Friedman #1 / 10, y truncated to [-3,6]
//  piecewise_constant_grid: x0 ~ U[0,1); y | x0 piecewise uniform on [0,1]
class SyntheticDensity final : public TruthDensity {
 public:
  explicit SyntheticDensity(SyntheticParams params);

  const SyntheticParams& params() const { return params_; }
  const Schema& schema() const override { return schema_; }
  std::size_t outcome_column() const override { return schema_.size() - 1; }
  Interval outcome_support() const override;
  Point sample_covariates(Rng& rng) const override;
  double density(const Point& z) const override;

  // Conditional mean of y given the covariates of z.
  double mean(const Point& z) const;
  Dataset sample(std::size_t n, std::uint64_t seed) const;

  nlohmann::json to_json() const;
  static SyntheticDensity from_json(const nlohmann::json& doc);

 private:
  double sample_outcome(const Point& x, Rng& rng) const;
  std::size_t informative() const;
  double sigma(double m) const { return params_.sigma0 + params_.lambda * std::abs(m); }

  SyntheticParams params_;
  Schema schema_;
  std::vector<double> weights_;  // grid rows of weights, each row normalized to sum 1
};

}  // namespace partition_tree
