#include "partition_tree/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "json_util.hpp"
#include "partition_tree/error.hpp"

namespace partition_tree {

std::string_view to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::step_uniform:
      return "step-uniform";
    case GeneratorKind::heteroscedastic_gaussian:
      return "heteroscedastic-gaussian-truncated";
    case GeneratorKind::piecewise_constant_grid:
      return "piecewise-constant-grid";
  }
  return "unknown";
}

std::optional<GeneratorKind> parse_generator(std::string_view name) {
  for (auto k : {GeneratorKind::step_uniform, GeneratorKind::heteroscedastic_gaussian,
                 GeneratorKind::piecewise_constant_grid}) {
    if (name == to_string(k)) return k;
  }
  return std::nullopt;
}

namespace {

constexpr double kPi = std::numbers::pi;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double friedman(const Point& z) {
  return (10.0 * std::sin(kPi * z[0] * z[1]) + 20.0 * (z[2] - 0.5) * (z[2] - 0.5) + 10.0 * z[3] + 5.0 * z[4]) /
         10.0;
}

}  // namespace

std::size_t SyntheticDensity::informative() const {
  if (params_.kind == GeneratorKind::heteroscedastic_gaussian && params_.shape == MeanShape::friedman) return 8;
  return 1;
}

SyntheticDensity::SyntheticDensity(SyntheticParams params) : params_(params) {
  if (params_.kind == GeneratorKind::heteroscedastic_gaussian && !(params_.sigma0 > 0.0 && params_.lambda >= 0.0)) {
    throw ConfigError("heteroscedastic generator needs sigma0 > 0 and lambda >= 0");
  }
  if (params_.kind == GeneratorKind::piecewise_constant_grid && params_.grid == 0) {
    throw ConfigError("grid resolution must be positive");
  }
  std::vector<ColumnSpec> cols;
  const std::size_t d = informative() + params_.noise_covariates;
  for (std::size_t i = 0; i < d; ++i) cols.push_back(ColumnSpec::continuous("x" + std::to_string(i), Role::covariate));
  cols.push_back(ColumnSpec::continuous("y", Role::outcome));
  schema_ = Schema(std::move(cols));

  if (params_.kind == GeneratorKind::piecewise_constant_grid) {
    const std::size_t g = params_.grid;
    auto rng = make_stream(params_.structure_seed, "synth/grid-weights");
    std::uniform_real_distribution<double> w(0.1, 1.0);
    weights_.resize(g * g);
    for (std::size_t i = 0; i < g; ++i) {
      double total = 0.0;
      for (std::size_t j = 0; j < g; ++j) total += weights_[i * g + j] = w(rng);
      for (std::size_t j = 0; j < g; ++j) weights_[i * g + j] /= total;
    }
  }
}

Interval SyntheticDensity::outcome_support() const {
  switch (params_.kind) {
    case GeneratorKind::step_uniform:
      return {0.0, 2.0, true};
    case GeneratorKind::heteroscedastic_gaussian:
      return params_.shape == MeanShape::sine ? Interval{-3.0, 3.0, true} : Interval{-3.0, 6.0, true};
    case GeneratorKind::piecewise_constant_grid:
      return {0.0, 1.0, true};
  }
  return {};
}

Point SyntheticDensity::sample_covariates(Rng& rng) const {
  Point z(schema_.size(), 0.0);
  double lo = 0.0;
  double hi = 1.0;
  if (params_.kind == GeneratorKind::step_uniform) {
    lo = -1.0;
  } else if (params_.kind == GeneratorKind::heteroscedastic_gaussian && params_.shape == MeanShape::sine) {
    hi = kPi;
  }
  std::uniform_real_distribution<double> u(lo, hi);
  for (std::size_t c = 0; c + 1 < z.size(); ++c) z[c] = u(rng);
  return z;
}

double SyntheticDensity::mean(const Point& z) const {
  switch (params_.kind) {
    case GeneratorKind::step_uniform:
      return z[0] < 0.0 ? 0.5 : 1.5;
    case GeneratorKind::heteroscedastic_gaussian: {
      const double m = params_.shape == MeanShape::sine ? std::sin(2.0 * z[0]) : friedman(z);
      const double s = sigma(m);
      const Interval sup = outcome_support();
      const double a = (sup.lo - m) / s;
      const double b = (sup.hi - m) / s;
      const double pdf_a = std::exp(-0.5 * a * a);
      const double pdf_b = std::exp(-0.5 * b * b);
      const double mass = normal_cdf(b) - normal_cdf(a);
      return m + s * (pdf_a - pdf_b) / (std::sqrt(2.0 * kPi) * mass);
    }
    case GeneratorKind::piecewise_constant_grid: {
      const std::size_t g = params_.grid;
      const auto i = std::min(g - 1, static_cast<std::size_t>(z[0] * static_cast<double>(g)));
      double m = 0.0;
      for (std::size_t j = 0; j < g; ++j) {
        m += weights_[i * g + j] * (static_cast<double>(j) + 0.5) / static_cast<double>(g);
      }
      return m;
    }
  }
  return 0.0;
}

double SyntheticDensity::density(const Point& z) const {
  const double y = z[outcome_column()];
  const Interval sup = outcome_support();
  if (!(y >= sup.lo && y <= sup.hi)) return 0.0;
  switch (params_.kind) {
    case GeneratorKind::step_uniform:
      if (z[0] < 0.0) return y < 1.0 ? 1.0 : 0.0;
      return y >= 1.0 ? 1.0 : 0.0;
    case GeneratorKind::heteroscedastic_gaussian: {
      const double m = params_.shape == MeanShape::sine ? std::sin(2.0 * z[0]) : friedman(z);
      const double s = sigma(m);
      const double mass = normal_cdf((sup.hi - m) / s) - normal_cdf((sup.lo - m) / s);
      const double u = (y - m) / s;
      return std::exp(-0.5 * u * u) / (s * std::sqrt(2.0 * kPi) * mass);
    }
    case GeneratorKind::piecewise_constant_grid: {
      const std::size_t g = params_.grid;
      const auto i = std::min(g - 1, static_cast<std::size_t>(z[0] * static_cast<double>(g)));
      const auto j = std::min(g - 1, static_cast<std::size_t>(y * static_cast<double>(g)));
      return static_cast<double>(g) * weights_[i * g + j];
    }
  }
  return 0.0;
}

double SyntheticDensity::sample_outcome(const Point& x, Rng& rng) const {
  switch (params_.kind) {
    case GeneratorKind::step_uniform: {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      return (x[0] < 0.0 ? 0.0 : 1.0) + u(rng);
    }
    case GeneratorKind::heteroscedastic_gaussian: {
      const double m = params_.shape == MeanShape::sine ? std::sin(2.0 * x[0]) : friedman(x);
      std::normal_distribution<double> n(m, sigma(m));
      const Interval sup = outcome_support();
      for (;;) {
        double y = n(rng);
        if (y >= sup.lo && y <= sup.hi) return y;
      }
    }
    case GeneratorKind::piecewise_constant_grid: {
      const std::size_t g = params_.grid;
      const auto i = std::min(g - 1, static_cast<std::size_t>(x[0] * static_cast<double>(g)));
      std::uniform_real_distribution<double> u(0.0, 1.0);
      double r = u(rng);
      std::size_t j = 0;
      while (j + 1 < g && r >= weights_[i * g + j]) r -= weights_[i * g + j++];
      return (static_cast<double>(j) + u(rng)) / static_cast<double>(g);
    }
  }
  return 0.0;
}

Dataset SyntheticDensity::sample(std::size_t n, std::uint64_t seed) const {
  auto rng = make_stream(seed, "synth/sample");
  std::vector<Point> rows;
  rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Point z = sample_covariates(rng);
    z[outcome_column()] = sample_outcome(z, rng);
    rows.push_back(std::move(z));
  }
  return dataset_from_points(schema_, rows);
}

nlohmann::json SyntheticDensity::to_json() const {
  nlohmann::json j;
  j["generator"] = std::string(to_string(params_.kind));
  j["noise_covariates"] = params_.noise_covariates;
  if (params_.kind == GeneratorKind::heteroscedastic_gaussian) {
    j["shape"] = params_.shape == MeanShape::sine ? "sine" : "friedman";
    j["sigma0"] = params_.sigma0;
    j["lambda"] = params_.lambda;
  }
  if (params_.kind == GeneratorKind::piecewise_constant_grid) {
    j["grid"] = params_.grid;
    j["structure_seed"] = params_.structure_seed;
  }
  return j;
}

SyntheticDensity SyntheticDensity::from_json(const nlohmann::json& doc) {
  using detail::get_as;
  SyntheticParams p;
  auto name = get_as<std::string>(doc, "generator", "truth");
  auto kind = parse_generator(name);
  if (!kind) throw ModelLoadError("truth: unknown generator '" + name + "'");
  p.kind = *kind;
  p.noise_covariates = get_as<std::size_t>(doc, "noise_covariates", "truth");
  if (p.kind == GeneratorKind::heteroscedastic_gaussian) {
    auto shape = get_as<std::string>(doc, "shape", "truth");
    if (shape != "sine" && shape != "friedman") throw ModelLoadError("truth/shape: unknown shape '" + shape + "'");
    p.shape = shape == "sine" ? MeanShape::sine : MeanShape::friedman;
    p.sigma0 = get_as<double>(doc, "sigma0", "truth");
    p.lambda = get_as<double>(doc, "lambda", "truth");
  }
  if (p.kind == GeneratorKind::piecewise_constant_grid) {
    p.grid = get_as<std::size_t>(doc, "grid", "truth");
    p.structure_seed = get_as<std::uint64_t>(doc, "structure_seed", "truth");
  }
  return SyntheticDensity(p);
}

}  // namespace partition_tree
