#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "partition_tree/error.hpp"
#include "partition_tree/evaluation.hpp"
#include "partition_tree/forest.hpp"
#include "partition_tree/synthetic.hpp"

using namespace partition_tree;

namespace {

Schema covariates_then_y(std::size_t p) {
  std::vector<ColumnSpec> cols;
  for (std::size_t i = 0; i < p; ++i) cols.push_back(ColumnSpec::continuous("x" + std::to_string(i), Role::covariate));
  cols.push_back(ColumnSpec::continuous("y", Role::outcome));
  return Schema(std::move(cols));
}

FitConfig single_leaf() {
  FitConfig c;
  c.max_splits = 0;
  c.expansion_factor = 0.0;
  return c;
}

// Root split once on `coordinate` at 0.5 with the given gain.
PartitionTree hand_tree(std::size_t p, std::size_t coordinate, Role role, double gain) {
  auto schema = covariates_then_y(p);
  OutcomeBox box{{p}, {Interval{0.0, 1.0, true}}, {0.0}};
  Cell root = root_cell(schema, box);
  SplitSpec split{coordinate, role, ThresholdTest{0.5, false}};
  auto [l, r] = split_cell(root, split);
  std::vector<TreeNode> nodes(3);
  const bool x = role == Role::covariate;
  nodes[0] = TreeNode{root, {10, 10, 1.0}, split, 1, 2, gain, false};
  nodes[1] = TreeNode{l, {5, x ? 5u : 10u, mu_y(l)}, std::nullopt, 0, 0, 0.0, false};
  nodes[2] = TreeNode{r, {5, x ? 5u : 10u, mu_y(r)}, std::nullopt, 0, 0, 0.0, false};
  return PartitionTree(schema, box, FitConfig{}, 10, 1, nodes);
}

// A fitted tree used as the ground truth.
class PlantedTruth final : public TruthDensity {
 public:
  explicit PlantedTruth(const PartitionTree& tree) : tree_(tree) {}
  const Schema& schema() const override { return tree_.schema(); }
  std::size_t outcome_column() const override { return 1; }
  Interval outcome_support() const override { return std::get<Interval>(tree_.outcome_box().sides[0]); }
  Point sample_covariates(Rng& rng) const override {
    return Point{std::uniform_real_distribution<double>(-1.0, 1.0)(rng), 0.0};
  }
  double density(const Point& z) const override { return tree_.normalized_density(z); }

 private:
  const PartitionTree& tree_;
};

double integrate_truth(const SyntheticDensity& truth, Point z) {
  const auto support = truth.outcome_support();
  const std::size_t n = 200000;
  const double h = support.length() / static_cast<double>(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    z[truth.outcome_column()] = support.lo + (static_cast<double>(i) + 0.5) * h;
    total += truth.density(z) * h;
  }
  return total;
}

}  // namespace

TEST(LogLoss, UniformSingleLeafIsLogVolume) {
  std::vector<Point> rows{{0, 0}, {1, 4}, {2, 1}, {3, 3}};
  auto data = dataset_from_points(covariates_then_y(1), rows);
  auto t = fit_tree(data, single_leaf());
  auto r = log_loss(t, data);
  EXPECT_NEAR(r.value, std::log(4.0), 1e-12);
  EXPECT_EQ(r.n, 4u);
  EXPECT_EQ(r.floored_rows, 0u);
}

TEST(LogLoss, UnitDensityGivesZero) {
  std::vector<Point> rows{{0, 0}, {1, 1}, {2, 0.5}};
  auto data = dataset_from_points(covariates_then_y(1), rows);
  EXPECT_NEAR(log_loss(fit_tree(data, single_leaf()), data).value, 0.0, 1e-15);
}

TEST(LogLoss, MatchesBinRecomputation) {
  auto truth = SyntheticDensity(SyntheticParams{});
  auto train = truth.sample(1000, 1);
  auto test = truth.sample(300, 2);
  auto t = fit_tree(train, FitConfig{});
  double direct = 0.0;
  std::size_t floored = 0;
  for (std::size_t i = 0; i < test.n_rows(); ++i) {
    auto z = test.row(i);
    auto pd = t.predictive_density(z);
    auto b = pd.find_bin(z);
    const double f = b == PredictiveDensity::npos ? 0.0 : pd.normalized_value(pd.bins[b]);
    if (f < t.density_floor()) ++floored;
    direct -= std::log(std::max(f, t.density_floor()));
  }
  auto r = log_loss(t, test);
  EXPECT_NEAR(r.value, direct / 300.0, 1e-12);
  EXPECT_EQ(r.floored_rows, floored);
}

TEST(LogLoss, CountsFlooredRowsAndRejectsEmpty) {
  std::vector<Point> rows{{0, 0}, {1, 1}};
  auto data = dataset_from_points(covariates_then_y(1), rows);
  auto t = fit_tree(data, single_leaf());
  auto outside = dataset_from_points(covariates_then_y(1), std::vector<Point>{{0, 5}, {0, 0.5}});
  auto r = log_loss(t, outside);
  EXPECT_EQ(r.floored_rows, 1u);
  EXPECT_NEAR(r.value, -std::log(t.density_floor()) / 2.0, 1e-9);
  EXPECT_ANY_THROW(log_loss(t, data.select_rows(std::vector<std::size_t>{})));
}

TEST(Rmse, ConstantPredictorGivesPopulationStd) {
  std::vector<Point> rows;
  for (int i = 0; i < 5; ++i) rows.push_back({static_cast<double>(i), static_cast<double>(i)});
  auto data = dataset_from_points(covariates_then_y(1), rows);
  auto t = fit_tree(data, single_leaf());  // predicts the box midpoint 2 = mean(y)
  EXPECT_NEAR(rmse(t, data), std::sqrt(2.0), 1e-12);
}

TEST(Rmse, MatchesHandLoop) {
  auto truth = SyntheticDensity(SyntheticParams{});
  auto train = truth.sample(500, 3);
  auto test = truth.sample(10, 4);
  auto t = fit_tree(train, FitConfig{});
  double ss = 0.0;
  for (std::size_t i = 0; i < 10; ++i) ss += std::pow(t.point_predict(test.row(i))[1] - test.value(i, 1), 2);
  EXPECT_NEAR(rmse(t, test), std::sqrt(ss / 10.0), 1e-12);
}

TEST(Accuracy, SeparableClasses) {
  Schema s({ColumnSpec::continuous("x", Role::covariate), ColumnSpec::categorical("k", {"a", "b"}, Role::outcome)});
  auto rng = make_stream(5, "test/acc");
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<Point> rows;
  for (int i = 0; i < 600; ++i) {
    const double x = u(rng);
    rows.push_back({x, x < 0.2 ? 0.0 : 1.0});
  }
  auto data = dataset_from_points(s, rows);
  auto fitted = fit_tree(data, FitConfig{});
  EXPECT_GE(accuracy(fitted, data), 0.95);
  EXPECT_THROW(rmse(fitted, data), UnsupportedModeError);
  auto reg = dataset_from_points(covariates_then_y(1), std::vector<Point>{{0, 0}, {1, 1}});
  EXPECT_THROW(accuracy(fit_tree(reg, FitConfig{}), reg), UnsupportedModeError);
}

TEST(Accuracy, PerfectPredictor) {
  Schema s({ColumnSpec::continuous("x", Role::covariate), ColumnSpec::categorical("k", {"a", "b"}, Role::outcome)});
  std::vector<Point> rows;
  // balanced classes would give every root split zero gain
  for (int i = 0; i < 40; ++i) rows.push_back({static_cast<double>(i), i < 12 ? 0.0 : 1.0});
  auto data = dataset_from_points(s, rows);
  // the clean cut leaves a child with no joint samples of its class
  FitConfig c;
  c.feasibility.min_samples_leaf = 0;
  EXPECT_EQ(accuracy(fit_tree(data, c), data), 1.0);
}

TEST(Importance, SingleXSplit) {
  auto t = hand_tree(5, 3, Role::covariate, 0.4);
  auto iv = feature_importance(t);
  ASSERT_TRUE(iv.has_x_splits);
  EXPECT_EQ(iv.values, (std::vector<double>{0, 0, 0, 1, 0}));
}

TEST(Importance, OnlyYSplitsIsFlaggedZero) {
  auto t = hand_tree(3, 3, Role::outcome, 0.4);
  auto iv = feature_importance(t);
  EXPECT_FALSE(iv.has_x_splits);
  EXPECT_EQ(iv.values, (std::vector<double>{0, 0, 0}));
  auto all = feature_importance(t, ImportanceDenominator::all_nodes);
  EXPECT_EQ(all.values, (std::vector<double>{0, 0, 0}));
}

TEST(Importance, InformativeCovariateDominates) {
  SyntheticParams p;
  p.noise_covariates = 4;
  auto data = SyntheticDensity(p).sample(5000, 6);
  FitConfig c;
  c.max_splits = 40;
  auto t = fit_tree(data, c);
  auto iv = feature_importance(t);
  double sum = 0.0;
  for (double v : iv.values) sum += v;
  EXPECT_GT(iv.values[0], 0.8);
  EXPECT_NEAR(sum, 1.0, 1e-12);

  ForestConfig fc;
  fc.n_trees = 5;
  fc.base = c;
  auto forest = fit_forest(data, fc, 2);
  auto fv = feature_importance(forest);
  double fsum = 0.0;
  for (double v : fv.values) fsum += v;
  EXPECT_NEAR(fsum, 1.0, 1e-12);
  const ConditionalDensityModel& generic = forest;
  EXPECT_EQ(feature_importance(generic).values, fv.values);
}

TEST(L1Error, PlantedTruthIsZero) {
  auto data = SyntheticDensity(SyntheticParams{}).sample(1500, 7);
  auto t = fit_tree(data, FitConfig{});
  PlantedTruth truth(t);
  EXPECT_NEAR(l1_error(t, truth, 200, 1), 0.0, 1e-12);
}

TEST(L1Error, DecreasesWithSampleSize) {
  SyntheticDensity truth(SyntheticParams{});
  FitConfig c;
  c.exploration_fraction = 0.1;
  const double small = l1_error(fit_tree(truth.sample(500, 8), c), truth, 1000, 2);
  const double large = l1_error(fit_tree(truth.sample(8000, 9), c), truth, 1000, 2);
  EXPECT_LT(large, small);
}

TEST(L1Error, NormalizationBound) {
  for (int i = 0; i < 5; ++i) {
    SyntheticParams p;
    p.kind = static_cast<GeneratorKind>(i % 3);
    SyntheticDensity truth(p);
    auto t = fit_tree(truth.sample(400, 10 + static_cast<std::uint64_t>(i)), FitConfig{});
    EXPECT_LE(l1_error(t, truth, 200, 3, true), 6.0 * l1_error(t, truth, 200, 3, false) + 1e-6);
  }
}

TEST(Synthetic, EvaluatorIntegratesToOne) {
  auto rng = make_stream(11, "test/synth");
  std::vector<SyntheticParams> cases(4);
  cases[1].kind = GeneratorKind::heteroscedastic_gaussian;
  cases[2].kind = GeneratorKind::heteroscedastic_gaussian;
  cases[2].shape = MeanShape::friedman;
  cases[3].kind = GeneratorKind::piecewise_constant_grid;
  for (const auto& p : cases) {
    SyntheticDensity truth(p);
    for (int q = 0; q < 5; ++q) EXPECT_NEAR(integrate_truth(truth, truth.sample_covariates(rng)), 1.0, 1e-6);
  }
}

TEST(Synthetic, SamplingIsDeterministicAndSerializable) {
  SyntheticParams p;
  p.kind = GeneratorKind::piecewise_constant_grid;
  p.noise_covariates = 2;
  SyntheticDensity truth(p);
  EXPECT_EQ(truth.sample(100, 1), truth.sample(100, 1));
  EXPECT_NE(truth.sample(100, 1), truth.sample(100, 2));
  auto back = SyntheticDensity::from_json(truth.to_json());
  EXPECT_EQ(back.sample(50, 3), truth.sample(50, 3));
  EXPECT_EQ(truth.schema().covariates().size(), 3u);
  auto d = truth.sample(200, 4);
  for (std::size_t i = 0; i < d.n_rows(); ++i) EXPECT_GT(truth.density(d.row(i)), 0.0);
}

TEST(CrossValidation, FoldsPartitionRows) {
  auto folds = kfold_indices(103, 5, 7);
  ASSERT_EQ(folds.size(), 5u);
  std::set<std::size_t> seen;
  for (const auto& f : folds) {
    EXPECT_GE(f.size(), 20u);
    EXPECT_LE(f.size(), 21u);
    seen.insert(f.begin(), f.end());
  }
  EXPECT_EQ(seen.size(), 103u);
  EXPECT_EQ(folds, kfold_indices(103, 5, 7));
}

TEST(CrossValidation, AveragesFoldMetrics) {
  auto data = SyntheticDensity(SyntheticParams{}).sample(500, 12);
  auto factory = [](const Dataset& d) -> std::unique_ptr<ConditionalDensityModel> {
    return std::make_unique<PartitionTree>(fit_tree(d, FitConfig{}));
  };
  auto res = cross_validate(data, 5, 1, factory, {Metric::logloss, Metric::rmse});
  ASSERT_EQ(res.size(), 2u);
  EXPECT_EQ(res[0].n, 500u);
  auto folds = kfold_indices(500, 5, 1);
  double mean = 0.0;
  for (std::size_t k = 0; k < 5; ++k) {
    std::vector<std::size_t> train;
    for (std::size_t j = 0; j < 5; ++j) {
      if (j != k) train.insert(train.end(), folds[j].begin(), folds[j].end());
    }
    auto t = fit_tree(data.select_rows(train), FitConfig{});
    mean += log_loss(t, data.select_rows(folds[k])).value / 5.0;
  }
  EXPECT_NEAR(res[0].value, mean, 1e-12);
}

TEST(Metrics, ParsingAndJson) {
  EXPECT_EQ(parse_metric("logloss"), Metric::logloss);
  EXPECT_EQ(parse_metric("accuracy"), Metric::accuracy);
  EXPECT_FALSE(parse_metric("auc").has_value());
  nlohmann::json cfg{{"a", 1}};
  EXPECT_EQ(config_digest(cfg), config_digest(nlohmann::json{{"a", 1}}));
  EXPECT_NE(config_digest(cfg), config_digest(nlohmann::json{{"a", 2}}));
  auto j = metric_to_json(MetricResult{Metric::rmse, 0.5, 10, 0}, 3, "abc");
  EXPECT_EQ(j["metric"], "rmse");
  EXPECT_EQ(j["value"], 0.5);
  EXPECT_EQ(j["n"], 10);
  EXPECT_EQ(j["seed"], 3);
  EXPECT_EQ(j["config_digest"], "abc");
}

TEST(LogLoss, TrainLossNonIncreasingInBudget) {
  SyntheticParams p;
  p.kind = GeneratorKind::heteroscedastic_gaussian;
  auto data = SyntheticDensity(p).sample(1500, 13);
  double prev = INFINITY;
  for (std::size_t k = 0; k <= 60; k += 5) {
    FitConfig c;
    c.max_splits = k;
    c.seed = 2;
    const double loss = log_loss(fit_tree(data, c), data).value;
    EXPECT_LE(loss, prev + 1e-12) << "k=" << k;
    prev = loss;
  }
}

TEST(L1Error, InvariantUnderRoundTrip) {
  SyntheticDensity truth(SyntheticParams{});
  auto t = fit_tree(truth.sample(1000, 14), FitConfig{});
  auto back = model_from_json(nlohmann::json::parse(t.to_json().dump()));
  EXPECT_EQ(l1_error(*back, truth, 300, 5), l1_error(t, truth, 300, 5));
}
