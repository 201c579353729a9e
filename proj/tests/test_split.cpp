#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "partition_tree/error.hpp"
#include "partition_tree/split.hpp"

using namespace partition_tree;

namespace {

Schema two_d() {
  return Schema({ColumnSpec::continuous("x", Role::covariate), ColumnSpec::continuous("y", Role::outcome)});
}

struct FullLeaf {
  Dataset data;
  OutcomeBox box;
  Cell cell;
  std::vector<RowIndex> rows;

  FullLeaf(Dataset d, double factor) : data(std::move(d)), box(build_outcome_box(data, factor)), cell(root_cell(data.schema(), box)) {
    for (std::size_t r = 0; r < data.n_rows(); ++r) rows.push_back(static_cast<RowIndex>(r));
  }
  LeafView view() const { return LeafView{data, cell, rows, rows, CellStats{rows.size(), rows.size(), mu_y(cell)}}; }
};

}  // namespace

TEST(Gain, ProportionalXSplitIsZero) {
  EXPECT_EQ(empirical_gain({4, 8, 2.0}, {2, 4, 2.0}, {2, 4, 2.0}, 8), 0.0);
}

TEST(Gain, YSplitHandValue) {
  const double want = 0.75 * std::log(0.75) + 0.25 * std::log(0.25) - std::log(0.5);
  const double got = empirical_gain({4, 4, 2.0}, {3, 4, 1.0}, {1, 4, 1.0}, 4);
  EXPECT_NEAR(got, want, 1e-15);
  EXPECT_NEAR(got, 0.13082, 1e-5);
  EXPECT_NEAR(got, oracle::gain({4, 4, 2.0}, {3, 4, 1.0}, {1, 4, 1.0}, 4), 1e-15);
}

TEST(Gain, EmptyChildContributesNothing) {
  const double g = empirical_gain({5, 10, 2.0}, {0, 10, 1.0}, {5, 10, 1.0}, 20);
  EXPECT_TRUE(std::isfinite(g));
  EXPECT_NEAR(g, oracle::gain({5, 10, 2.0}, {0, 10, 1.0}, {5, 10, 1.0}, 20), 1e-15);
  EXPECT_NEAR(g, 0.25 * std::log(2.0), 1e-15);
}

TEST(Gain, InconsistentCountsThrow) {
  EXPECT_THROW(empirical_gain({5, 10, 1.0}, {2, 5, 1.0}, {2, 5, 1.0}, 10), ConsistencyError);
}

TEST(Gain, RatioFormMatchesDifferenceForm) {
  auto rng = make_stream(1, "test/gain");
  std::uniform_int_distribution<std::size_t> cnt(1, 50);
  std::uniform_real_distribution<double> f(0.05, 0.95);
  for (int i = 0; i < 2000; ++i) {
    const std::size_t nl = cnt(rng);
    const std::size_t nr = cnt(rng);
    const std::size_t nx = nl + nr + cnt(rng);
    const double mu = 3.0;
    const double a = f(rng);
    CellStats p{nl + nr, nx, mu};
    CellStats l{nl, nx, mu * a};
    CellStats r{nr, nx, mu * (1 - a)};
    EXPECT_NEAR(empirical_gain(p, l, r, 500), oracle::gain(p, l, r, 500), 1e-13);
    EXPECT_GE(empirical_gain(p, l, r, 500), -1e-12);
  }
}

TEST(SplitSpec, RoutingAndCellSplit) {
  SplitSpec t{0, Role::covariate, ThresholdTest{2.0, false}};
  EXPECT_TRUE(t.goes_left(1.999));
  EXPECT_FALSE(t.goes_left(2.0));
  SplitSpec inc{0, Role::covariate, ThresholdTest{2.0, true}};
  EXPECT_TRUE(inc.goes_left(2.0));

  Cell cell({Interval{0, 4, true}, CategorySet::full(3)}, {Role::outcome, Role::covariate});
  auto [l, r] = split_cell(cell, t);
  EXPECT_EQ(l.interval(0), (Interval{0, 2, false}));
  EXPECT_EQ(r.interval(0), (Interval{2, 4, true}));
  auto [li, ri] = split_cell(cell, inc);
  EXPECT_EQ(li.interval(0), (Interval{0, 2, true}));
  EXPECT_EQ(ri.interval(0).lo, std::nextafter(2.0, kInfinity));

  SplitSpec s{1, Role::covariate, SubsetTest{CategorySet::of(3, std::vector<std::int32_t>{1})}};
  auto [ls, rs] = split_cell(cell, s);
  EXPECT_EQ(ls.categories(1).members(), std::vector<std::int32_t>{1});
  EXPECT_EQ(rs.categories(1).members(), (std::vector<std::int32_t>{0, 2}));
}

TEST(ContinuousScan, WorkedExampleCounts) {
  auto data = dataset_from_points(two_d(), std::vector<Point>{{1, 5}, {2, .5}, {4, .5}, {7, 5}, {9, .5}, {10, .5}});
  auto box = build_outcome_box(data, 0.0);
  Cell cell = root_cell(data.schema(), box);
  cell.set_side(1, Interval{0.0, 1.0, false});
  std::vector<RowIndex> sx{0, 1, 2, 3, 4, 5};
  std::vector<RowIndex> sxy{1, 2, 4, 5};
  LeafView leaf{data, cell, sx, sxy, CellStats{4, 6, 1.0}};
  std::vector<double> xb;
  std::vector<double> yb;
  auto in = continuous_scan_input(leaf, 0, box, FeasibilityConfig{}, xb, yb);
  EXPECT_EQ(midpoint_candidates(in.x_values), (std::vector<double>{1.5, 3, 5.5, 8, 9.5}));
  auto evals = scan_continuous(in, FeasibilityConfig{}, 6);
  ASSERT_EQ(evals.size(), 5u);
  EXPECT_EQ(evals[2].threshold, 5.5);
  EXPECT_EQ(evals[2].left, (CellStats{2, 3, 1.0}));
  EXPECT_EQ(evals[2].right, (CellStats{2, 3, 1.0}));
  for (const auto& e : evals) EXPECT_NEAR(e.gain, oracle::gain(leaf.stats, e.left, e.right, 6), 1e-15);
}

TEST(ContinuousScan, MidpointsReproduceSplit) {
  // neighbours one ulp apart: the plain midpoint rounds onto a value
  const double a = 1.0;
  const double b = std::nextafter(1.0, 2.0);
  std::vector<double> v{a, b};
  auto c = midpoint_candidates(v);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_TRUE(a < c[0]);
  EXPECT_FALSE(b < c[0]);
}

TEST(ContinuousScan, SingleDistinctValueHasNoSplit) {
  FullLeaf leaf(dataset_from_points(two_d(), std::vector<Point>{{3, 1}, {3, 2}, {3, 4}}), 0.01);
  std::vector<double> xb;
  std::vector<double> yb;
  auto in = continuous_scan_input(leaf.view(), 0, leaf.box, FeasibilityConfig{}, xb, yb);
  EXPECT_FALSE(best_continuous_split(in, FeasibilityConfig{}, 3).has_value());
}

TEST(ContinuousScan, MatchesRecountOracleOnRandomLeaves) {
  auto rng = make_stream(2, "test/scan");
  for (int i = 0; i < 100; ++i) {
    oracle::MixedLayout layout;
    layout.cont_y = 2;
    auto schema = oracle::mixed_schema(layout, rng);
    auto data = oracle::mixed_dataset(schema, 60, rng);
    auto box = build_outcome_box(data, 0.01);
    auto leaf = oracle::random_leaf(data, box, rng);
    if (leaf.stats.n_xy == 0) continue;
    FeasibilityConfig feas;
    feas.min_samples_leaf = static_cast<std::size_t>(i % 3);
    std::vector<double> xb;
    std::vector<double> yb;
    for (std::size_t c = 0; c < schema.size(); ++c) {
      if (!schema.column(c).is_continuous()) continue;
      auto got = best_continuous_split(continuous_scan_input(leaf.view(data), c, box, feas, xb, yb), feas, 60);
      auto want = oracle::best_threshold(leaf.view(data), c, box, feas, 60);
      ASSERT_EQ(got.has_value(), want.has_value());
      if (!got) continue;
      EXPECT_NEAR(got->gain, want->gain, 1e-12);
      EXPECT_EQ(std::get<ThresholdTest>(got->split.test).threshold, want->threshold);
      EXPECT_EQ(got->left.n_xy, want->left.n_xy);
      EXPECT_EQ(got->left.n_x, want->left.n_x);
    }
  }
}

TEST(ContinuousScan, FeasibilityBoundsRespected) {
  std::vector<Point> rows;
  for (int i = 0; i < 40; ++i) rows.push_back({static_cast<double>(i), static_cast<double>(i % 7)});
  FullLeaf leaf(dataset_from_points(two_d(), rows), 0.0);
  FeasibilityConfig feas;
  feas.min_samples_leaf = 10;
  feas.min_target_volume = 0.3;
  std::vector<double> xb;
  std::vector<double> yb;
  for (std::size_t c : {0u, 1u}) {
    auto in = continuous_scan_input(leaf.view(), c, leaf.box, feas, xb, yb);
    for (const auto& e : scan_continuous(in, feas, 40)) {
      if (!e.feasible) continue;
      EXPECT_GE(e.left.n_xy, 10u);
      EXPECT_GE(e.right.n_xy, 10u);
      if (c == 1) {
        EXPECT_GE(e.threshold - 0.0, 0.3 * 6.0 - 1e-12);
        EXPECT_GE(6.0 - e.threshold, 0.3 * 6.0 - 1e-12);
      }
    }
  }
}

TEST(CategoricalScan, PrefixOfSortedRatios) {
  CategoricalScanInput in;
  in.coordinate = 0;
  in.role = Role::covariate;
  in.stats = {{0, 3, 4.0}, {1, 1, 4.0}, {2, 2, 4.0}};
  in.side = CategorySet::full(3);
  in.parent = CellStats{6, 12, 1.0};
  FeasibilityConfig feas;
  feas.min_samples_leaf = 0;
  auto got = best_categorical_split(in, feas, 12);
  ASSERT_TRUE(got.has_value());
  EXPECT_NEAR(got->gain, *oracle::best_bipartition(in, 12), 1e-15);
  // ratios 0.75, 0.25, 0.5: prefixes are {c2} and {c2, c3}
  auto left = std::get<SubsetTest>(got->split.test).left.members();
  EXPECT_TRUE(left == std::vector<std::int32_t>{1} || left == (std::vector<std::int32_t>{1, 2}));
}

TEST(CategoricalScan, EqualRatiosGiveZeroGain) {
  CategoricalScanInput in;
  in.role = Role::covariate;
  in.stats = {{0, 2, 4.0}, {1, 1, 2.0}, {2, 3, 6.0}};
  in.side = CategorySet::full(3);
  in.parent = CellStats{6, 12, 1.0};
  auto got = best_categorical_split(in, FeasibilityConfig{}, 12);
  if (got) {
    EXPECT_NEAR(got->gain, 0.0, 1e-15);
  }
}

TEST(CategoricalScan, BinaryAlphabetHasOneCut) {
  CategoricalScanInput in;
  in.role = Role::outcome;
  in.stats = {{0, 5, 1.0}, {1, 1, 1.0}};
  in.side = CategorySet::full(2);
  in.parent = CellStats{6, 6, 2.0};
  auto got = best_categorical_split(in, FeasibilityConfig{}, 6);
  ASSERT_TRUE(got.has_value());
  EXPECT_NEAR(got->gain, oracle::gain(in.parent, {5, 6, 1.0}, {1, 6, 1.0}, 6), 1e-15);
}

TEST(CategoricalScan, ZeroMeasureCategoriesFollowLeft) {
  CategoricalScanInput in;
  in.role = Role::covariate;
  in.stats = {{0, 3, 3.0}, {1, 0, 0.0}, {2, 0, 5.0}};
  in.side = CategorySet::full(3);
  in.parent = CellStats{3, 8, 1.0};
  auto got = best_categorical_split(in, FeasibilityConfig{0, 1, 0.0}, 8);
  ASSERT_TRUE(got.has_value());
  EXPECT_TRUE(std::get<SubsetTest>(got->split.test).left.contains(1));
}

TEST(CategoricalScan, MatchesExhaustiveBipartitions) {
  auto rng = make_stream(3, "test/prefix");
  FeasibilityConfig feas;
  feas.min_samples_leaf = 0;
  for (int i = 0; i < 100; ++i) {
    oracle::MixedLayout layout;
    layout.cat_x = 1;
    layout.cat_y = 1;
    layout.max_alphabet = 8;
    auto schema = oracle::mixed_schema(layout, rng);
    auto data = oracle::mixed_dataset(schema, 80, rng);
    auto box = build_outcome_box(data, 0.01);
    auto leaf = oracle::random_leaf(data, box, rng);
    if (leaf.stats.n_xy == 0) continue;
    for (std::size_t c = 0; c < schema.size(); ++c) {
      if (!schema.column(c).is_categorical()) continue;
      auto in = categorical_scan_input(leaf.view(data), c);
      auto got = best_categorical_split(in, feas, 80);
      auto want = oracle::best_bipartition(in, 80);
      ASSERT_EQ(got.has_value(), want.has_value());
      if (got) {
        EXPECT_NEAR(got->gain, *want, 1e-12);
      }
    }
  }
}

TEST(BestSplit, ConstantLeafHasNoSplit) {
  FullLeaf leaf(dataset_from_points(two_d(), std::vector<Point>{{1, 2}, {1, 2}, {1, 2}}), 0.01);
  EXPECT_FALSE(best_split(leaf.view(), FeasibilityConfig{}, leaf.box, nullptr, 3).has_value());
}

TEST(BestSplit, MaskLimitsCovariatesOnly) {
  Schema s({ColumnSpec::continuous("x0", Role::covariate), ColumnSpec::continuous("x1", Role::covariate),
            ColumnSpec::continuous("y", Role::outcome)});
  std::vector<Point> rows;
  auto rng = make_stream(4, "test/mask");
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 200; ++i) {
    const double x0 = u(rng);
    rows.push_back({x0, u(rng), x0 < 0.5 ? 0.2 * u(rng) : 0.8 + 0.2 * u(rng)});
  }
  FullLeaf leaf(dataset_from_points(s, rows), 0.01);
  auto unmasked = best_split(leaf.view(), FeasibilityConfig{}, leaf.box, nullptr, 200);
  ASSERT_TRUE(unmasked.has_value());
  std::vector<std::size_t> mask{1};
  auto masked = best_split(leaf.view(), FeasibilityConfig{}, leaf.box, &mask, 200);
  ASSERT_TRUE(masked.has_value());
  EXPECT_NE(masked->split.coordinate, 0u);
  if (masked->split.role == Role::covariate) {
    EXPECT_EQ(masked->split.coordinate, 1u);
  }
}

TEST(BestSplit, MatchesBruteForceOverCoordinates) {
  auto rng = make_stream(5, "test/best");
  std::uniform_real_distribution<double> u(-1, 1);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<Point> rows;
    for (int i = 0; i < 100; ++i) {
      const double x = u(rng);
      rows.push_back({x, x + 0.3 * u(rng)});
    }
    FullLeaf leaf(dataset_from_points(two_d(), rows), 0.01);
    auto got = best_split(leaf.view(), FeasibilityConfig{}, leaf.box, nullptr, 100);
    double want = -INFINITY;
    for (std::size_t c : {0u, 1u}) {
      auto r = oracle::best_threshold(leaf.view(), c, leaf.box, FeasibilityConfig{}, 100);
      if (r) want = std::max(want, r->gain);
    }
    ASSERT_TRUE(got.has_value());
    EXPECT_NEAR(got->gain, want, 1e-12);
  }
}
