#include <gtest/gtest.h>

#include "partition_tree/data.hpp"
#include "partition_tree/geometry.hpp"

using namespace partition_tree;

namespace {

Dataset outcome_values(const std::vector<double>& ys) {
  Schema s({ColumnSpec::continuous("x", Role::covariate), ColumnSpec::continuous("y", Role::outcome)});
  std::vector<Point> rows;
  for (double y : ys) rows.push_back({0.0, y});
  return dataset_from_points(s, rows);
}

CategorySet subset(std::size_t k, std::vector<std::int32_t> codes) { return CategorySet::of(k, codes); }

}  // namespace

TEST(OutcomeBox, PaddedByFactorTimesRange) {
  auto box = build_outcome_box(outcome_values({1, 3, 7}), 0.1);
  const auto& iv = std::get<Interval>(box.side_for(1));
  EXPECT_NEAR(iv.lo, 0.4, 1e-12);
  EXPECT_NEAR(iv.hi, 7.6, 1e-12);
  EXPECT_TRUE(iv.closed_hi);
  EXPECT_NEAR(box.volume(), 7.2, 1e-12);
}

TEST(OutcomeBox, ZeroFactorIsExactRange) {
  auto box = build_outcome_box(outcome_values({1, 3, 7}), 0.0);
  EXPECT_EQ(std::get<Interval>(box.side_for(1)), (Interval{1.0, 7.0, true}));
  EXPECT_TRUE(box.contains(Point{0.0, 7.0}));
  EXPECT_FALSE(box.contains(Point{0.0, 7.5}));
}

TEST(OutcomeBox, ConstantCoordinateGetsUnitSide) {
  auto box = build_outcome_box(outcome_values({2, 2, 2}), 0.01);
  EXPECT_EQ(std::get<Interval>(box.side_for(1)), (Interval{1.5, 2.5, true}));
}

TEST(OutcomeBox, CategoricalOutcomeKeepsFullAlphabet) {
  Schema s({ColumnSpec::continuous("x", Role::covariate), ColumnSpec::categorical("k", {"a", "b", "c"}, Role::outcome)});
  std::vector<Point> rows{{0, 0}, {1, 0}};
  auto box = build_outcome_box(dataset_from_points(s, rows), 0.1);
  ASSERT_EQ(box.sides.size(), 1u);
  EXPECT_EQ(std::get<CategorySet>(box.sides[0]), CategorySet::full(3));
  EXPECT_EQ(box.volume(), 3.0);
}

TEST(OutcomeBox, JsonRoundTrip) {
  auto d = outcome_values({-1, 0.25, 9});
  auto box = build_outcome_box(d, 0.05);
  EXPECT_EQ(outcome_box_from_json(outcome_box_to_json(box), d.schema()), box);
}

TEST(MuY, ProductOfLengthsAndCounts) {
  std::vector<Role> two(2, Role::outcome);
  Cell a({Interval{0, 2}, subset(3, {0, 1})}, two);
  EXPECT_EQ(mu_y(a), 4.0);
  Cell b({CategorySet::full(3)}, {Role::outcome});
  EXPECT_EQ(mu_y(b), 3.0);
  Cell c({Interval{0, 1}, Interval{2, 5}, subset(4, {2}), subset(4, {0, 3})}, std::vector<Role>(4, Role::outcome));
  EXPECT_EQ(mu_y(c), 6.0);
  // covariate sides do not enter
  Cell d({Interval{0, 100}, Interval{0, 2}}, {Role::covariate, Role::outcome});
  EXPECT_EQ(mu_y(d), 2.0);
  EXPECT_EQ(mu_y_with_side(c, 1, Interval{2, 3}), 2.0);
}

TEST(Diameter, DegenerateCellIsZero) {
  Cell c({Interval{1, 1}, subset(3, {2})}, {Role::covariate, Role::outcome});
  EXPECT_EQ(diameter(c), 0.0);
}

TEST(Diameter, ContinuousNormPlusCategoricalFractions) {
  Cell c({Interval{0, 3}, Interval{1, 5}, subset(3, {0, 2})}, {Role::covariate, Role::outcome, Role::covariate});
  EXPECT_NEAR(diameter(c), 5.0 / 6.0 + 0.5, 1e-15);
}

TEST(Diameter, FullCategoricalSideContributesOne) {
  Cell c({CategorySet::full(5)}, {Role::covariate});
  EXPECT_EQ(diameter(c), 1.0);
  Cell s({CategorySet::full(1)}, {Role::covariate});
  EXPECT_EQ(diameter(s), 0.0);
  Cell u({Interval{}}, {Role::covariate});
  EXPECT_EQ(diameter(u), 1.0);
}

TEST(Containment, HalfOpenAndClosedSides) {
  Interval half{0, 1, false};
  EXPECT_TRUE(half.contains(0.0));
  EXPECT_FALSE(half.contains(1.0));
  Interval closed{0, 1, true};
  EXPECT_TRUE(closed.contains(1.0));
  Cell cell({Interval{}, closed}, {Role::covariate, Role::outcome});
  EXPECT_TRUE(contains(cell, Point{-1e300, 1.0}));
  EXPECT_TRUE(contains_x(cell, Point{5.0, 7.0}));
  EXPECT_FALSE(contains_y(cell, Point{5.0, 7.0}));
}

TEST(CategorySet, SetOperations) {
  auto a = subset(70, {0, 5, 64, 69});
  auto b = subset(70, {5, 69});
  EXPECT_EQ(a.count(), 4u);
  EXPECT_TRUE(b.is_subset_of(a));
  EXPECT_EQ((a & b), b);
  EXPECT_EQ(a.minus(b).members(), (std::vector<std::int32_t>{0, 64}));
  EXPECT_FALSE(a.contains(-1));
  EXPECT_FALSE(a.contains(70));
  a.erase(64);
  EXPECT_FALSE(a.contains(64));
}

TEST(RootCell, UnboundedCovariatesAndBoxOutcomes) {
  auto d = outcome_values({0, 1});
  auto box = build_outcome_box(d, 0.0);
  auto root = root_cell(d.schema(), box);
  EXPECT_EQ(root.interval(0), Interval{});
  EXPECT_EQ(root.interval(1), (Interval{0, 1, true}));
}
