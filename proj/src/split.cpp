#include "partition_tree/split.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "partition_tree/error.hpp"

namespace partition_tree {

bool SplitSpec::goes_left(double value) const {
  if (const auto* th = std::get_if<ThresholdTest>(&test)) {
    return th->inclusive ? value <= th->threshold : value < th->threshold;
  }
  return std::get<SubsetTest>(test).left.contains(static_cast<std::int32_t>(std::lround(value)));
}

std::pair<Side, Side> split_side(const Side& parent, const SplitSpec& split) {
  if (const auto* th = std::get_if<ThresholdTest>(&split.test)) {
    const auto& iv = std::get<Interval>(parent);
    if (th->inclusive) {
      return {Interval{iv.lo, th->threshold, true},
              Interval{std::nextafter(th->threshold, kInfinity), iv.hi, iv.closed_hi}};
    }
    return {Interval{iv.lo, th->threshold, false}, Interval{th->threshold, iv.hi, iv.closed_hi}};
  }
  const auto& cats = std::get<CategorySet>(parent);
  const auto& left = std::get<SubsetTest>(split.test).left;
  return {cats & left, cats.minus(left)};
}

std::pair<Cell, Cell> split_cell(const Cell& parent, const SplitSpec& split) {
  auto [l, r] = split_side(parent.side(split.coordinate), split);
  Cell left = parent;
  Cell right = parent;
  left.set_side(split.coordinate, std::move(l));
  right.set_side(split.coordinate, std::move(r));
  return {std::move(left), std::move(right)};
}

void FeasibilityConfig::validate() const {
  if (!(min_target_volume >= 0.0 && min_target_volume < 1.0)) {
    throw ConfigError("min_target_volume must lie in [0, 1)");
  }
}

namespace {

double density_ratio(const CellStats& s) {
  return static_cast<double>(s.n_xy) / (static_cast<double>(s.n_x) * s.mu_y);
}

}  // namespace

double empirical_gain(const CellStats& parent, const CellStats& left, const CellStats& right,
                      std::size_t n_total) {
  if (left.n_xy + right.n_xy != parent.n_xy) {
    throw ConsistencyError("child joint counts do not add up to the parent's");
  }
  if (parent.n_xy == 0) return 0.0;
  if (parent.n_x == 0) throw ConsistencyError("parent cell has n_x = 0 but joint samples");
  const double n = static_cast<double>(n_total);
  const double parent_ratio = density_ratio(parent);
  double gain = 0.0;
  for (const CellStats* child : {&left, &right}) {
    if (child->n_xy == 0) continue;
    gain += static_cast<double>(child->n_xy) / n * std::log(density_ratio(*child) / parent_ratio);
  }
  return gain;
}

bool children_feasible(const CellStats& left, const CellStats& right, const FeasibilityConfig& feas) {
  const std::size_t min_x = std::max<std::size_t>(1, feas.min_samples_leaf_x);
  return left.n_x >= min_x && right.n_x >= min_x && left.n_xy >= feas.min_samples_leaf &&
         right.n_xy >= feas.min_samples_leaf && left.mu_y > 0.0 && right.mu_y > 0.0;
}

std::vector<double> midpoint_candidates(std::span<const double> sorted) {
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    double a = sorted[i];
    double b = sorted[i + 1];
    if (!(b > a)) continue;
    double t = std::midpoint(a, b);
    if (!(t > a)) t = b;
    out.push_back(t);
  }
  return out;
}

namespace {

// Single increasing pass over the candidate thresholds; `visit` sees every
// candidate with its child statistics.
template <typename Visit>
void scan_continuous_impl(const ContinuousScanInput& in, const FeasibilityConfig& feas, std::size_t n_total,
                          Visit&& visit) {
  const bool is_x = in.role == Role::covariate;
  std::span<const double> source = is_x ? in.x_values : in.xy_values;
  const std::size_t n_x = in.parent.n_x;
  const std::size_t n_xy = in.parent.n_xy;
  if (is_x && in.x_values.size() != n_x) throw ConsistencyError("covariate member count differs from n_x");
  if (in.xy_values.size() != n_xy) throw ConsistencyError("joint member count differs from n_xy");

  std::size_t px = 0;
  std::size_t pxy = 0;
  for (std::size_t i = 0; i + 1 < source.size(); ++i) {
    const double a = source[i];
    const double b = source[i + 1];
    if (!(b > a)) continue;
    double t = std::midpoint(a, b);
    if (!(t > a)) t = b;
    if (!(t > in.side.lo && t < in.side.hi)) continue;

    CandidateEval ev;
    ev.threshold = t;
    while (pxy < in.xy_values.size() && in.xy_values[pxy] < t) ++pxy;
    ev.left.n_xy = pxy;
    ev.right.n_xy = n_xy - pxy;
    bool length_ok = true;
    if (is_x) {
      while (px < in.x_values.size() && in.x_values[px] < t) ++px;
      ev.left.n_x = px;
      ev.right.n_x = n_x - px;
      ev.left.mu_y = in.parent.mu_y;
      ev.right.mu_y = in.parent.mu_y;
    } else {
      ev.left.n_x = n_x;
      ev.right.n_x = n_x;
      const double left_len = t - in.side.lo;
      const double right_len = in.side.hi - t;
      ev.left.mu_y = in.mu_other * left_len;
      ev.right.mu_y = in.mu_other * right_len;
      length_ok = left_len >= in.min_child_length && right_len >= in.min_child_length;
    }
    ev.gain = empirical_gain(in.parent, ev.left, ev.right, n_total);
    ev.feasible = length_ok && children_feasible(ev.left, ev.right, feas);
    visit(ev);
  }
}

}  // namespace

std::vector<CandidateEval> scan_continuous(const ContinuousScanInput& in, const FeasibilityConfig& feas,
                                           std::size_t n_total) {
  std::vector<CandidateEval> out;
  scan_continuous_impl(in, feas, n_total, [&](const CandidateEval& ev) { out.push_back(ev); });
  return out;
}

std::optional<GainRecord> best_continuous_split(const ContinuousScanInput& in, const FeasibilityConfig& feas,
                                                std::size_t n_total) {
  std::optional<GainRecord> best;
  scan_continuous_impl(in, feas, n_total, [&](const CandidateEval& ev) {
    if (!ev.feasible) return;
    if (!best || ev.gain > best->gain) {
      best = GainRecord{SplitSpec{in.coordinate, in.role, ThresholdTest{ev.threshold, false}}, ev.gain, ev.left,
                        ev.right};
    }
  });
  return best;
}

std::optional<GainRecord> best_categorical_split(const CategoricalScanInput& in, const FeasibilityConfig& feas,
                                                 std::size_t n_total) {
  const bool is_x = in.role == Role::covariate;
  std::vector<CategoryStat> present;
  CategorySet zero_b(in.side.alphabet_size());
  for (const auto& s : in.stats) {
    if (s.b > 0.0) {
      present.push_back(s);
    } else {
      zero_b.insert(s.code);
    }
  }
  if (present.size() < 2) return std::nullopt;

  std::sort(present.begin(), present.end(), [](const CategoryStat& l, const CategoryStat& r) {
    const double rl = static_cast<double>(l.a) / l.b;
    const double rr = static_cast<double>(r.a) / r.b;
    if (rl != rr) return rl < rr;
    return l.code < r.code;
  });

  const std::size_t k = present.size();
  // suffix sums of b so the right child's volume is not a difference
  std::vector<double> suffix_b(k + 1, 0.0);
  for (std::size_t i = k; i-- > 0;) suffix_b[i] = suffix_b[i + 1] + present[i].b;

  std::optional<GainRecord> best;
  std::size_t best_cut = 0;
  std::size_t a_sum = 0;
  double b_sum = 0.0;
  for (std::size_t cut = 1; cut < k; ++cut) {
    a_sum += present[cut - 1].a;
    b_sum += present[cut - 1].b;
    CellStats left;
    CellStats right;
    left.n_xy = a_sum;
    right.n_xy = in.parent.n_xy - a_sum;
    if (is_x) {
      left.n_x = static_cast<std::size_t>(std::llround(b_sum));
      right.n_x = static_cast<std::size_t>(std::llround(suffix_b[cut]));
      left.mu_y = in.parent.mu_y;
      right.mu_y = in.parent.mu_y;
    } else {
      left.n_x = in.parent.n_x;
      right.n_x = in.parent.n_x;
      left.mu_y = b_sum;
      right.mu_y = suffix_b[cut];
    }
    if (!children_feasible(left, right, feas)) continue;
    double gain = empirical_gain(in.parent, left, right, n_total);
    if (!best || gain > best->gain) {
      best = GainRecord{SplitSpec{in.coordinate, in.role, SubsetTest{}}, gain, left, right};
      best_cut = cut;
    }
  }
  if (!best) return std::nullopt;

  CategorySet left_set = zero_b;
  for (std::size_t i = 0; i < best_cut; ++i) left_set.insert(present[i].code);
  std::get<SubsetTest>(best->split.test).left = std::move(left_set);
  return best;
}

ContinuousScanInput continuous_scan_input(const LeafView& leaf, std::size_t column, const OutcomeBox& box,
                                          const FeasibilityConfig& feas, std::vector<double>& x_buffer,
                                          std::vector<double>& xy_buffer) {
  ContinuousScanInput in;
  in.coordinate = column;
  in.role = leaf.cell.role(column);
  in.parent = leaf.stats;
  in.side = leaf.cell.interval(column);
  auto values = leaf.data.real_column(column);

  xy_buffer.clear();
  xy_buffer.reserve(leaf.xy_members.size());
  for (auto r : leaf.xy_members) xy_buffer.push_back(values[r]);
  std::sort(xy_buffer.begin(), xy_buffer.end());
  in.xy_values = xy_buffer;

  x_buffer.clear();
  if (in.role == Role::covariate) {
    x_buffer.reserve(leaf.x_members.size());
    for (auto r : leaf.x_members) x_buffer.push_back(values[r]);
    std::sort(x_buffer.begin(), x_buffer.end());
    in.x_values = x_buffer;
  } else {
    in.mu_other = mu_y_with_side(leaf.cell, column, Interval{0.0, 1.0, false});
    in.min_child_length = feas.min_target_volume * std::get<Interval>(box.side_for(column)).length();
  }
  return in;
}

CategoricalScanInput categorical_scan_input(const LeafView& leaf, std::size_t column) {
  CategoricalScanInput in;
  in.coordinate = column;
  in.role = leaf.cell.role(column);
  in.parent = leaf.stats;
  in.side = leaf.cell.categories(column);
  const std::size_t k = in.side.alphabet_size();
  auto codes = leaf.data.code_column(column);

  std::vector<std::size_t> a(k, 0);
  for (auto r : leaf.xy_members) ++a[static_cast<std::size_t>(codes[r])];
  std::vector<double> b(k, 0.0);
  if (in.role == Role::covariate) {
    std::vector<std::size_t> counts(k, 0);
    for (auto r : leaf.x_members) ++counts[static_cast<std::size_t>(codes[r])];
    for (std::size_t c = 0; c < k; ++c) b[c] = static_cast<double>(counts[c]);
  } else {
    CategorySet single(k);
    single.insert(in.side.members().front());
    const double per_category = mu_y_with_side(leaf.cell, column, single);
    std::fill(b.begin(), b.end(), per_category);
  }
  for (auto code : in.side.members()) {
    in.stats.push_back(CategoryStat{code, a[static_cast<std::size_t>(code)], b[static_cast<std::size_t>(code)]});
  }
  return in;
}

std::optional<GainRecord> best_split(const LeafView& leaf, const FeasibilityConfig& feas, const OutcomeBox& box,
                                     const std::vector<std::size_t>* covariate_mask, std::size_t n_total) {
  if (leaf.stats.n_xy == 0 || leaf.stats.n_x == 0) return std::nullopt;
  std::optional<GainRecord> best;
  std::vector<double> x_buffer;
  std::vector<double> xy_buffer;
  const auto& schema = leaf.data.schema();
  for (std::size_t c = 0; c < schema.size(); ++c) {
    const auto& spec = schema.column(c);
    if (!spec.is_outcome() && covariate_mask &&
        std::find(covariate_mask->begin(), covariate_mask->end(), c) == covariate_mask->end()) {
      continue;
    }
    std::optional<GainRecord> cand;
    if (spec.is_continuous()) {
      auto in = continuous_scan_input(leaf, c, box, feas, x_buffer, xy_buffer);
      cand = best_continuous_split(in, feas, n_total);
    } else {
      cand = best_categorical_split(categorical_scan_input(leaf, c), feas, n_total);
    }
    if (cand && (!best || cand->gain > best->gain)) best = std::move(cand);
  }
  return best;
}

}  // namespace partition_tree
