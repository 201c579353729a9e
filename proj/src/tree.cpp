#include "partition_tree/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include "json_util.hpp"
#include "partition_tree/error.hpp"

namespace partition_tree {

void FitConfig::validate() const {
  if (!(exploration_fraction >= 0.0 && exploration_fraction <= 1.0)) {
    throw ConfigError("exploration_fraction must lie in [0, 1]");
  }
  if (!(expansion_factor >= 0.0) || !std::isfinite(expansion_factor)) {
    throw ConfigError("expansion_factor must be a finite value >= 0");
  }
  if (!(max_features > 0.0 && max_features <= 1.0)) throw ConfigError("max_features must lie in (0, 1]");
  if (!(density_floor > 0.0) || !std::isfinite(density_floor)) throw ConfigError("density_floor must be > 0");
  feasibility.validate();
}

std::size_t FitConfig::resolve_max_splits(std::size_t n_train) const {
  if (max_splits) return *max_splits;
  return static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(n_train), 0.4)));
}

std::size_t FitConfig::exploration_budget(std::size_t k) const {
  return std::min(k, static_cast<std::size_t>(std::floor(exploration_fraction * static_cast<double>(k))));
}

nlohmann::json fit_config_to_json(const FitConfig& c) {
  nlohmann::json j;
  j["max_splits"] = c.max_splits ? nlohmann::json(*c.max_splits) : nlohmann::json(nullptr);
  j["exploration_fraction"] = c.exploration_fraction;
  j["min_samples_leaf"] = c.feasibility.min_samples_leaf;
  j["min_samples_leaf_x"] = c.feasibility.min_samples_leaf_x;
  j["min_target_volume"] = c.feasibility.min_target_volume;
  j["expansion_factor"] = c.expansion_factor;
  j["max_features"] = c.max_features;
  j["seed"] = c.seed;
  j["density_floor"] = c.density_floor;
  return j;
}

FitConfig fit_config_from_json(const nlohmann::json& doc) {
  using detail::get_as;
  const std::string loc = "/config";
  FitConfig c;
  const auto& ms = detail::field(doc, "max_splits", loc);
  if (!ms.is_null()) c.max_splits = get_as<std::size_t>(doc, "max_splits", loc);
  c.exploration_fraction = get_as<double>(doc, "exploration_fraction", loc);
  c.feasibility.min_samples_leaf = get_as<std::size_t>(doc, "min_samples_leaf", loc);
  c.feasibility.min_samples_leaf_x = get_as<std::size_t>(doc, "min_samples_leaf_x", loc);
  c.feasibility.min_target_volume = get_as<double>(doc, "min_target_volume", loc);
  c.expansion_factor = get_as<double>(doc, "expansion_factor", loc);
  c.max_features = get_as<double>(doc, "max_features", loc);
  c.seed = get_as<std::uint64_t>(doc, "seed", loc);
  c.density_floor = get_as<double>(doc, "density_floor", loc);
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ModelLoadError(loc + ": " + e.what());
  }
  return c;
}

// ---- exploration -----------------------------------------------------------

double exploration_side_length(const Cell& cell, std::size_t column) {
  if (cell.is_continuous(column)) return bounded_transform(cell.interval(column).length());
  const auto& cats = cell.categories(column);
  if (cats.alphabet_size() < 2) return 0.0;
  return static_cast<double>(cats.count() - 1) / static_cast<double>(cats.alphabet_size() - 1);
}

std::optional<SplitSpec> exploration_split(const LeafView& leaf, Rng& rng) {
  const Cell& cell = leaf.cell;
  std::optional<std::size_t> chosen;
  double best = 0.0;
  for (std::size_t c = 0; c < cell.dimension(); ++c) {
    bool splittable;
    if (cell.is_continuous(c)) {
      const auto& iv = cell.interval(c);
      if (iv.bounded()) {
        double mid = std::midpoint(iv.lo, iv.hi);
        splittable = mid > iv.lo && mid < iv.hi;
      } else {
        splittable = !leaf.x_members.empty();
      }
    } else {
      splittable = cell.categories(c).count() >= 2;
    }
    if (!splittable) continue;
    double len = exploration_side_length(cell, c);
    if (len > best) {
      best = len;
      chosen = c;
    }
  }
  if (!chosen) return std::nullopt;

  const std::size_t c = *chosen;
  SplitSpec spec{c, cell.role(c), ThresholdTest{}};
  if (cell.is_continuous(c)) {
    const auto& iv = cell.interval(c);
    if (iv.bounded()) {
      spec.test = ThresholdTest{std::midpoint(iv.lo, iv.hi), false};
    } else {
      // Only covariate sides are unbounded, so x_members hold every sample
      // of the leaf.
      auto values = leaf.data.real_column(c);
      double lo = kInfinity;
      double hi = -kInfinity;
      for (auto r : leaf.x_members) {
        lo = std::min(lo, values[r]);
        hi = std::max(hi, values[r]);
      }
      if (iv.hi == kInfinity) {
        spec.test = ThresholdTest{hi, true};
      } else {
        spec.test = ThresholdTest{lo, false};
      }
    }
  } else {
    auto members = cell.categories(c).members();
    std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
    CategorySet single(cell.categories(c).alphabet_size());
    single.insert(members[pick(rng)]);
    spec.test = SubsetTest{std::move(single)};
  }
  return spec;
}

// ---- growth ----------------------------------------------------------------

namespace {

struct BuildNode {
  TreeNode node;
  std::vector<RowIndex> x_members;
  std::vector<RowIndex> xy_members;
  std::optional<GainRecord> best;
};

class Grower {
 public:
  Grower(const Dataset& data, const OutcomeBox& box, const FitConfig& config, std::size_t n_total)
      : data_(data),
        box_(box),
        config_(config),
        n_total_(n_total),
        explore_rng_(make_stream(config.seed, "tree/exploration")),
        feature_rng_(make_stream(config.seed, "tree/features")) {}

  std::vector<TreeNode> grow(std::span<const RowIndex> rows, std::size_t max_splits) {
    BuildNode root;
    root.node.cell = root_cell(data_.schema(), box_);
    root.x_members.assign(rows.begin(), rows.end());
    root.xy_members.assign(rows.begin(), rows.end());
    root.node.stats = CellStats{rows.size(), rows.size(), mu_y(root.node.cell)};
    nodes_.push_back(std::move(root));

    std::size_t splits = 0;
    const std::size_t explore = config_.exploration_budget(max_splits);
    while (splits < explore && explore_once()) ++splits;
    exploit(max_splits - splits);
    return preorder();
  }

 private:
  LeafView view(const BuildNode& b) const {
    return LeafView{data_, b.node.cell, b.x_members, b.xy_members, b.node.stats};
  }

  std::pair<std::size_t, std::size_t> apply(std::size_t idx, const SplitSpec& split, bool exploration) {
    BuildNode left;
    BuildNode right;
    {
      BuildNode& parent = nodes_[idx];
      auto [lc, rc] = split_cell(parent.node.cell, split);
      left.node.cell = std::move(lc);
      right.node.cell = std::move(rc);
      const std::size_t c = split.coordinate;
      auto route = [&](const std::vector<RowIndex>& src, std::vector<RowIndex>& l, std::vector<RowIndex>& r) {
        for (auto row : src) (split.goes_left(data_.value(row, c)) ? l : r).push_back(row);
      };
      route(parent.xy_members, left.xy_members, right.xy_members);
      if (split.role == Role::covariate) {
        route(parent.x_members, left.x_members, right.x_members);
      } else {
        left.x_members = parent.x_members;
        right.x_members = parent.x_members;
      }
      left.node.stats = CellStats{left.xy_members.size(), left.x_members.size(), mu_y(left.node.cell)};
      right.node.stats = CellStats{right.xy_members.size(), right.x_members.size(), mu_y(right.node.cell)};

      if (!exploration) {
        const auto& rec = *parent.best;
        if (rec.left.n_xy != left.node.stats.n_xy || rec.left.n_x != left.node.stats.n_x ||
            rec.right.n_xy != right.node.stats.n_xy || rec.right.n_x != right.node.stats.n_x) {
          throw ConsistencyError("routed child counts differ from the scanned split");
        }
        parent.node.gain = rec.gain;
      } else {
        parent.node.gain = empirical_gain(parent.node.stats, left.node.stats, right.node.stats, n_total_);
      }
      parent.node.split = split;
      parent.node.exploration = exploration;
      parent.x_members = {};
      parent.xy_members = {};
      parent.best.reset();
    }
    const std::size_t li = nodes_.size();
    nodes_.push_back(std::move(left));
    const std::size_t ri = nodes_.size();
    nodes_.push_back(std::move(right));
    nodes_[idx].node.left = li;
    nodes_[idx].node.right = ri;
    return {li, ri};
  }

  bool explore_once() {
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const auto& b = nodes_[i];
      if (b.node.split || b.node.stats.n_xy == 0) continue;
      order.emplace_back(diameter(b.node.cell), i);
    }
    std::stable_sort(order.begin(), order.end(), [](const auto& l, const auto& r) { return l.first > r.first; });
    for (const auto& [diam, i] : order) {
      auto split = exploration_split(view(nodes_[i]), explore_rng_);
      if (!split) continue;
      apply(i, *split, true);
      return true;
    }
    return false;
  }

  std::vector<std::size_t> draw_features() {
    const auto& covs = data_.schema().covariates();
    if (config_.max_features >= 1.0 || covs.empty()) return covs;
    std::size_t m = static_cast<std::size_t>(std::ceil(config_.max_features * static_cast<double>(covs.size())));
    m = std::clamp<std::size_t>(m, 1, covs.size());
    std::vector<std::size_t> pool = covs;
    for (std::size_t i = 0; i < m; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
      std::swap(pool[i], pool[pick(feature_rng_)]);
    }
    pool.resize(m);
    std::sort(pool.begin(), pool.end());
    return pool;
  }

  void evaluate(std::size_t idx) {
    auto& b = nodes_[idx];
    if (config_.max_features < 1.0) {
      auto mask = draw_features();
      b.best = best_split(view(b), config_.feasibility, box_, &mask, n_total_);
    } else {
      b.best = best_split(view(b), config_.feasibility, box_, nullptr, n_total_);
    }
  }

  void exploit(std::size_t budget) {
    // max-heap on gain; older leaves first on ties
    auto cmp = [](const std::pair<double, std::size_t>& l, const std::pair<double, std::size_t>& r) {
      if (l.first != r.first) return l.first < r.first;
      return l.second > r.second;
    };
    std::priority_queue<std::pair<double, std::size_t>, std::vector<std::pair<double, std::size_t>>, decltype(cmp)>
        queue(cmp);
    auto push = [&](std::size_t i) {
      if (nodes_[i].node.stats.n_xy == 0) return;
      evaluate(i);
      if (nodes_[i].best) queue.emplace(nodes_[i].best->gain, i);
    };
    if (budget == 0) return;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (!nodes_[i].node.split) push(i);
    }
    std::size_t done = 0;
    while (done < budget && !queue.empty()) {
      auto [gain, idx] = queue.top();
      if (!(gain > 0.0)) break;
      queue.pop();
      auto split = nodes_[idx].best->split;
      auto [li, ri] = apply(idx, split, false);
      ++done;
      if (done < budget) {
        push(li);
        push(ri);
      }
    }
  }

  std::vector<TreeNode> preorder() {
    std::vector<TreeNode> out;
    out.reserve(nodes_.size());
    // (build index, slot in `out` of the parent link to patch, is_left)
    struct Item {
      std::size_t build;
      std::size_t parent;
      bool left;
    };
    std::vector<Item> stack{{0, static_cast<std::size_t>(-1), false}};
    while (!stack.empty()) {
      Item it = stack.back();
      stack.pop_back();
      const std::size_t pos = out.size();
      if (it.parent != static_cast<std::size_t>(-1)) {
        (it.left ? out[it.parent].left : out[it.parent].right) = pos;
      }
      TreeNode n = std::move(nodes_[it.build].node);
      const std::size_t l = n.left;
      const std::size_t r = n.right;
      const bool internal = n.split.has_value();
      out.push_back(std::move(n));
      if (internal) {
        stack.push_back({r, pos, false});
        stack.push_back({l, pos, true});
      }
    }
    return out;
  }

  const Dataset& data_;
  const OutcomeBox& box_;
  const FitConfig& config_;
  std::size_t n_total_;
  Rng explore_rng_;
  Rng feature_rng_;
  std::vector<BuildNode> nodes_;
};

}  // namespace

PartitionTree fit_tree(const Dataset& data, const FitConfig& config) {
  config.validate();
  if (data.n_rows() == 0) throw ConfigError("cannot fit a tree on an empty dataset");
  OutcomeBox box = build_outcome_box(data, config.expansion_factor);
  std::vector<RowIndex> rows(data.n_rows());
  std::iota(rows.begin(), rows.end(), RowIndex{0});
  return fit_tree(data, rows, box, config);
}

PartitionTree fit_tree(const Dataset& data, std::span<const RowIndex> rows, const OutcomeBox& box,
                       const FitConfig& config) {
  config.validate();
  if (rows.empty()) throw ConfigError("cannot fit a tree on an empty dataset");
  if (!data.outcomes_present()) throw SchemaError("training data has no outcome columns");
  if (data.n_rows() > std::numeric_limits<RowIndex>::max()) throw ResourceError("too many rows");
  for (auto r : rows) {
    if (r >= data.n_rows()) throw ConsistencyError("training row index out of range");
    for (std::size_t j = 0; j < box.columns.size(); ++j) {
      if (!side_contains(box.sides[j], data.value(r, box.columns[j]))) {
        throw ConfigError("training outcome of row " + std::to_string(r) + " lies outside the outcome box");
      }
    }
  }
  const std::size_t k = config.resolve_max_splits(rows.size());
  Grower grower(data, box, config, rows.size());
  auto nodes = grower.grow(rows, k);
  return PartitionTree(data.schema(), box, config, rows.size(), k, std::move(nodes));
}

// ---- queries ---------------------------------------------------------------

PartitionTree::PartitionTree(Schema schema, OutcomeBox box, FitConfig config, std::size_t n_train,
                             std::size_t max_splits, std::vector<TreeNode> nodes)
    : schema_(std::move(schema)),
      box_(std::move(box)),
      config_(config),
      n_train_(n_train),
      max_splits_(max_splits),
      nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw ConsistencyError("tree has no nodes");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (n.is_leaf()) continue;
    if (n.left != i + 1 || n.right <= n.left || n.right >= nodes_.size()) {
      throw ConsistencyError("node " + std::to_string(i) + " violates pre-order child layout");
    }
  }
}

std::size_t PartitionTree::n_leaves() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::size_t PartitionTree::n_exploration_splits() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return !n.is_leaf() && n.exploration; }));
}

std::size_t PartitionTree::leaf_of(const Point& z) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& s = *nodes_[i].split;
    i = s.goes_left(z[s.coordinate]) ? nodes_[i].left : nodes_[i].right;
  }
  return i;
}

std::vector<std::size_t> PartitionTree::slice_leaves(const Point& x) const {
  std::vector<std::size_t> out;
  std::vector<std::size_t> stack{0};
  while (!stack.empty()) {
    std::size_t i = stack.back();
    stack.pop_back();
    const auto& n = nodes_[i];
    if (n.is_leaf()) {
      out.push_back(i);
    } else if (n.split->role == Role::covariate) {
      stack.push_back(n.split->goes_left(x[n.split->coordinate]) ? n.left : n.right);
    } else {
      stack.push_back(n.right);
      stack.push_back(n.left);
    }
  }
  return out;
}

double PartitionTree::leaf_value(std::size_t node) const {
  const auto& s = nodes_[node].stats;
  if (s.n_x == 0 || s.n_xy == 0) return 0.0;
  return static_cast<double>(s.n_xy) / (static_cast<double>(s.n_x) * s.mu_y);
}

double PartitionTree::density(const Point& z) const {
  if (!box_.contains(z)) return 0.0;
  return leaf_value(leaf_of(z));
}

double PartitionTree::normalizer(const Point& x) const {
  double total = 0.0;
  for (auto i : slice_leaves(x)) total += leaf_value(i) * nodes_[i].stats.mu_y;
  return total;
}

PredictiveDensity PartitionTree::predictive_density(const Point& x) const {
  PredictiveDensity pd;
  pd.outcome_columns = box_.columns;
  pd.box_volume = box_.volume();
  for (auto i : slice_leaves(x)) {
    OutcomeBin bin;
    for (auto c : box_.columns) bin.sides.push_back(nodes_[i].cell.side(c));
    bin.value = leaf_value(i);
    bin.volume = nodes_[i].stats.mu_y;
    pd.normalizer += bin.value * bin.volume;
    pd.bins.push_back(std::move(bin));
  }
  pd.uniform_fallback = !(pd.normalizer > 0.0);
  return pd;
}

// ---- serialization ---------------------------------------------------------

namespace {

nlohmann::json split_to_json(const SplitSpec& s) {
  nlohmann::json j;
  j["coordinate"] = s.coordinate;
  j["role"] = std::string(to_string(s.role));
  if (const auto* th = std::get_if<ThresholdTest>(&s.test)) {
    j["threshold"] = th->threshold;
    if (th->inclusive) j["inclusive"] = true;
  } else {
    j["subset"] = std::get<SubsetTest>(s.test).left.members();
  }
  return j;
}

SplitSpec split_from_json(const nlohmann::json& j, const Schema& schema, const std::string& loc) {
  using detail::get_as;
  SplitSpec s;
  s.coordinate = get_as<std::size_t>(j, "coordinate", loc);
  if (s.coordinate >= schema.size()) throw ModelLoadError(loc + "/coordinate: column index out of range");
  const auto& spec = schema.column(s.coordinate);
  auto role = get_as<std::string>(j, "role", loc);
  if (role != to_string(spec.role)) throw ModelLoadError(loc + "/role: does not match the schema");
  s.role = spec.role;
  if (spec.is_continuous()) {
    double t = get_as<double>(j, "threshold", loc);
    bool inclusive = j.contains("inclusive") ? get_as<bool>(j, "inclusive", loc) : false;
    s.test = ThresholdTest{t, inclusive};
  } else {
    auto codes = get_as<std::vector<std::int32_t>>(j, "subset", loc);
    CategorySet set(spec.alphabet_size());
    for (auto c : codes) {
      if (c < 0 || static_cast<std::size_t>(c) >= spec.alphabet_size()) {
        throw ModelLoadError(loc + "/subset: category code out of range");
      }
      set.insert(c);
    }
    s.test = SubsetTest{std::move(set)};
  }
  return s;
}

}  // namespace

nlohmann::json PartitionTree::body_to_json() const {
  nlohmann::json j;
  j["config"] = fit_config_to_json(config_);
  j["n_train"] = n_train_;
  j["max_splits"] = max_splits_;
  nlohmann::json nodes = nlohmann::json::array();
  nlohmann::json gains = nlohmann::json::array();
  for (const auto& n : nodes_) {
    nlohmann::json node;
    node["n_xy"] = n.stats.n_xy;
    node["n_x"] = n.stats.n_x;
    node["mu_y"] = n.stats.mu_y;
    if (!n.is_leaf()) {
      node["split"] = split_to_json(*n.split);
      node["left"] = n.left;
      node["right"] = n.right;
      if (n.exploration) node["exploration"] = true;
      gains.push_back(n.gain);
    }
    nodes.push_back(std::move(node));
  }
  j["nodes"] = std::move(nodes);
  j["gains"] = std::move(gains);
  return j;
}

nlohmann::json PartitionTree::to_json() const {
  nlohmann::json j;
  j["format_version"] = kModelFormatVersion;
  j["kind"] = "partition_tree";
  j["schema"] = schema_to_json(schema_);
  j["outcome_box"] = outcome_box_to_json(box_);
  auto body = body_to_json();
  for (auto& [k, v] : body.items()) j[k] = std::move(v);
  return j;
}

PartitionTree PartitionTree::from_body(const nlohmann::json& body, const Schema& schema, const OutcomeBox& box,
                                       const std::string& location) {
  using detail::get_as;
  FitConfig config;
  try {
    config = fit_config_from_json(detail::field(body, "config", location));
  } catch (const ModelLoadError& e) {
    throw ModelLoadError(location + e.what());
  }
  const auto n_train = get_as<std::size_t>(body, "n_train", location);
  const auto max_splits = get_as<std::size_t>(body, "max_splits", location);
  const auto& jnodes = detail::field(body, "nodes", location);
  const auto& jgains = detail::field(body, "gains", location);
  if (!jnodes.is_array() || jnodes.empty()) throw ModelLoadError(location + "/nodes: expected a non-empty array");
  if (!jgains.is_array()) throw ModelLoadError(location + "/gains: expected an array");

  const std::size_t count = jnodes.size();
  std::vector<TreeNode> nodes(count);
  std::vector<bool> reached(count, false);
  reached[0] = true;
  nodes[0].cell = root_cell(schema, box);
  std::size_t gain_index = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const std::string loc = location + "/nodes/" + std::to_string(i);
    const auto& jn = jnodes[i];
    if (!reached[i]) throw ModelLoadError(loc + ": node is not reachable from the root");
    auto& n = nodes[i];
    n.stats.n_xy = get_as<std::size_t>(jn, "n_xy", loc);
    n.stats.n_x = get_as<std::size_t>(jn, "n_x", loc);
    n.stats.mu_y = get_as<double>(jn, "mu_y", loc);
    const double mu = mu_y(n.cell);
    if (!(std::abs(mu - n.stats.mu_y) <= 1e-12 * std::abs(mu))) {
      throw ModelLoadError(loc + "/mu_y: does not match the cell geometry");
    }
    if (n.stats.n_xy > n.stats.n_x || n.stats.n_x > n_train) {
      throw ModelLoadError(loc + ": counts violate n_xy <= n_x <= n_train");
    }
    if (!jn.contains("split")) continue;

    n.split = split_from_json(jn["split"], schema, loc + "/split");
    n.left = get_as<std::size_t>(jn, "left", loc);
    n.right = get_as<std::size_t>(jn, "right", loc);
    n.exploration = jn.contains("exploration") ? get_as<bool>(jn, "exploration", loc) : false;
    if (n.left != i + 1 || n.right <= n.left || n.right >= count || reached[n.right]) {
      throw ModelLoadError(loc + ": child indices violate the pre-order layout");
    }
    if (gain_index >= jgains.size()) throw ModelLoadError(location + "/gains: fewer entries than internal nodes");
    try {
      n.gain = jgains[gain_index++].get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw ModelLoadError(location + "/gains: " + e.what());
    }
    const auto& side = n.cell.side(n.split->coordinate);
    if (n.cell.is_continuous(n.split->coordinate) != std::holds_alternative<ThresholdTest>(n.split->test)) {
      throw ModelLoadError(loc + "/split: test kind does not match the column");
    }
    if (const auto* th = std::get_if<ThresholdTest>(&n.split->test)) {
      const auto& iv = std::get<Interval>(side);
      if (!(th->threshold >= iv.lo && th->threshold <= iv.hi)) {
        throw ModelLoadError(loc + "/split: threshold outside the node's interval");
      }
    }
    auto [lc, rc] = split_cell(n.cell, *n.split);
    nodes[n.left].cell = std::move(lc);
    nodes[n.right].cell = std::move(rc);
    reached[n.left] = true;
    reached[n.right] = true;
  }
  if (gain_index != jgains.size()) throw ModelLoadError(location + "/gains: more entries than internal nodes");
  for (std::size_t i = 0; i < count; ++i) {
    const auto& n = nodes[i];
    if (n.is_leaf()) continue;
    const auto& l = nodes[n.left].stats;
    const auto& r = nodes[n.right].stats;
    bool ok = l.n_xy + r.n_xy == n.stats.n_xy &&
              (n.split->role == Role::covariate ? l.n_x + r.n_x == n.stats.n_x
                                                : l.n_x == n.stats.n_x && r.n_x == n.stats.n_x);
    if (!ok) throw ModelLoadError(location + "/nodes/" + std::to_string(i) + ": child counts do not add up");
  }
  if (nodes[0].stats.n_xy != n_train) throw ModelLoadError(location + "/nodes/0: root count differs from n_train");
  return PartitionTree(schema, box, config, n_train, max_splits, std::move(nodes));
}

PartitionTree PartitionTree::from_json(const nlohmann::json& doc) {
  detail::check_header(doc, "partition_tree");
  Schema schema;
  OutcomeBox box;
  try {
    schema = schema_from_json(detail::field(doc, "schema", ""));
    box = outcome_box_from_json(detail::field(doc, "outcome_box", ""), schema);
  } catch (const ModelLoadError&) {
    throw;
  } catch (const Error& e) {
    throw ModelLoadError(std::string("/schema: ") + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ModelLoadError(std::string("/outcome_box: ") + e.what());
  }
  return from_body(doc, schema, box, "");
}

}  // namespace partition_tree
