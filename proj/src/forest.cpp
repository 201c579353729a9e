#include "partition_tree/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <map>
#include <numeric>
#include <optional>
#include <thread>

#include "json_util.hpp"
#include "partition_tree/error.hpp"

namespace partition_tree {

void ForestConfig::validate() const {
  if (n_trees == 0) throw ConfigError("a forest needs at least one tree");
  if (!(max_samples > 0.0 && max_samples <= 1.0)) throw ConfigError("max_samples must lie in (0, 1]");
  if (!(max_features > 0.0 && max_features <= 1.0)) throw ConfigError("max_features must lie in (0, 1]");
  base.validate();
}

nlohmann::json forest_config_to_json(const ForestConfig& c) {
  return {{"n_trees", c.n_trees},   {"max_samples", c.max_samples}, {"max_features", c.max_features},
          {"seed", c.seed},         {"bootstrap", c.bootstrap},     {"base", fit_config_to_json(c.base)}};
}

ForestConfig forest_config_from_json(const nlohmann::json& doc) {
  using detail::get_as;
  const std::string loc = "/config";
  ForestConfig c;
  c.n_trees = get_as<std::size_t>(doc, "n_trees", loc);
  c.max_samples = get_as<double>(doc, "max_samples", loc);
  c.max_features = get_as<double>(doc, "max_features", loc);
  c.seed = get_as<std::uint64_t>(doc, "seed", loc);
  c.bootstrap = get_as<bool>(doc, "bootstrap", loc);
  try {
    c.base = fit_config_from_json(detail::field(doc, "base", loc));
    c.validate();
  } catch (const ConfigError& e) {
    throw ModelLoadError(loc + ": " + e.what());
  } catch (const ModelLoadError& e) {
    throw ModelLoadError(loc + "/base" + e.what());
  }
  return c;
}

std::uint64_t tree_seed(std::uint64_t forest_seed, std::size_t tree_index) {
  auto rng = make_stream(forest_seed, "forest/tree-seed", tree_index);
  return rng();
}

std::vector<RowIndex> bootstrap_rows(std::size_t n_rows, double max_samples, std::uint64_t forest_seed,
                                     std::size_t tree_index) {
  const auto m = static_cast<std::size_t>(std::ceil(max_samples * static_cast<double>(n_rows)));
  auto rng = make_stream(forest_seed, "forest/bootstrap", tree_index);
  std::uniform_int_distribution<std::size_t> pick(0, n_rows - 1);
  std::vector<RowIndex> rows(m);
  for (auto& r : rows) r = static_cast<RowIndex>(pick(rng));
  return rows;
}

std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("PARTITION_TREE_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

PartitionForest fit_forest(const Dataset& data, const ForestConfig& config, std::size_t threads) {
  config.validate();
  if (data.n_rows() == 0) throw ConfigError("cannot fit a forest on an empty dataset");
  const OutcomeBox box = build_outcome_box(data, config.base.expansion_factor);
  const std::size_t n_trees = config.n_trees;

  std::vector<std::optional<PartitionTree>> fitted(n_trees);
  std::vector<std::exception_ptr> errors(n_trees);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t b = next++; b < n_trees; b = next++) {
      try {
        std::vector<RowIndex> rows;
        if (config.bootstrap) {
          rows = bootstrap_rows(data.n_rows(), config.max_samples, config.seed, b);
        } else {
          rows.resize(data.n_rows());
          std::iota(rows.begin(), rows.end(), RowIndex{0});
        }
        FitConfig tree_config = config.base;
        tree_config.max_features = config.max_features;
        tree_config.seed = tree_seed(config.seed, b);
        fitted[b].emplace(fit_tree(data, rows, box, tree_config));
      } catch (...) {
        errors[b] = std::current_exception();
      }
    }
  };

  const std::size_t n_workers = std::min(resolve_threads(threads), n_trees);
  if (n_workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_workers; ++t) pool.emplace_back(work);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<PartitionTree> trees;
  trees.reserve(n_trees);
  for (auto& t : fitted) trees.push_back(std::move(*t));
  return PartitionForest(data.schema(), box, config, std::move(trees));
}

PartitionForest::PartitionForest(Schema schema, OutcomeBox box, ForestConfig config,
                                 std::vector<PartitionTree> trees)
    : schema_(std::move(schema)), box_(std::move(box)), config_(std::move(config)), trees_(std::move(trees)) {
  if (trees_.empty()) throw ConsistencyError("forest has no trees");
  for (const auto& t : trees_) {
    if (!(t.outcome_box() == box_)) throw ConsistencyError("forest trees must share one outcome box");
  }
}

double PartitionForest::density(const Point& z) const {
  if (!box_.contains(z)) return 0.0;
  double total = 0.0;
  for (const auto& t : trees_) total += t.density(z);
  return total / static_cast<double>(trees_.size());
}

double PartitionForest::normalizer(const Point& x) const {
  double total = 0.0;
  for (const auto& t : trees_) total += t.normalizer(x);
  return total / static_cast<double>(trees_.size());
}

PredictiveDensity PartitionForest::predictive_density(const Point& x) const {
  return predictive_density(x, kDefaultRefinementCap);
}

namespace {

// Per outcome column: the refined pieces and, for each tree bin side, the
// range (continuous) or set (categorical) of pieces it covers.
struct Axis {
  bool continuous = true;
  std::vector<double> breaks;                    // continuous
  std::vector<std::vector<std::int32_t>> atoms;  // categorical groups
  std::vector<std::size_t> atom_of;              // category code -> atom
  std::size_t alphabet = 0;
  std::size_t size() const { return continuous ? breaks.size() - 1 : atoms.size(); }
};

}  // namespace

PredictiveDensity PartitionForest::predictive_density(const Point& x, std::size_t max_bins) const {
  std::vector<PredictiveDensity> slices;
  slices.reserve(trees_.size());
  for (const auto& t : trees_) slices.push_back(t.predictive_density(x));

  const std::size_t dims = box_.columns.size();
  std::vector<Axis> axes(dims);
  for (std::size_t j = 0; j < dims; ++j) {
    Axis& ax = axes[j];
    if (const auto* iv = std::get_if<Interval>(&box_.sides[j])) {
      ax.breaks = {iv->lo, iv->hi};
      for (const auto& s : slices) {
        for (const auto& bin : s.bins) {
          const auto& side = std::get<Interval>(bin.sides[j]);
          ax.breaks.push_back(side.lo);
          ax.breaks.push_back(side.hi);
        }
      }
      std::sort(ax.breaks.begin(), ax.breaks.end());
      ax.breaks.erase(std::unique(ax.breaks.begin(), ax.breaks.end()), ax.breaks.end());
    } else {
      ax.continuous = false;
      ax.alphabet = std::get<CategorySet>(box_.sides[j]).alphabet_size();
      // categories never separated by any bin collapse into one atom
      std::vector<std::vector<bool>> signature(ax.alphabet);
      for (const auto& s : slices) {
        for (const auto& bin : s.bins) {
          const auto& side = std::get<CategorySet>(bin.sides[j]);
          for (std::size_t c = 0; c < ax.alphabet; ++c) {
            signature[c].push_back(side.contains(static_cast<std::int32_t>(c)));
          }
        }
      }
      std::map<std::vector<bool>, std::size_t> groups;
      ax.atom_of.resize(ax.alphabet);
      for (std::size_t c = 0; c < ax.alphabet; ++c) {
        auto [it, inserted] = groups.try_emplace(signature[c], ax.atoms.size());
        if (inserted) ax.atoms.emplace_back();
        ax.atoms[it->second].push_back(static_cast<std::int32_t>(c));
        ax.atom_of[c] = it->second;
      }
    }
  }

  std::size_t total = 1;
  for (const auto& ax : axes) {
    const std::size_t n = ax.size();
    if (n != 0 && total > max_bins / n) {
      throw ResourceError("forest refinement exceeds " + std::to_string(max_bins) + " bins");
    }
    total *= n;
  }
  if (total > max_bins) throw ResourceError("forest refinement exceeds " + std::to_string(max_bins) + " bins");

  std::vector<double> sum(total, 0.0);
  std::vector<std::size_t> stride(dims, 1);
  for (std::size_t j = dims; j-- > 1;) stride[j - 1] = stride[j] * axes[j].size();

  for (const auto& s : slices) {
    for (const auto& bin : s.bins) {
      if (bin.value == 0.0) continue;
      // covered pieces per axis, then add to every product index
      std::vector<std::vector<std::size_t>> covered(dims);
      for (std::size_t j = 0; j < dims; ++j) {
        const Axis& ax = axes[j];
        if (ax.continuous) {
          const auto& side = std::get<Interval>(bin.sides[j]);
          auto first = static_cast<std::size_t>(
              std::lower_bound(ax.breaks.begin(), ax.breaks.end(), side.lo) - ax.breaks.begin());
          auto last = static_cast<std::size_t>(
              std::lower_bound(ax.breaks.begin(), ax.breaks.end(), side.hi) - ax.breaks.begin());
          for (std::size_t k = first; k < last; ++k) covered[j].push_back(k);
        } else {
          const auto& side = std::get<CategorySet>(bin.sides[j]);
          std::vector<bool> seen(ax.atoms.size(), false);
          for (auto c : side.members()) {
            auto a = ax.atom_of[static_cast<std::size_t>(c)];
            if (!seen[a]) {
              seen[a] = true;
              covered[j].push_back(a);
            }
          }
        }
      }
      std::vector<std::size_t> pos(dims, 0);
      bool empty = std::any_of(covered.begin(), covered.end(), [](const auto& v) { return v.empty(); });
      while (!empty) {
        std::size_t flat = 0;
        for (std::size_t j = 0; j < dims; ++j) flat += covered[j][pos[j]] * stride[j];
        sum[flat] += bin.value;
        std::size_t j = dims;
        while (j > 0) {
          --j;
          if (++pos[j] < covered[j].size()) break;
          pos[j] = 0;
          if (j == 0) empty = true;
        }
        if (dims == 0) break;
      }
    }
  }

  PredictiveDensity pd;
  pd.outcome_columns = box_.columns;
  pd.box_volume = box_.volume();
  pd.bins.reserve(total);
  const double b = static_cast<double>(trees_.size());
  for (std::size_t flat = 0; flat < total; ++flat) {
    OutcomeBin bin;
    double volume = 1.0;
    std::size_t rest = flat;
    for (std::size_t j = 0; j < dims; ++j) {
      const std::size_t k = rest / stride[j];
      rest %= stride[j];
      const Axis& ax = axes[j];
      if (ax.continuous) {
        const auto& box_side = std::get<Interval>(box_.sides[j]);
        const bool last = k + 2 == ax.breaks.size();
        Interval iv{ax.breaks[k], ax.breaks[k + 1], last && box_side.closed_hi};
        volume *= iv.length();
        bin.sides.emplace_back(iv);
      } else {
        bin.sides.emplace_back(CategorySet::of(ax.alphabet, ax.atoms[k]));
        volume *= static_cast<double>(ax.atoms[k].size());
      }
    }
    bin.value = sum[flat] / b;
    bin.volume = volume;
    pd.normalizer += bin.value * bin.volume;
    pd.bins.push_back(std::move(bin));
  }
  pd.uniform_fallback = !(pd.normalizer > 0.0);
  return pd;
}

nlohmann::json PartitionForest::to_json() const {
  nlohmann::json j;
  j["format_version"] = kModelFormatVersion;
  j["kind"] = "partition_forest";
  j["schema"] = schema_to_json(schema_);
  j["outcome_box"] = outcome_box_to_json(box_);
  j["config"] = forest_config_to_json(config_);
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : trees_) trees.push_back(t.body_to_json());
  j["trees"] = std::move(trees);
  return j;
}

PartitionForest PartitionForest::from_json(const nlohmann::json& doc) {
  detail::check_header(doc, "partition_forest");
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
  auto config = forest_config_from_json(detail::field(doc, "config", ""));
  const auto& jtrees = detail::field(doc, "trees", "");
  if (!jtrees.is_array() || jtrees.size() != config.n_trees) {
    throw ModelLoadError("/trees: expected " + std::to_string(config.n_trees) + " tree documents");
  }
  std::vector<PartitionTree> trees;
  trees.reserve(jtrees.size());
  for (std::size_t b = 0; b < jtrees.size(); ++b) {
    trees.push_back(PartitionTree::from_body(jtrees[b], schema, box, "/trees/" + std::to_string(b)));
  }
  return PartitionForest(std::move(schema), std::move(box), std::move(config), std::move(trees));
}

}  // namespace partition_tree
