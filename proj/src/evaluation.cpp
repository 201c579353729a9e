#include "partition_tree/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "partition_tree/error.hpp"

namespace partition_tree {

LogLossReport log_loss(const ConditionalDensityModel& model, const Dataset& data) {
  if (data.n_rows() == 0) throw ConfigError("log-loss of an empty dataset is undefined");
  if (!data.outcomes_present()) throw SchemaError("log-loss needs outcome columns");
  LogLossReport r;
  r.n = data.n_rows();
  const double floor = model.density_floor();
  double total = 0.0;
  for (std::size_t i = 0; i < data.n_rows(); ++i) {
    const double f = model.normalized_density(data.row(i));
    if (f < floor) ++r.floored_rows;
    total -= std::log(std::max(f, floor));
  }
  r.value = total / static_cast<double>(r.n);
  return r;
}

double rmse(const ConditionalDensityModel& model, const Dataset& data) {
  const auto& outs = model.schema().outcomes();
  if (outs.size() != 1 || !model.schema().column(outs[0]).is_continuous()) {
    throw UnsupportedModeError("rmse needs exactly one continuous outcome");
  }
  if (data.n_rows() == 0) throw ConfigError("rmse of an empty dataset is undefined");
  const std::size_t c = outs[0];
  double sq = 0.0;
  for (std::size_t i = 0; i < data.n_rows(); ++i) {
    const double err = model.point_predict(data.row(i))[c] - data.value(i, c);
    sq += err * err;
  }
  return std::sqrt(sq / static_cast<double>(data.n_rows()));
}

double accuracy(const ConditionalDensityModel& model, const Dataset& data) {
  const auto& outs = model.schema().outcomes();
  for (auto c : outs) {
    if (!model.schema().column(c).is_categorical()) throw UnsupportedModeError("accuracy needs categorical outcomes");
  }
  if (data.n_rows() == 0) throw ConfigError("accuracy of an empty dataset is undefined");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.n_rows(); ++i) {
    auto pred = model.point_predict(data.row(i));
    bool ok = std::all_of(outs.begin(), outs.end(), [&](std::size_t c) { return pred[c] == data.value(i, c); });
    hits += ok ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(data.n_rows());
}

ImportanceVector feature_importance(const PartitionTree& tree, ImportanceDenominator denominator) {
  ImportanceVector iv;
  iv.columns = tree.schema().covariates();
  iv.values.assign(iv.columns.size(), 0.0);
  double x_total = 0.0;
  double all_total = 0.0;
  for (const auto& n : tree.nodes()) {
    if (n.is_leaf()) continue;
    all_total += n.gain;
    if (n.split->role != Role::covariate) continue;
    iv.has_x_splits = true;
    auto it = std::find(iv.columns.begin(), iv.columns.end(), n.split->coordinate);
    iv.values[static_cast<std::size_t>(it - iv.columns.begin())] += n.gain;
    x_total += n.gain;
  }
  const double denom = denominator == ImportanceDenominator::x_splits ? x_total : all_total;
  if (!iv.has_x_splits || !(denom > 0.0)) {
    std::fill(iv.values.begin(), iv.values.end(), 0.0);
    iv.has_x_splits = iv.has_x_splits && denom > 0.0;
    return iv;
  }
  for (auto& v : iv.values) v /= denom;
  return iv;
}

ImportanceVector feature_importance(const PartitionForest& forest, ImportanceDenominator denominator) {
  ImportanceVector out;
  out.columns = forest.schema().covariates();
  out.values.assign(out.columns.size(), 0.0);
  std::size_t used = 0;
  for (const auto& t : forest.trees()) {
    auto iv = feature_importance(t, denominator);
    if (!iv.has_x_splits) continue;
    ++used;
    for (std::size_t j = 0; j < iv.values.size(); ++j) out.values[j] += iv.values[j];
  }
  if (used == 0) return out;
  out.has_x_splits = true;
  for (auto& v : out.values) v /= static_cast<double>(used);
  return out;
}

ImportanceVector feature_importance(const ConditionalDensityModel& model, ImportanceDenominator denominator) {
  if (const auto* t = dynamic_cast<const PartitionTree*>(&model)) return feature_importance(*t, denominator);
  if (const auto* f = dynamic_cast<const PartitionForest*>(&model)) return feature_importance(*f, denominator);
  throw UnsupportedModeError("feature importance needs a tree or a forest");
}

namespace {

double integrate_abs(const TruthDensity& truth, Point& z, std::size_t c, double lo, double hi, double value,
                     std::size_t points) {
  if (!(hi > lo)) return 0.0;
  const double h = (hi - lo) / static_cast<double>(points);
  double s = 0.0;
  for (std::size_t k = 0; k < points; ++k) {
    z[c] = lo + (static_cast<double>(k) + 0.5) * h;
    s += std::abs(value - truth.density(z));
  }
  return s * h;
}

}  // namespace

double l1_error(const ConditionalDensityModel& model, const TruthDensity& truth, std::size_t n_mc,
                std::uint64_t seed, bool normalized) {
  const auto& outs = model.schema().outcomes();
  if (outs.size() != 1 || !model.schema().column(outs[0]).is_continuous() || outs[0] != truth.outcome_column()) {
    throw UnsupportedModeError("l1_error needs one continuous outcome shared with the truth");
  }
  if (n_mc == 0) throw ConfigError("l1_error needs at least one Monte Carlo draw");
  const std::size_t c = outs[0];
  const auto& box = std::get<Interval>(model.outcome_box().sides[0]);
  const Interval support = truth.outcome_support();
  auto rng = make_stream(seed, "eval/l1");
  double total = 0.0;
  for (std::size_t i = 0; i < n_mc; ++i) {
    Point z = truth.sample_covariates(rng);
    const auto pd = model.predictive_density(z);
    double err = 0.0;
    for (const auto& bin : pd.bins) {
      const auto& iv = std::get<Interval>(bin.sides[0]);
      const double v = normalized ? pd.normalized_value(bin) : bin.value;
      err += integrate_abs(truth, z, c, iv.lo, iv.hi, v, 64);
    }
    err += integrate_abs(truth, z, c, support.lo, std::min(box.lo, support.hi), 0.0, 256);
    err += integrate_abs(truth, z, c, std::max(box.hi, support.lo), support.hi, 0.0, 256);
    total += err;
  }
  return total / static_cast<double>(n_mc);
}

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::logloss:
      return "logloss";
    case Metric::rmse:
      return "rmse";
    case Metric::accuracy:
      return "accuracy";
  }
  return "unknown";
}

std::optional<Metric> parse_metric(std::string_view name) {
  for (auto m : {Metric::logloss, Metric::rmse, Metric::accuracy}) {
    if (name == to_string(m)) return m;
  }
  return std::nullopt;
}

MetricResult evaluate_metric(const ConditionalDensityModel& model, const Dataset& data, Metric metric) {
  MetricResult r;
  r.metric = metric;
  r.n = data.n_rows();
  switch (metric) {
    case Metric::logloss: {
      auto ll = log_loss(model, data);
      r.value = ll.value;
      r.floored_rows = ll.floored_rows;
      break;
    }
    case Metric::rmse:
      r.value = rmse(model, data);
      break;
    case Metric::accuracy:
      r.value = accuracy(model, data);
      break;
  }
  return r;
}

std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n_rows, std::size_t folds, std::uint64_t seed) {
  if (folds < 2 || folds > n_rows) throw ConfigError("fold count must lie in [2, number of rows]");
  std::vector<std::size_t> perm(n_rows);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  auto rng = make_stream(seed, "cv/folds");
  for (std::size_t i = n_rows; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(perm[i - 1], perm[pick(rng)]);
  }
  std::vector<std::vector<std::size_t>> out(folds);
  for (std::size_t i = 0; i < n_rows; ++i) out[i % folds].push_back(perm[i]);
  for (auto& f : out) std::sort(f.begin(), f.end());
  return out;
}

std::vector<MetricResult> cross_validate(const Dataset& data, std::size_t folds, std::uint64_t seed,
                                         const ModelFactory& fit, const std::vector<Metric>& metrics) {
  auto parts = kfold_indices(data.n_rows(), folds, seed);
  std::vector<MetricResult> out(metrics.size());
  for (std::size_t m = 0; m < metrics.size(); ++m) out[m].metric = metrics[m];
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> train_rows;
    for (std::size_t g = 0; g < folds; ++g) {
      if (g != f) train_rows.insert(train_rows.end(), parts[g].begin(), parts[g].end());
    }
    std::sort(train_rows.begin(), train_rows.end());
    auto train = data.select_rows(train_rows);
    auto test = data.select_rows(parts[f]);
    auto model = fit(train);
    for (std::size_t m = 0; m < metrics.size(); ++m) {
      auto r = evaluate_metric(*model, test, metrics[m]);
      out[m].value += r.value / static_cast<double>(folds);
      out[m].n += r.n;
      out[m].floored_rows += r.floored_rows;
    }
  }
  return out;
}

std::string config_digest(const nlohmann::json& config) {
  const std::uint64_t h = hash_tag(config.dump());
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::json metric_to_json(const MetricResult& r, std::uint64_t seed, const std::string& digest) {
  return {{"metric", std::string(to_string(r.metric))},
          {"value", r.value},
          {"n", r.n},
          {"floored_rows", r.floored_rows},
          {"seed", seed},
          {"config_digest", digest}};
}

}  // namespace partition_tree
