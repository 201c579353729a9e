#include "cli.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "partition_tree/error.hpp"
#include "partition_tree/evaluation.hpp"
#include "partition_tree/forest.hpp"
#include "partition_tree/synthetic.hpp"
#include "partition_tree/tree.hpp"

namespace partition_tree::cli {
namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FitArgs {
  std::optional<std::size_t> forest;
  std::optional<std::size_t> max_splits;
  double exploration_frac = 0.0;
  std::size_t min_samples_leaf = 1;
  std::size_t min_samples_leaf_x = 1;
  double min_target_volume = 0.0;
  double expansion_factor = 0.01;
  double max_features = 1.0;
  double max_samples = 1.0;
  double density_floor = 1e-12;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
};

void add_fit_options(CLI::App* app, FitArgs& a) {
  app->add_option("--forest", a.forest, "Fit a forest of B trees instead of one tree")->check(CLI::PositiveNumber);
  app->add_option("--max-splits", a.max_splits, "Split budget (default floor(N^0.4))");
  app->add_option("--exploration-frac", a.exploration_frac, "Share of the budget spent on exploration splits")
      ->check(CLI::Range(0.0, 1.0));
  app->add_option("--min-samples-leaf", a.min_samples_leaf, "Minimum joint samples per child");
  app->add_option("--min-samples-leaf-x", a.min_samples_leaf_x, "Minimum covariate samples per child");
  app->add_option("--min-target-volume", a.min_target_volume, "Minimum child outcome side, relative to the box");
  app->add_option("--expansion-factor", a.expansion_factor, "Outcome box padding relative to the range");
  app->add_option("--max-features", a.max_features, "Covariate fraction searched per split");
  app->add_option("--max-samples", a.max_samples, "Bootstrap fraction per tree");
  app->add_option("--density-floor", a.density_floor, "Floor applied before taking logs");
  app->add_option("--seed", a.seed, "Random seed");
  app->add_option("--threads", a.threads, "Worker threads for forests (0: PARTITION_TREE_THREADS or all cores)");
}

FitConfig tree_config(const FitArgs& a) {
  FitConfig c;
  c.max_splits = a.max_splits;
  c.exploration_fraction = a.exploration_frac;
  c.feasibility.min_samples_leaf = a.min_samples_leaf;
  c.feasibility.min_samples_leaf_x = a.min_samples_leaf_x;
  c.feasibility.min_target_volume = a.min_target_volume;
  c.expansion_factor = a.expansion_factor;
  c.max_features = a.max_features;
  c.seed = a.seed;
  c.density_floor = a.density_floor;
  return c;
}

ForestConfig forest_config(const FitArgs& a) {
  ForestConfig f;
  f.n_trees = *a.forest;
  f.max_samples = a.max_samples;
  f.max_features = a.max_features;
  f.base = tree_config(a);
  f.base.max_features = 1.0;
  f.seed = a.seed;
  return f;
}

// Config problems surface before any data is read.
void validate_fit_args(const FitArgs& a) {
  try {
    if (a.forest) {
      forest_config(a).validate();
    } else {
      tree_config(a).validate();
    }
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
}

std::unique_ptr<ConditionalDensityModel> fit_model(const Dataset& data, const FitArgs& a) {
  if (a.forest) return std::make_unique<PartitionForest>(fit_forest(data, forest_config(a), a.threads));
  return std::make_unique<PartitionTree>(fit_tree(data, tree_config(a)));
}

nlohmann::json model_config_json(const ConditionalDensityModel& model) {
  if (const auto* t = dynamic_cast<const PartitionTree*>(&model)) return fit_config_to_json(t->config());
  return forest_config_to_json(dynamic_cast<const PartitionForest&>(model).config());
}

std::uint64_t model_seed(const ConditionalDensityModel& model) {
  if (const auto* t = dynamic_cast<const PartitionTree*>(&model)) return t->config().seed;
  return dynamic_cast<const PartitionForest&>(model).config().seed;
}

std::size_t total_leaves(const ConditionalDensityModel& model) {
  if (const auto* t = dynamic_cast<const PartitionTree*>(&model)) return t->n_leaves();
  std::size_t n = 0;
  for (const auto& t : dynamic_cast<const PartitionForest&>(model).trees()) n += t.n_leaves();
  return n;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  return f;
}

struct SchemaArgs {
  std::string schema_path;
  bool infer = false;
  std::vector<std::string> outcomes;
  std::size_t categorical_threshold = 20;
};

void add_schema_options(CLI::App* app, SchemaArgs& s) {
  app->add_option("--schema", s.schema_path, "Schema JSON file");
  app->add_flag("--infer-schema", s.infer, "Infer the schema from the data file");
  app->add_option("--outcome", s.outcomes, "Outcome column name for --infer-schema (repeatable)");
  app->add_option("--categorical-threshold", s.categorical_threshold,
                  "Distinct-count threshold below which numeric columns are categorical");
}

void validate_schema_args(const SchemaArgs& s) {
  if (s.infer == !s.schema_path.empty()) throw UsageError("give exactly one of --schema or --infer-schema");
  if (s.infer && s.outcomes.empty()) throw UsageError("--infer-schema needs at least one --outcome");
}

Schema resolve_schema(const SchemaArgs& s, const std::string& data_path) {
  if (!s.infer) return load_schema(s.schema_path);
  InferOptions opt;
  opt.categorical_threshold = s.categorical_threshold;
  for (const auto& o : s.outcomes) opt.roles[o] = Role::outcome;
  return infer_schema(data_path, opt);
}

// ---- fit -------------------------------------------------------------------

struct FitCmd {
  std::string data;
  std::string out;
  SchemaArgs schema;
  FitArgs fit;
};

int run_fit(const FitCmd& cmd, std::ostream& out) {
  validate_schema_args(cmd.schema);
  validate_fit_args(cmd.fit);
  const auto start = std::chrono::steady_clock::now();
  auto schema = resolve_schema(cmd.schema, cmd.data);
  auto data = load_csv(cmd.data, schema);
  auto model = fit_model(data, cmd.fit);
  save_model(cmd.out, *model);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out << "leaves=" << total_leaves(*model) << " train_logloss=" << format_real(log_loss(*model, data).value)
      << " wall_seconds=" << format_real(secs) << '\n';
  return kSuccess;
}

// ---- predict ---------------------------------------------------------------

struct PredictCmd {
  std::string model;
  std::string data;
  std::string mode = "density";
  std::string out;
};

nlohmann::json bins_json(const PredictiveDensity& pd, const Schema& schema) {
  nlohmann::json bins = nlohmann::json::array();
  for (const auto& bin : pd.bins) {
    nlohmann::json sides = nlohmann::json::array();
    for (std::size_t j = 0; j < pd.outcome_columns.size(); ++j) {
      if (const auto* iv = std::get_if<Interval>(&bin.sides[j])) {
        sides.push_back({iv->lo, iv->hi});
      } else {
        nlohmann::json labels = nlohmann::json::array();
        const auto& spec = schema.column(pd.outcome_columns[j]);
        for (auto c : std::get<CategorySet>(bin.sides[j]).members()) {
          labels.push_back(spec.alphabet[static_cast<std::size_t>(c)]);
        }
        sides.push_back(std::move(labels));
      }
    }
    bins.push_back({{"sides", std::move(sides)}, {"density", pd.normalized_value(bin)}, {"mass", pd.mass(bin)}});
  }
  return bins;
}

int run_predict(const PredictCmd& cmd) {
  if (cmd.mode != "density" && cmd.mode != "point" && cmd.mode != "bins") {
    throw UsageError("--mode must be density, point or bins");
  }
  auto model = load_model(cmd.model);
  const auto& schema = model->schema();
  CsvOptions opt;
  opt.outcomes_optional = cmd.mode != "density";
  auto data = load_csv(cmd.data, schema, opt);
  auto f = open_out(cmd.out);
  if (cmd.mode == "density") {
    f << "density,log_density\n";
    for (std::size_t i = 0; i < data.n_rows(); ++i) {
      auto z = data.row(i);
      f << format_real(model->normalized_density(z)) << ',' << format_real(model->log_density(z)) << '\n';
    }
  } else if (cmd.mode == "point") {
    const auto& outs = schema.outcomes();
    for (std::size_t j = 0; j < outs.size(); ++j) f << (j ? "," : "") << csv_field(schema.column(outs[j]).name);
    f << '\n';
    for (std::size_t i = 0; i < data.n_rows(); ++i) {
      auto p = model->point_predict(data.row(i));
      for (std::size_t j = 0; j < outs.size(); ++j) {
        const auto& spec = schema.column(outs[j]);
        f << (j ? "," : "");
        if (spec.is_continuous()) {
          f << format_real(p[outs[j]]);
        } else {
          f << csv_field(spec.alphabet[static_cast<std::size_t>(p[outs[j]])]);
        }
      }
      f << '\n';
    }
  } else {
    for (std::size_t i = 0; i < data.n_rows(); ++i) {
      auto pd = model->predictive_density(data.row(i));
      nlohmann::json line{{"row", i},
                          {"normalizer", pd.normalizer},
                          {"uniform_fallback", pd.uniform_fallback},
                          {"bins", bins_json(pd, schema)}};
      f << line.dump() << '\n';
    }
  }
  return kSuccess;
}

// ---- evaluate --------------------------------------------------------------

struct EvaluateCmd {
  std::string model;
  std::string data;
  std::string metrics = "logloss";
  std::size_t folds = 0;
  std::string fit_args;
  std::string out;
  SchemaArgs schema;
};

FitArgs parse_fit_args(const std::string& text) {
  FitArgs a;
  CLI::App sub("fit arguments");
  add_fit_options(&sub, a);
  try {
    sub.parse(text, false);
  } catch (const CLI::ParseError& e) {
    throw UsageError(std::string("--fit-args: ") + e.what());
  }
  return a;
}

int run_evaluate(const EvaluateCmd& cmd, std::ostream& out) {
  std::vector<Metric> metrics;
  for (const auto& name : split_list(cmd.metrics)) {
    auto m = parse_metric(name);
    if (!m) throw UsageError("unknown metric '" + name + "'");
    metrics.push_back(*m);
  }
  if (metrics.empty()) throw UsageError("--metrics is empty");

  std::vector<nlohmann::json> lines;
  if (cmd.folds > 0) {
    if (!cmd.model.empty()) throw UsageError("--folds fits its own models; drop --model");
    validate_schema_args(cmd.schema);
    FitArgs fa = parse_fit_args(cmd.fit_args);
    validate_fit_args(fa);
    auto schema = resolve_schema(cmd.schema, cmd.data);
    auto data = load_csv(cmd.data, schema);
    auto results = cross_validate(data, cmd.folds, fa.seed, [&](const Dataset& train) { return fit_model(train, fa); },
                                  metrics);
    nlohmann::json cfg = fa.forest ? forest_config_to_json(forest_config(fa)) : fit_config_to_json(tree_config(fa));
    cfg["folds"] = cmd.folds;
    const auto digest = config_digest(cfg);
    for (const auto& r : results) lines.push_back(metric_to_json(r, fa.seed, digest));
  } else {
    if (cmd.model.empty()) throw UsageError("--model is required unless --folds is given");
    auto model = load_model(cmd.model);
    auto data = load_csv(cmd.data, model->schema());
    const auto digest = config_digest(model_config_json(*model));
    for (auto m : metrics) lines.push_back(metric_to_json(evaluate_metric(*model, data, m), model_seed(*model), digest));
  }
  std::ostringstream text;
  for (const auto& l : lines) text << l.dump() << '\n';
  if (cmd.out.empty()) {
    out << text.str();
  } else {
    open_out(cmd.out) << text.str();
  }
  return kSuccess;
}

// ---- synth -----------------------------------------------------------------

struct SynthCmd {
  std::string generator;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  std::string out;
  std::size_t noise_covariates = 0;
  std::size_t grid = 4;
  std::string noise_mode;
  double lambda = 0.0;
  std::size_t redundant_k = 0;
};

std::string sibling(const std::string& csv_path, const std::string& suffix) {
  std::filesystem::path p(csv_path);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

int run_synth(const SynthCmd& cmd, std::ostream& out) {
  SyntheticParams p;
  if (cmd.generator == "concrete-like") {
    p.kind = GeneratorKind::heteroscedastic_gaussian;
    p.shape = MeanShape::friedman;
    p.lambda = 0.2;
  } else if (auto k = parse_generator(cmd.generator)) {
    p.kind = *k;
  } else {
    throw UsageError("unknown generator '" + cmd.generator + "'");
  }
  if (!cmd.noise_mode.empty() && cmd.noise_mode != "homoscedastic" && cmd.noise_mode != "heteroscedastic") {
    throw UsageError("--noise-mode must be homoscedastic or heteroscedastic");
  }
  if (cmd.lambda < 0.0) throw UsageError("--lambda must be >= 0");
  p.noise_covariates = cmd.noise_covariates;
  p.grid = cmd.grid;
  SyntheticDensity truth(p);
  auto data = truth.sample(cmd.n, cmd.seed);
  nlohmann::json perturbations = nlohmann::json::array();
  if (cmd.redundant_k > 0) {
    data = perturb_dataset(data, Perturbation::redundant_features(cmd.redundant_k), cmd.seed);
    perturbations.push_back({{"mode", "redundant_features"}, {"k", cmd.redundant_k}});
  }
  if (!cmd.noise_mode.empty()) {
    auto pert = cmd.noise_mode == "homoscedastic" ? Perturbation::homoscedastic(cmd.lambda)
                                                  : Perturbation::heteroscedastic(cmd.lambda);
    data = perturb_dataset(data, pert, cmd.seed);
    perturbations.push_back({{"mode", cmd.noise_mode}, {"lambda", cmd.lambda}});
  }
  write_csv(cmd.out, data);
  const auto schema_path = sibling(cmd.out, ".schema.json");
  const auto truth_path = sibling(cmd.out, ".truth.json");
  save_schema(schema_path, data.schema());
  nlohmann::json desc{{"truth", truth.to_json()}, {"n", cmd.n}, {"seed", cmd.seed}, {"perturbations", perturbations}};
  open_out(truth_path) << desc.dump(2) << '\n';
  out << "rows=" << data.n_rows() << " data=" << cmd.out << " schema=" << schema_path << " truth=" << truth_path
      << '\n';
  return kSuccess;
}

// ---- benchmark -------------------------------------------------------------

struct BenchmarkCmd {
  std::string sizes = "10000,20000,40000,80000";
  std::size_t repeats = 5;
  std::string generator = "step-uniform";
  std::uint64_t seed = 0;
  std::string out;
};

int run_benchmark(const BenchmarkCmd& cmd, std::ostream& out, std::ostream& err) {
  std::vector<std::size_t> sizes;
  for (const auto& s : split_list(cmd.sizes)) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || v == 0) throw UsageError("bad size '" + s + "'");
    sizes.push_back(v);
  }
  if (sizes.empty()) throw UsageError("--sizes is empty");
  if (cmd.repeats == 0) throw UsageError("--repeats must be positive");
  auto kind = parse_generator(cmd.generator);
  if (!kind) throw UsageError("unknown generator '" + cmd.generator + "'");
  SyntheticParams p;
  p.kind = *kind;
  SyntheticDensity truth(p);

  std::ostringstream table;
  table << "n,repeats,mean_seconds,min_seconds,max_seconds\n";
  std::vector<double> lx;
  std::vector<double> ly;
  for (auto n : sizes) {
    auto data = truth.sample(n, cmd.seed);
    FitConfig cfg;
    cfg.seed = cmd.seed;
    double total = 0.0;
    double lo = INFINITY;
    double hi = 0.0;
    for (std::size_t r = 0; r < cmd.repeats; ++r) {
      const auto start = std::chrono::steady_clock::now();
      auto tree = fit_tree(data, cfg);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      total += secs;
      lo = std::min(lo, secs);
      hi = std::max(hi, secs);
    }
    const double mean = total / static_cast<double>(cmd.repeats);
    table << n << ',' << cmd.repeats << ',' << format_real(mean) << ',' << format_real(lo) << ','
          << format_real(hi) << '\n';
    lx.push_back(std::log(static_cast<double>(n)));
    ly.push_back(std::log(mean));
  }
  double slope = 0.0;
  if (lx.size() >= 2) {
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      mx += lx[i];
      my += ly[i];
    }
    mx /= static_cast<double>(lx.size());
    my /= static_cast<double>(lx.size());
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxy += (lx[i] - mx) * (ly[i] - my);
      sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    slope = sxy / sxx;
  }
  out << table.str();
  if (!cmd.out.empty()) open_out(cmd.out) << table.str();
  err << "slope=" << format_real(slope) << '\n';
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Partition Trees and Partition Forests: conditional density estimation", "partition-tree");
  app.require_subcommand(1);

  FitCmd fit;
  auto* fit_app = app.add_subcommand("fit", "Fit a tree or forest and write the model file");
  fit_app->add_option("--data", fit.data, "Training CSV")->required();
  fit_app->add_option("--out", fit.out, "Model file to write")->required();
  add_schema_options(fit_app, fit.schema);
  add_fit_options(fit_app, fit.fit);

  PredictCmd predict;
  auto* predict_app = app.add_subcommand("predict", "Evaluate a model on a CSV file");
  predict_app->add_option("--model", predict.model, "Model file")->required();
  predict_app->add_option("--data", predict.data, "Input CSV")->required();
  predict_app->add_option("--mode", predict.mode, "density, point or bins");
  predict_app->add_option("--out", predict.out, "Output file")->required();

  EvaluateCmd evaluate;
  auto* eval_app = app.add_subcommand("evaluate", "Score a model, or cross-validate a configuration");
  eval_app->add_option("--model", evaluate.model, "Model file");
  eval_app->add_option("--data", evaluate.data, "Evaluation CSV")->required();
  eval_app->add_option("--metrics", evaluate.metrics, "Comma-separated: logloss, rmse, accuracy");
  eval_app->add_option("--folds", evaluate.folds, "Cross-validate with this many folds");
  eval_app->add_option("--fit-args", evaluate.fit_args, "Fit flags used for each fold, as one string");
  eval_app->add_option("--out", evaluate.out, "Write the report here instead of stdout");
  add_schema_options(eval_app, evaluate.schema);

  SynthCmd synth;
  auto* synth_app = app.add_subcommand("synth", "Sample a synthetic dataset with a known density");
  synth_app->add_option("--generator", synth.generator,
                        "step-uniform, heteroscedastic-gaussian-truncated, piecewise-constant-grid or concrete-like")
      ->required();
  synth_app->add_option("--n", synth.n, "Number of rows");
  synth_app->add_option("--seed", synth.seed, "Random seed");
  synth_app->add_option("--out", synth.out, "CSV path; schema and truth files are written beside it")->required();
  synth_app->add_option("--noise-covariates", synth.noise_covariates, "Irrelevant covariates to add");
  synth_app->add_option("--grid", synth.grid, "Grid resolution of piecewise-constant-grid");
  synth_app->add_option("--noise-mode", synth.noise_mode, "homoscedastic or heteroscedastic label noise");
  synth_app->add_option("--lambda", synth.lambda, "Label noise level");
  synth_app->add_option("--redundant-k", synth.redundant_k, "Noisy copies of covariates to append");

  BenchmarkCmd bench;
  auto* bench_app = app.add_subcommand("benchmark", "Time tree fits over dataset sizes");
  bench_app->add_option("--sizes", bench.sizes, "Comma-separated dataset sizes");
  bench_app->add_option("--repeats", bench.repeats, "Fits per size");
  bench_app->add_option("--generator", bench.generator, "Synthetic generator");
  bench_app->add_option("--seed", bench.seed, "Random seed");
  bench_app->add_option("--out", bench.out, "Also write the table to this CSV file");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return e.get_exit_code() == 0 ? kSuccess : kUsageError;
  }

  try {
    if (*fit_app) return run_fit(fit, out);
    if (*predict_app) return run_predict(predict);
    if (*eval_app) return run_evaluate(evaluate, out);
    if (*synth_app) return run_synth(synth, out);
    if (*bench_app) return run_benchmark(bench, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsageError;
}

}  // namespace partition_tree::cli
