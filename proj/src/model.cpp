#include "partition_tree/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json_util.hpp"
#include "partition_tree/error.hpp"
#include "partition_tree/forest.hpp"
#include "partition_tree/tree.hpp"

namespace partition_tree {

std::size_t PredictiveDensity::find_bin(const Point& z) const {
  for (std::size_t b = 0; b < bins.size(); ++b) {
    bool inside = true;
    for (std::size_t j = 0; j < outcome_columns.size() && inside; ++j) {
      inside = side_contains(bins[b].sides[j], z[outcome_columns[j]]);
    }
    if (inside) return b;
  }
  return npos;
}

double PredictiveDensity::evaluate(const Point& z) const {
  auto b = find_bin(z);
  return b == npos ? 0.0 : normalized_value(bins[b]);
}

double PredictiveDensity::total_mass() const {
  double m = 0.0;
  for (const auto& bin : bins) m += mass(bin);
  return m;
}

double ConditionalDensityModel::normalized_density(const Point& z) const {
  if (!outcome_box().contains(z)) return 0.0;
  const double norm = normalizer(z);
  if (!(norm > 0.0)) return 1.0 / outcome_box().volume();
  return density(z) / norm;
}

double ConditionalDensityModel::log_density(const Point& z) const {
  return std::log(std::max(normalized_density(z), density_floor()));
}

Point ConditionalDensityModel::point_predict(const Point& x) const {
  const auto& schema = this->schema();
  const auto& outs = schema.outcomes();
  const bool regression = outs.size() == 1 && schema.column(outs[0]).is_continuous();
  const bool classification = std::all_of(outs.begin(), outs.end(),
                                          [&](std::size_t c) { return schema.column(c).is_categorical(); });
  if (!regression && !classification) {
    throw UnsupportedModeError("point prediction needs one continuous outcome or only categorical outcomes");
  }
  const auto pd = predictive_density(x);
  Point out = x;
  out.resize(schema.size(), 0.0);
  if (regression) {
    double mean = 0.0;
    for (const auto& bin : pd.bins) {
      const auto& iv = std::get<Interval>(bin.sides[0]);
      mean += pd.mass(bin) * std::midpoint(iv.lo, iv.hi);
    }
    out[outs[0]] = mean;
    return out;
  }
  const OutcomeBin* best = nullptr;
  std::vector<std::int32_t> best_atom;
  for (const auto& bin : pd.bins) {
    std::vector<std::int32_t> atom;
    for (const auto& side : bin.sides) atom.push_back(std::get<CategorySet>(side).members().front());
    const double v = pd.normalized_value(bin);
    if (!best || v > pd.normalized_value(*best) || (v == pd.normalized_value(*best) && atom < best_atom)) {
      best = &bin;
      best_atom = std::move(atom);
    }
  }
  for (std::size_t j = 0; j < outs.size(); ++j) out[outs[j]] = static_cast<double>(best_atom[j]);
  return out;
}

void save_model(const std::filesystem::path& path, const ConditionalDensityModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write model file " + path.string());
  out << model.to_json().dump() << '\n';
  if (!out) throw Error("failed writing model file " + path.string());
}

std::unique_ptr<ConditionalDensityModel> model_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ModelLoadError("model document is not a JSON object");
  auto kind = detail::get_as<std::string>(doc, "kind", "");
  if (kind == "partition_tree") return std::make_unique<PartitionTree>(PartitionTree::from_json(doc));
  if (kind == "partition_forest") return std::make_unique<PartitionForest>(PartitionForest::from_json(doc));
  throw ModelLoadError("/kind: unknown model kind '" + kind + "'");
}

std::unique_ptr<ConditionalDensityModel> load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelLoadError("cannot open model file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ModelLoadError(path.string() + ": malformed model document at byte " + std::to_string(e.byte) + ": " +
                         e.what());
  }
  try {
    return model_from_json(doc);
  } catch (const ModelLoadError& e) {
    throw ModelLoadError(path.string() + ": " + e.what());
  }
}

}  // namespace partition_tree
