#include "partition_tree/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "partition_tree/error.hpp"
#include "partition_tree/random.hpp"

namespace partition_tree {

std::string_view to_string(Role role) {
  return role == Role::covariate ? "covariate" : "outcome";
}

std::string_view to_string(ColumnKind kind) {
  return kind == ColumnKind::continuous ? "continuous" : "categorical";
}

ColumnSpec ColumnSpec::continuous(std::string name, Role role) {
  return ColumnSpec{std::move(name), ColumnKind::continuous, role, {}};
}

ColumnSpec ColumnSpec::categorical(std::string name, std::vector<std::string> alphabet, Role role) {
  return ColumnSpec{std::move(name), ColumnKind::categorical, role, std::move(alphabet)};
}

Schema::Schema(std::vector<ColumnSpec> columns) : columns_(std::move(columns)) {
  std::unordered_set<std::string> names;
  codes_.resize(columns_.size());
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    const auto& col = columns_[c];
    if (!names.insert(col.name).second) {
      throw SchemaError("duplicate column name '" + col.name + "'");
    }
    if (col.is_categorical()) {
      if (col.alphabet.empty()) {
        throw SchemaError("categorical column '" + col.name + "' has an empty alphabet");
      }
      for (std::size_t k = 0; k < col.alphabet.size(); ++k) {
        if (!codes_[c].emplace(col.alphabet[k], static_cast<std::int32_t>(k)).second) {
          throw SchemaError("categorical column '" + col.name + "' repeats label '" +
                            col.alphabet[k] + "'");
        }
      }
    } else if (!col.alphabet.empty()) {
      throw SchemaError("continuous column '" + col.name + "' carries an alphabet");
    }
    (col.is_outcome() ? outcomes_ : covariates_).push_back(c);
  }
  if (outcomes_.empty()) {
    throw SchemaError("schema has no outcome column");
  }
}

std::optional<std::size_t> Schema::find(std::string_view name) const {
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    if (columns_[c].name == name) return c;
  }
  return std::nullopt;
}

std::vector<std::size_t> Schema::indices(Role role, ColumnKind kind) const {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    if (columns_[c].role == role && columns_[c].kind == kind) out.push_back(c);
  }
  return out;
}

std::optional<std::int32_t> Schema::code_of(std::size_t c, std::string_view label) const {
  const auto& map = codes_.at(c);
  auto it = map.find(std::string(label));
  if (it == map.end()) return std::nullopt;
  return it->second;
}

nlohmann::json schema_to_json(const Schema& schema) {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& col : schema.columns()) {
    nlohmann::json entry;
    entry["name"] = col.name;
    if (col.is_continuous()) {
      entry["kind"] = "continuous";
    } else {
      entry["kind"] = {{"categorical", col.alphabet}};
    }
    entry["role"] = std::string(to_string(col.role));
    cols.push_back(std::move(entry));
  }
  return {{"columns", std::move(cols)}};
}

Schema schema_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("columns") || !doc["columns"].is_array()) {
    throw SchemaError("schema document: expected an object with a 'columns' array");
  }
  std::vector<ColumnSpec> cols;
  std::size_t i = 0;
  for (const auto& entry : doc["columns"]) {
    const std::string where = "schema document: /columns/" + std::to_string(i++);
    if (!entry.is_object() || !entry.contains("name") || !entry["name"].is_string()) {
      throw SchemaError(where + ": missing string 'name'");
    }
    ColumnSpec spec;
    spec.name = entry["name"].get<std::string>();
    const std::string role = entry.value("role", std::string("covariate"));
    if (role == "covariate") {
      spec.role = Role::covariate;
    } else if (role == "outcome") {
      spec.role = Role::outcome;
    } else {
      throw SchemaError(where + ": unknown role '" + role + "'");
    }
    if (!entry.contains("kind")) throw SchemaError(where + ": missing 'kind'");
    const auto& kind = entry["kind"];
    if (kind.is_string() && kind.get<std::string>() == "continuous") {
      spec.kind = ColumnKind::continuous;
    } else if (kind.is_object() && kind.contains("categorical") && kind["categorical"].is_array()) {
      spec.kind = ColumnKind::categorical;
      for (const auto& label : kind["categorical"]) {
        if (label.is_string()) {
          spec.alphabet.push_back(label.get<std::string>());
        } else if (label.is_number()) {
          spec.alphabet.push_back(label.dump());
        } else {
          throw SchemaError(where + ": categorical labels must be strings");
        }
      }
    } else {
      throw SchemaError(where + ": kind must be \"continuous\" or {\"categorical\": [...]}");
    }
    cols.push_back(std::move(spec));
  }
  return Schema(std::move(cols));
}

Schema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open schema file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("schema file " + path.string() + ": " + e.what());
  }
  return schema_from_json(doc);
}

void save_schema(const std::filesystem::path& path, const Schema& schema) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write schema file " + path.string());
  out << schema_to_json(schema).dump(2) << '\n';
}

Dataset::Dataset(Schema schema, std::vector<Column> columns, bool outcomes_present)
    : schema_(std::move(schema)), columns_(std::move(columns)), outcomes_present_(outcomes_present) {
  if (columns_.size() != schema_.size()) {
    throw SchemaError("dataset has " + std::to_string(columns_.size()) + " columns, schema has " +
                      std::to_string(schema_.size()));
  }
  bool first = true;
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    const auto& spec = schema_.column(c);
    const auto& col = columns_[c];
    std::size_t len = spec.is_continuous() ? col.reals.size() : col.codes.size();
    if ((spec.is_continuous() && !col.codes.empty()) || (spec.is_categorical() && !col.reals.empty())) {
      throw SchemaError("column '" + spec.name + "' stores values of the wrong kind");
    }
    if (first) {
      n_rows_ = len;
      first = false;
    } else if (len != n_rows_) {
      throw SchemaError("column '" + spec.name + "' has " + std::to_string(len) + " rows, expected " +
                        std::to_string(n_rows_));
    }
    if (spec.is_continuous()) {
      for (std::size_t r = 0; r < len; ++r) {
        if (!std::isfinite(col.reals[r])) {
          throw ParseError("column '" + spec.name + "' row " + std::to_string(r + 1) +
                           ": non-finite value");
        }
      }
    } else {
      const auto k = static_cast<std::int32_t>(spec.alphabet_size());
      for (std::size_t r = 0; r < len; ++r) {
        if (col.codes[r] < 0 || col.codes[r] >= k) {
          throw SchemaError("column '" + spec.name + "' row " + std::to_string(r + 1) +
                            ": code out of alphabet range");
        }
      }
    }
  }
}

Point Dataset::row(std::size_t r) const {
  Point p(columns_.size());
  for (std::size_t c = 0; c < columns_.size(); ++c) p[c] = value(r, c);
  return p;
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
  std::vector<Column> cols(columns_.size());
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    const auto& src = columns_[c];
    auto& dst = cols[c];
    if (schema_.column(c).is_continuous()) {
      dst.reals.reserve(rows.size());
      for (auto r : rows) dst.reals.push_back(src.reals.at(r));
    } else {
      dst.codes.reserve(rows.size());
      for (auto r : rows) dst.codes.push_back(src.codes.at(r));
    }
  }
  return Dataset(schema_, std::move(cols), outcomes_present_);
}

Dataset dataset_from_points(const Schema& schema, std::span<const Point> rows) {
  std::vector<Dataset::Column> cols(schema.size());
  for (const auto& p : rows) {
    if (p.size() != schema.size()) throw SchemaError("point dimension does not match schema");
    for (std::size_t c = 0; c < schema.size(); ++c) {
      if (schema.column(c).is_continuous()) {
        cols[c].reals.push_back(p[c]);
      } else {
        cols[c].codes.push_back(static_cast<std::int32_t>(std::lround(p[c])));
      }
    }
  }
  return Dataset(schema, std::move(cols));
}

// ---------------------------------------------------------------------------
// CSV

CsvTable parse_csv(std::istream& in) {
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) text.erase(0, 3);

  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    // A blank line produces a single empty field; skip it.
    if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (field_started && !field.empty()) {
          throw ParseError("line " + std::to_string(line) + ": stray quote inside unquoted field");
        }
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;
        [[fallthrough]];
      case '\n':
        end_record();
        ++line;
        break;
      default:
        field.push_back(ch);
        field_started = true;
    }
  }
  if (in_quotes) throw ParseError("unterminated quoted field at end of input");
  if (field_started || !field.empty() || !record.empty()) end_record();

  CsvTable table;
  if (records.empty()) throw ParseError("CSV input has no header row");
  table.header = std::move(records.front());
  table.rows.assign(std::make_move_iterator(records.begin() + 1), std::make_move_iterator(records.end()));
  return table;
}

std::string format_real(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::string quote_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::optional<double> parse_real(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return std::nullopt;
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return std::nullopt;
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

Dataset read_csv(std::istream& in, const Schema& schema, const CsvOptions& options) {
  CsvTable table = parse_csv(in);

  // schema column -> file column
  std::vector<std::optional<std::size_t>> source(schema.size());
  for (std::size_t f = 0; f < table.header.size(); ++f) {
    std::string name(trim(table.header[f]));
    auto c = schema.find(name);
    if (!c) throw SchemaError("CSV column '" + name + "' is not in the schema");
    if (source[*c]) throw SchemaError("CSV column '" + name + "' appears twice");
    source[*c] = f;
  }
  bool outcomes_present = true;
  for (std::size_t c = 0; c < schema.size(); ++c) {
    if (source[c]) continue;
    if (options.outcomes_optional && schema.column(c).is_outcome()) {
      outcomes_present = false;
      continue;
    }
    throw SchemaError("CSV is missing column '" + schema.column(c).name + "'");
  }
  if (!outcomes_present) {
    for (auto c : schema.outcomes()) {
      if (source[c]) {
        throw SchemaError("CSV has only some outcome columns; '" + schema.column(c).name +
                          "' present but others missing");
      }
    }
  }

  const std::size_t n = table.rows.size();
  std::vector<Dataset::Column> cols(schema.size());
  for (std::size_t c = 0; c < schema.size(); ++c) {
    if (schema.column(c).is_continuous()) {
      cols[c].reals.resize(n, 0.0);
    } else {
      cols[c].codes.resize(n, 0);
    }
  }
  for (std::size_t r = 0; r < n; ++r) {
    const auto& rec = table.rows[r];
    if (rec.size() != table.header.size()) {
      throw ParseError("row " + std::to_string(r + 1) + ": expected " + std::to_string(table.header.size()) +
                       " fields, found " + std::to_string(rec.size()));
    }
    for (std::size_t c = 0; c < schema.size(); ++c) {
      if (!source[c]) continue;
      const auto& spec = schema.column(c);
      const std::string& raw = rec[*source[c]];
      if (spec.is_continuous()) {
        if (trim(raw).empty()) {
          throw ParseError("row " + std::to_string(r + 1) + ", column '" + spec.name + "': missing value");
        }
        auto v = parse_real(raw);
        if (!v) {
          throw ParseError("row " + std::to_string(r + 1) + ", column '" + spec.name +
                           "': cannot parse '" + raw + "' as a finite real");
        }
        cols[c].reals[r] = *v;
      } else {
        if (raw.empty()) {
          throw ParseError("row " + std::to_string(r + 1) + ", column '" + spec.name + "': missing value");
        }
        auto code = schema.code_of(c, raw);
        if (!code) code = schema.code_of(c, trim(raw));
        if (!code) {
          throw SchemaError("row " + std::to_string(r + 1) + ", column '" + spec.name + "': label '" + raw +
                            "' is not in the alphabet");
        }
        cols[c].codes[r] = *code;
      }
    }
  }
  return Dataset(schema, std::move(cols), outcomes_present);
}

Dataset load_csv(const std::filesystem::path& path, const Schema& schema, const CsvOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open data file " + path.string());
  return read_csv(in, schema, options);
}

void write_csv(std::ostream& out, const Dataset& data) {
  const auto& schema = data.schema();
  for (std::size_t c = 0; c < schema.size(); ++c) {
    if (c) out << ',';
    out << quote_field(schema.column(c).name);
  }
  out << '\n';
  for (std::size_t r = 0; r < data.n_rows(); ++r) {
    for (std::size_t c = 0; c < schema.size(); ++c) {
      if (c) out << ',';
      const auto& spec = schema.column(c);
      if (spec.is_continuous()) {
        out << format_real(data.real_column(c)[r]);
      } else {
        out << quote_field(spec.alphabet[data.code_column(c)[r]]);
      }
    }
    out << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_csv(out, data);
}

Schema infer_schema(std::istream& in, const InferOptions& options) {
  CsvTable table = parse_csv(in);
  std::vector<std::string> names;
  for (const auto& h : table.header) names.emplace_back(trim(h));
  for (const auto& [name, role] : options.roles) {
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      throw SchemaError("role map names column '" + name + "' which is not in the file");
    }
  }
  for (const auto& [name, kind] : options.kind_overrides) {
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      throw SchemaError("kind override names column '" + name + "' which is not in the file");
    }
  }

  std::vector<ColumnSpec> cols;
  for (std::size_t f = 0; f < names.size(); ++f) {
    bool numeric = true;
    std::set<std::string> labels;
    std::set<double> reals;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const auto& rec = table.rows[r];
      if (rec.size() != names.size()) {
        throw ParseError("row " + std::to_string(r + 1) + ": expected " + std::to_string(names.size()) +
                         " fields, found " + std::to_string(rec.size()));
      }
      if (rec[f].empty()) {
        throw ParseError("row " + std::to_string(r + 1) + ", column '" + names[f] + "': missing value");
      }
      labels.insert(rec[f]);
      if (numeric) {
        if (auto v = parse_real(rec[f])) {
          reals.insert(*v);
        } else {
          numeric = false;
        }
      }
    }
    Role role = Role::covariate;
    if (auto it = options.roles.find(names[f]); it != options.roles.end()) role = it->second;

    ColumnKind kind;
    if (auto it = options.kind_overrides.find(names[f]); it != options.kind_overrides.end()) {
      kind = it->second;
      if (kind == ColumnKind::continuous && !numeric) {
        throw SchemaError("column '" + names[f] + "' forced continuous but holds non-numeric values");
      }
    } else if (labels.empty()) {
      kind = ColumnKind::continuous;
    } else {
      kind = numeric && reals.size() > options.categorical_threshold ? ColumnKind::continuous
                                                                     : ColumnKind::categorical;
    }

    if (kind == ColumnKind::continuous) {
      cols.push_back(ColumnSpec::continuous(names[f], role));
    } else {
      std::vector<std::string> alphabet(labels.begin(), labels.end());
      if (numeric) {
        std::stable_sort(alphabet.begin(), alphabet.end(), [](const std::string& a, const std::string& b) {
          return *parse_real(a) < *parse_real(b);
        });
      }
      cols.push_back(ColumnSpec::categorical(names[f], std::move(alphabet), role));
    }
  }
  return Schema(std::move(cols));
}

Schema infer_schema(const std::filesystem::path& path, const InferOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open data file " + path.string());
  return infer_schema(in, options);
}

// ---------------------------------------------------------------------------
// Perturbations

namespace {

double mean_abs(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s / static_cast<double>(v.size());
}

std::size_t single_continuous_outcome(const Schema& schema) {
  auto cont = schema.indices(Role::outcome, ColumnKind::continuous);
  if (cont.size() != 1 || schema.outcomes().size() != 1) {
    throw UnsupportedModeError("label-noise perturbation requires exactly one continuous outcome column");
  }
  return cont.front();
}

}  // namespace

Dataset perturb_dataset(const Dataset& data, const Perturbation& perturbation, std::uint64_t seed) {
  const auto& schema = data.schema();
  const std::size_t n = data.n_rows();
  std::vector<Dataset::Column> cols;
  cols.reserve(schema.size() + perturbation.k);
  for (std::size_t c = 0; c < schema.size(); ++c) cols.push_back(data.column(c));

  switch (perturbation.mode) {
    case Perturbation::Mode::redundant_features: {
      auto sources = schema.indices(Role::covariate, ColumnKind::continuous);
      if (sources.empty() && perturbation.k > 0) {
        throw UnsupportedModeError("redundant features need at least one continuous covariate");
      }
      Rng pick = make_stream(seed, "perturb/redundant-pick");
      std::vector<ColumnSpec> specs = schema.columns();
      std::unordered_set<std::string> names;
      for (const auto& s : specs) names.insert(s.name);
      std::uniform_int_distribution<std::size_t> choose(0, sources.empty() ? 0 : sources.size() - 1);
      for (std::size_t i = 0; i < perturbation.k; ++i) {
        std::size_t src = sources[choose(pick)];
        auto values = data.real_column(src);
        double sigma = mean_abs(values);
        Rng noise = make_stream(seed, "perturb/redundant-noise", i);
        std::normal_distribution<double> gauss(0.0, 1.0);
        Dataset::Column col;
        col.reals.resize(n);
        for (std::size_t r = 0; r < n; ++r) col.reals[r] = values[r] + sigma * gauss(noise);
        std::string name = schema.column(src).name + "_redundant" + std::to_string(i + 1);
        while (!names.insert(name).second) name += "_";
        specs.push_back(ColumnSpec::continuous(std::move(name), Role::covariate));
        cols.push_back(std::move(col));
      }
      return Dataset(Schema(std::move(specs)), std::move(cols), data.outcomes_present());
    }
    case Perturbation::Mode::homoscedastic:
    case Perturbation::Mode::heteroscedastic: {
      if (perturbation.lambda < 0.0) throw ConfigError("noise lambda must be non-negative");
      std::size_t y = single_continuous_outcome(schema);
      auto values = data.real_column(y);
      Rng noise = make_stream(seed, "perturb/label-noise");
      std::normal_distribution<double> gauss(0.0, 1.0);
      const double homo_sigma = perturbation.lambda * mean_abs(values);
      auto& out = cols[y].reals;
      for (std::size_t r = 0; r < n; ++r) {
        double sigma = perturbation.mode == Perturbation::Mode::homoscedastic
                           ? homo_sigma
                           : perturbation.lambda * std::abs(values[r]);
        double z = gauss(noise);
        if (sigma > 0.0) out[r] = values[r] + sigma * z;
      }
      return Dataset(schema, std::move(cols), data.outcomes_present());
    }
  }
  throw ConsistencyError("unhandled perturbation mode");
}

}  // namespace partition_tree
