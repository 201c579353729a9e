#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace partition_tree {

enum class ColumnKind { continuous, categorical };
enum class Role { covariate, outcome };

std::string_view to_string(Role role);
std::string_view to_string(ColumnKind kind);

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::continuous;
  Role role = Role::covariate;
  // Category labels in code order; empty for continuous columns.
  std::vector<std::string> alphabet;

  static ColumnSpec continuous(std::string name, Role role);
  static ColumnSpec categorical(std::string name, std::vector<std::string> alphabet, Role role);

  bool is_continuous() const { return kind == ColumnKind::continuous; }
  bool is_categorical() const { return kind == ColumnKind::categorical; }
  bool is_outcome() const { return role == Role::outcome; }
  std::size_t alphabet_size() const { return alphabet.size(); }

  friend bool operator==(const ColumnSpec&, const ColumnSpec&) = default;
};

// Ordered, validated list of columns. Every coordinate of the joint
// covariate/outcome space is addressed by its index in this list.
class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<ColumnSpec> columns);

  const std::vector<ColumnSpec>& columns() const { return columns_; }
  const ColumnSpec& column(std::size_t c) const { return columns_.at(c); }
  std::size_t size() const { return columns_.size(); }
  std::optional<std::size_t> find(std::string_view name) const;

  // Column indices by role, in schema order.
  const std::vector<std::size_t>& covariates() const { return covariates_; }
  const std::vector<std::size_t>& outcomes() const { return outcomes_; }

  std::vector<std::size_t> indices(Role role, ColumnKind kind) const;

  // Code of a category label, or nullopt when the label is not in the alphabet.
  std::optional<std::int32_t> code_of(std::size_t c, std::string_view label) const;

  friend bool operator==(const Schema& a, const Schema& b) { return a.columns_ == b.columns_; }

 private:
  std::vector<ColumnSpec> columns_;
  std::vector<std::size_t> covariates_;
  std::vector<std::size_t> outcomes_;
  std::vector<std::unordered_map<std::string, std::int32_t>> codes_;
};

nlohmann::json schema_to_json(const Schema& schema);
Schema schema_from_json(const nlohmann::json& doc);
Schema load_schema(const std::filesystem::path& path);
void save_schema(const std::filesystem::path& path, const Schema& schema);

// A point of the joint space: one entry per schema column. Categorical
// entries hold the integer code. Covariate-only queries may leave the
// outcome entries at any value; they are ignored.
using Point = std::vector<double>;
using RowIndex = std::uint32_t;

// Immutable column store.
class Dataset {
 public:
  struct Column {
    std::vector<double> reals;         // continuous columns
    std::vector<std::int32_t> codes;   // categorical columns
    friend bool operator==(const Column&, const Column&) = default;
  };

  Dataset() = default;
  // Validates lengths, codes and finiteness.
  Dataset(Schema schema, std::vector<Column> columns, bool outcomes_present = true);

  const Schema& schema() const { return schema_; }
  std::size_t n_rows() const { return n_rows_; }
  bool outcomes_present() const { return outcomes_present_; }

  std::span<const double> real_column(std::size_t c) const { return columns_[c].reals; }
  std::span<const std::int32_t> code_column(std::size_t c) const { return columns_[c].codes; }
  const Column& column(std::size_t c) const { return columns_[c]; }

  double value(std::size_t row, std::size_t c) const {
    const auto& col = columns_[c];
    return col.codes.empty() ? col.reals[row] : static_cast<double>(col.codes[row]);
  }
  Point row(std::size_t r) const;

  // Copies the given rows (repetitions allowed) into a new dataset.
  Dataset select_rows(std::span<const std::size_t> rows) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  Schema schema_;
  std::vector<Column> columns_;
  std::size_t n_rows_ = 0;
  bool outcomes_present_ = true;
};

// Builds a dataset from row-major points; used by tests and generators.
Dataset dataset_from_points(const Schema& schema, std::span<const Point> rows);

struct CsvOptions {
  // When true, outcome columns may be absent from the file (prediction input).
  // They are then filled with placeholders and outcomes_present() is false.
  bool outcomes_optional = false;
};

Dataset load_csv(const std::filesystem::path& path, const Schema& schema, const CsvOptions& options = {});
Dataset read_csv(std::istream& in, const Schema& schema, const CsvOptions& options = {});
void write_csv(const std::filesystem::path& path, const Dataset& data);
void write_csv(std::ostream& out, const Dataset& data);

struct InferOptions {
  std::map<std::string, Role> roles;  // columns not listed are covariates
  std::size_t categorical_threshold = 20;
  std::map<std::string, ColumnKind> kind_overrides;
};

Schema infer_schema(const std::filesystem::path& path, const InferOptions& options);
Schema infer_schema(std::istream& in, const InferOptions& options);

// Generic RFC 4180 reader used by load_csv/infer_schema.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
CsvTable parse_csv(std::istream& in);

// Shortest decimal text that parses back to the same double.
std::string format_real(double v);
// Strict real parser: whole field, finite values only.
std::optional<double> parse_real(std::string_view text);

struct Perturbation {
  enum class Mode { redundant_features, homoscedastic, heteroscedastic };
  Mode mode = Mode::homoscedastic;
  std::size_t k = 0;    // redundant_features
  double lambda = 0.0;  // noise modes

  static Perturbation redundant_features(std::size_t k) { return {Mode::redundant_features, k, 0.0}; }
  static Perturbation homoscedastic(double lambda) { return {Mode::homoscedastic, 0, lambda}; }
  static Perturbation heteroscedastic(double lambda) { return {Mode::heteroscedastic, 0, lambda}; }
};

// Returns a perturbed copy; the input is never modified. Same seed, same output.
Dataset perturb_dataset(const Dataset& data, const Perturbation& perturbation, std::uint64_t seed);

}  // namespace partition_tree
