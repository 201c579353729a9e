#include "partition_tree/geometry.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "partition_tree/error.hpp"

namespace partition_tree {

CategorySet::CategorySet(std::size_t alphabet_size)
    : alphabet_size_(alphabet_size), words_((alphabet_size + 63) / 64, 0ULL) {}

CategorySet CategorySet::full(std::size_t alphabet_size) {
  CategorySet s(alphabet_size);
  for (std::size_t i = 0; i < alphabet_size; ++i) s.insert(static_cast<std::int32_t>(i));
  return s;
}

CategorySet CategorySet::of(std::size_t alphabet_size, std::span<const std::int32_t> codes) {
  CategorySet s(alphabet_size);
  for (auto c : codes) s.insert(c);
  return s;
}

void CategorySet::insert(std::int32_t code) {
  if (code < 0 || static_cast<std::size_t>(code) >= alphabet_size_) {
    throw ConsistencyError("category code outside alphabet");
  }
  words_[static_cast<std::size_t>(code) >> 6] |= 1ULL << (code & 63);
}

void CategorySet::erase(std::int32_t code) {
  if (code < 0 || static_cast<std::size_t>(code) >= alphabet_size_) return;
  words_[static_cast<std::size_t>(code) >> 6] &= ~(1ULL << (code & 63));
}

std::size_t CategorySet::count() const {
  std::size_t n = 0;
  for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

std::vector<std::int32_t> CategorySet::members() const {
  std::vector<std::int32_t> out;
  for (std::size_t i = 0; i < alphabet_size_; ++i) {
    if (contains(static_cast<std::int32_t>(i))) out.push_back(static_cast<std::int32_t>(i));
  }
  return out;
}

CategorySet CategorySet::operator&(const CategorySet& other) const {
  CategorySet out(alphabet_size_);
  for (std::size_t w = 0; w < words_.size(); ++w) out.words_[w] = words_[w] & other.words_.at(w);
  return out;
}

CategorySet CategorySet::minus(const CategorySet& other) const {
  CategorySet out(alphabet_size_);
  for (std::size_t w = 0; w < words_.size(); ++w) out.words_[w] = words_[w] & ~other.words_.at(w);
  return out;
}

bool CategorySet::is_subset_of(const CategorySet& other) const {
  for (std::size_t w = 0; w < words_.size(); ++w) {
    if (words_[w] & ~other.words_.at(w)) return false;
  }
  return true;
}

Cell::Cell(std::vector<Side> sides, std::vector<Role> roles)
    : sides_(std::move(sides)), roles_(std::move(roles)) {
  if (sides_.size() != roles_.size()) throw ConsistencyError("cell sides and roles differ in length");
  for (const auto& s : sides_) {
    if (const auto* cats = std::get_if<CategorySet>(&s); cats && cats->empty()) {
      throw ConsistencyError("cell has an empty categorical side");
    }
  }
}

bool side_contains(const Side& side, double value) {
  if (const auto* iv = std::get_if<Interval>(&side)) return iv->contains(value);
  return std::get<CategorySet>(side).contains(static_cast<std::int32_t>(std::lround(value)));
}

double side_measure(const Side& side) {
  if (const auto* iv = std::get_if<Interval>(&side)) return iv->length();
  return static_cast<double>(std::get<CategorySet>(side).count());
}

bool contains(const Cell& cell, const Point& z) {
  for (std::size_t c = 0; c < cell.dimension(); ++c) {
    if (!side_contains(cell.side(c), z[c])) return false;
  }
  return true;
}

bool contains_x(const Cell& cell, const Point& z) {
  for (std::size_t c = 0; c < cell.dimension(); ++c) {
    if (cell.role(c) == Role::covariate && !side_contains(cell.side(c), z[c])) return false;
  }
  return true;
}

bool contains_y(const Cell& cell, const Point& z) {
  for (std::size_t c = 0; c < cell.dimension(); ++c) {
    if (cell.role(c) == Role::outcome && !side_contains(cell.side(c), z[c])) return false;
  }
  return true;
}

double mu_y(const Cell& cell) {
  double continuous = 1.0;
  double counting = 1.0;
  for (std::size_t c = 0; c < cell.dimension(); ++c) {
    if (cell.role(c) != Role::outcome) continue;
    if (cell.is_continuous(c)) {
      continuous *= cell.interval(c).length();
    } else {
      counting *= static_cast<double>(cell.categories(c).count());
    }
  }
  return continuous * counting;
}

double mu_y_with_side(const Cell& cell, std::size_t column, const Side& replacement) {
  double continuous = 1.0;
  double counting = 1.0;
  for (std::size_t c = 0; c < cell.dimension(); ++c) {
    if (cell.role(c) != Role::outcome) continue;
    const Side& s = c == column ? replacement : cell.side(c);
    if (const auto* iv = std::get_if<Interval>(&s)) {
      continuous *= iv->length();
    } else {
      counting *= static_cast<double>(std::get<CategorySet>(s).count());
    }
  }
  return continuous * counting;
}

double bounded_transform(double u) {
  if (std::isinf(u)) return 1.0;
  return u / (1.0 + u);
}

double diameter(const Cell& cell) {
  double sq = 0.0;
  bool unbounded = false;
  double categorical = 0.0;
  for (std::size_t c = 0; c < cell.dimension(); ++c) {
    if (cell.is_continuous(c)) {
      double len = cell.interval(c).length();
      if (std::isinf(len)) {
        unbounded = true;
      } else {
        sq += len * len;
      }
    } else {
      const auto& cats = cell.categories(c);
      if (cats.alphabet_size() >= 2) {
        categorical += static_cast<double>(cats.count() - 1) / static_cast<double>(cats.alphabet_size() - 1);
      }
    }
  }
  double cont = unbounded ? 1.0 : bounded_transform(std::sqrt(sq));
  return cont + categorical;
}

double OutcomeBox::volume() const {
  double v = 1.0;
  for (const auto& s : sides) v *= side_measure(s);
  return v;
}

bool OutcomeBox::contains(const Point& z) const {
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (!side_contains(sides[j], z[columns[j]])) return false;
  }
  return true;
}

const Side& OutcomeBox::side_for(std::size_t column) const {
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j] == column) return sides[j];
  }
  throw ConsistencyError("column " + std::to_string(column) + " is not an outcome column of the box");
}

namespace {

OutcomeBox build_box_impl(const Dataset& data, std::span<const RowIndex> rows, bool all_rows,
                          double expansion_factor) {
  const std::size_t n = all_rows ? data.n_rows() : rows.size();
  if (n == 0) throw ConfigError("outcome box is undefined for an empty dataset");
  if (!(expansion_factor >= 0.0) || !std::isfinite(expansion_factor)) {
    throw ConfigError("expansion factor must be a finite value >= 0");
  }
  const auto& schema = data.schema();
  OutcomeBox box;
  for (auto c : schema.outcomes()) {
    box.columns.push_back(c);
    const auto& spec = schema.column(c);
    if (spec.is_categorical()) {
      box.sides.emplace_back(CategorySet::full(spec.alphabet_size()));
      box.padding.push_back(0.0);
      continue;
    }
    auto values = data.real_column(c);
    double lo = kInfinity;
    double hi = -kInfinity;
    for (std::size_t i = 0; i < n; ++i) {
      double v = values[all_rows ? i : rows[i]];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    double delta;
    if (hi > lo) {
      delta = expansion_factor * (hi - lo);
    } else {
      delta = 0.5;
    }
    box.sides.emplace_back(Interval{lo - delta, hi + delta, true});
    box.padding.push_back(delta);
  }
  return box;
}

}  // namespace

OutcomeBox build_outcome_box(const Dataset& data, double expansion_factor) {
  return build_box_impl(data, {}, true, expansion_factor);
}

OutcomeBox build_outcome_box(const Dataset& data, std::span<const RowIndex> rows, double expansion_factor) {
  return build_box_impl(data, rows, false, expansion_factor);
}

Cell root_cell(const Schema& schema, const OutcomeBox& box) {
  std::vector<Side> sides;
  std::vector<Role> roles;
  for (std::size_t c = 0; c < schema.size(); ++c) {
    const auto& spec = schema.column(c);
    roles.push_back(spec.role);
    if (spec.is_outcome()) {
      sides.push_back(box.side_for(c));
    } else if (spec.is_continuous()) {
      sides.emplace_back(Interval{});
    } else {
      sides.emplace_back(CategorySet::full(spec.alphabet_size()));
    }
  }
  return Cell(std::move(sides), std::move(roles));
}

nlohmann::json outcome_box_to_json(const OutcomeBox& box) {
  nlohmann::json sides = nlohmann::json::array();
  for (std::size_t j = 0; j < box.columns.size(); ++j) {
    nlohmann::json s;
    s["column"] = box.columns[j];
    if (const auto* iv = std::get_if<Interval>(&box.sides[j])) {
      s["lo"] = iv->lo;
      s["hi"] = iv->hi;
      s["padding"] = box.padding[j];
    } else {
      s["categories"] = std::get<CategorySet>(box.sides[j]).members();
    }
    sides.push_back(std::move(s));
  }
  return {{"sides", std::move(sides)}};
}

OutcomeBox outcome_box_from_json(const nlohmann::json& doc, const Schema& schema) {
  OutcomeBox box;
  const auto& sides = doc.at("sides");
  if (!sides.is_array() || sides.size() != schema.outcomes().size()) {
    throw ModelLoadError("outcome_box: expected one side per outcome column");
  }
  for (std::size_t j = 0; j < sides.size(); ++j) {
    const auto& s = sides[j];
    std::size_t c = s.at("column").get<std::size_t>();
    if (c != schema.outcomes()[j]) throw ModelLoadError("outcome_box: column order does not match schema");
    box.columns.push_back(c);
    const auto& spec = schema.column(c);
    if (spec.is_continuous()) {
      double lo = s.at("lo").get<double>();
      double hi = s.at("hi").get<double>();
      if (!(lo < hi)) throw ModelLoadError("outcome_box: side " + std::to_string(j) + " has lo >= hi");
      box.sides.emplace_back(Interval{lo, hi, true});
      box.padding.push_back(s.at("padding").get<double>());
    } else {
      auto codes = s.at("categories").get<std::vector<std::int32_t>>();
      if (codes.size() != spec.alphabet_size()) {
        throw ModelLoadError("outcome_box: categorical side must hold the full alphabet");
      }
      box.sides.emplace_back(CategorySet::full(spec.alphabet_size()));
      box.padding.push_back(0.0);
    }
  }
  return box;
}

}  // namespace partition_tree
