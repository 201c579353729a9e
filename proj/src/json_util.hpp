#pragma once

#include <string>
#include <string_view>

#include "json.hpp"
#include "partition_tree/error.hpp"

namespace partition_tree::detail {

inline const nlohmann::json& field(const nlohmann::json& obj, std::string_view key, const std::string& loc) {
  if (!obj.is_object()) throw ModelLoadError(loc + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ModelLoadError(loc + ": missing field '" + std::string(key) + "'");
  return *it;
}

template <typename T>
T get_as(const nlohmann::json& obj, std::string_view key, const std::string& loc) {
  const auto& v = field(obj, key, loc);
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ModelLoadError(loc + "/" + std::string(key) + ": " + e.what());
  }
}

inline void check_header(const nlohmann::json& doc, std::string_view kind) {
  if (!doc.is_object()) throw ModelLoadError("model document is not a JSON object");
  int version = get_as<int>(doc, "format_version", "");
  if (version != 1) throw ModelLoadError("/format_version: unsupported version " + std::to_string(version));
  auto k = get_as<std::string>(doc, "kind", "");
  if (k != kind) throw ModelLoadError("/kind: expected '" + std::string(kind) + "', found '" + k + "'");
}

}  // namespace partition_tree::detail
