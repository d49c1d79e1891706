#pragma once

// Minimal TOML subset -> json tree: [table.subtable] headers, key = value
// with string / bool / number / flat arrays, and # comments. Enough for the
// scenario documents; JSON remains a first-class alternative.

#include <json.hpp>

#include <stdexcept>
#include <string>

namespace hopper {

struct TomlError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

nlohmann::json parse_toml(const std::string& text);
nlohmann::json load_config_file(const std::string& path);  // .toml or .json by extension

}  // namespace hopper
