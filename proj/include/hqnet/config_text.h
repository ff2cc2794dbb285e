#pragma once

#include <string>
#include <vector>

namespace hqnet {

// Subset of TOML: [section] headers, key = value lines, # comments, numbers,
// booleans, double-quoted strings and (possibly multi-line, nested) arrays.
struct ConfigValue {
  enum class Kind { number, boolean, string, array };
  Kind kind = Kind::number;
  double number = 0.0;
  bool boolean = false;
  std::string text;  // raw token for numbers, contents for strings
  std::vector<ConfigValue> items;
  int line = 0;
};

struct ConfigEntry {
  std::string key;  // dotted: section.key
  ConfigValue value;
};

struct ConfigDocument {
  std::vector<ConfigEntry> entries;

  const ConfigEntry* find(const std::string& key) const;
  ConfigEntry* find(const std::string& key);
};

// Throws Error(config_invalid) naming the offending line.
ConfigDocument parse_config(const std::string& text);

// Renders a value back to TOML syntax.
std::string format_value(const ConfigValue& v);

}  // namespace hqnet
