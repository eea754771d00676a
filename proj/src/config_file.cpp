// SPDX-License-Identifier: Apache-2.0
#include "azo/config_file.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "azo/errors.hpp"
#include "azo/numeric_io.hpp"

namespace azo {
namespace {

bool valid_key(std::string_view key) {
  if (key.empty()) return false;
  for (char c : key) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '.' || c == '-' || c == '_';
    if (!ok) return false;
  }
  return true;
}

}  // namespace

ConfigFile ConfigFile::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_string(buffer.str(), path.string());
}

ConfigFile ConfigFile::parse_string(const std::string& text, const std::string& origin) {
  ConfigFile cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      line.erase(hash);
    }
    const auto content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key{trim(content.substr(0, eq))};
    const std::string value{trim(content.substr(eq + 1))};
    if (!valid_key(key)) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": invalid key '" + key + "'");
    }
    if (cfg.entries_.count(key) != 0) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    cfg.entries_[key] = value;
  }
  return cfg;
}

bool ConfigFile::has(const std::string& key) const { return entries_.count(key) != 0; }

std::optional<std::string> ConfigFile::raw(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  consumed_.insert(key);
  return it->second;
}

std::string ConfigFile::get_string(const std::string& key, const std::string& fallback) const {
  return raw(key).value_or(fallback);
}

std::string ConfigFile::require_string(const std::string& key) const {
  const auto value = raw(key);
  if (!value) {
    throw ConfigError(origin_ + ": missing required key '" + key + "'");
  }
  return *value;
}

std::int64_t ConfigFile::get_int(const std::string& key, std::int64_t fallback) const {
  const auto value = raw(key);
  if (!value) return fallback;
  std::int64_t out = 0;
  const auto* begin = value->data();
  const auto* end = begin + value->size();
  const auto result = std::from_chars(begin, end, out);
  if (result.ec != std::errc{} || result.ptr != end) {
    throw ConfigError(origin_ + ": key '" + key + "' is not an integer: '" + *value + "'");
  }
  return out;
}

std::uint64_t ConfigFile::get_u64(const std::string& key, std::uint64_t fallback) const {
  const auto value = raw(key);
  if (!value) return fallback;
  std::uint64_t out = 0;
  const auto* begin = value->data();
  const auto* end = begin + value->size();
  const auto result = std::from_chars(begin, end, out);
  if (result.ec != std::errc{} || result.ptr != end) {
    throw ConfigError(origin_ + ": key '" + key + "' is not an unsigned integer: '" + *value +
                      "'");
  }
  return out;
}

double ConfigFile::get_double(const std::string& key, double fallback) const {
  const auto value = raw(key);
  if (!value) return fallback;
  try {
    return parse_double(*value);
  } catch (const ConfigError&) {
    throw ConfigError(origin_ + ": key '" + key + "' is not a real number: '" + *value + "'");
  }
}

bool ConfigFile::get_bool(const std::string& key, bool fallback) const {
  const auto value = raw(key);
  if (!value) return fallback;
  if (*value == "true" || *value == "1" || *value == "yes" || *value == "on") return true;
  if (*value == "false" || *value == "0" || *value == "no" || *value == "off") return false;
  throw ConfigError(origin_ + ": key '" + key + "' is not a boolean: '" + *value + "'");
}

std::vector<std::string> ConfigFile::get_string_list(const std::string& key) const {
  const auto value = raw(key);
  if (!value || trim(*value).empty()) return {};
  std::vector<std::string> out;
  for (const auto& field : split_csv_line(*value)) {
    out.emplace_back(trim(field));
  }
  return out;
}

std::vector<double> ConfigFile::get_double_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& field : get_string_list(key)) {
    try {
      out.push_back(parse_double(field));
    } catch (const ConfigError&) {
      throw ConfigError(origin_ + ": key '" + key + "' has a non-numeric entry '" + field + "'");
    }
  }
  return out;
}

std::vector<int> ConfigFile::get_int_list(const std::string& key) const {
  std::vector<int> out;
  for (const auto& field : get_string_list(key)) {
    int v = 0;
    const auto* begin = field.data();
    const auto* end = begin + field.size();
    const auto result = std::from_chars(begin, end, v);
    if (result.ec != std::errc{} || result.ptr != end) {
      throw ConfigError(origin_ + ": key '" + key + "' has a non-integer entry '" + field + "'");
    }
    out.push_back(v);
  }
  return out;
}

void ConfigFile::require_all_consumed() const {
  for (const auto& [key, value] : entries_) {
    if (consumed_.count(key) == 0) {
      throw ConfigError(origin_ + ": unknown key '" + key + "'");
    }
  }
}

}  // namespace azo
