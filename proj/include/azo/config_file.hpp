// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace azo {

// Flat `key = value` configuration with '#' comments. Keys may use one
// nesting level via dots (objective.kind). Duplicate keys are errors, and
// every key must be consumed by the reader: silent typos are rejected.
class ConfigFile {
 public:
  static ConfigFile parse_file(const std::filesystem::path& path);
  static ConfigFile parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& key) const;

  std::optional<std::string> raw(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_double_list(const std::string& key) const;   // empty if absent
  std::vector<int> get_int_list(const std::string& key) const;
  std::vector<std::string> get_string_list(const std::string& key) const;

  // Throws ConfigError naming the first key that was never read.
  void require_all_consumed() const;

  const std::string& origin() const { return origin_; }

 private:
  std::map<std::string, std::string> entries_;
  mutable std::set<std::string> consumed_;
  std::string origin_;
};

}  // namespace azo
