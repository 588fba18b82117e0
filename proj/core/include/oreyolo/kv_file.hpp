#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace oreyolo {

/// Flat `key=value` document. Order is preserved so that write -> read is
/// stable; `#` starts a comment, blank lines are skipped.
struct KeyValueFile {
  std::vector<std::pair<std::string, std::string>> entries;

  static KeyValueFile parse(const std::string& text, const std::string& source = "<config>");
  static KeyValueFile read(const std::filesystem::path& path);

  std::string to_string() const;
  void write(const std::filesystem::path& path) const;

  void set(std::string key, std::string value);
  const std::string* find(const std::string& key) const;
};

// Value parsers used by the config readers. They throw ConfigError naming
// `key` on malformed input.
double parse_real(const std::string& key, const std::string& value);
long long parse_integer(const std::string& key, const std::string& value);
bool parse_flag(const std::string& key, const std::string& value);
std::vector<double> parse_real_list(const std::string& key, const std::string& value);

/// Shortest representation that reads back to the same double.
std::string format_real(double value);

}  // namespace oreyolo
