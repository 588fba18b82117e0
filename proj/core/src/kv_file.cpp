#include "oreyolo/kv_file.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "oreyolo/errors.hpp"

namespace oreyolo {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

KeyValueFile KeyValueFile::parse(const std::string& text, const std::string& source) {
  KeyValueFile out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    const std::string stripped = trim(line);
    if (stripped.empty()) {
      continue;
    }
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected key=value, got '" +
                        stripped + "'");
    }
    std::string key = trim(std::string_view(stripped).substr(0, eq));
    std::string value = trim(std::string_view(stripped).substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": empty key");
    }
    out.set(std::move(key), std::move(value));
  }
  return out;
}

KeyValueFile KeyValueFile::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file " + path.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.string());
}

std::string KeyValueFile::to_string() const {
  std::string out;
  for (const auto& [key, value] : entries) {
    out += key;
    out += '=';
    out += value;
    out += '\n';
  }
  return out;
}

void KeyValueFile::write(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) {
    throw ConfigError("cannot write config file " + path.string());
  }
  out << to_string();
}

void KeyValueFile::set(std::string key, std::string value) {
  auto it = std::find_if(entries.begin(), entries.end(),
                         [&](const auto& e) { return e.first == key; });
  if (it != entries.end()) {
    it->second = std::move(value);
  } else {
    entries.emplace_back(std::move(key), std::move(value));
  }
}

const std::string* KeyValueFile::find(const std::string& key) const {
  auto it = std::find_if(entries.begin(), entries.end(),
                         [&](const auto& e) { return e.first == key; });
  return it == entries.end() ? nullptr : &it->second;
}

double parse_real(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto* begin = value.data();
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("config key '" + key + "': not a number: '" + value + "'");
  }
  return out;
}

long long parse_integer(const std::string& key, const std::string& value) {
  long long out = 0;
  const auto* begin = value.data();
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("config key '" + key + "': not an integer: '" + value + "'");
  }
  return out;
}

bool parse_flag(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "on" || value == "yes") {
    return true;
  }
  if (value == "0" || value == "false" || value == "off" || value == "no") {
    return false;
  }
  throw ConfigError("config key '" + key + "': not a boolean: '" + value + "'");
}

std::vector<double> parse_real_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    out.push_back(parse_real(key, trim(item)));
  }
  return out;
}

std::string format_real(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

}  // namespace oreyolo
