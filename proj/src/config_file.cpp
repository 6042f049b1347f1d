#include "vsl/config_file.hpp"

#include <fstream>
#include <stdexcept>

namespace vsl {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

std::map<std::string, std::string> parse_config_file(const std::string& path,
                                                     const std::set<std::string>& known_keys) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::map<std::string, std::string> values;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("malformed config line " + std::to_string(line_no) +
                               " (expected key = value)");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw std::runtime_error("malformed config line " + std::to_string(line_no) +
                               " (expected key = value)");
    }
    if (known_keys.find(key) == known_keys.end()) {
      throw std::runtime_error("unknown config key '" + key + "' at line " +
                               std::to_string(line_no));
    }
    values[key] = value;
  }
  return values;
}

}  // namespace vsl
