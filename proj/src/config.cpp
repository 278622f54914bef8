#include "owdcl/config.hpp"

#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "owdcl/error.hpp"

namespace owdcl {

namespace {

std::string trim(const std::string& s) {
  std::size_t begin = 0;
  std::size_t end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
  return s.substr(begin, end - begin);
}

[[noreturn]] void fail_at(const std::string& name, std::size_t line, const std::string& msg) {
  fail(ErrorCode::ConfigError, name + ":" + std::to_string(line) + ": " + msg);
}

[[noreturn]] void fail_key(const FileConfig& cfg, const std::string& section,
                           const std::string& key, const std::string& msg) {
  fail(ErrorCode::ConfigError, cfg.name + ": [" + section + "] " + key + ": " + msg);
}

}  // namespace

bool FileConfig::has(const std::string& section, const std::string& key) const {
  auto s = sections.find(section);
  return s != sections.end() && s->second.count(key) > 0;
}

std::string FileConfig::require_string(const std::string& section, const std::string& key) const {
  auto s = sections.find(section);
  if (s != sections.end()) {
    auto k = s->second.find(key);
    if (k != s->second.end()) return k->second;
  }
  fail_key(*this, section, key, "required key is missing");
}

std::string FileConfig::get_string(const std::string& section, const std::string& key,
                                   const std::string& fallback) const {
  return has(section, key) ? sections.at(section).at(key) : fallback;
}

long long FileConfig::require_int(const std::string& section, const std::string& key) const {
  const std::string raw = require_string(section, key);
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(raw.c_str(), &end, 10);
  if (errno != 0 || end == raw.c_str() || *end != '\0')
    fail_key(*this, section, key, "expected an integer, got \"" + raw + "\"");
  return v;
}

long long FileConfig::get_int(const std::string& section, const std::string& key,
                              long long fallback) const {
  return has(section, key) ? require_int(section, key) : fallback;
}

std::uint64_t FileConfig::get_u64(const std::string& section, const std::string& key,
                                  std::uint64_t fallback) const {
  if (!has(section, key)) return fallback;
  const std::string raw = require_string(section, key);
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(raw.c_str(), &end, 10);
  if (errno != 0 || end == raw.c_str() || *end != '\0' || raw.front() == '-')
    fail_key(*this, section, key, "expected an unsigned integer, got \"" + raw + "\"");
  return v;
}

double FileConfig::get_double(const std::string& section, const std::string& key,
                              double fallback) const {
  if (!has(section, key)) return fallback;
  const std::string raw = require_string(section, key);
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(raw.c_str(), &end);
  if (errno != 0 || end == raw.c_str() || *end != '\0')
    fail_key(*this, section, key, "expected a number, got \"" + raw + "\"");
  return v;
}

void FileConfig::check_keys(const std::string& section,
                            const std::vector<std::string>& allowed) const {
  auto s = sections.find(section);
  if (s == sections.end()) return;
  for (const auto& [key, value] : s->second) {
    bool known = false;
    for (const auto& a : allowed)
      if (key == a) {
        known = true;
        break;
      }
    if (!known) fail_key(*this, section, key, "unknown key");
  }
}

void FileConfig::check_sections(const std::vector<std::string>& allowed) const {
  for (const auto& [section, keys] : sections) {
    bool known = false;
    for (const auto& a : allowed)
      if (section == a) {
        known = true;
        break;
      }
    if (!known)
      fail(ErrorCode::ConfigError, name + ": unknown section [" + section + "]");
  }
}

FileConfig parse_config_text(const std::string& text, const std::string& name) {
  FileConfig cfg;
  cfg.name = name;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#' || t.front() == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') fail_at(name, lineno, "unterminated section header");
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty()) fail_at(name, lineno, "empty section name");
      cfg.sections[section];  // a section may legitimately stay empty
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      fail_at(name, lineno, "expected `key = value` or a [section] header");
    if (section.empty()) fail_at(name, lineno, "key before any [section] header");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) fail_at(name, lineno, "empty key");
    if (cfg.sections[section].count(key) > 0)
      fail_at(name, lineno, "duplicate key \"" + key + "\" in [" + section + "]");
    cfg.sections[section][key] = value;
  }
  return cfg;
}

FileConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open config " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config_text(text, path);
}

}  // namespace owdcl
