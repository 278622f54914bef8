#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace owdcl {

// Parsed key/value config with [section] headers. Lookups report errors as
// "<file>: [section] key: ..." so a bad value is locatable without a debugger.
struct FileConfig {
  std::string name;  // path or pseudo-name, used in diagnostics
  std::map<std::string, std::map<std::string, std::string>> sections;

  bool has(const std::string& section, const std::string& key) const;

  std::string require_string(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;

  long long require_int(const std::string& section, const std::string& key) const;
  long long get_int(const std::string& section, const std::string& key,
                    long long fallback) const;

  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) const;

  double get_double(const std::string& section, const std::string& key, double fallback) const;

  // Rejects keys outside `allowed` in `section` (typo guard) and, separately,
  // sections outside a caller-supplied list.
  void check_keys(const std::string& section, const std::vector<std::string>& allowed) const;
  void check_sections(const std::vector<std::string>& allowed) const;
};

// Lines are `key = value`, `[section]`, blank, or comments (# or ;). Values
// keep internal whitespace; surrounding whitespace is trimmed. Errors carry
// the 1-based line number.
FileConfig parse_config_text(const std::string& text, const std::string& name);
FileConfig parse_config_file(const std::string& path);

}  // namespace owdcl
