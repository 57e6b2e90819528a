#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace bbci::bench {

// Flat sectioned key-value config file:
//   # comment
//   [section]
//   key = value
// Values are typed by the schema below; unknown sections or keys abort
// before any computation.
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_text(const std::string& text, const std::string& origin = "<config>");

  bool has(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  long get_int(const std::string& section, const std::string& key) const;
  long get_int(const std::string& section, const std::string& key, long fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  std::vector<std::uint64_t> get_seed_list(const std::string& section,
                                           const std::string& key) const;

  // Every (section, key) present in the file must appear in `allowed`
  // (formatted "section.key"); sections listed in `required_sections`
  // must exist.
  void validate_keys(const std::vector<std::string>& allowed,
                     const std::vector<std::string>& required_sections) const;

  const std::map<std::string, std::map<std::string, std::string>>& sections() const {
    return sections_;
  }

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
  std::string origin_;

  const std::string* find(const std::string& section, const std::string& key) const;
};

}  // namespace bbci::bench
