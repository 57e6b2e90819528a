#include "bbci/bench/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bbci::bench {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str(), path);
}

Config Config::parse_text(const std::string& text, const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                 ": malformed section header '" + t + "'");
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty())
        throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": empty section name");
      cfg.sections_[section];
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                               ": expected 'key = value', got '" + t + "'");
    if (section.empty())
      throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                               ": key outside any [section]");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": empty key");
    if (cfg.sections_[section].count(key))
      throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": duplicate key '" +
                               section + "." + key + "'");
    cfg.sections_[section][key] = value;
  }
  return cfg;
}

const std::string* Config::find(const std::string& section, const std::string& key) const {
  const auto sit = sections_.find(section);
  if (sit == sections_.end()) return nullptr;
  const auto kit = sit->second.find(key);
  return kit == sit->second.end() ? nullptr : &kit->second;
}

bool Config::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

std::string Config::get_string(const std::string& section, const std::string& key) const {
  const std::string* v = find(section, key);
  if (!v)
    throw std::runtime_error(origin_ + ": missing required key '" + section + "." + key + "'");
  return *v;
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
  const std::string* v = find(section, key);
  return v ? *v : fallback;
}

double Config::get_double(const std::string& section, const std::string& key) const {
  const std::string s = get_string(section, key);
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(origin_ + ": key '" + section + "." + key +
                             "' is not a number: '" + s + "'");
  }
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
  return has(section, key) ? get_double(section, key) : fallback;
}

long Config::get_int(const std::string& section, const std::string& key) const {
  const std::string s = get_string(section, key);
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(origin_ + ": key '" + section + "." + key +
                             "' is not an integer: '" + s + "'");
  }
}

long Config::get_int(const std::string& section, const std::string& key, long fallback) const {
  return has(section, key) ? get_int(section, key) : fallback;
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string s = get_string(section, key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw std::runtime_error(origin_ + ": key '" + section + "." + key +
                           "' is not a boolean: '" + s + "'");
}

std::vector<std::uint64_t> Config::get_seed_list(const std::string& section,
                                                 const std::string& key) const {
  const std::string s = get_string(section, key);
  std::vector<std::uint64_t> seeds;
  std::istringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    try {
      std::size_t used = 0;
      seeds.push_back(std::stoull(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw std::runtime_error(origin_ + ": key '" + section + "." + key +
                               "' has a non-integer seed: '" + tok + "'");
    }
  }
  if (seeds.empty())
    throw std::runtime_error(origin_ + ": key '" + section + "." + key + "' lists no seeds");
  return seeds;
}

void Config::validate_keys(const std::vector<std::string>& allowed,
                           const std::vector<std::string>& required_sections) const {
  for (const auto& [section, keys] : sections_) {
    for (const auto& [key, value] : keys) {
      const std::string qualified = section + "." + key;
      if (std::find(allowed.begin(), allowed.end(), qualified) == allowed.end())
        throw std::runtime_error(origin_ + ": unknown key '" + qualified + "'");
    }
  }
  for (const std::string& section : required_sections)
    if (!sections_.count(section))
      throw std::runtime_error(origin_ + ": missing required section [" + section + "]");
}

}  // namespace bbci::bench
