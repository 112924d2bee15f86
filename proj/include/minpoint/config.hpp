#pragma once
// Runtime configuration for searches and the command line driver.
//
// Config files are plain "key = value" text; '#' starts a comment.  Unknown
// keys and unparsable values are hard errors so a typo cannot silently run
// a search at the wrong operating point.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace minpoint {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Defaults reproduce the reference operating point: certified searches give
// up past discriminant 10^5 or Weil height 50, the heuristic sweep stays
// below |disc| = 1000, and the initial effort scans x of height <= log 100
// over Q and the 16 smallest fields.
struct SearchConfig {
  double delta_max = 1e5;
  double weil_max = 50.0;
  long heuristic_disc_cap = 1000;
  double initial_effort_height = std::log(100.0);
  long initial_effort_fields = 16;
  long precision_bits = 128;
  long workers = 1;

  void set(const std::string& key, const std::string& value) {
    auto as_double = [&](double& slot) {
      size_t used = 0;
      double v;
      try {
        v = std::stod(value, &used);
      } catch (const std::exception&) {
        throw ConfigError("config: bad value '" + value + "' for " + key);
      }
      while (used < value.size() && std::isspace((unsigned char)value[used]))
        ++used;
      if (used != value.size() || !std::isfinite(v) || v < 0)
        throw ConfigError("config: bad value '" + value + "' for " + key);
      slot = v;
    };
    auto as_long = [&](long& slot, long lo) {
      size_t used = 0;
      long v;
      try {
        v = std::stol(value, &used);
      } catch (const std::exception&) {
        throw ConfigError("config: bad value '" + value + "' for " + key);
      }
      while (used < value.size() && std::isspace((unsigned char)value[used]))
        ++used;
      if (used != value.size() || v < lo)
        throw ConfigError("config: bad value '" + value + "' for " + key);
      slot = v;
    };
    if (key == "delta_max") as_double(delta_max);
    else if (key == "weil_max") as_double(weil_max);
    else if (key == "heuristic_disc_cap") as_long(heuristic_disc_cap, 0);
    else if (key == "initial_effort_height") as_double(initial_effort_height);
    else if (key == "initial_effort_fields") as_long(initial_effort_fields, 0);
    else if (key == "precision_bits") as_long(precision_bits, 16);
    else if (key == "workers") as_long(workers, 1);
    else throw ConfigError("config: unknown key '" + key + "'");
  }
};

namespace detail {

inline std::string trim_copy(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace((unsigned char)s[a])) ++a;
  while (b > a && std::isspace((unsigned char)s[b - 1])) --b;
  return s.substr(a, b - a);
}

}  // namespace detail

inline SearchConfig parse_config(std::istream& in) {
  SearchConfig cfg;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string body = detail::trim_copy(line);
    if (body.empty()) continue;
    size_t eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key = value");
    cfg.set(detail::trim_copy(body.substr(0, eq)),
            detail::trim_copy(body.substr(eq + 1)));
  }
  return cfg;
}

inline SearchConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  return parse_config(in);
}

}  // namespace minpoint
