#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <string_view>

namespace canard::cli {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double parse_double(std::string_view text, const std::string& key) {
  std::string_view t = trim(text);
  double v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size())
    throw ConfigError("bad number for " + key + ": '" + std::string(t) + "'");
  return v;
}

int parse_int(std::string_view text, const std::string& key) {
  std::string_view t = trim(text);
  int v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size())
    throw ConfigError("bad integer for " + key + ": '" + std::string(t) + "'");
  return v;
}

std::pair<double, double> parse_pair(std::string_view text, const std::string& key) {
  std::string_view t = trim(text);
  std::size_t sp = t.find_first_of(" \t");
  if (sp == std::string_view::npos)
    throw ConfigError("expected two numbers for " + key + ": '" + std::string(t) + "'");
  double a = parse_double(t.substr(0, sp), key);
  double b = parse_double(t.substr(sp), key);
  return {a, b};
}

bool parse_bool(std::string_view text, const std::string& key) {
  std::string_view t = trim(text);
  if (t == "true") return true;
  if (t == "false") return false;
  throw ConfigError("expected true or false for " + key + ": '" + std::string(t) + "'");
}

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

}  // namespace

JobConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();

  JobConfig cfg;
  std::set<std::string> seen;
  std::string section;
  std::size_t line_no = 0;
  std::istringstream lines(text);

  for (std::string raw; std::getline(lines, raw);) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;

    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("malformed section header at line " + std::to_string(line_no));
      section = std::string(trim(line.substr(1, line.size() - 2)));
      static const std::set<std::string> known = {"system", "constants", "domain",
                                                  "guesses", "algorithm", "oracle", "output"};
      if (!known.count(section)) throw ConfigError("unknown section: " + section);
      continue;
    }

    std::size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("malformed line " + std::to_string(line_no) + ": expected key = value");
    if (section.empty())
      throw ConfigError("key outside any section at line " + std::to_string(line_no));
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    std::string full = section + "." + key;
    if (!seen.insert(full).second) throw ConfigError("duplicate key: " + full);

    if (section == "system") {
      if (key == "F")
        cfg.f_text = value;
      else if (key == "G")
        cfg.g_text = value;
      else
        throw ConfigError("unknown key: " + full);
    } else if (section == "constants") {
      if (!is_identifier(key)) throw ConfigError("bad constant name: " + key);
      cfg.constants.emplace_back(key, parse_double(value, full));
    } else if (section == "domain") {
      if (key == "x") {
        if (trim(value) == "auto") {
          cfg.domain_auto = true;
        } else {
          auto [a, b] = parse_pair(value, full);
          if (!(a < b)) throw ConfigError("interval for " + full + " is not ordered");
          cfg.domain_auto = false;
          cfg.domain_a = a;
          cfg.domain_b = b;
        }
      } else if (key == "y_seed") {
        cfg.y_seed = parse_double(value, full);
      } else {
        throw ConfigError("unknown key: " + full);
      }
    } else if (section == "guesses") {
      if (key == "x_guess")
        cfg.x_guess = parse_double(value, full);
      else if (key == "z_guess")
        cfg.z_guess = parse_double(value, full);
      else
        throw ConfigError("unknown key: " + full);
    } else if (section == "algorithm") {
      if (key == "max_iter")
        cfg.max_iter = parse_int(value, full);
      else if (key == "tol")
        cfg.tol = parse_double(value, full);
      else
        throw ConfigError("unknown key: " + full);
    } else if (section == "oracle") {
      if (key == "bracket") {
        auto p = parse_pair(value, full);
        if (!(p.first < p.second)) throw ConfigError("interval for " + full + " is not ordered");
        cfg.bracket = p;
      } else if (key == "seed") {
        cfg.seed = parse_pair(value, full);
      } else if (key == "rtol") {
        cfg.oracle_rtol = parse_double(value, full);
      } else if (key == "n_bisect") {
        cfg.n_bisect = parse_int(value, full);
      } else if (key == "settle_time") {
        cfg.settle_time = parse_double(value, full);
      } else if (key == "window") {
        cfg.window = parse_double(value, full);
      } else if (key == "pilot_time") {
        cfg.pilot_time = parse_double(value, full);
      } else {
        throw ConfigError("unknown key: " + full);
      }
    } else if (section == "output") {
      if (key == "dir")
        cfg.out_dir = value;
      else if (key == "csv")
        cfg.csv = parse_bool(value, full);
      else
        throw ConfigError("unknown key: " + full);
    }
  }

  if (cfg.f_text.empty()) throw ConfigError("missing key: system.F");
  if (cfg.g_text.empty()) throw ConfigError("missing key: system.G");
  return cfg;
}

double require(const std::optional<double>& field, const char* name) {
  if (!field) throw ConfigError(std::string("missing key: ") + name);
  return *field;
}

std::pair<double, double> require(const std::optional<std::pair<double, double>>& field,
                                  const char* name) {
  if (!field) throw ConfigError(std::string("missing key: ") + name);
  return *field;
}

}  // namespace canard::cli
