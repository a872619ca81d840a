#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

// Job description parsed from a flat INI file: [section] headers and
// key = value lines. Parsing is strict: unknown sections or keys,
// duplicates, and malformed numbers are all errors, so a typo in a
// fixture cannot silently fall back to a default.
namespace canard::cli {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct JobConfig {
  // [system]
  std::string f_text;
  std::string g_text;
  // [constants], in file order
  std::vector<std::pair<std::string, double>> constants;
  // [domain]
  bool domain_auto = true;            // domain.x = auto
  double domain_a = 0, domain_b = 0;  // when not auto
  std::optional<double> y_seed;
  // [guesses]
  std::optional<double> x_guess;
  std::optional<double> z_guess;
  // [algorithm]
  int max_iter = 8;
  double tol = 1e-12;
  // [oracle]
  std::optional<std::pair<double, double>> bracket;
  std::optional<std::pair<double, double>> seed;
  double oracle_rtol = 1e-9;
  int n_bisect = 30;
  double settle_time = 0;
  double window = 0;
  double pilot_time = 2000;
  // [output]
  std::string out_dir = ".";
  bool csv = false;
};

// Throws ConfigError with a one-line message ("missing key: system.G",
// "unknown key: domain.z", ...). system.F and system.G are required here;
// the per-command keys are checked by require_* below.
JobConfig load_config(const std::string& path);

// Fetch an optional field or throw ConfigError("missing key: <name>").
double require(const std::optional<double>& field, const char* name);
std::pair<double, double> require(const std::optional<std::pair<double, double>>& field,
                                  const char* name);

}  // namespace canard::cli
