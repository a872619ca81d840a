#pragma once

#include <optional>
#include <string>

namespace canard::cli {

// Command-line overrides layered on top of the config file.
struct Overrides {
  std::optional<int> max_iter;
  std::optional<double> tol;
  std::optional<std::string> out_dir;
  bool csv = false;  // --csv forces CSV output on
};

// Exit codes: 0 success, 1 unexpected failure, 2 fold not found,
// 3 config error, 4 iteration newton_failure, 5 oracle no-sign-change.
int cmd_check(const std::string& config_path, const Overrides& ov);
int cmd_analyze(const std::string& config_path, const Overrides& ov);
int cmd_oracle(const std::string& config_path, const Overrides& ov);

}  // namespace canard::cli
