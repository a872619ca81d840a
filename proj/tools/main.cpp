#include <string>

#include "CLI11.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"canard: locate canard explosion points of planar slow-fast systems"};
  app.require_subcommand(1);

  std::string config_path;
  canard::cli::Overrides ov;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "job description file (INI)")->required();
    sub->add_option("--max-iter", ov.max_iter, "override algorithm.max_iter");
    sub->add_option("--tol", ov.tol, "override algorithm.tol");
    sub->add_option("--out", ov.out_dir, "override output.dir");
    sub->add_flag("--csv", ov.csv, "force CSV artifacts on");
  };

  CLI::App* check =
      app.add_subcommand("check", "locate the fold pair and report assumption diagnostics");
  CLI::App* analyze =
      app.add_subcommand("analyze", "run the refinement iteration and print the mu table");
  CLI::App* oracle =
      app.add_subcommand("oracle", "bisect the amplitude jump by direct simulation");
  add_common(check);
  add_common(analyze);
  add_common(oracle);

  CLI11_PARSE(app, argc, argv);

  if (check->parsed()) return canard::cli::cmd_check(config_path, ov);
  if (analyze->parsed()) return canard::cli::cmd_analyze(config_path, ov);
  return canard::cli::cmd_oracle(config_path, ov);
}
