#include "commands.hpp"

#include <array>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "canard/errors.hpp"
#include "canard/expr.hpp"
#include "canard/fold.hpp"
#include "canard/iteration.hpp"
#include "canard/oracle.hpp"
#include "config.hpp"

namespace canard::cli {

namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
  std::array<char, 64> buf;
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  (void)ec;
  return std::string(buf.data(), end);
}

const char* case_name(CaseLabel c) {
  switch (c) {
    case CaseLabel::a: return "a";
    case CaseLabel::b: return "b";
    default: return "inconclusive";
  }
}

SystemDef make_system(const JobConfig& cfg) {
  return SystemDef::make(cfg.f_text, cfg.g_text, cfg.constants);
}

FoldData run_fold(const SystemDef& sys, const JobConfig& cfg) {
  DomainSpec dom = cfg.domain_auto ? DomainSpec::automatic()
                                   : DomainSpec::fixed_interval(cfg.domain_a, cfg.domain_b);
  double y_seed = require(cfg.y_seed, "domain.y_seed");
  double xg = require(cfg.x_guess, "guesses.x_guess");
  double zg = require(cfg.z_guess, "guesses.z_guess");
  return find_fold(sys, xg, zg, dom, y_seed);
}

// All CSV output is staged in a .tmp sibling and renamed into place, so a
// failure mid-write never leaves a partial file behind.
void write_file(const fs::path& path, const std::function<void(std::ostream&)>& writer) {
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    writer(out);
    if (!out) throw Error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

void print_fold(const FoldData& fold, std::ostream& out) {
  out << "fold\n";
  out << "  x0     = " << fmt(fold.x0) << "\n";
  out << "  mu0    = " << fmt(fold.mu0) << "\n";
  out << "  domain = [" << fmt(fold.a) << ", " << fmt(fold.b) << "]\n";
}

void print_diagnostics(const Diagnostics& d, std::ostream& out) {
  out << "diagnostics\n";
  out << "  lambda_tilde(x0) = " << fmt(d.lamt_at_x0) << "\n";
  out << "  e0_tilde(x0)     = " << fmt(d.e0t_at_x0) << "\n";
  out << "  ratio            = " << fmt(d.ratio) << "\n";
  out << "  delta0           = " << fmt(d.delta0) << "\n";
  out << "  K                = " << fmt(d.K) << "\n";
  out << "  phi(x0)          = " << fmt(d.phi_at_fold) << "\n";
  out << "  sup|phi|         = " << fmt(d.phi_sup) << "\n";
  out << "  sup|dyF|         = " << fmt(d.dyF_sup) << "\n";
  out << "  sup|dzF|         = " << fmt(d.dzF_sup) << "\n";
  out << "  case             = " << case_name(d.case_label) << "\n";
}

JobConfig load_with_overrides(const std::string& path, const Overrides& ov) {
  JobConfig cfg = load_config(path);
  if (ov.max_iter) cfg.max_iter = *ov.max_iter;
  if (ov.tol) cfg.tol = *ov.tol;
  if (ov.out_dir) cfg.out_dir = *ov.out_dir;
  if (ov.csv) cfg.csv = true;
  return cfg;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 3;
  } catch (const ParseError& e) {
    std::cerr << e.what() << "\n";
    return 3;
  } catch (const NoSignChangeError& e) {
    std::cerr << e.what() << "\n";
    return 5;
  } catch (const NewtonError& e) {
    std::cerr << "fold not found: " << e.what() << "\n";
    return 2;
  } catch (const BranchLostError& e) {
    std::cerr << "fold not found: " << e.what() << "\n";
    return 2;
  } catch (const IntervalError& e) {
    std::cerr << "fold not found: " << e.what() << "\n";
    return 2;
  } catch (const BuildError& e) {
    std::cerr << "fold not found: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int cmd_check(const std::string& config_path, const Overrides& ov) {
  return guarded([&] {
    JobConfig cfg = load_with_overrides(config_path, ov);
    SystemDef sys = make_system(cfg);
    FoldData fold = run_fold(sys, cfg);
    Diagnostics diag = check_assumptions(fold, sys);
    print_fold(fold, std::cout);
    print_diagnostics(diag, std::cout);
    return 0;
  });
}

int cmd_analyze(const std::string& config_path, const Overrides& ov) {
  return guarded([&] {
    JobConfig cfg = load_with_overrides(config_path, ov);
    SystemDef sys = make_system(cfg);
    FoldData fold = run_fold(sys, cfg);
    print_fold(fold, std::cout);
    CanardRun run = iterate(fold, sys, cfg.max_iter, cfg.tol);
    write_table(run, std::cout);
    if (cfg.csv) {
      const IntervalFunction& zeta = run.steps[run.best_index].zeta_sum;
      write_file(fs::path(cfg.out_dir) / "zeta_n.csv",
                 [&zeta](std::ostream& out) { zeta.write_csv(out); });
      write_file(fs::path(cfg.out_dir) / "errors.csv",
                 [&run](std::ostream& out) { write_csv(run, out); });
    }
    return run.termination == Termination::newton_failure ? 4 : 0;
  });
}

int cmd_oracle(const std::string& config_path, const Overrides& ov) {
  return guarded([&] {
    JobConfig cfg = load_with_overrides(config_path, ov);
    SystemDef sys = make_system(cfg);
    auto [z_lo, z_hi] = require(cfg.bracket, "oracle.bracket");
    auto [sx, sy] = require(cfg.seed, "oracle.seed");
    ExplosionOptions opts;
    opts.seed_x = sx;
    opts.seed_y = sy;
    opts.settle_time = cfg.settle_time;
    opts.window = cfg.window;
    opts.pilot_time = cfg.pilot_time;
    opts.n_bisect = cfg.n_bisect;
    opts.integ.rtol = cfg.oracle_rtol;
    OracleResult res = locate_explosion(sys, z_lo, z_hi, opts);
    std::cout << "oracle\n";
    std::cout << "  z_star    = " << fmt(res.z_star) << "\n";
    std::cout << "  bracket   = [" << fmt(res.bracket_lo) << ", " << fmt(res.bracket_hi) << "]\n";
    std::cout << "  width     = " << fmt(res.width) << "\n";
    std::cout << "  small_amp = " << fmt(res.small_amp) << "\n";
    std::cout << "  large_amp = " << fmt(res.large_amp) << "\n";
    if (cfg.csv) {
      write_file(fs::path(cfg.out_dir) / "sweep.csv",
                 [&res](std::ostream& out) { write_sweep_csv(res.samples, out); });
    }
    return 0;
  });
}

}  // namespace canard::cli
