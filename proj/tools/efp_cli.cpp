#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "efp/scenario.hpp"

namespace {

struct CommonFlags {
  std::string scenario_path;
  std::string out_dir = ".";
  double tol = -1.0;
  double oracle_step = -1.0;
  long long seed = -1;
  bool trace = false;
};

void add_common(CLI::App* cmd, CommonFlags& fl) {
  cmd->add_option("--scenario", fl.scenario_path, "scenario JSON file")->required();
  cmd->add_option("--out", fl.out_dir, "output directory");
  cmd->add_option("--tol", fl.tol, "override the scenario tolerance");
  cmd->add_option("--oracle-step", fl.oracle_step, "override the oracle grid step");
  cmd->add_option("--seed", fl.seed, "override the scenario / generator seed");
  cmd->add_flag("--trace", fl.trace, "write the ascent event log");
}

int load_and_dispatch(const CommonFlags& fl,
                      int (*cmd)(const efp::Scenario&, const efp::RunOptions&)) {
  efp::Scenario sc;
  try {
    std::optional<std::uint64_t> seed;
    if (fl.seed >= 0) seed = static_cast<std::uint64_t>(fl.seed);
    sc = efp::load_scenario(fl.scenario_path, seed);
    if (fl.tol > 0) sc.tol = fl.tol;
    if (fl.oracle_step > 0) sc.oracle_step = fl.oracle_step;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return efp::kExitParse;
  }
  efp::RunOptions opt;
  opt.out_dir = fl.out_dir;
  opt.write_trace = fl.trace;
  int code = cmd(sc, opt);
  if (code != efp::kExitOk)
    std::fprintf(stderr,
                 "command failed with exit code %d (see %s/report.error.json)\n",
                 code, fl.out_dir.c_str());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"envy-free pricing toolkit for large unit-demand markets"};
  app.require_subcommand(1);

  CommonFlags fl_run, fl_cmp, fl_sweep, fl_val;
  CLI::App* run = app.add_subcommand("run", "execute the scenario's algorithm");
  add_common(run, fl_run);
  CLI::App* cmp = app.add_subcommand(
      "compare", "algorithm vs. the grid oracle and the welfare optimum");
  add_common(cmp, fl_cmp);
  CLI::App* sweep =
      app.add_subcommand("sweep", "one row per stop parameter or ladder rung");
  add_common(sweep, fl_sweep);
  CLI::App* val = app.add_subcommand("validate", "instance lint and certification");
  add_common(val, fl_val);

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return load_and_dispatch(fl_run, efp::cmd_run);
  if (cmp->parsed()) return load_and_dispatch(fl_cmp, efp::cmd_compare);
  if (sweep->parsed()) return load_and_dispatch(fl_sweep, efp::cmd_sweep);
  return load_and_dispatch(fl_val, efp::cmd_validate);
}
