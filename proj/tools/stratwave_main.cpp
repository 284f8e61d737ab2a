// stratwave <command> --config <path> --out <dir> [--seed N] [--threads N]

#include <CLI11.hpp>
#include <cstdio>
#include <string>

#include "stratwave/stratwave.h"

int main(int argc, char** argv) {
  CLI::App app{"Steady two-layer stratified water waves: energy audits, stability and laminar solutions"};
  app.set_version_flag("--version", std::string(sw_version()));
  app.require_subcommand(1, 1);

  std::string config, out;
  long long seed = -1;
  int threads = 1;
  const char* commands[][2] = {
      {"laminar", "solve the x-independent flow and write its profiles"},
      {"audit-grad", "check that first-variation critical points and PDE solutions coincide"},
      {"audit-hess", "compare the second variation with finite differences"},
      {"stability", "assemble the second-variation Hessian and report its sign"},
      {"manufacture", "synthesise vorticity functions from a prescribed stream function"},
      {"residual", "evaluate the PDE residual of a state"},
  };
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c[0], c[1]);
    sub->add_option("--config", config, "JSON config file")->required();
    sub->add_option("--out", out, "output directory")->required();
    sub->add_option("--seed", seed, "override every random seed")->check(CLI::NonNegativeNumber);
    sub->add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 256));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  int rc = sw_run_command(command.c_str(), config.c_str(), out.c_str(), seed, threads);
  if (rc != 0) std::fprintf(stderr, "stratwave %s: %s\n", command.c_str(), sw_last_error());
  return rc;
}
