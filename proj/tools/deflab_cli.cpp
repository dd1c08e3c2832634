#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "deflab/deflab.h"

int main(int argc, char** argv) {
  CLI::App app{"Deformation-lemma and minimax experiment runner"};
  app.set_version_flag("--version", std::string(dfl_version()));
  app.require_subcommand(1);

  std::string config, out;
  uint64_t seed = 0;
  bool strict = false;
  const char* descriptions[][2] = {
      {"deform", "integrate the deformation flow over random samples and audit its properties"},
      {"minimax", "estimate c1 and c2 with the path optimizers and compare with the grid oracles"},
      {"oracle", "grid bottleneck / widest path values and critical point scan"},
      {"pscheck", "probe the Palais-Smale condition at a level"},
      {"proof-trace", "replay the minimax argument numerically"},
      {"geometry", "check the mountain pass ring inequality"},
  };
  for (const auto& d : descriptions) {
    auto* sub = app.add_subcommand(d[0], d[1]);
    sub->add_option("--config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory")->required();
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_flag("--strict", strict, "exit 3 when an invariant check fails");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  const std::string sub = app.get_subcommands().front()->get_name();
  const bool seed_given = app.get_subcommands().front()->count("--seed") > 0;

  dfl_experiment* exp = nullptr;
  dfl_status st = dfl_experiment_create_from_file(config.c_str(), &exp);
  if (st != DFL_OK) {
    std::cerr << "error: " << dfl_last_error() << '\n';
    return st;
  }
  if (seed_given) dfl_experiment_set_seed(exp, seed);
  st = dfl_experiment_run(exp, sub.c_str(), out.c_str(), strict ? 1 : 0);
  if (st != DFL_OK) std::cerr << "error: " << dfl_last_error() << '\n';
  else std::cout << out << "/report.json\n";
  dfl_experiment_destroy(exp);
  return st;
}
