#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "gluefl/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"GlueFL federated learning simulator"};
  app.require_subcommand(1);

  std::string config, out, grid;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());

  auto* run = app.add_subcommand("run", "Run one experiment");
  run->add_option("--config", config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "Output directory")->required();

  auto* sweep = app.add_subcommand("sweep", "Run a grid of experiments");
  sweep->add_option("--config", config, "Base config (JSON)")->required()->check(CLI::ExistingFile);
  sweep->add_option("--grid", grid, "Grid of dotted keys to value lists (JSON)")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", out, "Output directory")->required();
  sweep->add_option("--jobs", jobs, "Parallel experiments")->check(CLI::PositiveNumber);

  gluefl::ProbTableArgs pt;
  auto* prob = app.add_subcommand("prob-table", "Re-sample probabilities and theory constants");
  prob->add_option("--n", pt.n, "Clients")->required();
  prob->add_option("--k", pt.k, "Clients per round")->required();
  prob->add_option("--s", pt.s, "Sticky group size (0 for uniform)")->default_val(0);
  prob->add_option("--c", pt.c, "Sticky clients per round (0 for uniform)")->default_val(0);
  prob->add_option("--rmax", pt.r_max, "Largest r")->default_val(10);
  prob->add_flag("--theory", pt.theory, "Print variance factor and learning rate instead");
  prob->add_option("--local-steps", pt.local_steps, "E for the learning rate")->default_val(10);
  prob->add_option("--sigma", pt.sigma, "Gradient noise bound")->default_val(1.0);
  prob->add_option("--rounds", pt.rounds, "T for the learning rate")->default_val(1000);

  auto* validate = app.add_subcommand("validate", "Check a config and print its resolved form");
  validate->add_option("--config", config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);

  unsigned max_rounds = 50;
  auto* stale = app.add_subcommand("staleness", "Download size versus rounds since last sync");
  stale->add_option("--config", config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  stale->add_option("--out", out, "Output CSV")->required();
  stale->add_option("--max-rounds", max_rounds, "Largest gap")->default_val(50);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return gluefl::cmd_run(config, out, std::cerr);
    if (*sweep) return gluefl::cmd_sweep(config, grid, out, jobs, std::cerr);
    if (*prob) return gluefl::cmd_prob_table(pt, std::cout);
    if (*validate) return gluefl::cmd_validate(config, std::cout);
    if (*stale) return gluefl::cmd_staleness(config, out, max_rounds, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
