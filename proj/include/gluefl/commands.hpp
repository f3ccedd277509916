#pragma once

#include <filesystem>
#include <ostream>
#include <string>

#include <json.hpp>

#include "gluefl/config.hpp"
#include "gluefl/engine.hpp"
#include "gluefl/report.hpp"

namespace gluefl {

/// summary.json document: {"summary": ..., "config": ...}.
nlohmann::json summary_document(const ExperimentConfig& cfg, const ExperimentResult& result);

/// Runs one experiment and writes metrics.csv and summary.json into out_dir.
RunSummary run_to_directory(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

int cmd_run(const std::string& config_path, const std::string& out_dir, std::ostream& log);

/// Expands the grid over the base config and writes run_NNN/ per grid point
/// plus index.csv. jobs > 1 runs experiments on a thread pool.
int cmd_sweep(const std::string& config_path, const std::string& grid_path, const std::string& out_dir,
              unsigned jobs, std::ostream& log);

int cmd_validate(const std::string& config_path, std::ostream& out);

struct ProbTableArgs {
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t s = 0;
  std::size_t c = 0;
  unsigned r_max = 10;
  bool theory = false;
  unsigned local_steps = 10;
  double sigma = 1.0;
  unsigned rounds = 1000;
};

/// Probability table, or with theory set the variance factor and learning
/// rate for uniform client weights.
int cmd_prob_table(const ProbTableArgs& args, std::ostream& out);

/// Runs an experiment and writes the download-size-vs-rounds-since-sync curve.
int cmd_staleness(const std::string& config_path, const std::string& out_path, unsigned max_rounds,
                  std::ostream& log);

}  // namespace gluefl
