#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gluefl/engine.hpp"
#include "gluefl/numerics.hpp"
#include "gluefl/sampling.hpp"

namespace gluefl {

/// Writes metrics.csv: header plus one row per round, columns in RoundMetrics order.
void write_metrics_csv(std::ostream& out, std::span<const RoundMetrics> metrics);
std::string metrics_csv(std::span<const RoundMetrics> metrics);

/// Totals up to (and including) the first round whose trailing 5-round mean
/// accuracy reaches the target, or over the whole run if it never does.
struct RunSummary {
  double target_accuracy = 0.0;
  std::optional<unsigned> target_round;
  unsigned rounds_counted = 0;
  std::size_t dv_bytes = 0;       // sum of dv_all
  std::size_t dv_used_bytes = 0;  // sum of dv_used
  std::size_t uv_bytes = 0;
  std::size_t tv_bytes = 0;       // dv_bytes + uv_bytes
  double dt_seconds = 0.0;        // sum of slowest used download times
  double tt_seconds = 0.0;        // sum of round wall times
  double final_accuracy = 0.0;
  double final_smoothed_accuracy = 0.0;
};

/// Trailing moving average; the first rounds average what is available.
std::vector<double> smoothed_accuracy(std::span<const RoundMetrics> metrics, std::size_t window = 5);

RunSummary summarize_run(std::span<const RoundMetrics> metrics, double target_accuracy);

nlohmann::json summary_to_json(const RunSummary& s);

/// CSV: r,uniform_prob,sticky_prob for r = 1..r_max, then the closed-form
/// expected interval row. The sticky column is blank in uniform mode.
std::string probability_table(const SamplingParams& params, unsigned r_max);

/// Mean download size for a client synchronized at round t0 and returning at
/// t0 + r, averaged over the start rounds t0 that leave room for every
/// r <= max_rounds. supports[t-1] is the support of round t's global update.
struct StalenessPoint {
  unsigned rounds_since_sync = 0;
  double mean_values = 0.0;
  double mean_bytes = 0.0;
  std::size_t samples = 0;
};

std::vector<StalenessPoint> staleness_curve(std::span<const IndexSet> supports, std::size_t dim,
                                            unsigned max_rounds, Encoding encoding = Encoding::BitmapValues,
                                            const WireFormat& wire = {});

std::string staleness_csv(std::span<const StalenessPoint> curve);

}  // namespace gluefl
