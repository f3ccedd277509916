#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "gluefl/config.hpp"
#include "gluefl/numerics.hpp"
#include "gluefl/sampling.hpp"

namespace gluefl {

/// One row of metrics.csv, in column order.
struct RoundMetrics {
  unsigned round = 0;
  double test_acc = 0.0;
  double test_loss = 0.0;
  std::size_t dv_used = 0;  // downstream bytes of clients whose update was used
  std::size_t dv_all = 0;   // downstream bytes of every online participant
  std::size_t uv = 0;       // upstream bytes (used clients only)
  std::size_t cum_down = 0; // running sum of dv_all
  std::size_t cum_up = 0;   // running sum of uv
  double round_wall_time = 0.0;
  double slowest_used_download_s = 0.0;
  bool mask_regenerated = false;
  double weight_sum = 0.0;  // sum of nu over used clients
};

struct ClientTrace {
  ClientId client = 0;
  Group group = Group::Uniform;
  double weight = 0.0;
  IndexSet shared_support;
  IndexSet unique_support;
  /// max_j |compensated - shared - unique - residual|; zero when the split is exact.
  double decomposition_error = 0.0;
  double max_abs_residual = 0.0;
};

struct DownloadTrace {
  ClientId client = 0;
  std::optional<unsigned> previous_sync;
  std::size_t stale_values = 0;
  std::size_t bytes = 0;
};

/// Per-round internals for verification and analysis tooling.
struct RoundTrace {
  unsigned round = 0;
  bool regeneration = false;
  MaskBitmap effective_mask;  // what clients received (empty for non-masking strategies)
  MaskBitmap stored_mask;     // M^t held by the server
  MaskBitmap next_mask;       // M^{t+1}
  IndexSet update_support;    // positions carried by the global update
  std::vector<ClientTrace> used;
  std::vector<DownloadTrace> downloads;
  const ParamVector* model_before = nullptr;
  const ParamVector* model_after = nullptr;
};

using RoundObserver = std::function<void(const RoundTrace&)>;

struct ExperimentResult {
  std::vector<RoundMetrics> metrics;
  ParamVector final_params;
  ParamVector final_stats;
  std::size_t clients = 0;
  std::size_t param_count = 0;
};

/// Runs cfg.rounds rounds of the configured strategy. Deterministic in
/// (cfg, cfg.seed). Throws DropoutError when a group cannot be filled and the
/// dropout policy is Error.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const RoundObserver& observer = {});

}  // namespace gluefl
