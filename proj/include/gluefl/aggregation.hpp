#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gluefl/numerics.hpp"
#include "gluefl/rng.hpp"
#include "gluefl/sampling.hpp"

namespace gluefl {

/// A client's dense update with its data weight p_i.
struct ClientDelta {
  ClientId client = 0;
  double p = 0.0;
  ParamVector delta;
};

/// A client's already-sparsified update with its data weight p_i.
struct ClientSparseDelta {
  ClientId client = 0;
  double p = 0.0;
  SparseDelta delta;
};

/// One used client's masked upload and its aggregation weight nu.
struct WeightedContribution {
  ClientId client = 0;
  Group group = Group::Uniform;
  double weight = 0.0;
  SparseDelta shared;
  SparseDelta unique;
};

/// w + (N/K) * sum p_i delta_i, summed in ascending client order.
ParamVector fedavg_aggregate(std::span<const double> w, std::vector<ClientDelta> deltas,
                             std::size_t n, std::size_t k);

/// w + sum nu_i delta_i (sticky FedAvg); here each entry's `p` already holds nu_i.
ParamVector weighted_dense_aggregate(std::span<const double> w, std::vector<ClientDelta> deltas);

struct StcResult {
  ParamVector model;
  SparseDelta update;
};

/// Server sparsification: top-count(q) of the weighted sum, applied to w.
StcResult stc_round_aggregate(std::span<const double> w, std::vector<ClientSparseDelta> deltas,
                              std::size_t n, std::size_t k, double q);

struct GlueflResult {
  ParamVector model;
  ParamVector shared_update;  // dense on the mask
  ParamVector unique_update;  // top-budget of the weighted unique sum
  ParamVector combined;       // shared + unique
  IndexSet shared_support;
  IndexSet unique_support;
  IndexSet support;           // union
};

/// Weighted shared/unique aggregation. Shared parts must lie inside `mask`,
/// unique parts outside it.
GlueflResult gluefl_aggregate(std::span<const double> w, std::vector<WeightedContribution> contribs,
                              const MaskBitmap& mask, double q);

/// Non-trainable statistics: v + (1/K) sum delta_i, no reweighting.
ParamVector bn_stat_aggregate(std::span<const double> v, const std::vector<ParamVector>& stat_deltas,
                              std::size_t k);

}  // namespace gluefl
