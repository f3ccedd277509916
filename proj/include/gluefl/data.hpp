#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gluefl/rng.hpp"

namespace gluefl {

/// Row-major feature matrix with integer class labels.
struct Dataset {
  std::size_t dim = 0;
  std::size_t classes = 0;
  std::vector<double> features;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * dim, dim};
  }
  void push_back(std::span<const double> x, int label);
  std::vector<std::size_t> label_histogram() const;
};

struct SplitDataset {
  Dataset train;
  Dataset test;
};

struct SyntheticSpec {
  std::size_t classes = 10;
  std::size_t dim = 200;
  std::size_t total = 12000;
  /// Pairwise distance between class means, in units of the per-feature noise.
  double separation = 2.0;
};

/// Gaussian mixture, one mean per class; exactly total/5 (floor) test rows.
SplitDataset generate_synthetic(const SyntheticSpec& spec, Rng& rng);

/// Header row, real-valued feature columns, integer label in the last column.
/// Rows are shuffled with `rng` and split 80/20.
SplitDataset load_csv(const std::string& path, Rng& rng);
SplitDataset parse_csv(std::string_view text, Rng& rng);

struct ClientShard {
  ClientId id = 0;
  Dataset data;
  std::size_t size() const { return data.size(); }
};

/// Dirichlet label-skew partition: each class is split across clients by a
/// Dirichlet(alpha) draw. Shards smaller than `min_size` are dropped and their
/// rows dealt round-robin to the survivors, which are renumbered 0..M-1.
std::vector<ClientShard> partition_dirichlet(const Dataset& data, std::size_t clients, double alpha,
                                             std::size_t min_size, Rng& rng);

enum class WeightMode { Proportional, Uniform };

WeightMode parse_weight_mode(std::string_view name);

/// p_i, summing to one; the last entry absorbs rounding.
std::vector<double> client_weights(std::span<const ClientShard> shards, WeightMode mode);

/// Total-variation distance between a shard's label histogram and a reference
/// distribution.
double label_tv_distance(const Dataset& shard, std::span<const double> reference);

}  // namespace gluefl
