#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gluefl/compression.hpp"
#include "gluefl/data.hpp"
#include "gluefl/netsim.hpp"
#include "gluefl/numerics.hpp"
#include "gluefl/sampling.hpp"
#include "gluefl/training.hpp"

namespace gluefl {

enum class Strategy {
  FedAvg,              // uniform sampling, dense updates
  StickyFedAvg,        // sticky sampling with inverse-propensity weights, dense updates
  Stc,                 // uniform sampling, client and server top-q masking
  Gluefl,              // sticky sampling + mask shifting + rescaled compensation
  GlueflEqualWeights,  // nu_i = 1/K (biased ablation)
  GlueflNoEc,          // no error compensation
  GlueflEcUnscaled,    // compensation without the nu ratio
  GlueflNoRegen,       // shared mask never regenerated
};

Strategy parse_strategy(std::string_view name);
std::string_view to_string(Strategy s);
bool uses_sticky_sampling(Strategy s);
bool uses_mask_shifting(Strategy s);

enum class DropoutPolicy { Error, SkipRound };

struct DatasetConfig {
  std::string source = "synthetic";  // synthetic | csv
  std::string path;
  SyntheticSpec synthetic;
  double alpha = 0.5;
  std::size_t min_size = 22;
};

struct ExperimentConfig {
  Strategy strategy = Strategy::Gluefl;
  std::size_t n = 200;
  std::size_t k = 10;
  std::optional<std::size_t> s;  // default 4K
  std::optional<std::size_t> c;  // default 4K/5
  double q = 0.2;
  double q_shr = 0.16;
  unsigned regen_period = 10;  // 0 = never
  RegenMode regen_mode = RegenMode::EmptyMask;
  double oc = 1.3;
  std::optional<double> f_sticky;  // default C/K
  double p_offline = 0.0;
  DropoutPolicy dropout_policy = DropoutPolicy::Error;
  unsigned local_steps = 10;
  std::size_t batch_size = 16;
  double lr = 0.05;
  double momentum = 0.9;
  unsigned rounds = 100;
  WeightMode p_mode = WeightMode::Proportional;
  ModelKind model_kind = ModelKind::Logistic;
  std::vector<std::size_t> hidden;
  Activation activation = Activation::Relu;
  DatasetConfig dataset;
  ProfileConfig bandwidth = ProfileConfig::defaults();
  double compute_jitter = 0.0;  // lognormal sigma on compute time
  Encoding encoding = Encoding::BitmapValues;
  WireFormat wire;
  bool charge_mask = true;
  bool stc_residuals = false;
  double target_accuracy = 0.0;
  std::uint64_t seed = 1;

  /// Sampling parameters for the strategy (S = C = 0 for uniform strategies).
  SamplingParams sampling() const;
  CompensationScaling compensation() const;
  unsigned effective_regen_period() const;
  /// Throws std::invalid_argument on any inconsistent setting.
  void validate() const;
};

/// Rejects unknown keys at every level.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
/// Fully resolved (defaults filled in) form; round-trips through config_from_json.
nlohmann::json config_to_json(const ExperimentConfig& cfg);

/// Sets a dotted key ("dataset.alpha") in a config document.
void set_config_key(nlohmann::json& doc, std::string_view dotted_key, const nlohmann::json& value);

/// Cartesian product of a grid {"key": [v1, v2, ...], ...} applied to a base
/// config document, in lexicographic key order (last key varies fastest).
std::vector<nlohmann::json> expand_grid(const nlohmann::json& base, const nlohmann::json& grid);

}  // namespace gluefl
