#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "gluefl/data.hpp"
#include "gluefl/numerics.hpp"
#include "gluefl/rng.hpp"

namespace gluefl {

enum class ModelKind { Logistic, Mlp, MlpRunningStats };
enum class Activation { Relu, Tanh };

ModelKind parse_model_kind(std::string_view name);
std::string_view to_string(ModelKind kind);
Activation parse_activation(std::string_view name);
std::string_view to_string(Activation act);

/// Model architecture. Flattened parameter layout (the wire contract):
///   running-stats kind only: scale[input], shift[input]
///   then per dense layer l: W_l (rows = outputs, row-major), b_l
/// Running statistics (stat_count() entries): mean[input], var[input], batches.
struct ModelSpec {
  ModelKind kind = ModelKind::Logistic;
  std::size_t input_dim = 0;
  std::size_t classes = 0;
  std::vector<std::size_t> hidden;
  Activation activation = Activation::Relu;

  std::size_t param_count() const;
  std::size_t stat_count() const;
};

/// Minibatch as row indices into a dataset.
using Batch = std::span<const std::size_t>;

class Model {
 public:
  explicit Model(ModelSpec spec);

  const ModelSpec& spec() const { return spec_; }
  std::size_t param_count() const { return spec_.param_count(); }
  std::size_t stat_count() const { return spec_.stat_count(); }

  /// Logistic starts at zero; MLP layers use Glorot-uniform weights, zero biases.
  ParamVector initial_params(Rng& rng) const;
  ParamVector initial_stats() const;

  /// Mean cross-entropy over the batch; writes dLoss/dParams into `grad`.
  double loss_and_gradient(std::span<const double> params, std::span<const double> stats,
                           const Dataset& data, Batch batch, std::span<double> grad) const;
  double loss(std::span<const double> params, std::span<const double> stats, const Dataset& data,
              Batch batch) const;

  /// Moves running statistics toward the batch moments (momentum 0.1).
  void update_stats(std::span<double> stats, const Dataset& data, Batch batch) const;

  /// Logits for one example.
  std::vector<double> logits(std::span<const double> params, std::span<const double> stats,
                             std::span<const double> x) const;

 private:
  struct Layer {
    std::size_t in, out, offset;
  };
  double forward_backward(std::span<const double> params, std::span<const double> stats,
                          const Dataset& data, Batch batch, std::span<double> grad) const;

  ModelSpec spec_;
  std::vector<Layer> layers_;
  std::size_t dense_offset_ = 0;
};

struct LocalTrainConfig {
  unsigned steps = 10;  // E
  std::size_t batch_size = 16;
  double lr = 0.01;
  double momentum = 0.9;
  void validate() const;
};

struct LocalUpdate {
  ParamVector delta;
  ParamVector stats_delta;
};

/// E momentum-SGD steps on minibatches drawn with replacement from `shard`.
/// Momentum starts at zero each call.
LocalUpdate local_train(const Model& model, std::span<const double> params,
                        std::span<const double> stats, const Dataset& shard,
                        const LocalTrainConfig& cfg, Rng& rng);

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};

Evaluation evaluate(const Model& model, std::span<const double> params,
                    std::span<const double> stats, const Dataset& test);

/// base * 0.98^floor((round-1)/10)
double scheduled_lr(double base, unsigned round);

}  // namespace gluefl
