#include "gluefl/training.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gluefl {

namespace {
constexpr double kStatEps = 1e-5;
constexpr double kStatMomentum = 0.1;
}  // namespace

ModelKind parse_model_kind(std::string_view name) {
  if (name == "logistic") return ModelKind::Logistic;
  if (name == "mlp") return ModelKind::Mlp;
  if (name == "mlp-running-stats") return ModelKind::MlpRunningStats;
  throw std::invalid_argument("unknown model kind: " + std::string(name));
}

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Logistic: return "logistic";
    case ModelKind::Mlp: return "mlp";
    case ModelKind::MlpRunningStats: return "mlp-running-stats";
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::Relu;
  if (name == "tanh") return Activation::Tanh;
  throw std::invalid_argument("unknown activation: " + std::string(name));
}

std::string_view to_string(Activation act) { return act == Activation::Relu ? "relu" : "tanh"; }

std::size_t ModelSpec::param_count() const {
  std::size_t n = kind == ModelKind::MlpRunningStats ? 2 * input_dim : 0;
  std::size_t prev = input_dim;
  if (kind != ModelKind::Logistic) {
    for (auto h : hidden) {
      n += h * prev + h;
      prev = h;
    }
  }
  return n + classes * prev + classes;
}

std::size_t ModelSpec::stat_count() const {
  return kind == ModelKind::MlpRunningStats ? 2 * input_dim + 1 : 0;
}

Model::Model(ModelSpec spec) : spec_(std::move(spec)) {
  if (spec_.input_dim == 0 || spec_.classes < 2) throw std::invalid_argument("model needs input_dim >= 1 and classes >= 2");
  if (spec_.kind == ModelKind::Logistic) spec_.hidden.clear();
  for (auto h : spec_.hidden) {
    if (h == 0) throw std::invalid_argument("hidden layer width must be positive");
  }
  dense_offset_ = spec_.kind == ModelKind::MlpRunningStats ? 2 * spec_.input_dim : 0;
  std::size_t offset = dense_offset_;
  std::size_t prev = spec_.input_dim;
  auto widths = spec_.hidden;
  widths.push_back(spec_.classes);
  for (auto w : widths) {
    layers_.push_back({prev, w, offset});
    offset += prev * w + w;
    prev = w;
  }
}

ParamVector Model::initial_params(Rng& rng) const {
  ParamVector p(param_count(), 0.0);
  if (spec_.kind == ModelKind::MlpRunningStats) {
    std::fill(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(spec_.input_dim), 1.0);
  }
  if (spec_.kind == ModelKind::Logistic) return p;
  for (const auto& layer : layers_) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (std::size_t i = 0; i < layer.in * layer.out; ++i) p[layer.offset + i] = u(rng);
  }
  return p;
}

ParamVector Model::initial_stats() const {
  ParamVector s(stat_count(), 0.0);
  if (!s.empty()) {
    std::fill(s.begin() + static_cast<std::ptrdiff_t>(spec_.input_dim),
              s.begin() + static_cast<std::ptrdiff_t>(2 * spec_.input_dim), 1.0);
  }
  return s;
}

namespace {

void activate(Activation act, std::vector<double>& v) {
  for (auto& x : v) x = act == Activation::Relu ? std::max(0.0, x) : std::tanh(x);
}

// Derivative expressed through the activation output.
double activation_grad(Activation act, double out) {
  return act == Activation::Relu ? (out > 0.0 ? 1.0 : 0.0) : 1.0 - out * out;
}

// Returns log-sum-exp and fills probabilities.
double softmax(std::span<const double> z, std::vector<double>& prob) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  prob.resize(z.size());
  for (std::size_t c = 0; c < z.size(); ++c) s += (prob[c] = std::exp(z[c] - m));
  for (auto& p : prob) p /= s;
  return m + std::log(s);
}

}  // namespace

std::vector<double> Model::logits(std::span<const double> params, std::span<const double> stats,
                                  std::span<const double> x) const {
  std::vector<double> a(x.begin(), x.end());
  if (spec_.kind == ModelKind::MlpRunningStats) {
    const std::size_t n = spec_.input_dim;
    for (std::size_t j = 0; j < n; ++j) {
      const double xhat = (a[j] - stats[j]) / std::sqrt(stats[n + j] + kStatEps);
      a[j] = params[j] * xhat + params[n + j];
    }
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& L = layers_[l];
    std::vector<double> z(L.out);
    const double* W = params.data() + L.offset;
    const double* b = W + L.in * L.out;
    for (std::size_t o = 0; o < L.out; ++o) {
      double acc = b[o];
      const double* row = W + o * L.in;
      for (std::size_t i = 0; i < L.in; ++i) acc += row[i] * a[i];
      z[o] = acc;
    }
    if (l + 1 < layers_.size()) activate(spec_.activation, z);
    a = std::move(z);
  }
  return a;
}

double Model::forward_backward(std::span<const double> params, std::span<const double> stats,
                               const Dataset& data, Batch batch, std::span<double> grad) const {
  if (params.size() != param_count()) throw std::invalid_argument("parameter length mismatch");
  if (stats.size() != stat_count()) throw std::invalid_argument("statistics length mismatch");
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const bool want_grad = !grad.empty();
  if (want_grad) {
    if (grad.size() != params.size()) throw std::invalid_argument("gradient length mismatch");
    std::fill(grad.begin(), grad.end(), 0.0);
  }
  const std::size_t n_in = spec_.input_dim;
  const bool normalized = spec_.kind == ModelKind::MlpRunningStats;
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  std::vector<std::vector<double>> acts(layers_.size() + 1);
  std::vector<double> xhat(normalized ? n_in : 0);
  std::vector<double> prob;
  double total = 0.0;

  for (auto row_index : batch) {
    const auto x = data.row(row_index);
    const int y = data.labels[row_index];
    acts[0].assign(x.begin(), x.end());
    if (normalized) {
      for (std::size_t j = 0; j < n_in; ++j) {
        xhat[j] = (x[j] - stats[j]) / std::sqrt(stats[n_in + j] + kStatEps);
        acts[0][j] = params[j] * xhat[j] + params[n_in + j];
      }
    }
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& L = layers_[l];
      auto& z = acts[l + 1];
      z.assign(L.out, 0.0);
      const double* W = params.data() + L.offset;
      const double* b = W + L.in * L.out;
      const auto& a = acts[l];
      for (std::size_t o = 0; o < L.out; ++o) {
        double acc = b[o];
        const double* row = W + o * L.in;
        for (std::size_t i = 0; i < L.in; ++i) acc += row[i] * a[i];
        z[o] = acc;
      }
      if (l + 1 < layers_.size()) activate(spec_.activation, z);
    }
    const double lse = softmax(acts.back(), prob);
    total += lse - acts.back()[static_cast<std::size_t>(y)];
    if (!want_grad) continue;

    std::vector<double> delta(prob);
    delta[static_cast<std::size_t>(y)] -= 1.0;
    for (auto& d : delta) d *= inv_b;
    for (std::size_t l = layers_.size(); l-- > 0;) {
      const auto& L = layers_[l];
      const auto& a = acts[l];
      double* gW = grad.data() + L.offset;
      double* gb = gW + L.in * L.out;
      const double* W = params.data() + L.offset;
      std::vector<double> back(L.in, 0.0);
      for (std::size_t o = 0; o < L.out; ++o) {
        const double d = delta[o];
        if (d == 0.0) continue;
        gb[o] += d;
        double* grow = gW + o * L.in;
        const double* wrow = W + o * L.in;
        for (std::size_t i = 0; i < L.in; ++i) {
          grow[i] += d * a[i];
          back[i] += d * wrow[i];
        }
      }
      if (l > 0) {
        for (std::size_t i = 0; i < L.in; ++i) back[i] *= activation_grad(spec_.activation, a[i]);
      }
      delta = std::move(back);
    }
    if (normalized) {
      for (std::size_t j = 0; j < n_in; ++j) {
        grad[j] += delta[j] * xhat[j];
        grad[n_in + j] += delta[j];
      }
    }
  }
  return total * inv_b;
}

double Model::loss_and_gradient(std::span<const double> params, std::span<const double> stats,
                                const Dataset& data, Batch batch, std::span<double> grad) const {
  if (grad.size() != params.size()) throw std::invalid_argument("gradient length mismatch");
  return forward_backward(params, stats, data, batch, grad);
}

double Model::loss(std::span<const double> params, std::span<const double> stats,
                   const Dataset& data, Batch batch) const {
  return forward_backward(params, stats, data, batch, {});
}

void Model::update_stats(std::span<double> stats, const Dataset& data, Batch batch) const {
  if (spec_.kind != ModelKind::MlpRunningStats) return;
  const std::size_t n = spec_.input_dim;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (std::size_t j = 0; j < n; ++j) {
    double mean = 0.0;
    for (auto r : batch) mean += data.row(r)[j];
    mean *= inv_b;
    double var = 0.0;
    for (auto r : batch) {
      const double d = data.row(r)[j] - mean;
      var += d * d;
    }
    var *= inv_b;
    stats[j] = (1.0 - kStatMomentum) * stats[j] + kStatMomentum * mean;
    stats[n + j] = (1.0 - kStatMomentum) * stats[n + j] + kStatMomentum * var;
  }
  stats[2 * n] += 1.0;
}

void LocalTrainConfig::validate() const {
  if (steps < 1) throw std::invalid_argument("local steps must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (!(lr >= 0.0)) throw std::invalid_argument("learning rate must be non-negative");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must lie in [0,1)");
}

LocalUpdate local_train(const Model& model, std::span<const double> params,
                        std::span<const double> stats, const Dataset& shard,
                        const LocalTrainConfig& cfg, Rng& rng) {
  cfg.validate();
  if (shard.empty()) throw std::invalid_argument("local_train: empty shard");
  ParamVector w(params.begin(), params.end());
  ParamVector s(stats.begin(), stats.end());
  ParamVector velocity(w.size(), 0.0);
  ParamVector grad(w.size(), 0.0);
  std::vector<std::size_t> batch(cfg.batch_size);
  std::uniform_int_distribution<std::size_t> pick(0, shard.size() - 1);

  for (unsigned e = 0; e < cfg.steps; ++e) {
    for (auto& b : batch) b = pick(rng);
    model.loss_and_gradient(w, s, shard, batch, grad);
    for (std::size_t j = 0; j < w.size(); ++j) {
      velocity[j] = cfg.momentum * velocity[j] + grad[j];
      w[j] -= cfg.lr * velocity[j];
    }
    model.update_stats(s, shard, batch);
  }

  LocalUpdate out;
  out.delta.resize(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) out.delta[j] = w[j] - params[j];
  out.stats_delta.resize(s.size());
  for (std::size_t j = 0; j < s.size(); ++j) out.stats_delta[j] = s[j] - stats[j];
  return out;
}

Evaluation evaluate(const Model& model, std::span<const double> params,
                    std::span<const double> stats, const Dataset& test) {
  if (test.empty()) throw std::invalid_argument("evaluate: empty test set");
  double loss = 0.0;
  std::size_t correct = 0;
  std::vector<double> prob;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto z = model.logits(params, stats, test.row(i));
    const auto y = static_cast<std::size_t>(test.labels[i]);
    loss += softmax(z, prob) - z[y];
    // argmax, lowest class wins ties
    const auto best = static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
    if (best == y) ++correct;
  }
  const double n = static_cast<double>(test.size());
  return {loss / n, static_cast<double>(correct) / n};
}

double scheduled_lr(double base, unsigned round) {
  if (round < 1) throw std::invalid_argument("rounds are numbered from 1");
  return base * std::pow(0.98, static_cast<double>((round - 1) / 10));
}

}  // namespace gluefl
