#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "gluefl/aggregation.hpp"
#include "gluefl/rng.hpp"
#include "gluefl/training.hpp"

using namespace gluefl;

namespace {

ModelSpec spec_for(ModelKind kind, std::size_t in, std::size_t classes) {
  ModelSpec s{kind, in, classes, {}, Activation::Tanh};
  if (kind != ModelKind::Logistic) s.hidden = {6, 5};
  return s;
}

Dataset random_rows(std::size_t n, std::size_t dim, std::size_t classes, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Dataset d;
  d.dim = dim;
  d.classes = classes;
  std::vector<double> x(dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : x) v = g(rng);
    d.push_back(x, static_cast<int>(i % classes));
  }
  return d;
}

double max_rel_error(const Model& m, const ParamVector& w, const ParamVector& stats, const Dataset& d) {
  const auto batch = fixtures::all_rows(d);
  ParamVector grad(w.size());
  m.loss_and_gradient(w, stats, d, batch, grad);
  ParamVector wp = w;
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    const double h = 1e-6;
    wp[j] = w[j] + h;
    const double up = m.loss(wp, stats, d, batch);
    wp[j] = w[j] - h;
    const double down = m.loss(wp, stats, d, batch);
    wp[j] = w[j];
    const double fd = (up - down) / (2 * h);
    num += (fd - grad[j]) * (fd - grad[j]);
    den += fd * fd + grad[j] * grad[j];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

}  // namespace

TEST_SUITE("training") {

TEST_CASE("parameter layout sizes") {
  CHECK(ModelSpec{ModelKind::Logistic, 200, 10, {}, Activation::Relu}.param_count() == 2010);
  CHECK(ModelSpec{ModelKind::Logistic, 200, 10, {}, Activation::Relu}.stat_count() == 0);
  CHECK(ModelSpec{ModelKind::Mlp, 4, 3, {5}, Activation::Relu}.param_count() == 4 * 5 + 5 + 5 * 3 + 3);
  const ModelSpec rs{ModelKind::MlpRunningStats, 4, 3, {5}, Activation::Relu};
  CHECK(rs.param_count() == 8 + 4 * 5 + 5 + 5 * 3 + 3);
  CHECK(rs.stat_count() == 9);
  const auto st = Model(rs).initial_stats();
  CHECK(st[0] == 0.0);
  CHECK(st[4] == 1.0);
  CHECK(st[8] == 0.0);
}

TEST_CASE("gradients match finite differences for every model kind") {
  Rng rng(21);
  for (auto kind : {ModelKind::Logistic, ModelKind::Mlp, ModelKind::MlpRunningStats}) {
    for (int trial = 0; trial < 10; ++trial) {
      const Model m(spec_for(kind, 4, 3));
      auto w = m.initial_params(rng);
      std::normal_distribution<double> g(0.0, 0.3);
      for (auto& v : w) v += g(rng);
      auto stats = m.initial_stats();
      const auto d = random_rows(7, 4, 3, rng);
      if (kind == ModelKind::MlpRunningStats) {
        const auto b = fixtures::all_rows(d);
        m.update_stats(stats, d, b);
      }
      CHECK(max_rel_error(m, w, stats, d) < 1e-4);
    }
  }
}

TEST_CASE("one step of two-class logistic from zero") {
  const Model m({ModelKind::Logistic, 3, 2, {}, Activation::Relu});
  const auto d = fixtures::make_dataset(3, 2, {{{1.0, -2.0, 0.5}, 1}});
  const ParamVector w(m.param_count(), 0.0);
  Rng rng(1);
  const double lr = 0.3;
  const auto upd = local_train(m, w, {}, d, {1, 1, lr, 0.9}, rng);
  // layout: W (2 x 3 row-major) then b (2)
  const double x[] = {1.0, -2.0, 0.5};
  for (int j = 0; j < 3; ++j) {
    CHECK(upd.delta[3 + j] == doctest::Approx(0.5 * lr * x[j]));
    CHECK(upd.delta[j] == doctest::Approx(-0.5 * lr * x[j]));
  }
  CHECK(upd.delta[7] == doctest::Approx(0.5 * lr));
}

TEST_CASE("zero learning rate gives a zero update") {
  Rng rng(2);
  const Model m(spec_for(ModelKind::Mlp, 4, 3));
  const auto w = m.initial_params(rng);
  const auto d = random_rows(10, 4, 3, rng);
  const auto upd = local_train(m, w, {}, d, {5, 4, 0.0, 0.9}, rng);
  for (double v : upd.delta) CHECK(v == 0.0);
}

TEST_CASE("saturated fit has zero gradient and perfect accuracy") {
  const Model m({ModelKind::Logistic, 2, 2, {}, Activation::Relu});
  const auto d = fixtures::make_dataset(2, 2, {{{1.0, 0.0}, 0}, {{0.0, 1.0}, 1}});
  const ParamVector w{1000, 0, 0, 1000, 0, 0};
  Rng rng(3);
  const auto upd = local_train(m, w, {}, d, {2, 2, 0.5, 0.9}, rng);
  for (double v : upd.delta) CHECK(v == 0.0);
  CHECK(evaluate(m, w, {}, d).accuracy == 1.0);
}

TEST_CASE("uniform predictor loss is ln of the class count") {
  Rng rng(4);
  const auto d = random_rows(100, 5, 10, rng);
  const Model m({ModelKind::Logistic, 5, 10, {}, Activation::Relu});
  const ParamVector w(m.param_count(), 0.0);
  const auto ev = evaluate(m, w, {}, d);
  CHECK(ev.loss == doctest::Approx(std::log(10.0)).epsilon(1e-12));
  CHECK(ev.accuracy >= 0.0);
  CHECK(ev.accuracy <= 1.0);
  // all logits tie, so class 0 is predicted everywhere
  CHECK(ev.accuracy == doctest::Approx(0.1));
}

TEST_CASE("running statistics move toward batch moments") {
  const Model m({ModelKind::MlpRunningStats, 1, 2, {2}, Activation::Relu});
  const auto d = fixtures::make_dataset(1, 2, {{{1.0}, 0}, {{3.0}, 1}});
  auto stats = m.initial_stats();
  m.update_stats(stats, d, fixtures::all_rows(d));
  CHECK(stats[0] == doctest::Approx(0.2));
  CHECK(stats[1] == doctest::Approx(0.9 * 1.0 + 0.1 * 1.0));
  CHECK(stats[2] == 1.0);
}

TEST_CASE("two-client full participation averaging equals centralized SGD") {
  Rng rng(5);
  const Model m({ModelKind::Logistic, 3, 2, {}, Activation::Relu});
  const auto a = fixtures::make_dataset(3, 2, {{{0.5, -1.0, 2.0}, 0}});
  const auto b = fixtures::make_dataset(3, 2, {{{-1.5, 0.3, 0.7}, 1}});
  const auto both = fixtures::make_dataset(3, 2, {{{0.5, -1.0, 2.0}, 0}, {{-1.5, 0.3, 0.7}, 1}});
  ParamVector fed(m.param_count(), 0.0), central = fed, grad(fed.size());
  const double lr = 0.2;
  for (unsigned round = 1; round <= 30; ++round) {
    std::vector<ClientDelta> deltas;
    deltas.push_back({0, 0.5, local_train(m, fed, {}, a, {1, 1, lr, 0.9}, rng).delta});
    deltas.push_back({1, 0.5, local_train(m, fed, {}, b, {1, 1, lr, 0.9}, rng).delta});
    fed = fedavg_aggregate(fed, std::move(deltas), 2, 2);
    m.loss_and_gradient(central, {}, both, fixtures::all_rows(both), grad);
    for (std::size_t j = 0; j < central.size(); ++j) central[j] -= lr * grad[j];
  }
  for (std::size_t j = 0; j < fed.size(); ++j) CHECK(fed[j] == doctest::Approx(central[j]).epsilon(1e-12));
}

TEST_CASE("learning rate schedule") {
  CHECK(scheduled_lr(0.01, 1) == doctest::Approx(0.01));
  CHECK(scheduled_lr(0.01, 10) == doctest::Approx(0.01));
  CHECK(scheduled_lr(0.01, 11) == doctest::Approx(0.0098));
  CHECK(scheduled_lr(0.05, 21) == doctest::Approx(0.04802));
}

TEST_CASE("training config validation and names") {
  CHECK_THROWS(LocalTrainConfig{0, 1, 0.1, 0.9}.validate());
  CHECK_THROWS(LocalTrainConfig{1, 0, 0.1, 0.9}.validate());
  CHECK_THROWS(LocalTrainConfig{1, 1, -0.1, 0.9}.validate());
  CHECK(parse_model_kind("mlp-running-stats") == ModelKind::MlpRunningStats);
  CHECK(parse_activation(to_string(Activation::Tanh)) == Activation::Tanh);
  CHECK_THROWS(parse_model_kind("cnn"));
}

}  // TEST_SUITE
