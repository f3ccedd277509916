#include <doctest.h>

#include <numeric>
#include <set>
#include <stdexcept>

#include "fixtures.hpp"
#include "gluefl/data.hpp"
#include "gluefl/rng.hpp"
#include "gluefl/training.hpp"

using namespace gluefl;

namespace {

std::vector<double> global_distribution(const Dataset& d) {
  const auto h = d.label_histogram();
  std::vector<double> p(h.size());
  for (std::size_t c = 0; c < h.size(); ++c) p[c] = static_cast<double>(h[c]) / static_cast<double>(d.size());
  return p;
}

double mean_tv(const Dataset& d, double alpha, std::uint64_t seed) {
  Rng rng(seed);
  const auto shards = partition_dirichlet(d, 20, alpha, 0, rng);
  const auto ref = global_distribution(d);
  double sum = 0.0;
  std::size_t counted = 0;
  for (const auto& s : shards) {
    if (s.size() == 0) continue;
    sum += label_tv_distance(s.data, ref);
    ++counted;
  }
  return sum / static_cast<double>(counted);
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("synthetic sizes and labels") {
  Rng rng(1);
  const auto split = generate_synthetic({5, 7, 1003, 2.0}, rng);
  CHECK(split.train.size() + split.test.size() == 1003);
  CHECK(split.test.size() == 200);
  CHECK(split.train.dim == 7);
  CHECK(split.train.features.size() == split.train.size() * 7);
  for (int y : split.train.labels) CHECK((y >= 0 && y < 5));
  for (int y : split.test.labels) CHECK((y >= 0 && y < 5));
  CHECK_THROWS_AS(generate_synthetic({1, 7, 100, 2.0}, rng), std::invalid_argument);
  CHECK_THROWS_AS(generate_synthetic({3, 0, 100, 2.0}, rng), std::invalid_argument);
  CHECK_THROWS_AS(generate_synthetic({3, 7, 0, 2.0}, rng), std::invalid_argument);
}

TEST_CASE("synthetic data is a function of the seed") {
  Rng a(5), b(5), c(6);
  const auto x = generate_synthetic({4, 6, 300, 2.0}, a);
  const auto y = generate_synthetic({4, 6, 300, 2.0}, b);
  const auto z = generate_synthetic({4, 6, 300, 2.0}, c);
  CHECK(x.train.features == y.train.features);
  CHECK(x.train.labels == y.train.labels);
  CHECK(x.test.features == y.test.features);
  CHECK(x.train.features != z.train.features);
}

TEST_CASE("well separated classes are learnable centrally") {
  Rng rng(3);
  const auto split = generate_synthetic({10, 50, 5000, 10.0}, rng);
  Model model({ModelKind::Logistic, 50, 10, {}, Activation::Relu});
  auto w = model.initial_params(rng);
  const auto stats = model.initial_stats();
  LocalTrainConfig cfg{200, 32, 0.1, 0.9};
  const auto upd = local_train(model, w, stats, split.train, cfg, rng);
  for (std::size_t j = 0; j < w.size(); ++j) w[j] += upd.delta[j];
  CHECK(evaluate(model, w, stats, split.test).accuracy > 0.95);
}

TEST_CASE("dirichlet partition is exact and disjoint") {
  Rng rng(2);
  const auto split = generate_synthetic({10, 3, 2500, 2.0}, rng);
  const auto& d = split.train;
  const auto shards = partition_dirichlet(d, 30, 0.5, 0, rng);
  CHECK(shards.size() == 30);
  std::size_t total = 0;
  std::multiset<std::vector<double>> rows_in, rows_out;
  for (std::size_t i = 0; i < d.size(); ++i) rows_in.insert({d.row(i).begin(), d.row(i).end()});
  for (const auto& s : shards) {
    total += s.size();
    for (std::size_t i = 0; i < s.size(); ++i) rows_out.insert({s.data.row(i).begin(), s.data.row(i).end()});
  }
  CHECK(total == d.size());
  CHECK(rows_in == rows_out);
}

TEST_CASE("small shards are dropped and their rows redistributed") {
  Rng rng(4);
  const auto split = generate_synthetic({10, 3, 2500, 2.0}, rng);
  const auto shards = partition_dirichlet(split.train, 60, 0.1, 22, rng);
  CHECK(shards.size() < 60);
  std::size_t total = 0;
  for (std::size_t i = 0; i < shards.size(); ++i) {
    CHECK(shards[i].id == i);
    CHECK(shards[i].size() >= 22);
    total += shards[i].size();
  }
  CHECK(total == split.train.size());
  CHECK_THROWS_AS(partition_dirichlet(split.train, 1000, 0.5, 22, rng), std::invalid_argument);
  CHECK_THROWS_AS(partition_dirichlet(split.train, 10, 0.0, 0, rng), std::invalid_argument);
}

TEST_CASE("large concentration approaches the global label mix") {
  Rng rng(8);
  const auto split = generate_synthetic({10, 2, 12000, 2.0}, rng);
  const auto ref = global_distribution(split.train);
  const auto shards = partition_dirichlet(split.train, 10, 1e6, 0, rng);
  for (const auto& s : shards) CHECK(label_tv_distance(s.data, ref) < 0.05);
}

TEST_CASE("small concentration is more skewed than large") {
  Rng rng(9);
  const auto split = generate_synthetic({10, 2, 5000, 2.0}, rng);
  for (std::uint64_t seed = 1; seed <= 5; ++seed)
    CHECK(mean_tv(split.train, 0.1, seed) > mean_tv(split.train, 100.0, seed));
}

TEST_CASE("client weights") {
  std::vector<ClientShard> shards(3);
  const std::size_t sizes[] = {10, 30, 60};
  for (std::size_t i = 0; i < 3; ++i) {
    shards[i].id = static_cast<ClientId>(i);
    shards[i].data.dim = 1;
    shards[i].data.classes = 2;
    for (std::size_t r = 0; r < sizes[i]; ++r) shards[i].data.push_back(std::vector<double>{0.0}, 0);
  }
  const auto p = client_weights(shards, WeightMode::Proportional);
  CHECK(p[0] == doctest::Approx(0.1));
  CHECK(p[1] == doctest::Approx(0.3));
  CHECK(p[2] == doctest::Approx(0.6));
  CHECK(std::accumulate(p.begin(), p.end(), 0.0) == 1.0);

  shards.push_back(shards[0]);
  const auto u = client_weights(shards, WeightMode::Uniform);
  CHECK(u == std::vector<double>(4, 0.25));

  std::vector<ClientShard> many(7);
  for (std::size_t i = 0; i < many.size(); ++i) {
    many[i].data.dim = 1;
    many[i].data.classes = 2;
    for (std::size_t r = 0; r < 3 * i + 1; ++r) many[i].data.push_back(std::vector<double>{0.0}, 1);
  }
  const auto q = client_weights(many, WeightMode::Proportional);
  CHECK(std::accumulate(q.begin(), q.end(), 0.0) == 1.0);
  CHECK(parse_weight_mode("uniform") == WeightMode::Uniform);
}

TEST_CASE("csv parsing") {
  Rng rng(1);
  std::string text = "a,b,label\n";
  for (int i = 0; i < 10; ++i) text += std::to_string(i) + "," + std::to_string(2 * i) + "," + std::to_string(i % 3) + "\n";
  const auto split = parse_csv(text, rng);
  CHECK(split.train.size() == 8);
  CHECK(split.test.size() == 2);
  CHECK(split.train.dim == 2);
  CHECK(split.train.classes == 3);
  for (std::size_t i = 0; i < split.train.size(); ++i) CHECK(split.train.row(i)[1] == 2 * split.train.row(i)[0]);
  CHECK_THROWS(parse_csv("x\n1\n", rng));
  CHECK_THROWS(parse_csv("a,label\n1,x\n", rng));
}

}  // TEST_SUITE
