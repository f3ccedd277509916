#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "gluefl/netsim.hpp"
#include "gluefl/rng.hpp"

using namespace gluefl;

TEST_SUITE("netsim") {

TEST_CASE("default downstream profile has a fifth of clients at 10 Mbps or less") {
  Rng rng(1);
  const auto profiles = sample_profiles(10000, ProfileConfig::defaults(), rng);
  std::size_t slow = 0;
  for (const auto& p : profiles) {
    if (p.down_bps <= 10e6) ++slow;
    CHECK(p.down_bps > 0);
    CHECK(p.up_bps > 0);
    CHECK(p.compute_rate > 0);
  }
  CHECK(std::abs(slow / 10000.0 - 0.2) <= 0.02);
}

TEST_CASE("profiles are a function of the seed") {
  Rng a(9), b(9);
  const auto x = sample_profiles(50, ProfileConfig::defaults(), a);
  const auto y = sample_profiles(50, ProfileConfig::defaults(), b);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(x[i].down_bps == y[i].down_bps);
    CHECK(x[i].up_bps == y[i].up_bps);
    CHECK(x[i].compute_rate == y[i].compute_rate);
  }
}

TEST_CASE("single bucket distribution gives identical clients") {
  ProfileConfig cfg;
  cfg.down_mbps = EmpiricalCdf{{{1.0, 20.0}}};
  cfg.up_mbps = EmpiricalCdf{{{1.0, 5.0}}};
  cfg.compute_rate = EmpiricalCdf{{{1.0, 3.0}}};
  Rng rng(2);
  for (const auto& p : sample_profiles(100, cfg, rng)) {
    CHECK(p.down_bps == 20e6);
    CHECK(p.up_bps == 5e6);
    CHECK(p.compute_rate == 3.0);
  }
}

TEST_CASE("lognormal and malformed distributions") {
  Rng rng(3);
  const ValueDistribution ln = LogNormal{std::log(10.0), 0.0};
  CHECK(sample(ln, rng) == doctest::Approx(10.0));
  CHECK_THROWS_AS(validate(ValueDistribution{EmpiricalCdf{{{0.0, 5}, {0.5, 3}, {1.0, 9}}}}), std::invalid_argument);
  CHECK_THROWS_AS(validate(ValueDistribution{EmpiricalCdf{{{0.5, 5}, {0.4, 6}, {1.0, 9}}}}), std::invalid_argument);
  CHECK_THROWS_AS(validate(ValueDistribution{EmpiricalCdf{{{0.0, 5}, {0.9, 6}}}}), std::invalid_argument);
  CHECK_THROWS_AS(validate(ValueDistribution{EmpiricalCdf{{{0.0, -1}, {1.0, 6}}}}), std::invalid_argument);
  CHECK_THROWS_AS(validate(ValueDistribution{LogNormal{0.0, -1.0}}), std::invalid_argument);
}

TEST_CASE("downstream payload sizes") {
  ServerVersionVector vv(1000, 4);
  DownstreamOptions dense{Encoding::Dense, {}, false};
  CHECK(downstream_payload(vv, 0, 1, dense) == 4000);
  CHECK(downstream_payload(vv, 0, 1) == 4000);

  vv.mark_synced(1, 4);
  IndexSet changed;
  for (std::uint32_t j = 0; j < 1000; j += 5) changed.push_back(j);
  vv.record_update(changed, 4);
  CHECK(downstream_payload(vv, 1, 5) == 925);
  CHECK(vv.stale_count(1) == 200);
  DownstreamOptions with_mask{Encoding::BitmapValues, {}, true};
  CHECK(downstream_payload(vv, 1, 5, with_mask) == 1050);

  vv.mark_synced(2, 5);
  CHECK(downstream_payload(vv, 2, 5) == 125);
  CHECK(vv.stale_count(2) == 0);

  IndexSet all(1000);
  for (std::uint32_t j = 0; j < 1000; ++j) all[j] = j;
  vv.record_update(all, 5);
  CHECK(downstream_payload(vv, 1, 6) == 4000);
}

TEST_CASE("downstream delta reconstructs the server model") {
  ServerVersionVector vv(6, 2);
  std::vector<double> server(6, 0.0), client = server;
  vv.mark_synced(0, 1);
  vv.record_update(IndexSet{1, 4}, 1);
  server[1] = 2.0;
  server[4] = -1.0;
  vv.record_update(IndexSet{4, 5}, 2);
  server[4] = 7.0;
  server[5] = 3.0;
  const auto d = downstream_delta(vv, 0, server);
  CHECK(d.support == IndexSet{1, 4, 5});
  for (std::size_t i = 0; i < d.support.size(); ++i) client[d.support[i]] = d.values[i];
  CHECK(client == server);
}

TEST_CASE("over-commit split") {
  const auto a = plan_overcommit(30, 24, 1.3, 0.8);
  CHECK(a.extra_sticky == 7);
  CHECK(a.extra_fresh == 2);
  const auto b = plan_overcommit(30, 24, 1.3, 0.1);
  CHECK(b.extra_sticky == 1);
  CHECK(b.extra_fresh == 8);
  const auto c = plan_overcommit(30, 24, 1.0);
  CHECK(c.extra_sticky + c.extra_fresh == 0);
  const auto d = plan_overcommit(10, 8, 1.3);
  CHECK(d.f_sticky == doctest::Approx(0.8));
  CHECK(d.extra_sticky + d.extra_fresh == 3);
  CHECK_THROWS_AS(plan_overcommit(10, 8, 0.9), std::invalid_argument);
  CHECK_THROWS_AS(plan_overcommit(10, 8, 1.3, 1.5), std::invalid_argument);
}

TEST_CASE("finish time arithmetic") {
  const std::vector<ClientProfile> profiles{{10e6, 1e6, 1.0}};
  const std::vector<Participant> parts{{0, Group::Uniform, 10'000'000, 0, 1.0}};
  const auto t = simulate_round_timing(parts, profiles, 0, 0, 1);
  CHECK(t.finish[0] == doctest::Approx(8.0));
  CHECK(t.slowest_used_download_s == doctest::Approx(8.0));
  CHECK(t.wall_time == doctest::Approx(8.0));
}

TEST_CASE("without over-commit every participant is used") {
  const std::vector<ClientProfile> profiles{{1e6, 1e6, 1.0}, {2e6, 1e6, 2.0}, {3e6, 3e6, 1.0}};
  const std::vector<Participant> parts{{0, Group::Sticky, 100, 100, 1.0}, {1, Group::Sticky, 100, 100, 1.0},
                                       {2, Group::Fresh, 100, 100, 1.0}};
  const auto t = simulate_round_timing(parts, profiles, 10, 2, 1);
  CHECK(t.used_sticky == std::vector<ClientId>{0, 1});
  CHECK(t.used_fresh == std::vector<ClientId>{2});
}

TEST_CASE("the faster uploader takes the last slot") {
  const std::vector<ClientProfile> profiles{{1e6, 0.5e6, 1.0}, {1e6, 1e6, 1.0}};
  const std::vector<Participant> parts{{0, Group::Fresh, 1000, 1000, 1.0}, {1, Group::Fresh, 1000, 1000, 1.0}};
  const auto t = simulate_round_timing(parts, profiles, 5, 0, 1);
  CHECK(t.used_fresh == std::vector<ClientId>{1});
  CHECK(t.wall_time == doctest::Approx(t.finish[1]));
}

TEST_CASE("too few participants raise a dropout error") {
  const std::vector<ClientProfile> profiles{{1e6, 1e6, 1.0}, {1e6, 1e6, 1.0}};
  const std::vector<Participant> parts{{0, Group::Sticky, 10, 10, 1.0}, {1, Group::Fresh, 10, 10, 1.0}};
  CHECK_THROWS_AS(simulate_round_timing(parts, profiles, 1, 2, 1), DropoutError);
}

}  // TEST_SUITE
