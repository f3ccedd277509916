#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "gluefl/numerics.hpp"
#include "gluefl/rng.hpp"

using namespace gluefl;

TEST_SUITE("numerics") {

TEST_CASE("ratio_to_count rounds and clamps") {
  CHECK(ratio_to_count(0.09, 100) == 9);
  CHECK(ratio_to_count(0.0, 100) == 0);
  CHECK(ratio_to_count(0.001, 100) == 1);
  CHECK(ratio_to_count(1.0, 100) == 100);
  CHECK(ratio_to_count(0.005, 100) == 1);
  CHECK(ratio_to_count(0.015, 100) == 2);
  CHECK(ratio_to_count(0.16, 2010) == 322);
  CHECK_THROWS_AS(ratio_to_count(-0.1, 10), std::invalid_argument);
  CHECK_THROWS_AS(ratio_to_count(1.1, 10), std::invalid_argument);
}

TEST_CASE("top_k_indices picks largest magnitudes with lower-index ties") {
  const std::vector<double> v{3, -5, 1};
  CHECK(top_k_indices(v, 1) == IndexSet{1});
  CHECK(top_k_indices(v, 3) == IndexSet{0, 1, 2});
  CHECK(top_k_indices(std::vector<double>{2, -2, 0.5}, 1) == IndexSet{0});
  CHECK(top_k_indices(v, 0).empty());
  CHECK_THROWS_AS(top_k_indices(v, 4), std::invalid_argument);
  CHECK(top_k_indices(std::vector<double>(5, 0.0), 2) == IndexSet{0, 1});
}

TEST_CASE("top_k_among restricts the candidates") {
  const std::vector<double> v{9, 1, -7, 3, 0};
  CHECK(top_k_among(v, IndexSet{1, 2, 3}, 2) == IndexSet{2, 3});
  CHECK(top_k_among(v, IndexSet{1, 4}, 2) == IndexSet{1, 4});
  CHECK_THROWS_AS(top_k_among(v, IndexSet{1}, 2), std::invalid_argument);
}

TEST_CASE("top_k_indices agrees with a full sort") {
  Rng rng(7);
  std::uniform_int_distribution<int> small(-3, 3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(40);
    for (auto& x : v) x = small(rng);
    std::vector<std::uint32_t> order(v.size());
    for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return std::abs(v[a]) > std::abs(v[b]); });
    const std::size_t k = static_cast<std::size_t>(trial % 41);
    IndexSet expect(order.begin(), order.begin() + static_cast<long>(k));
    std::sort(expect.begin(), expect.end());
    CHECK(top_k_indices(v, k) == expect);
  }
}

TEST_CASE("apply_mask zeroes uncovered positions") {
  const auto m101 = MaskBitmap::from_indices(3, {0, 2});
  CHECK(apply_mask(std::vector<double>{1, 2, 3}, m101) == ParamVector{1, 0, 3});
  CHECK(apply_mask(std::vector<double>{1, 2, 3}, MaskBitmap(3)) == ParamVector{0, 0, 0});
  CHECK(apply_mask(std::vector<double>{4, 5}, MaskBitmap::from_indices(2, {0, 1})) == ParamVector{4, 5});
  CHECK_THROWS_AS(apply_mask(std::vector<double>{1, 2}, m101), std::invalid_argument);
}

TEST_CASE("mask bitmap round trips through bytes") {
  const auto m = MaskBitmap::from_indices(70, {0, 5, 63, 64, 69});
  CHECK(m.cardinality() == 5);
  CHECK(m.byte_size() == 9);
  const auto bytes = m.serialize();
  CHECK(bytes.size() == 9);
  CHECK(MaskBitmap::deserialize(bytes, 70) == m);
  const auto c = m.complement();
  CHECK(c.cardinality() == 65);
  CHECK_FALSE(c.test(64));
  CHECK(c.test(1));
  auto copy = m;
  copy.reset(5);
  copy.reset(5);
  CHECK(copy.cardinality() == 4);
  copy.set(5);
  CHECK(copy == m);
}

TEST_CASE("encoded sizes") {
  CHECK(encoded_size(Encoding::BitmapValues, 1000, 200) == 925);
  CHECK(encoded_size(Encoding::Dense, 1000, 1000) == 4000);
  CHECK(encoded_size(Encoding::IndicesValues, 1000, 200) == 1600);
  CHECK(encoded_size(Encoding::BitmapValues, 1000, 0) == 125);
  CHECK(encoded_size(Encoding::BitmapValues, 1000, 200, WireFormat{2, 4}) == 525);
}

TEST_CASE("encode_sparse restricts and decodes") {
  std::vector<double> v(1000);
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = static_cast<double>(j) + 0.5;
  IndexSet support;
  for (std::uint32_t j = 0; j < 1000; j += 5) support.push_back(j);
  const auto sd = encode_sparse(v, support, Encoding::BitmapValues);
  CHECK(sd.nnz() == 200);
  CHECK(sd.byte_size() == 925);
  const auto back = sd.decode();
  for (std::size_t j = 0; j < v.size(); ++j) CHECK(back[j] == (j % 5 == 0 ? v[j] : 0.0));

  IndexSet all(1000);
  for (std::uint32_t j = 0; j < 1000; ++j) all[j] = j;
  CHECK(encode_sparse(v, all, Encoding::Dense).byte_size() == 4000);

  const auto empty = encode_sparse(v, {}, Encoding::BitmapValues);
  CHECK(empty.values.empty());
  CHECK(empty.byte_size() == 125);

  CHECK_THROWS_AS(encode_sparse(v, IndexSet{1000}, Encoding::BitmapValues), std::invalid_argument);

  std::vector<double> acc(1000, 1.0);
  sd.accumulate_into(acc, 2.0);
  CHECK(acc[5] == doctest::Approx(1.0 + 2.0 * 5.5));
  CHECK(acc[6] == 1.0);
}

TEST_CASE("make_index_set sorts and removes duplicates") {
  CHECK(make_index_set({5, 1, 5, 3}, 6) == IndexSet{1, 3, 5});
  CHECK_THROWS_AS(make_index_set({6}, 6), std::invalid_argument);
}

TEST_CASE("encoding names") {
  for (auto e : {Encoding::BitmapValues, Encoding::IndicesValues, Encoding::Dense})
    CHECK(parse_encoding(to_string(e)) == e);
  CHECK_THROWS(parse_encoding("zip"));
}

TEST_CASE("require_finite") {
  CHECK_NOTHROW(require_finite(std::vector<double>{1, 2}, "x"));
  CHECK_THROWS_AS(require_finite(std::vector<double>{1, std::nan("")}, "x"), std::runtime_error);
  CHECK_THROWS_AS(require_finite(std::vector<double>{HUGE_VAL}, "x"), std::runtime_error);
}

}  // TEST_SUITE

TEST_SUITE("rng") {

TEST_CASE("named streams are reproducible and distinct") {
  auto a = make_stream(1, "sampling");
  auto b = make_stream(1, "sampling");
  auto c = make_stream(1, "data");
  auto d = make_stream(2, "sampling");
  auto e = make_stream(1, "train", 3, 4);
  auto f = make_stream(1, "train", 4, 3);
  const auto x = a();
  CHECK(x == b());
  CHECK(x != c());
  CHECK(x != d());
  CHECK(e() != f());
}

TEST_CASE("sample_without_replacement returns a sorted subset") {
  std::vector<ClientId> pool{10, 11, 12, 13, 14, 15};
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    auto s = sample_without_replacement(pool, 3, rng);
    CHECK(s.size() == 3);
    CHECK(std::is_sorted(s.begin(), s.end()));
    CHECK(std::adjacent_find(s.begin(), s.end()) == s.end());
    for (auto id : s) CHECK((id >= 10 && id <= 15));
  }
  CHECK(sample_without_replacement(pool, 6, rng) == pool);
  CHECK_THROWS(sample_without_replacement(pool, 7, rng));
}

TEST_CASE("sample_without_replacement inclusion frequency is uniform") {
  std::vector<ClientId> pool(8);
  for (ClientId i = 0; i < 8; ++i) pool[i] = i;
  Rng rng(11);
  std::vector<int> hits(8, 0);
  const int draws = 40000;
  for (int t = 0; t < draws; ++t)
    for (auto id : sample_without_replacement(pool, 3, rng)) ++hits[id];
  const double p = 3.0 / 8.0;
  const double se = std::sqrt(p * (1 - p) / draws);
  for (int h : hits) CHECK(std::abs(h / double(draws) - p) < 4 * se);
}

}  // TEST_SUITE
