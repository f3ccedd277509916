#include "gluefl/rng.hpp"

#include <algorithm>
#include <stdexcept>

namespace gluefl {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t key1,
                          std::uint64_t key2) {
  // FNV-1a over the stream name.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : stream) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  std::uint64_t s = splitmix64(master ^ splitmix64(h));
  s = splitmix64(s ^ splitmix64(key1 + 0x632be59bd9b4e019ULL));
  s = splitmix64(s ^ splitmix64(key2 + 0x85157af5ULL));
  return s;
}

Rng make_stream(std::uint64_t master, std::string_view stream, std::uint64_t key1,
                std::uint64_t key2) {
  return Rng(derive_seed(master, stream, key1, key2));
}

std::vector<ClientId> sample_without_replacement(std::span<const ClientId> pool, std::size_t m,
                                                 Rng& rng) {
  if (m > pool.size()) throw std::invalid_argument("cannot draw more elements than the pool holds");
  std::vector<ClientId> work(pool.begin(), pool.end());
  for (std::size_t i = 0; i < m; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, work.size() - 1);
    std::swap(work[i], work[pick(rng)]);
  }
  work.resize(m);
  std::sort(work.begin(), work.end());
  return work;
}

}  // namespace gluefl
