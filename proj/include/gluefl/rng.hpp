#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace gluefl {

using Rng = std::mt19937_64;
using ClientId = std::uint32_t;

std::uint64_t splitmix64(std::uint64_t x);

/// Seed for a named substream. Extra keys (client id, round, ...) give
/// per-entity streams, so the draw order of one stream never depends on
/// how much another stream has consumed.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t key1 = 0,
                          std::uint64_t key2 = 0);

Rng make_stream(std::uint64_t master, std::string_view stream, std::uint64_t key1 = 0,
                std::uint64_t key2 = 0);

/// Uniform m-subset of `pool` (partial Fisher-Yates), returned sorted.
std::vector<ClientId> sample_without_replacement(std::span<const ClientId> pool, std::size_t m,
                                                 Rng& rng);

}  // namespace gluefl
