#include "gluefl/numerics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace gluefl {

Encoding parse_encoding(std::string_view name) {
  if (name == "bitmap+values" || name == "bitmap") return Encoding::BitmapValues;
  if (name == "indices+values" || name == "indices") return Encoding::IndicesValues;
  if (name == "dense") return Encoding::Dense;
  throw std::invalid_argument("unknown encoding: " + std::string(name));
}

std::string_view to_string(Encoding encoding) {
  switch (encoding) {
    case Encoding::BitmapValues: return "bitmap+values";
    case Encoding::IndicesValues: return "indices+values";
    case Encoding::Dense: return "dense";
  }
  return "?";
}

std::size_t ratio_to_count(double q, std::size_t d) {
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("ratio must lie in [0,1]");
  if (d == 0) throw std::invalid_argument("dimension must be positive");
  if (q == 0.0) return 0;
  const auto k = static_cast<std::size_t>(std::floor(q * static_cast<double>(d) + 0.5));
  return std::clamp<std::size_t>(k, 1, d);
}

namespace {

// Strict ordering: larger magnitude first, then lower index.
struct MagnitudeOrder {
  std::span<const double> v;
  bool operator()(std::uint32_t a, std::uint32_t b) const {
    const double ma = std::fabs(v[a]);
    const double mb = std::fabs(v[b]);
    if (ma != mb) return ma > mb;
    return a < b;
  }
};

IndexSet select_top(std::span<const double> v, std::vector<std::uint32_t> pool, std::size_t k) {
  if (k < pool.size()) {
    std::nth_element(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k), pool.end(),
                     MagnitudeOrder{v});
    pool.resize(k);
  }
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace

IndexSet top_k_indices(std::span<const double> v, std::size_t k) {
  if (k > v.size()) throw std::invalid_argument("top_k_indices: k exceeds dimension");
  std::vector<std::uint32_t> pool(v.size());
  std::iota(pool.begin(), pool.end(), 0U);
  return select_top(v, std::move(pool), k);
}

IndexSet top_k_among(std::span<const double> v, const IndexSet& candidates, std::size_t k) {
  if (k > candidates.size()) throw std::invalid_argument("top_k_among: k exceeds candidate count");
  for (auto j : candidates) {
    if (j >= v.size()) throw std::invalid_argument("top_k_among: candidate out of range");
  }
  return select_top(v, candidates, k);
}

IndexSet make_index_set(std::vector<std::uint32_t> indices, std::size_t d) {
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  if (!indices.empty() && indices.back() >= d) {
    throw std::invalid_argument("index " + std::to_string(indices.back()) +
                                " out of range for dimension " + std::to_string(d));
  }
  return indices;
}

MaskBitmap::MaskBitmap(std::size_t dim) : dim_(dim), words_((dim + 63) / 64, 0) {}

MaskBitmap MaskBitmap::from_indices(std::size_t dim, const IndexSet& indices) {
  MaskBitmap m(dim);
  for (auto j : indices) {
    if (j >= dim) throw std::invalid_argument("mask index out of range");
    m.set(j);
  }
  return m;
}

void MaskBitmap::set(std::size_t j) {
  auto& w = words_[j >> 6];
  const std::uint64_t bit = std::uint64_t{1} << (j & 63);
  if (!(w & bit)) {
    w |= bit;
    ++count_;
  }
}

void MaskBitmap::reset(std::size_t j) {
  auto& w = words_[j >> 6];
  const std::uint64_t bit = std::uint64_t{1} << (j & 63);
  if (w & bit) {
    w &= ~bit;
    --count_;
  }
}

IndexSet MaskBitmap::indices() const {
  IndexSet out;
  out.reserve(count_);
  for (std::size_t wi = 0; wi < words_.size(); ++wi) {
    std::uint64_t w = words_[wi];
    while (w) {
      const int b = std::countr_zero(w);
      out.push_back(static_cast<std::uint32_t>(wi * 64 + static_cast<std::size_t>(b)));
      w &= w - 1;
    }
  }
  return out;
}

MaskBitmap MaskBitmap::complement() const {
  MaskBitmap out(dim_);
  for (std::size_t wi = 0; wi < words_.size(); ++wi) out.words_[wi] = ~words_[wi];
  if (dim_ % 64) out.words_.back() &= (std::uint64_t{1} << (dim_ % 64)) - 1;
  out.count_ = dim_ - count_;
  return out;
}

std::vector<std::uint8_t> MaskBitmap::serialize() const {
  std::vector<std::uint8_t> bytes(byte_size(), 0);
  for (std::size_t j = 0; j < dim_; ++j) {
    if (test(j)) bytes[j / 8] |= static_cast<std::uint8_t>(1U << (j % 8));
  }
  return bytes;
}

MaskBitmap MaskBitmap::deserialize(std::span<const std::uint8_t> bytes, std::size_t dim) {
  if (bytes.size() != (dim + 7) / 8) throw std::invalid_argument("bitmap size mismatch");
  MaskBitmap m(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    if ((bytes[j / 8] >> (j % 8)) & 1U) m.set(j);
  }
  return m;
}

ParamVector apply_mask(std::span<const double> v, const MaskBitmap& mask) {
  if (v.size() != mask.dim()) throw std::invalid_argument("apply_mask: length mismatch");
  ParamVector out(v.size(), 0.0);
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (mask.test(j)) out[j] = v[j];
  }
  return out;
}

std::size_t encoded_size(Encoding encoding, std::size_t dim, std::size_t nnz, const WireFormat& wire) {
  switch (encoding) {
    case Encoding::BitmapValues: return (dim + 7) / 8 + wire.value_bytes * nnz;
    case Encoding::IndicesValues: return (wire.index_bytes + wire.value_bytes) * nnz;
    case Encoding::Dense: return wire.value_bytes * dim;
  }
  return 0;
}

ParamVector SparseDelta::decode() const {
  ParamVector out(dim, 0.0);
  for (std::size_t i = 0; i < support.size(); ++i) out[support[i]] = values[i];
  return out;
}

void SparseDelta::accumulate_into(std::span<double> out, double scale) const {
  if (out.size() != dim) throw std::invalid_argument("accumulate_into: length mismatch");
  for (std::size_t i = 0; i < support.size(); ++i) out[support[i]] += scale * values[i];
}

SparseDelta encode_sparse(std::span<const double> v, IndexSet support, Encoding encoding) {
  SparseDelta out;
  out.dim = v.size();
  out.encoding = encoding;
  out.support = make_index_set(std::move(support), v.size());
  out.values.reserve(out.support.size());
  for (auto j : out.support) out.values.push_back(v[j]);
  return out;
}

void require_finite(std::span<const double> v, std::string_view what) {
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (!std::isfinite(v[j])) {
      throw std::runtime_error(std::string(what) + ": non-finite value at position " +
                               std::to_string(j));
    }
  }
}

}  // namespace gluefl
