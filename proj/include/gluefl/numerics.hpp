#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace gluefl {

/// Flat model parameters (or an update to them). Layer-major order.
using ParamVector = std::vector<double>;

/// Sorted, duplicate-free list of parameter positions.
using IndexSet = std::vector<std::uint32_t>;

/// Byte widths used for transport accounting. Values are held as doubles in
/// memory but are charged at the wire width.
struct WireFormat {
  std::size_t value_bytes = 4;
  std::size_t index_bytes = 4;
};

enum class Encoding { BitmapValues, IndicesValues, Dense };

Encoding parse_encoding(std::string_view name);
std::string_view to_string(Encoding encoding);

/// Resolves a fractional ratio to an element count: round-half-up(q*d),
/// clamped to [1, d] for any q > 0.
std::size_t ratio_to_count(double q, std::size_t d);

/// Indices of the k largest |v[j]|, ties broken toward the lower index.
/// Returned in ascending index order.
IndexSet top_k_indices(std::span<const double> v, std::size_t k);

/// Same ordering rule as top_k_indices, but only positions listed in
/// `candidates` compete. Requires k <= candidates.size().
IndexSet top_k_among(std::span<const double> v, const IndexSet& candidates, std::size_t k);

/// Normalizes an arbitrary index list into an IndexSet and checks range.
IndexSet make_index_set(std::vector<std::uint32_t> indices, std::size_t d);

class MaskBitmap {
 public:
  MaskBitmap() = default;
  explicit MaskBitmap(std::size_t dim);
  static MaskBitmap from_indices(std::size_t dim, const IndexSet& indices);

  std::size_t dim() const { return dim_; }
  std::size_t cardinality() const { return count_; }
  bool test(std::size_t j) const { return (words_[j >> 6] >> (j & 63)) & 1U; }
  void set(std::size_t j);
  void reset(std::size_t j);

  IndexSet indices() const;
  MaskBitmap complement() const;

  /// Exactly ceil(d/8) bytes on the wire.
  std::size_t byte_size() const { return (dim_ + 7) / 8; }
  std::vector<std::uint8_t> serialize() const;
  static MaskBitmap deserialize(std::span<const std::uint8_t> bytes, std::size_t dim);

  bool operator==(const MaskBitmap& other) const = default;

 private:
  std::size_t dim_ = 0;
  std::size_t count_ = 0;
  std::vector<std::uint64_t> words_;
};

ParamVector apply_mask(std::span<const double> v, const MaskBitmap& mask);

/// Byte cost of shipping `nnz` values of a d-dimensional vector.
std::size_t encoded_size(Encoding encoding, std::size_t dim, std::size_t nnz,
                         const WireFormat& wire = {});

/// A masked update: values at `support` (ascending), zero elsewhere.
struct SparseDelta {
  std::size_t dim = 0;
  IndexSet support;
  std::vector<double> values;
  Encoding encoding = Encoding::BitmapValues;

  std::size_t nnz() const { return support.size(); }
  std::size_t byte_size(const WireFormat& wire = {}) const {
    return encoded_size(encoding, dim, support.size(), wire);
  }
  ParamVector decode() const;
  /// out += scale * this, touching only the support.
  void accumulate_into(std::span<double> out, double scale = 1.0) const;
};

SparseDelta encode_sparse(std::span<const double> v, IndexSet support, Encoding encoding);

/// Throws std::runtime_error if any entry is NaN or infinite.
void require_finite(std::span<const double> v, std::string_view what);

}  // namespace gluefl
