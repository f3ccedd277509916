#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string_view>

#include "gluefl/numerics.hpp"
#include "gluefl/rng.hpp"

namespace gluefl {

enum class RegenMode {
  EmptyMask,  // regeneration rounds ship an empty mask; clients spend the whole q on unique values
  Combined,   // client budgets unchanged; the mask is rebuilt from the combined update
};

RegenMode parse_regen_mode(std::string_view name);
std::string_view to_string(RegenMode mode);

/// Server-side shared mask M^t with ratio q_shr inside a total budget q.
class SharedMaskState {
 public:
  /// The first mask is the degenerate top-k of a zero vector: positions
  /// 0..k_shr-1. `period` = 0 disables regeneration.
  static SharedMaskState initial(std::size_t dim, double q, double q_shr, unsigned period,
                                 RegenMode mode = RegenMode::EmptyMask);

  const MaskBitmap& mask() const { return mask_; }
  double q() const { return q_; }
  double q_shr() const { return q_shr_; }
  unsigned period() const { return period_; }
  RegenMode regen_mode() const { return mode_; }
  unsigned last_regeneration() const { return last_regen_; }
  std::size_t dim() const { return mask_.dim(); }
  std::size_t shared_count() const { return ratio_to_count(q_shr_, dim()); }

  /// Rounds that are multiples of the period (never, when period is 0).
  bool is_regeneration_round(unsigned round) const;
  /// Shared ratio the clients see this round (0 in empty-mask regeneration rounds).
  double effective_shared_ratio(unsigned round) const;
  /// Mask clients receive this round.
  MaskBitmap effective_mask(unsigned round) const;

 private:
  friend SharedMaskState advance_shared_mask(const SharedMaskState&, std::span<const double>,
                                             const IndexSet&, unsigned);
  MaskBitmap mask_;
  double q_ = 1.0;
  double q_shr_ = 0.0;
  unsigned period_ = 0;
  RegenMode mode_ = RegenMode::EmptyMask;
  unsigned last_regen_ = 0;
};

/// Number of unique (locally chosen) positions a client may send on top of
/// an effective mask of the given cardinality: count(q) - |mask|, and the
/// whole complement when q = 1.
std::size_t unique_budget(double q, std::size_t dim, std::size_t mask_cardinality);

struct MaskedSplit {
  SparseDelta shared;    // delta on the mask (dense on it, zeros included)
  SparseDelta unique;    // top values outside the mask
  ParamVector residual;  // delta - shared - unique
};

/// Client-side masking: shared part on `mask`, the unique_budget largest
/// remaining magnitudes as the unique part, and what was left behind.
MaskedSplit split_masked_update(std::span<const double> delta, const MaskBitmap& mask, double q,
                                Encoding encoding = Encoding::BitmapValues);

/// Next mask: the shared_count() largest |combined_update| positions among
/// `update_support` (the positions the round's global update carried).
SharedMaskState advance_shared_mask(const SharedMaskState& state,
                                    std::span<const double> combined_update,
                                    const IndexSet& update_support, unsigned round);

enum class CompensationScaling { None, Unscaled, Rescaled };

CompensationScaling parse_compensation(std::string_view name);
std::string_view to_string(CompensationScaling scaling);

struct CompensationRecord {
  ParamVector residual;  // h at the last participation
  double weight = 0.0;   // nu at the last participation
  unsigned round = 0;    // phi(t)
};

/// Per-client residual memory. Records exist only for clients that have
/// contributed at least once; nothing is ever evicted.
class CompensationStore {
 public:
  const CompensationRecord* find(ClientId id) const;
  void commit(ClientId id, CompensationRecord record);
  std::size_t size() const { return records_.size(); }
  const std::map<ClientId, CompensationRecord>& records() const { return records_; }

 private:
  std::map<ClientId, CompensationRecord> records_;
};

/// delta + (nu_last / nu_now) * h (Rescaled), delta + h (Unscaled), delta (None
/// or no record).
ParamVector compensate_delta(std::span<const double> delta, const CompensationRecord* record,
                             double nu_now, CompensationScaling scaling = CompensationScaling::Rescaled);

}  // namespace gluefl
