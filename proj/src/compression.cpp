#include "gluefl/compression.hpp"

#include <stdexcept>
#include <string>

namespace gluefl {

RegenMode parse_regen_mode(std::string_view name) {
  if (name == "empty-mask") return RegenMode::EmptyMask;
  if (name == "combined") return RegenMode::Combined;
  throw std::invalid_argument("unknown regeneration mode: " + std::string(name));
}

std::string_view to_string(RegenMode mode) {
  return mode == RegenMode::EmptyMask ? "empty-mask" : "combined";
}

SharedMaskState SharedMaskState::initial(std::size_t dim, double q, double q_shr, unsigned period,
                                         RegenMode mode) {
  if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("mask ratio q must lie in (0,1]");
  if (!(q_shr >= 0.0 && q_shr < q)) throw std::invalid_argument("shared ratio must satisfy 0 <= q_shr < q");
  SharedMaskState st;
  st.q_ = q;
  st.q_shr_ = q_shr;
  st.period_ = period;
  st.mode_ = mode;
  st.mask_ = MaskBitmap(dim);
  const std::size_t k = ratio_to_count(q_shr, dim);
  for (std::size_t j = 0; j < k; ++j) st.mask_.set(j);
  return st;
}

bool SharedMaskState::is_regeneration_round(unsigned round) const {
  return period_ != 0 && round % period_ == 0;
}

double SharedMaskState::effective_shared_ratio(unsigned round) const {
  if (mode_ == RegenMode::EmptyMask && is_regeneration_round(round)) return 0.0;
  return q_shr_;
}

MaskBitmap SharedMaskState::effective_mask(unsigned round) const {
  if (mode_ == RegenMode::EmptyMask && is_regeneration_round(round)) return MaskBitmap(dim());
  return mask_;
}

std::size_t unique_budget(double q, std::size_t dim, std::size_t mask_cardinality) {
  if (mask_cardinality > dim) throw std::invalid_argument("mask larger than dimension");
  const std::size_t room = dim - mask_cardinality;
  if (q >= 1.0) return room;
  const std::size_t total = ratio_to_count(q, dim);
  return total > mask_cardinality ? std::min(total - mask_cardinality, room) : 0;
}

MaskedSplit split_masked_update(std::span<const double> delta, const MaskBitmap& mask, double q,
                                Encoding encoding) {
  if (delta.size() != mask.dim()) throw std::invalid_argument("split_masked_update: length mismatch");
  MaskedSplit out;
  out.shared = encode_sparse(delta, mask.indices(), encoding);
  const IndexSet outside = mask.complement().indices();
  const std::size_t k = unique_budget(q, delta.size(), mask.cardinality());
  out.unique = encode_sparse(delta, top_k_among(delta, outside, k), encoding);
  out.residual.assign(delta.begin(), delta.end());
  for (auto j : out.shared.support) out.residual[j] = 0.0;
  for (auto j : out.unique.support) out.residual[j] = 0.0;
  return out;
}

SharedMaskState advance_shared_mask(const SharedMaskState& state,
                                    std::span<const double> combined_update,
                                    const IndexSet& update_support, unsigned round) {
  if (combined_update.size() != state.dim()) throw std::invalid_argument("advance_shared_mask: length mismatch");
  const std::size_t k = state.shared_count();
  IndexSet chosen;
  if (update_support.size() >= k) {
    chosen = top_k_among(combined_update, update_support, k);
  } else {
    // Too few candidates: keep the whole support and pad with the lowest
    // remaining positions.
    chosen = update_support;
    MaskBitmap taken = MaskBitmap::from_indices(state.dim(), update_support);
    for (std::size_t j = 0; chosen.size() < k; ++j) {
      if (!taken.test(j)) chosen.push_back(static_cast<std::uint32_t>(j));
    }
    chosen = make_index_set(std::move(chosen), state.dim());
  }
  SharedMaskState next = state;
  next.mask_ = MaskBitmap::from_indices(state.dim(), chosen);
  if (state.is_regeneration_round(round)) next.last_regen_ = round;
  return next;
}

CompensationScaling parse_compensation(std::string_view name) {
  if (name == "none") return CompensationScaling::None;
  if (name == "unscaled") return CompensationScaling::Unscaled;
  if (name == "rescaled") return CompensationScaling::Rescaled;
  throw std::invalid_argument("unknown compensation mode: " + std::string(name));
}

std::string_view to_string(CompensationScaling scaling) {
  switch (scaling) {
    case CompensationScaling::None: return "none";
    case CompensationScaling::Unscaled: return "unscaled";
    case CompensationScaling::Rescaled: return "rescaled";
  }
  return "?";
}

const CompensationRecord* CompensationStore::find(ClientId id) const {
  auto it = records_.find(id);
  return it == records_.end() ? nullptr : &it->second;
}

void CompensationStore::commit(ClientId id, CompensationRecord record) {
  records_[id] = std::move(record);
}

ParamVector compensate_delta(std::span<const double> delta, const CompensationRecord* record,
                             double nu_now, CompensationScaling scaling) {
  if (!(nu_now > 0.0)) throw std::invalid_argument("current aggregation weight must be positive");
  ParamVector out(delta.begin(), delta.end());
  if (record == nullptr || scaling == CompensationScaling::None) return out;
  if (record->residual.size() != delta.size()) throw std::invalid_argument("residual length mismatch");
  const double scale = scaling == CompensationScaling::Rescaled ? record->weight / nu_now : 1.0;
  for (std::size_t j = 0; j < out.size(); ++j) out[j] += scale * record->residual[j];
  return out;
}

}  // namespace gluefl
