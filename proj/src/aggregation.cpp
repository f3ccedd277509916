#include "gluefl/aggregation.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "gluefl/compression.hpp"

namespace gluefl {

namespace {

template <typename T>
void sort_by_client(std::vector<T>& items) {
  std::sort(items.begin(), items.end(), [](const T& a, const T& b) { return a.client < b.client; });
}

ParamVector add(std::span<const double> w, std::span<const double> update) {
  ParamVector out(w.begin(), w.end());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] += update[j];
  return out;
}

}  // namespace

ParamVector fedavg_aggregate(std::span<const double> w, std::vector<ClientDelta> deltas,
                             std::size_t n, std::size_t k) {
  if (deltas.empty()) throw std::invalid_argument("fedavg_aggregate: no client updates");
  if (deltas.size() != k) throw std::invalid_argument("fedavg_aggregate: expected K updates");
  sort_by_client(deltas);
  ParamVector sum(w.size(), 0.0);
  for (const auto& d : deltas) {
    if (d.delta.size() != w.size()) throw std::invalid_argument("fedavg_aggregate: length mismatch");
    for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += d.p * d.delta[j];
  }
  const double scale = static_cast<double>(n) / static_cast<double>(k);
  for (auto& x : sum) x *= scale;
  return add(w, sum);
}

ParamVector weighted_dense_aggregate(std::span<const double> w, std::vector<ClientDelta> deltas) {
  if (deltas.empty()) throw std::invalid_argument("weighted_dense_aggregate: no client updates");
  sort_by_client(deltas);
  ParamVector sum(w.size(), 0.0);
  for (const auto& d : deltas) {
    if (d.delta.size() != w.size()) throw std::invalid_argument("weighted_dense_aggregate: length mismatch");
    for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += d.p * d.delta[j];
  }
  return add(w, sum);
}

StcResult stc_round_aggregate(std::span<const double> w, std::vector<ClientSparseDelta> deltas,
                              std::size_t n, std::size_t k, double q) {
  if (deltas.empty()) throw std::invalid_argument("stc_round_aggregate: no client updates");
  if (deltas.size() != k) throw std::invalid_argument("stc_round_aggregate: expected K updates");
  sort_by_client(deltas);
  const double scale = static_cast<double>(n) / static_cast<double>(k);
  ParamVector sum(w.size(), 0.0);
  for (const auto& d : deltas) {
    if (d.delta.dim != w.size()) throw std::invalid_argument("stc_round_aggregate: length mismatch");
    d.delta.accumulate_into(sum, d.p * scale);
  }
  StcResult out;
  out.update = encode_sparse(sum, top_k_indices(sum, ratio_to_count(q, w.size())), Encoding::BitmapValues);
  out.model.assign(w.begin(), w.end());
  out.update.accumulate_into(out.model);
  return out;
}

GlueflResult gluefl_aggregate(std::span<const double> w, std::vector<WeightedContribution> contribs,
                              const MaskBitmap& mask, double q) {
  if (contribs.empty()) throw std::invalid_argument("gluefl_aggregate: no contributions");
  if (mask.dim() != w.size()) throw std::invalid_argument("gluefl_aggregate: mask length mismatch");
  sort_by_client(contribs);
  const std::size_t d = w.size();
  GlueflResult out;
  out.shared_update.assign(d, 0.0);
  ParamVector unique_sum(d, 0.0);
  for (const auto& c : contribs) {
    if (c.shared.dim != d || c.unique.dim != d) throw std::invalid_argument("gluefl_aggregate: length mismatch");
    for (auto j : c.shared.support) {
      if (!mask.test(j)) {
        throw std::invalid_argument("client " + std::to_string(c.client) + " sent a shared value outside the mask");
      }
    }
    for (auto j : c.unique.support) {
      if (mask.test(j)) {
        throw std::invalid_argument("client " + std::to_string(c.client) + " sent a unique value inside the mask");
      }
    }
    c.shared.accumulate_into(out.shared_update, c.weight);
    c.unique.accumulate_into(unique_sum, c.weight);
  }

  out.shared_support = mask.indices();
  const IndexSet outside = mask.complement().indices();
  out.unique_support = top_k_among(unique_sum, outside, unique_budget(q, d, mask.cardinality()));
  out.unique_update.assign(d, 0.0);
  for (auto j : out.unique_support) out.unique_update[j] = unique_sum[j];

  out.combined.resize(d);
  for (std::size_t j = 0; j < d; ++j) out.combined[j] = out.shared_update[j] + out.unique_update[j];
  std::set_union(out.shared_support.begin(), out.shared_support.end(), out.unique_support.begin(),
                 out.unique_support.end(), std::back_inserter(out.support));
  out.model = add(w, out.combined);
  return out;
}

ParamVector bn_stat_aggregate(std::span<const double> v, const std::vector<ParamVector>& stat_deltas,
                              std::size_t k) {
  if (stat_deltas.empty()) throw std::invalid_argument("bn_stat_aggregate: no statistic updates");
  if (k == 0) throw std::invalid_argument("bn_stat_aggregate: K must be positive");
  ParamVector sum(v.size(), 0.0);
  for (const auto& d : stat_deltas) {
    if (d.size() != v.size()) throw std::invalid_argument("bn_stat_aggregate: length mismatch");
    for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += d[j];
  }
  ParamVector out(v.begin(), v.end());
  const double inv_k = 1.0 / static_cast<double>(k);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] += inv_k * sum[j];
  return out;
}

}  // namespace gluefl
