#include "gluefl/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace gluefl {

void SamplingParams::validate() const {
  if (n < 1 || k < 1 || k > n) throw std::invalid_argument("sampling requires 1 <= K <= N");
  if (!sticky()) return;
  if (!(c > 0 && c < k && k <= s && s < n)) {
    throw std::invalid_argument("sticky sampling requires 0 < C < K <= S < N");
  }
  // C/S > K/N, compared exactly in integers.
  if (!(c * n > k * s)) throw std::invalid_argument("sticky sampling requires C/S > K/N");
}

std::string_view to_string(Group g) {
  switch (g) {
    case Group::Sticky: return "sticky";
    case Group::Fresh: return "fresh";
    case Group::Uniform: return "uniform";
  }
  return "?";
}

StickyState StickyState::initialize(const SamplingParams& params, Rng& rng) {
  params.validate();
  StickyState st;
  st.params_ = params;
  if (params.sticky()) {
    std::vector<ClientId> all(params.n);
    std::iota(all.begin(), all.end(), ClientId{0});
    st.members_ = sample_without_replacement(all, params.s, rng);
  }
  return st;
}

StickyState StickyState::with_members(const SamplingParams& params, std::vector<ClientId> members) {
  params.validate();
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());
  if (members.size() != params.s) throw std::invalid_argument("sticky group must hold exactly S clients");
  if (!members.empty() && members.back() >= params.n) throw std::invalid_argument("sticky member out of range");
  StickyState st;
  st.params_ = params;
  st.members_ = std::move(members);
  return st;
}

bool StickyState::contains(ClientId id) const {
  return std::binary_search(members_.begin(), members_.end(), id);
}

std::vector<ClientId> StickyState::non_members() const {
  std::vector<ClientId> out;
  out.reserve(params_.n - members_.size());
  auto it = members_.begin();
  for (ClientId id = 0; id < params_.n; ++id) {
    if (it != members_.end() && *it == id) {
      ++it;
    } else {
      out.push_back(id);
    }
  }
  return out;
}

RoundDraw sample_round(const StickyState& state, Rng& rng, std::size_t extra_sticky,
                       std::size_t extra_fresh) {
  const auto& p = state.params();
  RoundDraw draw;
  if (!p.sticky()) {
    if (extra_sticky != 0) throw std::invalid_argument("uniform sampling has no sticky group");
    std::vector<ClientId> all(p.n);
    std::iota(all.begin(), all.end(), ClientId{0});
    draw.fresh_selected = sample_without_replacement(all, p.k + extra_fresh, rng);
    return draw;
  }
  const auto others = state.non_members();
  if (p.c + extra_sticky > state.members().size() || p.k - p.c + extra_fresh > others.size()) {
    throw std::invalid_argument("over-commitment exceeds group size");
  }
  draw.sticky_selected = sample_without_replacement(state.members(), p.c + extra_sticky, rng);
  draw.fresh_selected = sample_without_replacement(others, p.k - p.c + extra_fresh, rng);
  return draw;
}

StickyState update_sticky_group(const StickyState& state, std::span<const ClientId> kept,
                                std::span<const ClientId> used_fresh, Rng& rng) {
  const auto& p = state.params();
  if (!p.sticky()) return state;
  if (used_fresh.size() != p.k - p.c) {
    throw std::invalid_argument("sticky update needs exactly K-C fresh clients, got " +
                                std::to_string(used_fresh.size()));
  }
  for (auto id : used_fresh) {
    if (state.contains(id)) throw std::invalid_argument("fresh client already in the sticky group");
  }
  std::vector<ClientId> kept_sorted(kept.begin(), kept.end());
  std::sort(kept_sorted.begin(), kept_sorted.end());
  std::vector<ClientId> removable;
  for (auto id : state.members()) {
    if (!std::binary_search(kept_sorted.begin(), kept_sorted.end(), id)) removable.push_back(id);
  }
  const auto removed = sample_without_replacement(removable, used_fresh.size(), rng);

  std::vector<ClientId> next;
  next.reserve(p.s);
  std::set_difference(state.members().begin(), state.members().end(), removed.begin(),
                      removed.end(), std::back_inserter(next));
  next.insert(next.end(), used_fresh.begin(), used_fresh.end());
  return StickyState::with_members(p, std::move(next));
}

double aggregation_weight(Group group, double p, const SamplingParams& params) {
  if (p < 0.0) throw std::invalid_argument("client weight must be non-negative");
  const auto N = static_cast<double>(params.n);
  const auto K = static_cast<double>(params.k);
  const auto S = static_cast<double>(params.s);
  const auto C = static_cast<double>(params.c);
  switch (group) {
    case Group::Uniform:
      return N / K * p;
    case Group::Sticky:
      if (!params.sticky()) throw std::invalid_argument("sticky weight requested in uniform mode");
      return S / C * p;
    case Group::Fresh:
      if (!params.sticky()) throw std::invalid_argument("fresh weight requested in uniform mode");
      return (N - S) / (K - C) * p;
  }
  return 0.0;
}

double resample_probability(Scheme scheme, const SamplingParams& params, unsigned r) {
  if (r < 1) throw std::invalid_argument("rounds skipped must be >= 1");
  const auto N = static_cast<double>(params.n);
  const auto K = static_cast<double>(params.k);
  const double rm1 = static_cast<double>(r - 1);
  if (scheme == Scheme::Uniform) {
    if (params.n < 1 || params.k < 1 || params.k > params.n) throw std::invalid_argument("sampling requires 1 <= K <= N");
    return K / N * std::pow(1.0 - K / N, rm1);
  }
  params.validate();
  if (!params.sticky()) throw std::invalid_argument("sticky probability requires sticky parameters");
  const auto S = static_cast<double>(params.s);
  const auto C = static_cast<double>(params.c);
  const double denom = (N - S) * K - (K - C) * S;
  const double stay = K * (N * C - S * K) / S * std::pow(1.0 - K / S, rm1);
  const double via_pool = (K - C) * (K - C) * std::pow(1.0 - (K - C) / (N - S), rm1);
  return (stay + via_pool) / denom;
}

double expected_resample_interval(Scheme scheme, const SamplingParams& params) {
  const auto N = static_cast<double>(params.n);
  const auto K = static_cast<double>(params.k);
  if (scheme == Scheme::Uniform) return N / K;
  params.validate();
  const auto S = static_cast<double>(params.s);
  const auto C = static_cast<double>(params.c);
  // sum_r r * P(r), using sum_r r x^(r-1) = 1/(1-x)^2 on both geometric terms.
  const double denom = (N - S) * K - (K - C) * S;
  return ((N * C - S * K) * S / K + (N - S) * (N - S)) / denom;
}

TheoryConstants theory_constants(const SamplingParams& params, std::span<const double> p,
                                 unsigned local_steps, double sigma, unsigned rounds) {
  if (params.sticky() && params.c == params.k) {
    throw std::invalid_argument("variance factor undefined for C = K (division by K - C)");
  }
  params.validate();
  if (p.size() != params.n) throw std::invalid_argument("weight vector must have N entries");
  if (local_steps < 1 || rounds < 1) throw std::invalid_argument("E and T must be >= 1");
  if (sigma < 0.0) throw std::invalid_argument("sigma must be non-negative");
  double total = 0.0;
  for (double pi : p) total += pi;
  if (std::fabs(total - 1.0) > 1e-9) throw std::invalid_argument("client weights must sum to 1");
  const auto N = static_cast<double>(params.n);
  const auto K = static_cast<double>(params.k);
  const auto S = static_cast<double>(params.s);
  const auto C = static_cast<double>(params.c);
  double sum_sq = 0.0;
  for (double pi : p) sum_sq += pi * pi;
  const double sticky_term = params.sticky() ? S * S / C : 0.0;
  TheoryConstants out;
  out.variance_factor = K / N * (sticky_term + (N - S) * (N - S) / (K - C)) * sum_sq;
  const double E = local_steps;
  out.learning_rate = std::sqrt(1.0 / (E * (sigma * sigma + E)) * K / (rounds * out.variance_factor));
  return out;
}

}  // namespace gluefl
