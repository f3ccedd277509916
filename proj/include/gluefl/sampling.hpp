#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "gluefl/rng.hpp"

namespace gluefl {

/// Population N, per-round cohort K, sticky group size S, sticky draws C.
/// S = C = 0 encodes plain uniform sampling.
struct SamplingParams {
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t s = 0;
  std::size_t c = 0;

  bool sticky() const { return s != 0 || c != 0; }
  /// Throws std::invalid_argument unless either uniform (S=C=0, 1<=K<=N) or
  /// sticky with 0 < C < K <= S < N and C/S > K/N.
  void validate() const;
};

enum class Group { Sticky, Fresh, Uniform };
enum class Scheme { Uniform, Sticky };

std::string_view to_string(Group g);

class StickyState {
 public:
  /// Draws the initial sticky group uniformly (empty in uniform mode).
  static StickyState initialize(const SamplingParams& params, Rng& rng);
  /// For tests and fixtures: a specific membership (validated).
  static StickyState with_members(const SamplingParams& params, std::vector<ClientId> members);

  const SamplingParams& params() const { return params_; }
  /// Sorted ascending.
  const std::vector<ClientId>& members() const { return members_; }
  bool contains(ClientId id) const;
  /// Clients outside the sticky group, ascending.
  std::vector<ClientId> non_members() const;

 private:
  SamplingParams params_;
  std::vector<ClientId> members_;
};

struct RoundDraw {
  std::vector<ClientId> sticky_selected;  // C (+ over-commit extras) from the sticky group
  std::vector<ClientId> fresh_selected;   // K-C (+ extras) from outside it
};

/// Uniform draws without replacement: C + extra_sticky members of the sticky
/// group and (K - C) + extra_fresh non-members. In uniform mode every draw is
/// "fresh" and comes from the whole population.
RoundDraw sample_round(const StickyState& state, Rng& rng, std::size_t extra_sticky = 0,
                       std::size_t extra_fresh = 0);

/// End-of-round group rebalance: removes |used_fresh| = K-C members chosen
/// uniformly from sticky_members \ kept, then inserts used_fresh.
/// `kept` is the set of sticky clients that contributed this round.
StickyState update_sticky_group(const StickyState& state, std::span<const ClientId> kept,
                                std::span<const ClientId> used_fresh, Rng& rng);

/// Inverse-propensity weight nu: sticky (S/C)p, fresh ((N-S)/(K-C))p, uniform (N/K)p.
double aggregation_weight(Group group, double p, const SamplingParams& params);

/// Probability that a client sampled now is next sampled exactly r rounds later.
double resample_probability(Scheme scheme, const SamplingParams& params, unsigned r);

/// Closed-form mean of the resample-interval distribution.
double expected_resample_interval(Scheme scheme, const SamplingParams& params);

struct TheoryConstants {
  double variance_factor = 0.0;  // A
  double learning_rate = 0.0;    // gamma
};

/// Variance factor A = (K/N)(S^2/C + (N-S)^2/(K-C)) * sum p_i^2 (S^2/C := 0 in
/// uniform mode) and the matching learning rate sqrt(K / (E (sigma^2 + E) T A)).
TheoryConstants theory_constants(const SamplingParams& params, std::span<const double> p,
                                 unsigned local_steps, double sigma, unsigned rounds);

}  // namespace gluefl
