#include "gluefl/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace gluefl {

void validate(const ValueDistribution& dist) {
  if (const auto* cdf = std::get_if<EmpiricalCdf>(&dist)) {
    if (cdf->points.empty()) throw std::invalid_argument("empirical CDF needs at least one breakpoint");
    double prev_f = 0.0;
    double prev_v = 0.0;
    for (const auto& pt : cdf->points) {
      if (!(pt.cdf >= 0.0 && pt.cdf <= 1.0)) throw std::invalid_argument("CDF fraction outside [0,1]");
      if (!(pt.value > 0.0)) throw std::invalid_argument("CDF values must be positive");
      if (pt.cdf < prev_f || pt.value < prev_v) throw std::invalid_argument("CDF breakpoints must be non-decreasing");
      prev_f = pt.cdf;
      prev_v = pt.value;
    }
    if (cdf->points.back().cdf != 1.0) throw std::invalid_argument("CDF must end at fraction 1");
  } else {
    const auto& ln = std::get<LogNormal>(dist);
    if (!std::isfinite(ln.mu) || !(ln.sigma >= 0.0)) throw std::invalid_argument("lognormal needs finite mu and sigma >= 0");
  }
}

double sample(const ValueDistribution& dist, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (const auto* cdf = std::get_if<EmpiricalCdf>(&dist)) {
    const double u = unit(rng);
    const auto& pts = cdf->points;
    auto it = std::find_if(pts.begin(), pts.end(), [u](const CdfPoint& p) { return u <= p.cdf; });
    if (it == pts.end()) it = std::prev(pts.end());
    if (it == pts.begin()) return it->value;
    const auto& lo = *std::prev(it);
    const auto& hi = *it;
    if (hi.cdf == lo.cdf) return hi.value;
    const double t = (u - lo.cdf) / (hi.cdf - lo.cdf);
    return std::exp(std::log(lo.value) + t * (std::log(hi.value) - std::log(lo.value)));
  }
  const auto& ln = std::get<LogNormal>(dist);
  if (ln.sigma == 0.0) return std::exp(ln.mu);
  std::lognormal_distribution<double> d(ln.mu, ln.sigma);
  return d(rng);
}

ProfileConfig ProfileConfig::defaults() {
  ProfileConfig cfg;
  cfg.down_mbps = EmpiricalCdf{{{0.0, 1.0}, {0.2, 10.0}, {0.5, 40.0}, {0.8, 120.0}, {1.0, 500.0}}};
  cfg.up_mbps = EmpiricalCdf{{{0.0, 0.5}, {0.2, 3.0}, {0.5, 10.0}, {0.8, 25.0}, {1.0, 100.0}}};
  cfg.compute_rate = EmpiricalCdf{{{0.0, 2.0}, {0.5, 8.0}, {1.0, 40.0}}};
  return cfg;
}

std::vector<ClientProfile> sample_profiles(std::size_t n, const ProfileConfig& cfg, Rng& rng) {
  validate(cfg.down_mbps);
  validate(cfg.up_mbps);
  validate(cfg.compute_rate);
  std::vector<ClientProfile> out(n);
  for (auto& p : out) {
    p.down_bps = sample(cfg.down_mbps, rng) * 1e6;
    p.up_bps = sample(cfg.up_mbps, rng) * 1e6;
    p.compute_rate = sample(cfg.compute_rate, rng);
  }
  return out;
}

ServerVersionVector::ServerVersionVector(std::size_t dim, std::size_t clients)
    : last_changed_(dim, 0), last_sync_(clients, 0) {}

std::optional<unsigned> ServerVersionVector::last_sync(ClientId client) const {
  const unsigned r = last_sync_.at(client);
  if (r == 0) return std::nullopt;
  return r;
}

void ServerVersionVector::record_update(const IndexSet& support, unsigned round) {
  if (round < latest_round_) throw std::invalid_argument("updates must be recorded in round order");
  latest_round_ = round;
  for (auto j : support) last_changed_.at(j) = round;
}

void ServerVersionVector::mark_synced(ClientId client, unsigned round) {
  if (round < 1) throw std::invalid_argument("rounds are numbered from 1");
  last_sync_.at(client) = round;
}

IndexSet ServerVersionVector::stale_positions(ClientId client) const {
  const unsigned sync = last_sync_.at(client);
  IndexSet out;
  for (std::size_t j = 0; j < last_changed_.size(); ++j) {
    if (sync == 0 || last_changed_[j] >= sync) out.push_back(static_cast<std::uint32_t>(j));
  }
  return out;
}

std::size_t ServerVersionVector::stale_count(ClientId client) const {
  const unsigned sync = last_sync_.at(client);
  if (sync == 0) return last_changed_.size();
  return static_cast<std::size_t>(std::count_if(last_changed_.begin(), last_changed_.end(),
                                                [sync](unsigned r) { return r >= sync; }));
}

std::size_t downstream_payload(const ServerVersionVector& vv, ClientId client, unsigned round,
                               const DownstreamOptions& opts) {
  if (round < 1) throw std::invalid_argument("rounds are numbered from 1");
  const std::size_t d = vv.dim();
  const std::size_t dense = encoded_size(Encoding::Dense, d, d, opts.wire);
  std::size_t bytes = dense;
  if (vv.last_sync(client)) {
    bytes = std::min(encoded_size(opts.encoding, d, vv.stale_count(client), opts.wire), dense);
  }
  if (opts.include_mask) bytes += (d + 7) / 8;
  return bytes;
}

SparseDelta downstream_delta(const ServerVersionVector& vv, ClientId client,
                             std::span<const double> current_model, Encoding encoding) {
  if (current_model.size() != vv.dim()) throw std::invalid_argument("model length mismatch");
  return encode_sparse(current_model, vv.stale_positions(client), encoding);
}

OvercommitPlan plan_overcommit(std::size_t k, std::size_t c, double oc, std::optional<double> f_sticky) {
  if (!(oc >= 1.0)) throw std::invalid_argument("over-commitment factor must be >= 1");
  OvercommitPlan plan;
  plan.oc = oc;
  plan.f_sticky = f_sticky.value_or(k == 0 ? 0.0 : static_cast<double>(c) / static_cast<double>(k));
  if (!(plan.f_sticky >= 0.0 && plan.f_sticky <= 1.0)) throw std::invalid_argument("f_sticky must lie in [0,1]");
  const double extra = (oc - 1.0) * static_cast<double>(k);
  const auto total = static_cast<std::size_t>(std::floor(extra + 0.5));
  plan.extra_sticky = std::min(total, static_cast<std::size_t>(std::floor(extra * plan.f_sticky + 0.5)));
  plan.extra_fresh = total - plan.extra_sticky;
  return plan;
}

RoundTiming simulate_round_timing(std::span<const Participant> participants,
                                  std::span<const ClientProfile> profiles, unsigned local_steps,
                                  std::size_t need_sticky, std::size_t need_fresh) {
  RoundTiming out;
  out.finish.resize(participants.size());
  out.download_time.resize(participants.size());
  std::vector<std::size_t> sticky, fresh;
  for (std::size_t i = 0; i < participants.size(); ++i) {
    const auto& pt = participants[i];
    const auto& prof = profiles[pt.client];
    const double down = static_cast<double>(pt.download_bytes) * 8.0 / prof.down_bps;
    const double compute = static_cast<double>(local_steps) * pt.compute_scale / prof.compute_rate;
    const double up = static_cast<double>(pt.upload_bytes) * 8.0 / prof.up_bps;
    out.download_time[i] = down;
    out.finish[i] = down + compute + up;
    (pt.group == Group::Sticky ? sticky : fresh).push_back(i);
  }
  if (sticky.size() < need_sticky || fresh.size() < need_fresh) {
    throw DropoutError("not enough participants to fill the round: have " + std::to_string(sticky.size()) +
                       " sticky / " + std::to_string(fresh.size()) + " fresh, need " +
                       std::to_string(need_sticky) + " / " + std::to_string(need_fresh));
  }
  auto earliest = [&](std::vector<std::size_t>& pool, std::size_t need, std::vector<ClientId>& used) {
    std::sort(pool.begin(), pool.end(), [&](std::size_t a, std::size_t b) {
      if (out.finish[a] != out.finish[b]) return out.finish[a] < out.finish[b];
      return participants[a].client < participants[b].client;
    });
    for (std::size_t r = 0; r < need; ++r) {
      const auto i = pool[r];
      used.push_back(participants[i].client);
      out.wall_time = std::max(out.wall_time, out.finish[i]);
      out.slowest_used_download_s = std::max(out.slowest_used_download_s, out.download_time[i]);
    }
    std::sort(used.begin(), used.end());
  };
  earliest(sticky, need_sticky, out.used_sticky);
  earliest(fresh, need_fresh, out.used_fresh);
  return out;
}

}  // namespace gluefl
