#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "gluefl/numerics.hpp"
#include "gluefl/rng.hpp"
#include "gluefl/sampling.hpp"

namespace gluefl {

struct ClientProfile {
  double down_bps = 0.0;      // bits per second
  double up_bps = 0.0;        // bits per second
  double compute_rate = 0.0;  // local steps per second
};

/// One point of an empirical CDF: P(X <= value) = cdf.
struct CdfPoint {
  double cdf = 0.0;
  double value = 0.0;
};

/// Inverse-CDF sampler over breakpoints, interpolating log-linearly between
/// them. Below the first breakpoint the first value is returned.
struct EmpiricalCdf {
  std::vector<CdfPoint> points;
};

struct LogNormal {
  double mu = 0.0;
  double sigma = 0.0;
};

using ValueDistribution = std::variant<EmpiricalCdf, LogNormal>;

void validate(const ValueDistribution& dist);
double sample(const ValueDistribution& dist, Rng& rng);

/// Bandwidths in Mbps, compute rate in local steps per second.
struct ProfileConfig {
  ValueDistribution down_mbps;
  ValueDistribution up_mbps;
  ValueDistribution compute_rate;

  /// Defaults follow a North-American style downstream spread with 20% of
  /// devices at or below 10 Mbps.
  static ProfileConfig defaults();
};

std::vector<ClientProfile> sample_profiles(std::size_t n, const ProfileConfig& cfg, Rng& rng);

/// Per-parameter round of last modification plus per-client sync round.
/// A client synchronized in round t holds every update from rounds < t.
class ServerVersionVector {
 public:
  ServerVersionVector(std::size_t dim, std::size_t clients);

  std::size_t dim() const { return last_changed_.size(); }
  unsigned last_changed(std::size_t j) const { return last_changed_[j]; }
  std::optional<unsigned> last_sync(ClientId client) const;

  /// Marks the positions of a round's global update.
  void record_update(const IndexSet& support, unsigned round);
  void mark_synced(ClientId client, unsigned round);

  /// Positions changed since the client's last sync (all of them if never synced).
  IndexSet stale_positions(ClientId client) const;
  std::size_t stale_count(ClientId client) const;

 private:
  std::vector<unsigned> last_changed_;
  std::vector<unsigned> last_sync_;  // 0 = never
  unsigned latest_round_ = 0;
};

struct DownstreamOptions {
  Encoding encoding = Encoding::BitmapValues;
  WireFormat wire{};
  bool include_mask = false;  // strategy distributes a shared-mask bitmap
};

/// Bytes a client downloads at the start of `round`: the dense model if it
/// was never synced, otherwise the changed positions under the configured
/// encoding (never more than the dense model), plus the mask bitmap.
std::size_t downstream_payload(const ServerVersionVector& vv, ClientId client, unsigned round,
                               const DownstreamOptions& opts = {});

/// The actual download: current values at the stale positions.
SparseDelta downstream_delta(const ServerVersionVector& vv, ClientId client,
                             std::span<const double> current_model,
                             Encoding encoding = Encoding::BitmapValues);

struct OvercommitPlan {
  double oc = 1.0;
  double f_sticky = 0.0;
  std::size_t extra_sticky = 0;
  std::size_t extra_fresh = 0;
};

/// Extra draws round((oc-1)K), of which round((oc-1)K f_sticky) come from the
/// sticky group.
OvercommitPlan plan_overcommit(std::size_t k, std::size_t c, double oc,
                               std::optional<double> f_sticky = std::nullopt);

struct Participant {
  ClientId client = 0;
  Group group = Group::Uniform;  // Sticky / Fresh in sticky mode, Uniform otherwise
  std::size_t download_bytes = 0;
  std::size_t upload_bytes = 0;
  double compute_scale = 1.0;    // multiplicative jitter on compute time
};

struct RoundTiming {
  std::vector<double> finish;          // parallel to the participant list
  std::vector<double> download_time;   // parallel to the participant list
  std::vector<ClientId> used_sticky;   // ascending
  std::vector<ClientId> used_fresh;    // ascending (all used clients in uniform mode)
  double wall_time = 0.0;
  double slowest_used_download_s = 0.0;
};

class DropoutError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// finish = down_bytes*8/down_bps + steps*scale/compute_rate + up_bytes*8/up_bps.
/// Keeps the `need_sticky` earliest sticky finishers and the `need_fresh`
/// earliest others (Uniform participants count as fresh); ties by client id.
RoundTiming simulate_round_timing(std::span<const Participant> participants,
                                  std::span<const ClientProfile> profiles, unsigned local_steps,
                                  std::size_t need_sticky, std::size_t need_fresh);

}  // namespace gluefl
