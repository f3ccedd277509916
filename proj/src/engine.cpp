#include "gluefl/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "gluefl/aggregation.hpp"
#include "gluefl/compression.hpp"
#include "gluefl/data.hpp"
#include "gluefl/netsim.hpp"
#include "gluefl/rng.hpp"
#include "gluefl/training.hpp"

namespace gluefl {

namespace {

// Everything one participant produces in a round.
struct ClientWork {
  ClientId id = 0;
  Group group = Group::Uniform;
  double weight = 0.0;
  LocalUpdate local;
  ParamVector compensated;  // what was split / sparsified
  SparseDelta shared;       // mask-shifting strategies
  SparseDelta unique;       // mask-shifting strategies; STC's top-q upload
  ParamVector residual;
  std::size_t download_bytes = 0;
  std::size_t upload_bytes = 0;
};

IndexSet all_positions(std::size_t d) {
  IndexSet out(d);
  std::iota(out.begin(), out.end(), 0U);
  return out;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

class Engine {
 public:
  explicit Engine(const ExperimentConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    auto data_rng = make_stream(cfg_.seed, "data");
    SplitDataset split;
    if (cfg_.dataset.source == "csv") {
      split = load_csv(cfg_.dataset.path, data_rng);
    } else {
      split = generate_synthetic(cfg_.dataset.synthetic, data_rng);
    }
    test_ = std::move(split.test);
    shards_ = partition_dirichlet(split.train, cfg_.n, cfg_.dataset.alpha, cfg_.dataset.min_size, data_rng);
    // Clients dropped by the minimum-size filter shrink the population.
    cfg_.n = shards_.size();
    cfg_.validate();
    params_ = cfg_.sampling();
    p_ = client_weights(shards_, cfg_.p_mode);

    ModelSpec spec;
    spec.kind = cfg_.model_kind;
    spec.input_dim = split.train.dim;
    spec.classes = split.train.classes;
    spec.hidden = cfg_.hidden;
    spec.activation = cfg_.activation;
    model_.emplace(spec);
    auto init_rng = make_stream(cfg_.seed, "init");
    w_ = model_->initial_params(init_rng);
    stats_ = model_->initial_stats();
    d_ = w_.size();

    auto profile_rng = make_stream(cfg_.seed, "profiles");
    profiles_ = sample_profiles(cfg_.n, cfg_.bandwidth, profile_rng);

    sampling_rng_ = make_stream(cfg_.seed, "sampling");
    sticky_ = StickyState::initialize(params_, sampling_rng_);
    plan_ = plan_overcommit(params_.k, params_.c, cfg_.oc, cfg_.f_sticky);
    if (!params_.sticky()) {
      plan_.extra_fresh += plan_.extra_sticky;
      plan_.extra_sticky = 0;
    }
    vv_.emplace(d_, cfg_.n);
    if (uses_mask_shifting(cfg_.strategy)) {
      mask_ = SharedMaskState::initial(d_, cfg_.q, cfg_.q_shr, cfg_.effective_regen_period(), cfg_.regen_mode);
    }
  }

  ExperimentResult run(const RoundObserver& observer) {
    ExperimentResult result;
    for (unsigned t = 1; t <= cfg_.rounds; ++t) {
      result.metrics.push_back(step(t, observer));
    }
    result.final_params = w_;
    result.final_stats = stats_;
    result.clients = cfg_.n;
    result.param_count = d_;
    return result;
  }

 private:
  Group group_of(ClientId id, bool from_sticky) const {
    if (!params_.sticky()) return Group::Uniform;
    return from_sticky ? Group::Sticky : Group::Fresh;
  }

  double weight_for(Group g, ClientId id) const {
    if (cfg_.strategy == Strategy::GlueflEqualWeights) return 1.0 / static_cast<double>(params_.k);
    return aggregation_weight(g, p_[id], params_);
  }

  bool masking() const { return uses_mask_shifting(cfg_.strategy); }

  ClientWork compute_client(ClientId id, Group group, unsigned t, const MaskBitmap& eff_mask) {
    ClientWork work;
    work.id = id;
    work.group = group;
    work.weight = weight_for(group, id);

    const auto& shard = shards_[id].data;
    LocalTrainConfig lc{cfg_.local_steps, std::min(cfg_.batch_size, shard.size()), scheduled_lr(cfg_.lr, t),
                        cfg_.momentum};
    auto rng = make_stream(cfg_.seed, "train", id, t);
    work.local = local_train(*model_, w_, stats_, shard, lc, rng);

    const std::size_t stat_bytes = cfg_.wire.value_bytes * stats_.size();
    switch (cfg_.strategy) {
      case Strategy::FedAvg:
      case Strategy::StickyFedAvg:
        work.upload_bytes = encoded_size(Encoding::Dense, d_, d_, cfg_.wire);
        break;
      case Strategy::Stc: {
        work.compensated = compensate_delta(work.local.delta, store_.find(id), work.weight, cfg_.compensation());
        work.unique = encode_sparse(work.compensated, top_k_indices(work.compensated, ratio_to_count(cfg_.q, d_)),
                                    cfg_.encoding);
        work.residual = work.compensated;
        for (auto j : work.unique.support) work.residual[j] = 0.0;
        work.upload_bytes = work.unique.byte_size(cfg_.wire);
        break;
      }
      default: {
        work.compensated = compensate_delta(work.local.delta, store_.find(id), work.weight, cfg_.compensation());
        auto split = split_masked_update(work.compensated, eff_mask, cfg_.q, cfg_.encoding);
        work.shared = std::move(split.shared);
        work.unique = std::move(split.unique);
        work.residual = std::move(split.residual);
        // The server knows the mask, so shared values travel without positions.
        work.upload_bytes = cfg_.wire.value_bytes * work.shared.nnz() + work.unique.byte_size(cfg_.wire);
        break;
      }
    }
    work.upload_bytes += stat_bytes;
    return work;
  }

  RoundMetrics step(unsigned t, const RoundObserver& observer) {
    RoundTrace trace;
    trace.round = t;
    RoundMetrics m;
    m.round = t;

    MaskBitmap eff_mask;
    if (masking()) {
      trace.regeneration = mask_->is_regeneration_round(t);
      eff_mask = mask_->effective_mask(t);
      trace.stored_mask = mask_->mask();
      m.mask_regenerated = trace.regeneration;
    }
    trace.effective_mask = eff_mask;

    // Sampling and availability.
    const RoundDraw draw = sample_round(sticky_, sampling_rng_, plan_.extra_sticky, plan_.extra_fresh);
    auto avail_rng = make_stream(cfg_.seed, "availability", t);
    std::bernoulli_distribution offline(cfg_.p_offline);
    std::vector<std::pair<ClientId, Group>> online;
    for (auto id : draw.sticky_selected) {
      if (!offline(avail_rng)) online.emplace_back(id, group_of(id, true));
    }
    for (auto id : draw.fresh_selected) {
      if (!offline(avail_rng)) online.emplace_back(id, group_of(id, false));
    }
    std::sort(online.begin(), online.end());

    // Downloads happen before training; every online participant syncs.
    DownstreamOptions down;
    down.encoding = cfg_.encoding;
    down.wire = cfg_.wire;
    down.include_mask = masking() && cfg_.charge_mask;
    const std::size_t stat_bytes = cfg_.wire.value_bytes * stats_.size();
    std::vector<Participant> participants;
    std::vector<ClientWork> work;
    for (const auto& [id, group] : online) {
      DownloadTrace dl;
      dl.client = id;
      dl.previous_sync = vv_->last_sync(id);
      dl.stale_values = vv_->stale_count(id);
      dl.bytes = downstream_payload(*vv_, id, t, down) + stat_bytes;
      trace.downloads.push_back(dl);
      m.dv_all += dl.bytes;

      work.push_back(compute_client(id, group, t, eff_mask));
      work.back().download_bytes = dl.bytes;
      Participant p;
      p.client = id;
      p.group = group == Group::Uniform ? Group::Fresh : group;
      p.download_bytes = dl.bytes;
      p.upload_bytes = work.back().upload_bytes;
      if (cfg_.compute_jitter > 0.0) {
        auto jrng = make_stream(cfg_.seed, "jitter", id, t);
        std::lognormal_distribution<double> jitter(0.0, cfg_.compute_jitter);
        p.compute_scale = jitter(jrng);
      }
      participants.push_back(p);
    }
    for (const auto& [id, group] : online) vv_->mark_synced(id, t);

    RoundTiming timing;
    const std::size_t need_sticky = params_.sticky() ? params_.c : 0;
    const std::size_t need_fresh = params_.sticky() ? params_.k - params_.c : params_.k;
    try {
      timing = simulate_round_timing(participants, profiles_, cfg_.local_steps, need_sticky, need_fresh);
    } catch (const DropoutError&) {
      if (cfg_.dropout_policy == DropoutPolicy::Error) throw;
      // Skip the update entirely; the round still cost the downloads.
      for (std::size_t i = 0; i < participants.size(); ++i) {
        const auto& prof = profiles_[participants[i].client];
        const double finish = static_cast<double>(participants[i].download_bytes) * 8.0 / prof.down_bps +
                              cfg_.local_steps * participants[i].compute_scale / prof.compute_rate;
        m.round_wall_time = std::max(m.round_wall_time, finish);
      }
      finish_round(m, trace, observer, w_);
      return m;
    }

    std::vector<ClientId> used_ids = timing.used_sticky;
    used_ids.insert(used_ids.end(), timing.used_fresh.begin(), timing.used_fresh.end());
    std::sort(used_ids.begin(), used_ids.end());
    std::vector<const ClientWork*> used;
    for (const auto& wk : work) {
      if (std::binary_search(used_ids.begin(), used_ids.end(), wk.id)) used.push_back(&wk);
    }
    for (const auto* wk : used) {
      m.dv_used += wk->download_bytes;
      m.uv += wk->upload_bytes;
      m.weight_sum += wk->weight;
    }
    m.round_wall_time = timing.wall_time;
    m.slowest_used_download_s = timing.slowest_used_download_s;

    // Aggregation.
    const ParamVector before = w_;
    IndexSet support;
    ParamVector next_w;
    std::optional<GlueflResult> glue;
    switch (cfg_.strategy) {
      case Strategy::FedAvg: {
        std::vector<ClientDelta> deltas;
        for (const auto* wk : used) deltas.push_back({wk->id, p_[wk->id], wk->local.delta});
        next_w = fedavg_aggregate(w_, std::move(deltas), params_.n, params_.k);
        support = all_positions(d_);
        break;
      }
      case Strategy::StickyFedAvg: {
        std::vector<ClientDelta> deltas;
        for (const auto* wk : used) deltas.push_back({wk->id, wk->weight, wk->local.delta});
        next_w = weighted_dense_aggregate(w_, std::move(deltas));
        support = all_positions(d_);
        break;
      }
      case Strategy::Stc: {
        std::vector<ClientSparseDelta> deltas;
        for (const auto* wk : used) deltas.push_back({wk->id, p_[wk->id], wk->unique});
        auto res = stc_round_aggregate(w_, std::move(deltas), params_.n, params_.k, cfg_.q);
        next_w = std::move(res.model);
        support = res.update.support;
        break;
      }
      default: {
        std::vector<WeightedContribution> contribs;
        for (const auto* wk : used) contribs.push_back({wk->id, wk->group, wk->weight, wk->shared, wk->unique});
        glue = gluefl_aggregate(w_, std::move(contribs), eff_mask, cfg_.q);
        next_w = glue->model;
        support = glue->support;
        break;
      }
    }
    require_finite(next_w, "global model");
    w_ = std::move(next_w);
    if (!stats_.empty()) {
      std::vector<ParamVector> stat_deltas;
      for (const auto* wk : used) stat_deltas.push_back(wk->local.stats_delta);
      stats_ = bn_stat_aggregate(stats_, stat_deltas, params_.k);
    }
    vv_->record_update(support, t);
    trace.update_support = support;

    if (masking()) {
      mask_ = advance_shared_mask(*mask_, glue->combined, glue->support, t);
      trace.next_mask = mask_->mask();
    }

    // Residuals and traces for the clients whose updates were applied.
    for (const auto* wk : used) {
      ClientTrace ct;
      ct.client = wk->id;
      ct.group = wk->group;
      ct.weight = wk->weight;
      ct.shared_support = wk->shared.support;
      ct.unique_support = wk->unique.support;
      if (!wk->compensated.empty()) {
        ParamVector recon = wk->residual;
        if (wk->shared.dim == d_) wk->shared.accumulate_into(recon);
        wk->unique.accumulate_into(recon);
        for (std::size_t j = 0; j < d_; ++j) {
          ct.decomposition_error = std::max(ct.decomposition_error, std::fabs(recon[j] - wk->compensated[j]));
        }
        ct.max_abs_residual = max_abs(wk->residual);
        if (cfg_.compensation() != CompensationScaling::None) {
          store_.commit(wk->id, {wk->residual, wk->weight, t});
        }
      }
      trace.used.push_back(std::move(ct));
    }

    if (params_.sticky()) {
      sticky_ = update_sticky_group(sticky_, timing.used_sticky, timing.used_fresh, sampling_rng_);
    }
    finish_round(m, trace, observer, before);
    return m;
  }

  void finish_round(RoundMetrics& m, RoundTrace& trace, const RoundObserver& observer, const ParamVector& before) {
    const auto eval = evaluate(*model_, w_, stats_, test_);
    m.test_acc = eval.accuracy;
    m.test_loss = eval.loss;
    cum_down_ += m.dv_all;
    cum_up_ += m.uv;
    m.cum_down = cum_down_;
    m.cum_up = cum_up_;
    if (observer) {
      trace.model_before = &before;
      trace.model_after = &w_;
      observer(trace);
    }
  }

  ExperimentConfig cfg_;
  SamplingParams params_;
  std::vector<ClientShard> shards_;
  Dataset test_;
  std::vector<double> p_;
  std::optional<Model> model_;
  ParamVector w_;
  ParamVector stats_;
  std::size_t d_ = 0;
  std::vector<ClientProfile> profiles_;
  Rng sampling_rng_;
  StickyState sticky_;
  OvercommitPlan plan_;
  std::optional<ServerVersionVector> vv_;
  std::optional<SharedMaskState> mask_;
  CompensationStore store_;
  std::size_t cum_down_ = 0;
  std::size_t cum_up_ = 0;
};

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RoundObserver& observer) {
  Engine engine(cfg);
  return engine.run(observer);
}

}  // namespace gluefl
