#include "gluefl/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <stdexcept>

namespace gluefl {

using nlohmann::json;

namespace {

struct StrategyName {
  Strategy strategy;
  std::string_view name;
};

constexpr StrategyName kStrategies[] = {
    {Strategy::FedAvg, "fedavg"},
    {Strategy::StickyFedAvg, "sticky-fedavg"},
    {Strategy::Stc, "stc"},
    {Strategy::Gluefl, "gluefl"},
    {Strategy::GlueflEqualWeights, "gluefl-equal-weights"},
    {Strategy::GlueflNoEc, "gluefl-no-ec"},
    {Strategy::GlueflEcUnscaled, "gluefl-ec-unscaled"},
    {Strategy::GlueflNoRegen, "gluefl-no-regen"},
};

using Handler = std::function<void(const json&)>;

// Applies handlers key by key; any key without a handler is an error.
void apply_object(const json& obj, std::string_view where, const std::map<std::string, Handler>& handlers) {
  if (!obj.is_object()) throw std::invalid_argument(std::string(where) + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    auto h = handlers.find(it.key());
    if (h == handlers.end()) {
      throw std::invalid_argument("unknown config key: " + std::string(where) + (where.empty() ? "" : ".") + it.key());
    }
    try {
      h->second(it.value());
    } catch (const json::exception& e) {
      throw std::invalid_argument("bad value for config key " + it.key() + ": " + e.what());
    }
  }
}

ValueDistribution distribution_from_json(const json& j, std::string_view where) {
  if (!j.is_object() || j.size() != 1) {
    throw std::invalid_argument(std::string(where) + " must be {\"cdf\": [[fraction, value], ...]} or {\"lognormal\": {...}}");
  }
  ValueDistribution out;
  apply_object(j, where, {
      {"cdf", [&](const json& v) {
         EmpiricalCdf cdf;
         for (const auto& pt : v) {
           if (!pt.is_array() || pt.size() != 2) throw std::invalid_argument("cdf breakpoints are [fraction, value] pairs");
           cdf.points.push_back({pt[0].get<double>(), pt[1].get<double>()});
         }
         out = cdf;
       }},
      {"lognormal", [&](const json& v) {
         LogNormal ln;
         apply_object(v, std::string(where) + ".lognormal", {
             {"mu", [&](const json& x) { ln.mu = x.get<double>(); }},
             {"sigma", [&](const json& x) { ln.sigma = x.get<double>(); }},
         });
         out = ln;
       }},
  });
  validate(out);
  return out;
}

json distribution_to_json(const ValueDistribution& dist) {
  if (const auto* cdf = std::get_if<EmpiricalCdf>(&dist)) {
    json pts = json::array();
    for (const auto& p : cdf->points) pts.push_back({p.cdf, p.value});
    return {{"cdf", pts}};
  }
  const auto& ln = std::get<LogNormal>(dist);
  return {{"lognormal", {{"mu", ln.mu}, {"sigma", ln.sigma}}}};
}

}  // namespace

Strategy parse_strategy(std::string_view name) {
  for (const auto& s : kStrategies) {
    if (s.name == name) return s.strategy;
  }
  throw std::invalid_argument("unknown strategy: " + std::string(name));
}

std::string_view to_string(Strategy s) {
  for (const auto& e : kStrategies) {
    if (e.strategy == s) return e.name;
  }
  return "?";
}

bool uses_sticky_sampling(Strategy s) { return s != Strategy::FedAvg && s != Strategy::Stc; }

bool uses_mask_shifting(Strategy s) {
  return s != Strategy::FedAvg && s != Strategy::Stc && s != Strategy::StickyFedAvg;
}

SamplingParams ExperimentConfig::sampling() const {
  SamplingParams p{n, k, 0, 0};
  if (uses_sticky_sampling(strategy)) {
    p.s = s.value_or(4 * k);
    p.c = c.value_or(4 * k / 5);
  }
  return p;
}

CompensationScaling ExperimentConfig::compensation() const {
  switch (strategy) {
    case Strategy::GlueflNoEc: return CompensationScaling::None;
    case Strategy::GlueflEcUnscaled: return CompensationScaling::Unscaled;
    case Strategy::Gluefl:
    case Strategy::GlueflEqualWeights:
    case Strategy::GlueflNoRegen: return CompensationScaling::Rescaled;
    case Strategy::Stc: return stc_residuals ? CompensationScaling::Unscaled : CompensationScaling::None;
    default: return CompensationScaling::None;
  }
}

unsigned ExperimentConfig::effective_regen_period() const {
  return strategy == Strategy::GlueflNoRegen ? 0 : regen_period;
}

void ExperimentConfig::validate() const {
  sampling().validate();
  if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("q must lie in (0,1]");
  if (uses_mask_shifting(strategy) && !(q_shr >= 0.0 && q_shr < q)) {
    throw std::invalid_argument("q_shr must satisfy 0 <= q_shr < q");
  }
  if (!(oc >= 1.0)) throw std::invalid_argument("oc must be >= 1");
  if (f_sticky && !(*f_sticky >= 0.0 && *f_sticky <= 1.0)) throw std::invalid_argument("f_sticky must lie in [0,1]");
  if (!(p_offline >= 0.0 && p_offline < 1.0)) throw std::invalid_argument("p_offline must lie in [0,1)");
  LocalTrainConfig{local_steps, batch_size, lr, momentum}.validate();
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be positive");
  if (rounds < 1) throw std::invalid_argument("rounds must be >= 1");
  if (dataset.source != "synthetic" && dataset.source != "csv") throw std::invalid_argument("dataset.source must be synthetic or csv");
  if (dataset.source == "csv" && dataset.path.empty()) throw std::invalid_argument("dataset.path is required for csv data");
  if (!(dataset.alpha > 0.0)) throw std::invalid_argument("dataset.alpha must be positive");
  if (model_kind != ModelKind::Logistic && hidden.empty()) throw std::invalid_argument("mlp models need at least one hidden layer");
  gluefl::validate(bandwidth.down_mbps);
  gluefl::validate(bandwidth.up_mbps);
  gluefl::validate(bandwidth.compute_rate);
  if (!(compute_jitter >= 0.0)) throw std::invalid_argument("compute_jitter must be non-negative");
  if (wire.value_bytes < 1 || wire.index_bytes < 1) throw std::invalid_argument("wire widths must be positive");

  const auto sp = sampling();
  const auto plan = plan_overcommit(sp.k, sp.c, oc, f_sticky);
  if (sp.sticky()) {
    if (sp.c + plan.extra_sticky > sp.s) throw std::invalid_argument("over-commitment draws more sticky clients than S");
    if (sp.k - sp.c + plan.extra_fresh > sp.n - sp.s) throw std::invalid_argument("over-commitment draws more fresh clients than N-S");
  } else if (sp.k + plan.extra_sticky + plan.extra_fresh > sp.n) {
    throw std::invalid_argument("over-commitment draws more clients than N");
  }
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  apply_object(j, "", {
      {"strategy", [&](const json& v) { cfg.strategy = parse_strategy(v.get<std::string>()); }},
      {"n", [&](const json& v) { cfg.n = v.get<std::size_t>(); }},
      {"k", [&](const json& v) { cfg.k = v.get<std::size_t>(); }},
      {"s", [&](const json& v) { cfg.s = v.is_null() ? std::nullopt : std::optional(v.get<std::size_t>()); }},
      {"c", [&](const json& v) { cfg.c = v.is_null() ? std::nullopt : std::optional(v.get<std::size_t>()); }},
      {"q", [&](const json& v) { cfg.q = v.get<double>(); }},
      {"q_shr", [&](const json& v) { cfg.q_shr = v.get<double>(); }},
      {"regen_period", [&](const json& v) {
         if (v.is_null() || (v.is_string() && (v == "inf" || v == "never"))) {
           cfg.regen_period = 0;
         } else {
           cfg.regen_period = v.get<unsigned>();
         }
       }},
      {"regen_mode", [&](const json& v) { cfg.regen_mode = parse_regen_mode(v.get<std::string>()); }},
      {"oc", [&](const json& v) { cfg.oc = v.get<double>(); }},
      {"f_sticky", [&](const json& v) { cfg.f_sticky = v.is_null() ? std::nullopt : std::optional(v.get<double>()); }},
      {"p_offline", [&](const json& v) { cfg.p_offline = v.get<double>(); }},
      {"dropout_policy", [&](const json& v) {
         const auto s = v.get<std::string>();
         if (s == "error") cfg.dropout_policy = DropoutPolicy::Error;
         else if (s == "skip-round") cfg.dropout_policy = DropoutPolicy::SkipRound;
         else throw std::invalid_argument("dropout_policy must be error or skip-round");
       }},
      {"local_steps", [&](const json& v) { cfg.local_steps = v.get<unsigned>(); }},
      {"batch_size", [&](const json& v) { cfg.batch_size = v.get<std::size_t>(); }},
      {"lr", [&](const json& v) { cfg.lr = v.get<double>(); }},
      {"momentum", [&](const json& v) { cfg.momentum = v.get<double>(); }},
      {"rounds", [&](const json& v) { cfg.rounds = v.get<unsigned>(); }},
      {"p_mode", [&](const json& v) { cfg.p_mode = parse_weight_mode(v.get<std::string>()); }},
      {"model", [&](const json& v) {
         apply_object(v, "model", {
             {"kind", [&](const json& x) { cfg.model_kind = parse_model_kind(x.get<std::string>()); }},
             {"hidden", [&](const json& x) { cfg.hidden = x.get<std::vector<std::size_t>>(); }},
             {"activation", [&](const json& x) { cfg.activation = parse_activation(x.get<std::string>()); }},
         });
       }},
      {"dataset", [&](const json& v) {
         auto& d = cfg.dataset;
         apply_object(v, "dataset", {
             {"source", [&](const json& x) { d.source = x.get<std::string>(); }},
             {"path", [&](const json& x) { d.path = x.get<std::string>(); }},
             {"classes", [&](const json& x) { d.synthetic.classes = x.get<std::size_t>(); }},
             {"dim", [&](const json& x) { d.synthetic.dim = x.get<std::size_t>(); }},
             {"total", [&](const json& x) { d.synthetic.total = x.get<std::size_t>(); }},
             {"separation", [&](const json& x) { d.synthetic.separation = x.get<double>(); }},
             {"alpha", [&](const json& x) { d.alpha = x.get<double>(); }},
             {"min_size", [&](const json& x) { d.min_size = x.get<std::size_t>(); }},
         });
       }},
      {"bandwidth", [&](const json& v) {
         apply_object(v, "bandwidth", {
             {"down_mbps", [&](const json& x) { cfg.bandwidth.down_mbps = distribution_from_json(x, "bandwidth.down_mbps"); }},
             {"up_mbps", [&](const json& x) { cfg.bandwidth.up_mbps = distribution_from_json(x, "bandwidth.up_mbps"); }},
             {"compute_rate", [&](const json& x) { cfg.bandwidth.compute_rate = distribution_from_json(x, "bandwidth.compute_rate"); }},
             {"compute_jitter", [&](const json& x) { cfg.compute_jitter = x.get<double>(); }},
         });
       }},
      {"encoding", [&](const json& v) { cfg.encoding = parse_encoding(v.get<std::string>()); }},
      {"value_bytes", [&](const json& v) { cfg.wire.value_bytes = v.get<std::size_t>(); }},
      {"index_bytes", [&](const json& v) { cfg.wire.index_bytes = v.get<std::size_t>(); }},
      {"charge_mask", [&](const json& v) { cfg.charge_mask = v.get<bool>(); }},
      {"stc_residuals", [&](const json& v) { cfg.stc_residuals = v.get<bool>(); }},
      {"target_accuracy", [&](const json& v) { cfg.target_accuracy = v.get<double>(); }},
      {"seed", [&](const json& v) { cfg.seed = v.get<std::uint64_t>(); }},
  });
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

json config_to_json(const ExperimentConfig& cfg) {
  const auto sp = cfg.sampling();
  json j;
  j["strategy"] = std::string(to_string(cfg.strategy));
  j["n"] = cfg.n;
  j["k"] = cfg.k;
  j["s"] = sp.sticky() ? json(sp.s) : json(nullptr);
  j["c"] = sp.sticky() ? json(sp.c) : json(nullptr);
  j["q"] = cfg.q;
  j["q_shr"] = cfg.q_shr;
  j["regen_period"] = cfg.regen_period;
  j["regen_mode"] = std::string(to_string(cfg.regen_mode));
  j["oc"] = cfg.oc;
  j["f_sticky"] = cfg.f_sticky ? json(*cfg.f_sticky) : json(nullptr);
  j["p_offline"] = cfg.p_offline;
  j["dropout_policy"] = cfg.dropout_policy == DropoutPolicy::Error ? "error" : "skip-round";
  j["local_steps"] = cfg.local_steps;
  j["batch_size"] = cfg.batch_size;
  j["lr"] = cfg.lr;
  j["momentum"] = cfg.momentum;
  j["rounds"] = cfg.rounds;
  j["p_mode"] = cfg.p_mode == WeightMode::Proportional ? "proportional" : "uniform";
  j["model"] = {{"kind", std::string(to_string(cfg.model_kind))},
                {"hidden", cfg.hidden},
                {"activation", std::string(to_string(cfg.activation))}};
  j["dataset"] = {{"source", cfg.dataset.source},
                  {"path", cfg.dataset.path},
                  {"classes", cfg.dataset.synthetic.classes},
                  {"dim", cfg.dataset.synthetic.dim},
                  {"total", cfg.dataset.synthetic.total},
                  {"separation", cfg.dataset.synthetic.separation},
                  {"alpha", cfg.dataset.alpha},
                  {"min_size", cfg.dataset.min_size}};
  j["bandwidth"] = {{"down_mbps", distribution_to_json(cfg.bandwidth.down_mbps)},
                    {"up_mbps", distribution_to_json(cfg.bandwidth.up_mbps)},
                    {"compute_rate", distribution_to_json(cfg.bandwidth.compute_rate)},
                    {"compute_jitter", cfg.compute_jitter}};
  j["encoding"] = std::string(to_string(cfg.encoding));
  j["value_bytes"] = cfg.wire.value_bytes;
  j["index_bytes"] = cfg.wire.index_bytes;
  j["charge_mask"] = cfg.charge_mask;
  j["stc_residuals"] = cfg.stc_residuals;
  j["target_accuracy"] = cfg.target_accuracy;
  j["seed"] = cfg.seed;
  return j;
}

void set_config_key(json& doc, std::string_view dotted_key, const json& value) {
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = dotted_key.find('.', start);
    const std::string part(dotted_key.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start));
    if (part.empty()) throw std::invalid_argument("bad grid key: " + std::string(dotted_key));
    if (dot == std::string_view::npos) {
      (*node)[part] = value;
      return;
    }
    if (!node->contains(part)) (*node)[part] = json::object();
    node = &(*node)[part];
    start = dot + 1;
  }
}

std::vector<json> expand_grid(const json& base, const json& grid) {
  if (!grid.is_object()) throw std::invalid_argument("grid must be an object of key -> value list");
  std::vector<json> out{base};
  for (auto it = grid.begin(); it != grid.end(); ++it) {
    if (!it.value().is_array() || it.value().empty()) {
      throw std::invalid_argument("grid entry " + it.key() + " must be a non-empty list");
    }
    std::vector<json> next;
    for (const auto& partial : out) {
      for (const auto& v : it.value()) {
        json doc = partial;
        set_config_key(doc, it.key(), v);
        next.push_back(std::move(doc));
      }
    }
    out = std::move(next);
  }
  return out;
}

}  // namespace gluefl
