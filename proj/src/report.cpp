#include "gluefl/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace gluefl {

namespace {

std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

}  // namespace

void write_metrics_csv(std::ostream& out, std::span<const RoundMetrics> metrics) {
  out << "round,test_acc,test_loss,dv_used,dv_all,uv,cum_down,cum_up,round_wall_time,"
         "slowest_used_download_s,mask_regenerated,weight_sum\n";
  for (const auto& m : metrics) {
    out << m.round << ',' << fmt_double(m.test_acc) << ',' << fmt_double(m.test_loss) << ',' << m.dv_used << ','
        << m.dv_all << ',' << m.uv << ',' << m.cum_down << ',' << m.cum_up << ',' << fmt_double(m.round_wall_time)
        << ',' << fmt_double(m.slowest_used_download_s) << ',' << (m.mask_regenerated ? 1 : 0) << ','
        << fmt_double(m.weight_sum) << '\n';
  }
}

std::string metrics_csv(std::span<const RoundMetrics> metrics) {
  std::ostringstream out;
  write_metrics_csv(out, metrics);
  return out.str();
}

std::vector<double> smoothed_accuracy(std::span<const RoundMetrics> metrics, std::size_t window) {
  std::vector<double> out(metrics.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    sum += metrics[i].test_acc;
    if (i >= window) sum -= metrics[i - window].test_acc;
    out[i] = sum / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

RunSummary summarize_run(std::span<const RoundMetrics> metrics, double target_accuracy) {
  if (metrics.empty()) throw std::invalid_argument("summarize_run: no metrics");
  RunSummary s;
  s.target_accuracy = target_accuracy;
  const auto smooth = smoothed_accuracy(metrics);
  std::size_t last = metrics.size() - 1;
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    if (smooth[i] >= target_accuracy) {
      s.target_round = metrics[i].round;
      last = i;
      break;
    }
  }
  for (std::size_t i = 0; i <= last; ++i) {
    s.dv_bytes += metrics[i].dv_all;
    s.dv_used_bytes += metrics[i].dv_used;
    s.uv_bytes += metrics[i].uv;
    s.dt_seconds += metrics[i].slowest_used_download_s;
    s.tt_seconds += metrics[i].round_wall_time;
  }
  s.tv_bytes = s.dv_bytes + s.uv_bytes;
  s.rounds_counted = static_cast<unsigned>(last + 1);
  s.final_accuracy = metrics.back().test_acc;
  s.final_smoothed_accuracy = smooth.back();
  return s;
}

nlohmann::json summary_to_json(const RunSummary& s) {
  nlohmann::json j;
  j["target_accuracy"] = s.target_accuracy;
  j["target_round"] = s.target_round ? nlohmann::json(*s.target_round) : nlohmann::json(nullptr);
  j["rounds_counted"] = s.rounds_counted;
  j["dv_bytes"] = s.dv_bytes;
  j["dv_used_bytes"] = s.dv_used_bytes;
  j["uv_bytes"] = s.uv_bytes;
  j["tv_bytes"] = s.tv_bytes;
  j["dt_seconds"] = s.dt_seconds;
  j["tt_seconds"] = s.tt_seconds;
  j["final_accuracy"] = s.final_accuracy;
  j["final_smoothed_accuracy"] = s.final_smoothed_accuracy;
  return j;
}

std::string probability_table(const SamplingParams& params, unsigned r_max) {
  params.validate();
  std::ostringstream out;
  char buf[128];
  out << "r,uniform_prob,sticky_prob\n";
  for (unsigned r = 1; r <= r_max; ++r) {
    std::snprintf(buf, sizeof buf, "%u,%.6f,", r, resample_probability(Scheme::Uniform, params, r));
    out << buf;
    if (params.sticky()) {
      std::snprintf(buf, sizeof buf, "%.6f", resample_probability(Scheme::Sticky, params, r));
      out << buf;
    }
    out << '\n';
  }
  std::snprintf(buf, sizeof buf, "expected_interval,%.4f,", expected_resample_interval(Scheme::Uniform, params));
  out << buf;
  if (params.sticky()) {
    std::snprintf(buf, sizeof buf, "%.4f", expected_resample_interval(Scheme::Sticky, params));
    out << buf;
  }
  out << '\n';
  return out.str();
}

std::vector<StalenessPoint> staleness_curve(std::span<const IndexSet> supports, std::size_t dim,
                                            unsigned max_rounds, Encoding encoding, const WireFormat& wire) {
  std::vector<StalenessPoint> curve(max_rounds);
  std::vector<double> value_sum(max_rounds, 0.0), byte_sum(max_rounds, 0.0);
  const std::size_t dense = encoded_size(Encoding::Dense, dim, dim, wire);
  const std::size_t rounds = supports.size();
  if (max_rounds < 1 || max_rounds > rounds) throw std::invalid_argument("staleness_curve: max_rounds out of range");
  // Every gap is averaged over the same start rounds.
  for (std::size_t t0 = 0; t0 + max_rounds <= rounds; ++t0) {
    MaskBitmap changed(dim);
    for (unsigned r = 1; r <= max_rounds; ++r) {
      for (auto j : supports[t0 + r - 1]) changed.set(j);
      const std::size_t c = changed.cardinality();
      value_sum[r - 1] += static_cast<double>(c);
      byte_sum[r - 1] += static_cast<double>(std::min(encoded_size(encoding, dim, c, wire), dense));
      ++curve[r - 1].samples;
    }
  }
  for (unsigned r = 1; r <= max_rounds; ++r) {
    auto& pt = curve[r - 1];
    pt.rounds_since_sync = r;
    if (pt.samples > 0) {
      pt.mean_values = value_sum[r - 1] / static_cast<double>(pt.samples);
      pt.mean_bytes = byte_sum[r - 1] / static_cast<double>(pt.samples);
    }
  }
  return curve;
}

std::string staleness_csv(std::span<const StalenessPoint> curve) {
  std::ostringstream out;
  out << "rounds_since_sync,mean_values,mean_bytes,samples\n";
  for (const auto& pt : curve) {
    out << pt.rounds_since_sync << ',' << fmt_double(pt.mean_values) << ',' << fmt_double(pt.mean_bytes) << ','
        << pt.samples << '\n';
  }
  return out.str();
}

}  // namespace gluefl
