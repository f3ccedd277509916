#include "gluefl/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <vector>

namespace gluefl {

namespace fs = std::filesystem;

namespace {

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string run_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "run_%03zu", i);
  return buf;
}

std::string csv_cell(const nlohmann::json& v) {
  std::string s = v.is_string() ? v.get<std::string>() : v.dump();
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char ch : s) {
    if (ch == '"') quoted += '"';
    quoted += ch;
  }
  return quoted + '"';
}

}  // namespace

nlohmann::json summary_document(const ExperimentConfig& cfg, const ExperimentResult& result) {
  nlohmann::json doc;
  doc["summary"] = summary_to_json(summarize_run(result.metrics, cfg.target_accuracy));
  doc["clients"] = result.clients;
  doc["param_count"] = result.param_count;
  doc["config"] = config_to_json(cfg);
  return doc;
}

RunSummary run_to_directory(const ExperimentConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  const auto result = run_experiment(cfg);
  fs::create_directories(out_dir);
  write_text(out_dir / "metrics.csv", metrics_csv(result.metrics));
  write_text(out_dir / "summary.json", summary_document(cfg, result).dump(2) + "\n");
  return summarize_run(result.metrics, cfg.target_accuracy);
}

int cmd_run(const std::string& config_path, const std::string& out_dir, std::ostream& log) {
  const auto cfg = load_config(config_path);
  const auto s = run_to_directory(cfg, out_dir);
  log << "rounds=" << cfg.rounds << " final_acc=" << s.final_accuracy << " dv_bytes=" << s.dv_bytes
      << " target_round=" << (s.target_round ? std::to_string(*s.target_round) : "none") << "\n";
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& grid_path, const std::string& out_dir,
              unsigned jobs, std::ostream& log) {
  const auto base = read_json_file(config_path);
  const auto grid = read_json_file(grid_path);
  const auto docs = expand_grid(base, grid);

  std::vector<ExperimentConfig> configs;
  configs.reserve(docs.size());
  for (const auto& d : docs) {
    configs.push_back(config_from_json(d));
    configs.back().validate();
  }

  fs::create_directories(out_dir);
  std::vector<RunSummary> summaries(configs.size());
  std::vector<std::string> errors(configs.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      const fs::path dir = fs::path(out_dir) / run_name(i);
      try {
        fs::create_directories(dir);
        write_text(dir / "config.json", config_to_json(configs[i]).dump(2) + "\n");
        summaries[i] = run_to_directory(configs[i], dir);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
      std::lock_guard lock(log_mutex);
      log << run_name(i) << (errors[i].empty() ? " done" : " failed: " + errors[i]) << "\n";
    }
  };

  const unsigned n_threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(configs.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::vector<std::string> keys;
  for (auto it = grid.begin(); it != grid.end(); ++it) keys.push_back(it.key());
  std::ostringstream index;
  index << "run";
  for (const auto& k : keys) index << ',' << k;
  index << ",status,target_round,dv_bytes,uv_bytes,dt_seconds,tt_seconds,final_accuracy\n";
  bool ok = true;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    index << run_name(i);
    for (const auto& k : keys) {
      nlohmann::json v = docs[i];
      std::stringstream path(k);
      std::string part;
      while (std::getline(path, part, '.')) v = v.at(part);
      index << ',' << csv_cell(v);
    }
    if (!errors[i].empty()) {
      ok = false;
      index << ",failed,,,,,,\n";
      continue;
    }
    const auto& s = summaries[i];
    index << ",ok," << (s.target_round ? std::to_string(*s.target_round) : "") << ',' << s.dv_bytes << ','
          << s.uv_bytes << ',' << s.dt_seconds << ',' << s.tt_seconds << ',' << s.final_accuracy << '\n';
  }
  write_text(fs::path(out_dir) / "index.csv", index.str());
  return ok ? 0 : 1;
}

int cmd_validate(const std::string& config_path, std::ostream& out) {
  const auto cfg = load_config(config_path);
  cfg.validate();
  out << config_to_json(cfg).dump(2) << "\n";
  return 0;
}

int cmd_prob_table(const ProbTableArgs& args, std::ostream& out) {
  SamplingParams params{args.n, args.k, args.s, args.c};
  params.validate();
  if (!args.theory) {
    out << probability_table(params, args.r_max);
    return 0;
  }
  const std::vector<double> p(args.n, 1.0 / static_cast<double>(args.n));
  const auto tc = theory_constants(params, p, args.local_steps, args.sigma, args.rounds);
  char buf[128];
  std::snprintf(buf, sizeof buf, "%.6f,%.6g\n", tc.variance_factor, tc.learning_rate);
  out << "variance_factor,learning_rate\n" << buf;
  return 0;
}

int cmd_staleness(const std::string& config_path, const std::string& out_path, unsigned max_rounds,
                  std::ostream& log) {
  const auto cfg = load_config(config_path);
  cfg.validate();
  std::vector<IndexSet> supports;
  std::size_t dim = 0;
  const auto result = run_experiment(cfg, [&](const RoundTrace& tr) { supports.push_back(tr.update_support); });
  dim = result.param_count;
  const auto curve = staleness_curve(supports, dim, max_rounds, cfg.encoding, cfg.wire);
  write_text(out_path, staleness_csv(curve));
  log << "wrote " << curve.size() << " points to " << out_path << "\n";
  return 0;
}

}  // namespace gluefl
