#include "gluefl/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace gluefl {

void Dataset::push_back(std::span<const double> x, int label) {
  if (x.size() != dim) throw std::invalid_argument("feature width mismatch");
  features.insert(features.end(), x.begin(), x.end());
  labels.push_back(label);
}

std::vector<std::size_t> Dataset::label_histogram() const {
  std::vector<std::size_t> h(classes, 0);
  for (int y : labels) ++h[static_cast<std::size_t>(y)];
  return h;
}

namespace {

// Class means with pairwise distance `separation` when dim >= classes
// (scaled orthonormal directions); random unit directions otherwise.
std::vector<std::vector<double>> class_means(const SyntheticSpec& spec, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double radius = spec.separation / std::sqrt(2.0);
  std::vector<std::vector<double>> means;
  for (std::size_t c = 0; c < spec.classes; ++c) {
    std::vector<double> v(spec.dim);
    for (auto& x : v) x = gauss(rng);
    if (spec.dim >= spec.classes) {
      for (const auto& u : means) {
        const double dot = std::inner_product(v.begin(), v.end(), u.begin(), 0.0);
        for (std::size_t j = 0; j < v.size(); ++j) v[j] -= dot * u[j];
      }
    }
    const double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    for (auto& x : v) x /= norm;
    means.push_back(std::move(v));
  }
  for (auto& m : means) {
    for (auto& x : m) x *= radius;
  }
  return means;
}

SplitDataset split_80_20(const Dataset& all, Rng& rng) {
  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n_test = all.size() / 5;
  SplitDataset out;
  out.train.dim = out.test.dim = all.dim;
  out.train.classes = out.test.classes = all.classes;
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& dst = i < n_test ? out.test : out.train;
    dst.push_back(all.row(order[i]), all.labels[order[i]]);
  }
  return out;
}

}  // namespace

SplitDataset generate_synthetic(const SyntheticSpec& spec, Rng& rng) {
  if (spec.classes < 2) throw std::invalid_argument("synthetic data needs at least 2 classes");
  if (spec.dim < 1 || spec.total < 1) throw std::invalid_argument("synthetic sizes must be positive");
  if (!(spec.separation > 0.0)) throw std::invalid_argument("separation must be positive");

  const auto means = class_means(spec, rng);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Dataset all;
  all.dim = spec.dim;
  all.classes = spec.classes;
  all.features.reserve(spec.total * spec.dim);
  std::vector<double> x(spec.dim);
  for (std::size_t i = 0; i < spec.total; ++i) {
    const std::size_t c = i % spec.classes;
    for (std::size_t j = 0; j < spec.dim; ++j) x[j] = means[c][j] + gauss(rng);
    all.push_back(x, static_cast<int>(c));
  }
  return split_80_20(all, rng);
}

SplitDataset parse_csv(std::string_view text, Rng& rng) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("csv: missing header row");
  const auto columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  if (columns < 2) throw std::invalid_argument("csv: need at least one feature and a label column");

  Dataset all;
  all.dim = columns - 1;
  std::vector<double> x(all.dim);
  int max_label = -1;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::istringstream row(line);
    std::string cell;
    std::size_t col = 0;
    int label = -1;
    while (std::getline(row, cell, ',')) {
      try {
        if (col < all.dim) {
          x[col] = std::stod(cell);
        } else if (col == all.dim) {
          std::size_t used = 0;
          label = std::stoi(cell, &used);
          while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
          if (used != cell.size()) throw std::invalid_argument("non-integer label");
        }
      } catch (const std::exception&) {
        throw std::invalid_argument("csv: bad value on line " + std::to_string(line_no));
      }
      ++col;
    }
    if (col != columns) throw std::invalid_argument("csv: wrong column count on line " + std::to_string(line_no));
    if (label < 0) throw std::invalid_argument("csv: negative label on line " + std::to_string(line_no));
    max_label = std::max(max_label, label);
    all.push_back(x, label);
  }
  if (all.empty()) throw std::invalid_argument("csv: no data rows");
  all.classes = static_cast<std::size_t>(max_label) + 1;
  if (all.classes < 2) all.classes = 2;
  return split_80_20(all, rng);
}

SplitDataset load_csv(const std::string& path, Rng& rng) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open csv file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), rng);
}

std::vector<ClientShard> partition_dirichlet(const Dataset& data, std::size_t clients, double alpha,
                                             std::size_t min_size, Rng& rng) {
  if (clients < 1) throw std::invalid_argument("partition needs at least one client");
  if (!(alpha > 0.0)) throw std::invalid_argument("dirichlet concentration must be positive");
  if (clients * min_size > data.size()) {
    throw std::invalid_argument("infeasible partition: clients * min_size exceeds dataset size");
  }

  std::vector<std::vector<std::size_t>> by_class(data.classes);
  for (std::size_t i = 0; i < data.size(); ++i) by_class[static_cast<std::size_t>(data.labels[i])].push_back(i);

  std::vector<std::vector<std::size_t>> assigned(clients);
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> share(clients);
  for (auto& rows : by_class) {
    if (rows.empty()) continue;
    std::shuffle(rows.begin(), rows.end(), rng);
    double total = 0.0;
    for (auto& s : share) total += (s = gamma(rng));
    if (!(total > 0.0)) {
      // Every draw underflowed (tiny alpha); fall back to a single owner.
      std::fill(share.begin(), share.end(), 0.0);
      share[std::uniform_int_distribution<std::size_t>(0, clients - 1)(rng)] = total = 1.0;
    }
    // Largest-remainder apportionment of this class's rows.
    const double n = static_cast<double>(rows.size());
    std::vector<std::size_t> counts(clients);
    std::vector<std::pair<double, std::size_t>> remainders(clients);
    std::size_t given = 0;
    for (std::size_t i = 0; i < clients; ++i) {
      const double exact = n * share[i] / total;
      counts[i] = static_cast<std::size_t>(std::floor(exact));
      given += counts[i];
      remainders[i] = {exact - std::floor(exact), i};
    }
    std::sort(remainders.begin(), remainders.end(),
              [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
    for (std::size_t r = 0; given < rows.size(); ++r, ++given) ++counts[remainders[r % clients].second];

    std::size_t cursor = 0;
    for (std::size_t i = 0; i < clients; ++i) {
      for (std::size_t c = 0; c < counts[i]; ++c) assigned[i].push_back(rows[cursor++]);
    }
  }

  std::vector<std::size_t> survivors;
  std::vector<std::size_t> orphaned;
  for (std::size_t i = 0; i < clients; ++i) {
    if (assigned[i].size() >= min_size && !assigned[i].empty()) {
      survivors.push_back(i);
    } else {
      orphaned.insert(orphaned.end(), assigned[i].begin(), assigned[i].end());
    }
  }
  if (survivors.empty()) throw std::invalid_argument("partition left no client above the minimum size");
  for (std::size_t r = 0; r < orphaned.size(); ++r) {
    assigned[survivors[r % survivors.size()]].push_back(orphaned[r]);
  }

  std::vector<ClientShard> shards;
  shards.reserve(survivors.size());
  for (std::size_t s = 0; s < survivors.size(); ++s) {
    ClientShard shard;
    shard.id = static_cast<ClientId>(s);
    shard.data.dim = data.dim;
    shard.data.classes = data.classes;
    auto rows = assigned[survivors[s]];
    std::sort(rows.begin(), rows.end());
    for (auto r : rows) shard.data.push_back(data.row(r), data.labels[r]);
    shards.push_back(std::move(shard));
  }
  return shards;
}

WeightMode parse_weight_mode(std::string_view name) {
  if (name == "proportional") return WeightMode::Proportional;
  if (name == "uniform") return WeightMode::Uniform;
  throw std::invalid_argument("unknown weight mode: " + std::string(name));
}

std::vector<double> client_weights(std::span<const ClientShard> shards, WeightMode mode) {
  if (shards.empty()) throw std::invalid_argument("client_weights: no shards");
  const std::size_t n = shards.size();
  std::vector<double> p(n);
  if (mode == WeightMode::Uniform) {
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(n));
  } else {
    double total = 0.0;
    for (const auto& s : shards) total += static_cast<double>(s.size());
    for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<double>(shards[i].size()) / total;
  }
  double head = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) head += p[i];
  p[n - 1] = 1.0 - head;
  return p;
}

double label_tv_distance(const Dataset& shard, std::span<const double> reference) {
  const auto h = shard.label_histogram();
  double tv = 0.0;
  for (std::size_t c = 0; c < h.size(); ++c) {
    tv += std::fabs(static_cast<double>(h[c]) / static_cast<double>(shard.size()) - reference[c]);
  }
  return 0.5 * tv;
}

}  // namespace gluefl
