// Copyright 2026-present the hcfl authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hcfl/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "hcfl/errors.hpp"

namespace hcfl {

namespace {

int bits_for(int count) {
  int bits = 0;
  while ((1 << bits) < count) ++bits;
  return bits;
}

void validate(const PopulationConfig& cfg) {
  if (cfg.edges < 1) throw ConfigError("edges", "must be >= 1");
  if (cfg.clients < cfg.edges) throw ConfigError("clients", "must be >= edges");
  if (cfg.distributions < 1) throw ConfigError("distributions", "must be >= 1");
  if (cfg.feature_dim < 1) throw ConfigError("feature_dim", "must be >= 1");
  if (cfg.classes < 2) throw ConfigError("classes", "must be >= 2");
  if (bits_for(cfg.distributions) > static_cast<int>(cfg.classes / 2))
    throw ConfigError("distributions", "needs more classes to build distinct permutations");
  if (cfg.batch_size < 1) throw ConfigError("batch_size", "must be >= 1");
  if (cfg.samples_min < cfg.batch_size)
    throw ConfigError("samples_min", "must be >= batch_size");
  if (cfg.samples_max < cfg.samples_min)
    throw ConfigError("samples_max", "must be >= samples_min");
  if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0))
    throw ConfigError("test_fraction", "must be in (0, 1)");
  if (!(cfg.noise_std >= 0.0)) throw ConfigError("noise_std", "must be >= 0");
  if (!cfg.placement.empty()) {
    if (cfg.placement.size() != static_cast<std::size_t>(cfg.clients))
      throw ConfigError("placement", "needs one edge per client");
    std::vector<int> count(static_cast<std::size_t>(cfg.edges), 0);
    for (int e : cfg.placement) {
      if (e < 0 || e >= cfg.edges) throw ConfigError("placement", "edge id out of range");
      ++count[static_cast<std::size_t>(e)];
    }
    if (std::find(count.begin(), count.end(), 0) != count.end())
      throw ConfigError("placement", "every edge needs at least one client");
  }
  const auto& r = cfg.radio;
  if (!(r.distance_min_m > 0.0 && r.distance_max_m >= r.distance_min_m))
    throw ConfigError("radio.distance", "invalid range");
  if (!(r.cpu_min_hz > 0.0 && r.cpu_max_hz >= r.cpu_min_hz))
    throw ConfigError("radio.cpu", "invalid range");
  if (!(r.power_max_dbm >= r.power_min_dbm)) throw ConfigError("radio.power", "invalid range");
}

std::size_t test_count_for(std::size_t train, double test_fraction) {
  const double t = static_cast<double>(train) * test_fraction / (1.0 - test_fraction);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(t)));
}

void draw_samples(const Population& pop, const DistributionSpec& dist, Rng& rng,
                  std::size_t count, Dataset& out) {
  const auto& cfg = pop.config;
  std::uniform_int_distribution<int> cls(0, static_cast<int>(cfg.classes) - 1);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t i = 0; i < count; ++i) {
    const int y = cls(rng);
    const auto& mu = pop.class_means[static_cast<std::size_t>(y)];
    for (std::size_t j = 0; j < cfg.feature_dim; ++j)
      out.features.push_back(mu[j] + cfg.noise_std * noise(rng));
    out.labels.push_back(dist.permutation[static_cast<std::size_t>(y)]);
  }
}

void resize_dataset(const Population& pop, const DistributionSpec& dist, Rng& rng,
                    std::size_t target, Dataset& data) {
  if (target <= data.size()) {
    data.labels.resize(target);
    data.features.resize(target * data.dim);
  } else {
    draw_samples(pop, dist, rng, target - data.size(), data);
  }
}

}  // namespace

std::vector<int> Population::edge_members(int k) const {
  std::vector<int> ids;
  for (std::size_t n = 0; n < edge_assignment.size(); ++n)
    if (edge_assignment[n] == k) ids.push_back(static_cast<int>(n));
  return ids;
}

std::size_t Population::total_samples() const {
  std::size_t total = 0;
  for (const auto& c : clients) total += c.samples();
  return total;
}

std::vector<DistributionSpec> make_distributions(int count, std::size_t classes) {
  if (count < 1) throw ConfigError("distributions", "must be >= 1");
  const int levels = bits_for(count);
  const int pairs = static_cast<int>(classes / 2);
  if (levels > pairs)
    throw ConfigError("distributions", "needs more classes to build distinct permutations");

  // Level 0 decides the first split, so it gets the largest share of pairs.
  std::vector<int> share(static_cast<std::size_t>(levels), 1);
  int wanted = 0;
  for (int b = 0; b < levels; ++b) wanted += 1 << (levels - 1 - b);
  if (wanted <= pairs) {
    for (int b = 0; b < levels; ++b) share[static_cast<std::size_t>(b)] = 1 << (levels - 1 - b);
    if (levels > 0) share[0] += pairs - wanted;
  } else if (levels > 0) {
    share[0] += pairs - levels;
  }

  std::vector<DistributionSpec> out;
  for (int j = 0; j < count; ++j) {
    DistributionSpec d{j, std::vector<int>(classes)};
    std::iota(d.permutation.begin(), d.permutation.end(), 0);
    int pair = 0;
    for (int b = 0; b < levels; ++b) {
      const bool on = ((j >> (levels - 1 - b)) & 1) != 0;
      for (int p = 0; p < share[static_cast<std::size_t>(b)]; ++p, ++pair) {
        if (on) std::swap(d.permutation[2 * pair], d.permutation[2 * pair + 1]);
      }
    }
    out.push_back(std::move(d));
  }
  return out;
}

Population generate_population(const PopulationConfig& cfg) {
  validate(cfg);
  Population pop;
  pop.config = cfg;
  pop.num_distributions = cfg.distributions;
  pop.distributions = make_distributions(cfg.distributions, cfg.classes);

  {
    Rng rng = make_stream(cfg.seed, "class-means");
    std::normal_distribution<double> g(0.0, 1.0);
    for (std::size_t c = 0; c < cfg.classes; ++c) {
      std::vector<double> mu(cfg.feature_dim);
      for (double& v : mu) v = g(rng);
      const double norm = l2_norm(mu);
      for (double& v : mu) v *= cfg.class_separation / norm;
      pop.class_means.push_back(std::move(mu));
    }
  }

  const auto n_clients = static_cast<std::size_t>(cfg.clients);
  pop.edge_assignment.resize(n_clients);
  for (std::size_t n = 0; n < n_clients; ++n)
    pop.edge_assignment[n] = cfg.placement.empty() ? static_cast<int>(n) % cfg.edges
                                                   : cfg.placement[n];

  // dist_id cycles through distributions within each edge so every edge sees
  // min(J, N_k) of them and the same distributions recur across edges.
  std::vector<int> position(n_clients);
  std::vector<int> seen(static_cast<std::size_t>(cfg.edges), 0);
  for (std::size_t n = 0; n < n_clients; ++n)
    position[n] = seen[static_cast<std::size_t>(pop.edge_assignment[n])]++;

  const auto& rr = cfg.radio;
  for (std::size_t n = 0; n < n_clients; ++n) {
    ClientState c;
    c.id = static_cast<int>(n);
    c.edge = pop.edge_assignment[n];
    c.dist_id = position[n] % cfg.distributions;
    c.data.owner = c.id;
    c.data.dist_id = c.dist_id;
    c.data.train.dim = c.data.test.dim = cfg.feature_dim;

    Rng size_rng = make_stream(cfg.seed, "size", n);
    const std::size_t train = std::uniform_int_distribution<std::size_t>(
        cfg.samples_min, cfg.samples_max)(size_rng);
    const auto& dist = pop.distributions[static_cast<std::size_t>(c.dist_id)];
    Rng data_rng = make_stream(cfg.seed, "data", n);
    draw_samples(pop, dist, data_rng, train, c.data.train);
    draw_samples(pop, dist, data_rng, test_count_for(train, cfg.test_fraction), c.data.test);

    Rng radio_rng = make_stream(cfg.seed, "radio", n);
    auto uni = [&](double lo, double hi) {
      return lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(radio_rng);
    };
    c.radio.distance_m = uni(rr.distance_min_m, rr.distance_max_m);
    c.radio.p_tx_w = radio::dbm_to_watts(uni(rr.power_min_dbm, rr.power_max_dbm));
    c.radio.f_cpu_hz = uni(rr.cpu_min_hz, rr.cpu_max_hz);
    c.radio.cycles_per_sample = rr.cycles_per_sample;
    c.radio.alpha = rr.alpha;
    c.radio.g0_db = rr.g0_db;
    c.radio.d0_m = rr.d0_m;
    pop.clients.push_back(std::move(c));
  }
  return pop;
}

Population make_unbalanced(const Population& population, double factor) {
  if (!(factor >= 1.0)) throw ConfigError("imbalance_factor", "must be >= 1");
  Population out = population;
  const std::size_t n = out.clients.size();
  if (factor == 1.0 || n < 2) return out;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return out.clients[a].samples() < out.clients[b].samples();
  });
  std::vector<double> weight(n);
  double weight_sum = 0.0;
  for (std::size_t rank = 0; rank < n; ++rank) {
    const double q = static_cast<double>(rank) / static_cast<double>(n - 1);
    weight[order[rank]] = std::pow(factor, q);
    weight_sum += weight[order[rank]];
  }
  const double base = static_cast<double>(out.total_samples()) / weight_sum;
  const auto& cfg = out.config;
  for (auto& c : out.clients) {
    const auto target = std::max<std::size_t>(
        cfg.batch_size,
        static_cast<std::size_t>(std::llround(base * weight[static_cast<std::size_t>(c.id)])));
    const auto& dist = out.distributions[static_cast<std::size_t>(c.dist_id)];
    Rng rng = make_stream(cfg.seed, "unbalance", static_cast<std::uint64_t>(c.id));
    resize_dataset(out, dist, rng, target, c.data.train);
    resize_dataset(out, dist, rng, test_count_for(target, cfg.test_fraction), c.data.test);
  }
  return out;
}

std::vector<std::vector<int>> ground_truth_partition(const Population& population, int edge) {
  std::map<int, std::vector<int>> groups;
  for (int id : population.edge_members(edge))
    groups[population.clients[static_cast<std::size_t>(id)].dist_id].push_back(id);
  std::vector<std::vector<int>> out;
  for (auto& [dist, ids] : groups) out.push_back(std::move(ids));
  std::sort(out.begin(), out.end());
  return out;
}

double weighted_objective(const ModelSpec& spec, const std::map<int, ModelParams>& models_by_client,
                          const Population& population) {
  std::vector<double> losses;
  std::vector<std::size_t> sizes;
  for (const auto& c : population.clients) {
    const auto it = models_by_client.find(c.id);
    if (it == models_by_client.end())
      throw DomainError("weighted_objective: client " + std::to_string(c.id) + " has no model");
    losses.push_back(loss(spec, it->second, c.data.train));
    sizes.push_back(c.samples());
  }
  return weighted_objective(losses, sizes);
}

namespace {

nlohmann::json dataset_json(const Dataset& d) {
  return {{"dim", d.dim}, {"features", d.features}, {"labels", d.labels}};
}

Dataset dataset_from(const nlohmann::json& j) {
  Dataset d;
  d.dim = j.at("dim").get<std::size_t>();
  d.features = j.at("features").get<std::vector<double>>();
  d.labels = j.at("labels").get<std::vector<int>>();
  return d;
}

}  // namespace

nlohmann::json population_to_json(const Population& p, bool include_data) {
  using nlohmann::json;
  const auto& c = p.config;
  const auto& r = c.radio;
  json cfg = {{"seed", c.seed},
              {"clients", c.clients},
              {"edges", c.edges},
              {"distributions", c.distributions},
              {"feature_dim", c.feature_dim},
              {"classes", c.classes},
              {"samples_min", c.samples_min},
              {"samples_max", c.samples_max},
              {"batch_size", c.batch_size},
              {"class_separation", c.class_separation},
              {"noise_std", c.noise_std},
              {"test_fraction", c.test_fraction},
              {"placement", c.placement},
              {"radio",
               {{"distance_min_m", r.distance_min_m},
                {"distance_max_m", r.distance_max_m},
                {"power_min_dbm", r.power_min_dbm},
                {"power_max_dbm", r.power_max_dbm},
                {"cpu_min_hz", r.cpu_min_hz},
                {"cpu_max_hz", r.cpu_max_hz},
                {"cycles_per_sample", r.cycles_per_sample},
                {"alpha", r.alpha},
                {"g0_db", r.g0_db},
                {"d0_m", r.d0_m}}}};
  json dists = json::array();
  for (const auto& d : p.distributions) dists.push_back({{"id", d.id}, {"permutation", d.permutation}});
  json clients = json::array();
  for (const auto& cl : p.clients) {
    json e = {{"id", cl.id},
              {"edge", cl.edge},
              {"dist_id", cl.dist_id},
              {"train_samples", cl.data.train.size()},
              {"test_samples", cl.data.test.size()},
              {"radio",
               {{"distance_m", cl.radio.distance_m},
                {"g0_db", cl.radio.g0_db},
                {"d0_m", cl.radio.d0_m},
                {"p_tx_w", cl.radio.p_tx_w},
                {"f_cpu_hz", cl.radio.f_cpu_hz},
                {"cycles_per_sample", cl.radio.cycles_per_sample},
                {"alpha", cl.radio.alpha}}}};
    if (include_data) {
      e["train"] = dataset_json(cl.data.train);
      e["test"] = dataset_json(cl.data.test);
    }
    clients.push_back(std::move(e));
  }
  return {{"schema_version", kPopulationSchemaVersion},
          {"config", cfg},
          {"num_distributions", p.num_distributions},
          {"distributions", dists},
          {"class_means", p.class_means},
          {"edge_assignment", p.edge_assignment},
          {"clients", clients}};
}

Population population_from_json(const nlohmann::json& j) {
  if (j.at("schema_version").get<int>() != kPopulationSchemaVersion)
    throw ConfigError("schema_version", "unsupported population snapshot version");
  Population p;
  const auto& c = j.at("config");
  auto& cfg = p.config;
  cfg.seed = c.at("seed").get<std::uint64_t>();
  cfg.clients = c.at("clients").get<int>();
  cfg.edges = c.at("edges").get<int>();
  cfg.distributions = c.at("distributions").get<int>();
  cfg.feature_dim = c.at("feature_dim").get<std::size_t>();
  cfg.classes = c.at("classes").get<std::size_t>();
  cfg.samples_min = c.at("samples_min").get<std::size_t>();
  cfg.samples_max = c.at("samples_max").get<std::size_t>();
  cfg.batch_size = c.at("batch_size").get<std::size_t>();
  cfg.class_separation = c.at("class_separation").get<double>();
  cfg.noise_std = c.at("noise_std").get<double>();
  cfg.test_fraction = c.at("test_fraction").get<double>();
  cfg.placement = c.at("placement").get<std::vector<int>>();
  const auto& r = c.at("radio");
  cfg.radio.distance_min_m = r.at("distance_min_m").get<double>();
  cfg.radio.distance_max_m = r.at("distance_max_m").get<double>();
  cfg.radio.power_min_dbm = r.at("power_min_dbm").get<double>();
  cfg.radio.power_max_dbm = r.at("power_max_dbm").get<double>();
  cfg.radio.cpu_min_hz = r.at("cpu_min_hz").get<double>();
  cfg.radio.cpu_max_hz = r.at("cpu_max_hz").get<double>();
  cfg.radio.cycles_per_sample = r.at("cycles_per_sample").get<double>();
  cfg.radio.alpha = r.at("alpha").get<double>();
  cfg.radio.g0_db = r.at("g0_db").get<double>();
  cfg.radio.d0_m = r.at("d0_m").get<double>();

  p.num_distributions = j.at("num_distributions").get<int>();
  for (const auto& d : j.at("distributions"))
    p.distributions.push_back({d.at("id").get<int>(), d.at("permutation").get<std::vector<int>>()});
  p.class_means = j.at("class_means").get<std::vector<std::vector<double>>>();
  p.edge_assignment = j.at("edge_assignment").get<std::vector<int>>();
  for (const auto& e : j.at("clients")) {
    ClientState cl;
    cl.id = e.at("id").get<int>();
    cl.edge = e.at("edge").get<int>();
    cl.dist_id = e.at("dist_id").get<int>();
    cl.data.owner = cl.id;
    cl.data.dist_id = cl.dist_id;
    if (!e.contains("train"))
      throw ConfigError("clients.train", "snapshot was written without data");
    cl.data.train = dataset_from(e.at("train"));
    cl.data.test = dataset_from(e.at("test"));
    const auto& rp = e.at("radio");
    cl.radio.distance_m = rp.at("distance_m").get<double>();
    cl.radio.g0_db = rp.at("g0_db").get<double>();
    cl.radio.d0_m = rp.at("d0_m").get<double>();
    cl.radio.p_tx_w = rp.at("p_tx_w").get<double>();
    cl.radio.f_cpu_hz = rp.at("f_cpu_hz").get<double>();
    cl.radio.cycles_per_sample = rp.at("cycles_per_sample").get<double>();
    cl.radio.alpha = rp.at("alpha").get<double>();
    p.clients.push_back(std::move(cl));
  }
  return p;
}

std::string population_hash(const Population& population) {
  const std::string s = population_to_json(population, true).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : s) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace hcfl
