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

#include "hcfl/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"

#include "hcfl/errors.hpp"

namespace hcfl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Reads one JSON object, remembering which keys were consumed so leftovers
// can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  template <typename T>
  void get(const std::string& key, T& dst) {
    if (!has(key)) return;
    try {
      dst = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(field(key), std::string("wrong type (") + e.what() + ")");
    }
  }

  // null stands for +infinity
  void get_unbounded(const std::string& key, double& dst) {
    if (!has(key)) return;
    if (j_.at(key).is_null()) {
      dst = kInf;
      return;
    }
    get(key, dst);
  }

  void get_optional(const std::string& key, std::optional<double>& dst) {
    if (!has(key)) return;
    if (j_.at(key).is_null()) {
      dst.reset();
      return;
    }
    double v = 0.0;
    get(key, v);
    dst = v;
  }

  Section child(const std::string& key) {
    seen_.insert(key);
    static const json empty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : empty, field(key));
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError(field(k), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json unbounded(double v) { return std::isinf(v) ? json(nullptr) : json(v); }

const char* kind_name(ModelKind k) { return k == ModelKind::kMlp ? "mlp" : "logistic"; }

const char* method_name(cluster::BipartitionMethod m) {
  switch (m) {
    case cluster::BipartitionMethod::kExhaustive: return "exhaustive";
    case cluster::BipartitionMethod::kSingleLinkage: return "single_linkage";
    case cluster::BipartitionMethod::kCompleteLinkage: return "complete_linkage";
    case cluster::BipartitionMethod::kAuto: break;
  }
  return "auto";
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s, const char* what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw DomainError(std::string("csv: bad number in column ") + what + ": '" + s + "'");
  return v;
}

int parse_int(const std::string& s, const char* what) {
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size())
    throw DomainError(std::string("csv: bad integer in column ") + what + ": '" + s + "'");
  return static_cast<int>(v);
}

void write_record(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << csv_field(fields[i]);
  out << "\r\n";
}

bool read_record(std::istream& in, std::vector<std::string>& fields) {
  std::string line;
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  fields = csv_split(line);
  return true;
}

std::string join_ids(const std::vector<int>& ids, char sep) {
  std::string s;
  for (std::size_t i = 0; i < ids.size(); ++i) s += (i ? std::string(1, sep) : "") + std::to_string(ids[i]);
  return s;
}

void check_range(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field, what);
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  return f;
}

}  // namespace

void resolve_config(ExperimentConfig& cfg) {
  cfg.sim.seed = cfg.population.seed;
  cfg.population.batch_size = cfg.sim.train.batch_size;
  cfg.sim.model.input_dim = cfg.population.feature_dim;
  cfg.sim.model.classes = cfg.population.classes;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  Section root(j, "");
  root.get("unsafe", cfg.unsafe);
  root.get("seed", cfg.population.seed);
  root.get("rounds", cfg.sim.rounds);
  root.get("out_dir", cfg.out_dir);
  root.has("population_hash");  // stamped into resolved configs, ignored on load

  {
    auto p = root.child("population");
    auto& pc = cfg.population;
    p.get("clients", pc.clients);
    p.get("edges", pc.edges);
    p.get("distributions", pc.distributions);
    p.get("feature_dim", pc.feature_dim);
    p.get("classes", pc.classes);
    p.get("samples_min", pc.samples_min);
    p.get("samples_max", pc.samples_max);
    p.get("class_separation", pc.class_separation);
    p.get("noise_std", pc.noise_std);
    p.get("test_fraction", pc.test_fraction);
    p.get("placement", pc.placement);
    p.finish();
  }
  {
    auto r = root.child("radio");
    auto& rr = cfg.population.radio;
    auto& rc = cfg.sim.radio;
    r.get("distance_min_m", rr.distance_min_m);
    r.get("distance_max_m", rr.distance_max_m);
    r.get("power_min_dbm", rr.power_min_dbm);
    r.get("power_max_dbm", rr.power_max_dbm);
    r.get("cpu_min_hz", rr.cpu_min_hz);
    r.get("cpu_max_hz", rr.cpu_max_hz);
    r.get("cycles_per_sample", rr.cycles_per_sample);
    r.get("alpha", rr.alpha);
    r.get("g0_db", rr.g0_db);
    r.get("d0_m", rr.d0_m);
    r.get("bandwidth_hz", rc.bandwidth_hz);
    r.get("noise_w", rc.noise_w);
    r.get("edge_rate_bps", rc.edge_rate_bps);
    r.get("edge_power_w", rc.edge_power_w);
    r.get("fading", rc.fading);
    r.finish();
  }
  {
    auto m = root.child("model");
    std::string kind = kind_name(cfg.sim.model.kind);
    m.get("kind", kind);
    if (kind == "logistic")
      cfg.sim.model.kind = ModelKind::kLogistic;
    else if (kind == "mlp")
      cfg.sim.model.kind = ModelKind::kMlp;
    else
      throw ConfigError(m.field("kind"), "expected 'logistic' or 'mlp'");
    m.get("hidden", cfg.sim.model.hidden);
    m.finish();
  }
  {
    auto t = root.child("training");
    t.get("epochs", cfg.sim.train.epochs);
    t.get("batch_size", cfg.sim.train.batch_size);
    t.get("learning_rate", cfg.sim.train.learning_rate);
    t.finish();
  }
  {
    auto c = root.child("clustering");
    auto& cc = cfg.sim.clustering;
    c.get_optional("eps1", cc.eps1);
    c.get_optional("eps2", cc.eps2);
    c.get("eps1_factor", cc.eps1_factor);
    c.get("eps2_factor", cc.eps2_factor);
    c.get("cloud_threshold", cc.cloud_threshold);
    c.get("cloud_reclustering", cc.cloud_reclustering);
    c.get("exhaustive_limit", cc.exhaustive_limit);
    std::string method = method_name(cc.method);
    c.get("method", method);
    if (method == "auto")
      cc.method = cluster::BipartitionMethod::kAuto;
    else if (method == "exhaustive")
      cc.method = cluster::BipartitionMethod::kExhaustive;
    else if (method == "single_linkage")
      cc.method = cluster::BipartitionMethod::kSingleLinkage;
    else if (method == "complete_linkage")
      cc.method = cluster::BipartitionMethod::kCompleteLinkage;
    else
      throw ConfigError(c.field("method"), "unknown bipartition method '" + method + "'");
    c.finish();
  }
  {
    auto s = root.child("scheduling");
    auto& sc = cfg.sim.scheduling;
    s.get("availability", sc.availability);
    s.get("baseline_fraction", sc.baseline_fraction);
    std::string mode = sc.deadline_mode == DeadlineMode::kFixed ? "fixed" : "adaptive";
    s.get("deadline_mode", mode);
    if (mode == "adaptive")
      sc.deadline_mode = DeadlineMode::kAdaptive;
    else if (mode == "fixed")
      sc.deadline_mode = DeadlineMode::kFixed;
    else
      throw ConfigError(s.field("deadline_mode"), "expected 'adaptive' or 'fixed'");
    s.get_unbounded("deadline_s", sc.deadline_s);
    s.get("deadline_percentile", sc.deadline_percentile);
    s.get("deadline_slack", sc.deadline_slack);
    s.finish();
  }
  {
    auto s = root.child("scheme");
    s.get("name", cfg.scheme);
    s.get("r_agg", cfg.r_agg);
    s.get_unbounded("t_budget", cfg.t_budget);
    s.get("sweep", cfg.sweep);
    s.finish();
  }
  root.finish();
  resolve_config(cfg);
  validate_config(cfg);
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config", "cannot open " + path.string());
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("parse error: ") + e.what());
  }
  return config_from_json(j);
}

json config_to_json(const ExperimentConfig& cfg) {
  const auto& pc = cfg.population;
  const auto& rr = pc.radio;
  const auto& rc = cfg.sim.radio;
  const auto& cc = cfg.sim.clustering;
  const auto& sc = cfg.sim.scheduling;
  json j;
  j["unsafe"] = cfg.unsafe;
  j["seed"] = pc.seed;
  j["rounds"] = cfg.sim.rounds;
  j["out_dir"] = cfg.out_dir;
  j["population"] = {{"clients", pc.clients},
                     {"edges", pc.edges},
                     {"distributions", pc.distributions},
                     {"feature_dim", pc.feature_dim},
                     {"classes", pc.classes},
                     {"samples_min", pc.samples_min},
                     {"samples_max", pc.samples_max},
                     {"class_separation", pc.class_separation},
                     {"noise_std", pc.noise_std},
                     {"test_fraction", pc.test_fraction},
                     {"placement", pc.placement}};
  j["radio"] = {{"distance_min_m", rr.distance_min_m}, {"distance_max_m", rr.distance_max_m},
                {"power_min_dbm", rr.power_min_dbm},   {"power_max_dbm", rr.power_max_dbm},
                {"cpu_min_hz", rr.cpu_min_hz},         {"cpu_max_hz", rr.cpu_max_hz},
                {"cycles_per_sample", rr.cycles_per_sample}, {"alpha", rr.alpha},
                {"g0_db", rr.g0_db},                   {"d0_m", rr.d0_m},
                {"bandwidth_hz", rc.bandwidth_hz},     {"noise_w", rc.noise_w},
                {"edge_rate_bps", rc.edge_rate_bps},   {"edge_power_w", rc.edge_power_w},
                {"fading", rc.fading}};
  j["model"] = {{"kind", kind_name(cfg.sim.model.kind)}, {"hidden", cfg.sim.model.hidden}};
  j["training"] = {{"epochs", cfg.sim.train.epochs},
                   {"batch_size", cfg.sim.train.batch_size},
                   {"learning_rate", cfg.sim.train.learning_rate}};
  j["clustering"] = {{"eps1", cc.eps1 ? json(*cc.eps1) : json(nullptr)},
                     {"eps2", cc.eps2 ? json(*cc.eps2) : json(nullptr)},
                     {"eps1_factor", cc.eps1_factor},
                     {"eps2_factor", cc.eps2_factor},
                     {"cloud_threshold", cc.cloud_threshold},
                     {"cloud_reclustering", cc.cloud_reclustering},
                     {"exhaustive_limit", cc.exhaustive_limit},
                     {"method", method_name(cc.method)}};
  j["scheduling"] = {{"availability", sc.availability},
                     {"baseline_fraction", sc.baseline_fraction},
                     {"deadline_mode", sc.deadline_mode == DeadlineMode::kFixed ? "fixed" : "adaptive"},
                     {"deadline_s", unbounded(sc.deadline_s)},
                     {"deadline_percentile", sc.deadline_percentile},
                     {"deadline_slack", sc.deadline_slack}};
  j["scheme"] = {{"name", cfg.scheme},
                 {"r_agg", cfg.r_agg},
                 {"t_budget", unbounded(cfg.t_budget)},
                 {"sweep", cfg.sweep}};
  return j;
}

void validate_config(const ExperimentConfig& cfg) {
  const auto& pc = cfg.population;
  const auto& rr = pc.radio;
  const auto& rc = cfg.sim.radio;
  const auto& tr = cfg.sim.train;
  const auto& cc = cfg.sim.clustering;
  const auto& sc = cfg.sim.scheduling;

  check_range(pc.edges >= 1, "population.edges", "must be >= 1");
  check_range(pc.clients >= pc.edges, "population.clients", "must be >= population.edges");
  check_range(pc.distributions >= 1, "population.distributions", "must be >= 1");
  check_range(pc.feature_dim >= 1, "population.feature_dim", "must be >= 1");
  check_range(pc.classes >= 2, "population.classes", "must be >= 2");
  check_range(pc.samples_min <= pc.samples_max, "population.samples_min", "must be <= samples_max");
  check_range(pc.samples_min >= static_cast<std::size_t>(std::max(1, static_cast<int>(tr.batch_size))),
              "population.samples_min", "must be >= training.batch_size");
  check_range(pc.test_fraction > 0.0 && pc.test_fraction < 1.0, "population.test_fraction",
              "must be in (0, 1)");
  check_range(pc.noise_std >= 0.0, "population.noise_std", "must be >= 0");
  check_range(pc.class_separation > 0.0, "population.class_separation", "must be > 0");
  check_range(cfg.sim.rounds >= 1, "rounds", "must be >= 1");
  check_range(tr.epochs >= 1, "training.epochs", "must be >= 1");
  check_range(tr.batch_size >= 1, "training.batch_size", "must be >= 1");
  check_range(tr.learning_rate > 0.0, "training.learning_rate", "must be > 0");
  check_range(cfg.sim.model.hidden >= 1, "model.hidden", "must be >= 1");
  check_range(rr.distance_min_m > 0.0 && rr.distance_min_m <= rr.distance_max_m,
              "radio.distance_min_m", "must be in (0, distance_max_m]");
  check_range(rr.power_min_dbm <= rr.power_max_dbm, "radio.power_min_dbm", "must be <= power_max_dbm");
  check_range(rr.cpu_min_hz > 0.0 && rr.cpu_min_hz <= rr.cpu_max_hz, "radio.cpu_min_hz",
              "must be in (0, cpu_max_hz]");
  check_range(rr.cycles_per_sample > 0.0, "radio.cycles_per_sample", "must be > 0");
  check_range(rr.alpha > 0.0, "radio.alpha", "must be > 0");
  check_range(rr.d0_m > 0.0, "radio.d0_m", "must be > 0");
  check_range(rc.bandwidth_hz > 0.0, "radio.bandwidth_hz", "must be > 0");
  check_range(rc.noise_w > 0.0, "radio.noise_w", "must be > 0");
  check_range(rc.edge_rate_bps > 0.0, "radio.edge_rate_bps", "must be > 0");
  check_range(rc.edge_power_w >= 0.0, "radio.edge_power_w", "must be >= 0");
  check_range(cc.eps1_factor > 0.0, "clustering.eps1_factor", "must be > 0");
  check_range(cc.eps2_factor > 0.0, "clustering.eps2_factor", "must be > 0");
  check_range(!cc.eps1 || *cc.eps1 > 0.0, "clustering.eps1", "must be > 0");
  check_range(!cc.eps2 || *cc.eps2 > 0.0, "clustering.eps2", "must be > 0");
  check_range(cc.cloud_threshold >= -1.0 && cc.cloud_threshold <= 1.0, "clustering.cloud_threshold",
              "must be in [-1, 1]");
  check_range(cc.exhaustive_limit >= 2 && cc.exhaustive_limit <= 20, "clustering.exhaustive_limit",
              "must be in [2, 20]");
  check_range(sc.availability > 0.0 && sc.availability <= 1.0, "scheduling.availability",
              "must be in (0, 1]");
  check_range(sc.baseline_fraction > 0.0 && sc.baseline_fraction <= 1.0,
              "scheduling.baseline_fraction", "must be in (0, 1]");
  check_range(sc.deadline_percentile > 0.0 && sc.deadline_percentile <= 100.0,
              "scheduling.deadline_percentile", "must be in (0, 100]");
  check_range(sc.deadline_slack > 0.0, "scheduling.deadline_slack", "must be > 0");
  check_range(sc.deadline_s > 0.0, "scheduling.deadline_s", "must be > 0");
  check_range(cfg.r_agg >= 1, "scheme.r_agg", "must be >= 1");
  check_range(cfg.t_budget >= 0.0, "scheme.t_budget", "must be >= 0");
  const auto& names = scheme_names();
  check_range(std::find(names.begin(), names.end(), cfg.scheme) != names.end(), "scheme.name",
              "unknown scheme '" + cfg.scheme + "'");
  for (const auto& s : cfg.sweep)
    check_range(std::find(names.begin(), names.end(), s) != names.end(), "scheme.sweep",
                "unknown scheme '" + s + "'");
  if (!pc.placement.empty()) {
    check_range(pc.placement.size() == static_cast<std::size_t>(pc.clients), "population.placement",
                "needs one edge per client");
    for (int e : pc.placement)
      check_range(e >= 0 && e < pc.edges, "population.placement", "edge id out of range");
  }

  if (cfg.unsafe) return;
  // Simulation parameter table: the scaled sizes may shrink, the physical and
  // training constants must match, drawn quantities must stay in range.
  check_range(pc.clients <= 200, "population.clients", "must be <= 200 (set unsafe to override)");
  check_range(pc.edges <= 3, "population.edges", "must be <= 3 (set unsafe to override)");
  check_range(cfg.sim.rounds <= 200, "rounds", "must be <= 200 (set unsafe to override)");
  check_range(tr.epochs == 10, "training.epochs", "must be 10 (set unsafe to override)");
  check_range(tr.batch_size == 32, "training.batch_size", "must be 32 (set unsafe to override)");
  check_range(tr.learning_rate == 0.01, "training.learning_rate", "must be 0.01 (set unsafe to override)");
  check_range(rc.bandwidth_hz == 10e6, "radio.bandwidth_hz", "must be 1e7 (set unsafe to override)");
  check_range(rc.noise_w == 1e-8, "radio.noise_w", "must be 1e-8 (set unsafe to override)");
  check_range(rr.cycles_per_sample == 20.0, "radio.cycles_per_sample",
              "must be 20 (set unsafe to override)");
  check_range(rr.g0_db == -35.0, "radio.g0_db", "must be -35 (set unsafe to override)");
  check_range(rr.d0_m == 2.0, "radio.d0_m", "must be 2 (set unsafe to override)");
  check_range(rr.power_min_dbm >= -10.0, "radio.power_min_dbm", "must be >= -10 (set unsafe to override)");
  check_range(rr.power_max_dbm <= 20.0, "radio.power_max_dbm", "must be <= 20 (set unsafe to override)");
  check_range(rr.cpu_min_hz >= 1e9, "radio.cpu_min_hz", "must be >= 1e9 (set unsafe to override)");
  check_range(rr.cpu_max_hz <= 9e9, "radio.cpu_max_hz", "must be <= 9e9 (set unsafe to override)");
  check_range(rr.distance_min_m >= 20.0, "radio.distance_min_m", "must be >= 20 (set unsafe to override)");
  check_range(rr.distance_max_m <= 100.0, "radio.distance_max_m",
              "must be <= 100 (set unsafe to override)");
}

MetricsRow to_row(const RoundMetrics& m) {
  MetricsRow r;
  r.round = m.round;
  r.t_round = m.t_round;
  r.e_round = m.e_round;
  r.cumulative_time = m.cumulative_time;
  r.cumulative_energy = m.cumulative_energy;
  r.selected = m.selected;
  r.participants = m.participants;
  r.dropped = m.dropped;
  r.splits = m.splits;
  r.cloud_aggregation = m.cloud_aggregation ? 1 : 0;
  for (int c : m.clusters_per_edge) r.clusters_total += c;
  r.clusters_per_edge = join_ids(m.clusters_per_edge, ';');
  r.stopped_clusters = m.stopped_clusters;
  r.acc_min = m.acc_min;
  r.acc_mean = m.acc_mean;
  r.acc_max = m.acc_max;
  r.partition = m.partition;
  return r;
}

const std::vector<std::string>& metrics_columns() {
  static const std::vector<std::string> cols{
      "round",       "t_round",   "e_round",          "cumulative_time",   "cumulative_energy",
      "selected",    "participants", "dropped",       "splits",            "cloud_aggregation",
      "clusters_total", "clusters_per_edge", "stopped_clusters", "acc_min", "acc_mean",
      "acc_max",     "partition"};
  return cols;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          fields.back() += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  if (quoted) throw DomainError("csv: unterminated quoted field");
  return fields;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  write_record(out, metrics_columns());
  for (const auto& r : rows)
    write_record(out, {std::to_string(r.round), fmt(r.t_round), fmt(r.e_round),
                       fmt(r.cumulative_time), fmt(r.cumulative_energy), std::to_string(r.selected),
                       std::to_string(r.participants), std::to_string(r.dropped),
                       std::to_string(r.splits), std::to_string(r.cloud_aggregation),
                       std::to_string(r.clusters_total), r.clusters_per_edge,
                       std::to_string(r.stopped_clusters), fmt(r.acc_min), fmt(r.acc_mean),
                       fmt(r.acc_max), r.partition});
}

std::vector<MetricsRow> read_metrics_csv(std::istream& in) {
  std::vector<std::string> f;
  if (!read_record(in, f) || f != metrics_columns())
    throw DomainError("metrics.csv: unexpected header");
  std::vector<MetricsRow> rows;
  while (read_record(in, f)) {
    if (f.size() == 1 && f[0].empty()) continue;
    if (f.size() != metrics_columns().size()) throw DomainError("metrics.csv: wrong column count");
    MetricsRow r;
    r.round = parse_int(f[0], "round");
    r.t_round = parse_double(f[1], "t_round");
    r.e_round = parse_double(f[2], "e_round");
    r.cumulative_time = parse_double(f[3], "cumulative_time");
    r.cumulative_energy = parse_double(f[4], "cumulative_energy");
    r.selected = parse_int(f[5], "selected");
    r.participants = parse_int(f[6], "participants");
    r.dropped = parse_int(f[7], "dropped");
    r.splits = parse_int(f[8], "splits");
    r.cloud_aggregation = parse_int(f[9], "cloud_aggregation");
    r.clusters_total = parse_int(f[10], "clusters_total");
    r.clusters_per_edge = f[11];
    r.stopped_clusters = parse_int(f[12], "stopped_clusters");
    r.acc_min = parse_double(f[13], "acc_min");
    r.acc_mean = parse_double(f[14], "acc_mean");
    r.acc_max = parse_double(f[15], "acc_max");
    r.partition = f[16];
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_clusters_csv(std::ostream& out, const std::vector<RoundMetrics>& rounds) {
  write_record(out, {"round", "edge", "cluster", "members", "stopped", "participants", "acc_min",
                     "acc_mean", "acc_max", "mean_delta_norm"});
  for (const auto& m : rounds)
    for (const auto& c : m.clusters)
      write_record(out, {std::to_string(m.round), std::to_string(c.edge), std::to_string(c.cluster),
                         join_ids(c.members, '.'), c.stopped ? "1" : "0",
                         std::to_string(c.participants), fmt(c.acc_min), fmt(c.acc_mean),
                         fmt(c.acc_max), fmt(c.mean_delta_norm)});
}

void write_clients_csv(std::ostream& out, const std::vector<RoundMetrics>& rounds) {
  write_record(out, {"round", "client", "edge", "cluster", "selected", "participated", "phase",
                     "delta_norm", "t_total", "e_total", "accuracy"});
  for (const auto& m : rounds)
    for (const auto& c : m.clients)
      write_record(out, {std::to_string(m.round), std::to_string(c.id), std::to_string(c.edge),
                         std::to_string(c.cluster), c.selected ? "1" : "0",
                         c.participated ? "1" : "0", c.phase, fmt(c.delta_norm), fmt(c.t_total),
                         fmt(c.e_total), fmt(c.accuracy)});
}

void write_events_jsonl(std::ostream& out, const std::vector<Event>& events) {
  for (const auto& e : events) out << event_to_json(e).dump() << '\n';
}

std::optional<int> rounds_to_stable_partition(const std::vector<MetricsRow>& rows) {
  if (rows.empty()) return std::nullopt;
  const auto& final_partition = rows.back().partition;
  std::size_t first = rows.size() - 1;
  while (first > 0 && rows[first - 1].partition == final_partition) --first;
  const int held = rows.back().round - rows[first].round + 1;
  if (held < kStabilityWindow) return std::nullopt;
  return rows[first].round;
}

RunRecord load_run(const fs::path& dir) {
  RunRecord rec;
  rec.run = dir.filename().empty() ? dir.parent_path().filename().string() : dir.filename().string();
  std::ifstream cf(dir / "config-resolved.json");
  if (!cf) throw DomainError("missing " + (dir / "config-resolved.json").string());
  const json j = json::parse(cf);
  rec.scheme = j.at("scheme").at("name").get<std::string>();
  rec.population_hash = j.at("population_hash").get<std::string>();
  std::ifstream mf(dir / "metrics.csv", std::ios::binary);
  if (!mf) throw DomainError("missing " + (dir / "metrics.csv").string());
  rec.rows = read_metrics_csv(mf);
  return rec;
}

std::vector<SummaryRow> summarize(const std::vector<RunRecord>& runs) {
  if (runs.empty()) throw DomainError("summarize: no runs");
  for (const auto& r : runs)
    if (r.population_hash != runs.front().population_hash)
      throw DomainError("summarize: population hash mismatch between '" + runs.front().run +
                        "' and '" + r.run + "'");
  const RunRecord* reference = &runs.front();
  for (const auto& r : runs)
    if (r.scheme == "baseline") {
      reference = &r;
      break;
    }
  const double e_ref = reference->rows.empty() ? 0.0 : reference->rows.back().cumulative_energy;

  std::vector<SummaryRow> out;
  for (const auto& r : runs) {
    SummaryRow s;
    s.run = r.run;
    s.scheme = r.scheme;
    s.population_hash = r.population_hash;
    s.rounds = static_cast<int>(r.rows.size());
    if (!r.rows.empty()) {
      const auto& last = r.rows.back();
      s.final_acc_mean = last.acc_mean;
      s.acc_gap = last.acc_max - last.acc_min;
      s.total_energy = last.cumulative_energy;
    }
    s.rounds_to_stable_partition = rounds_to_stable_partition(r.rows);
    for (const auto& row : r.rows) s.cloud_aggregations += row.cloud_aggregation;
    s.energy_savings = e_ref > 0.0 ? 1.0 - s.total_energy / e_ref : 0.0;
    out.push_back(std::move(s));
  }
  return out;
}

namespace {
const std::vector<std::string>& summary_columns() {
  static const std::vector<std::string> cols{
      "run",     "scheme",                     "population_hash", "rounds",
      "final_acc_mean", "acc_gap", "rounds_to_stable_partition", "total_energy",
      "cloud_aggregations", "energy_savings"};
  return cols;
}
}  // namespace

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  write_record(out, summary_columns());
  for (const auto& s : rows)
    write_record(out, {s.run, s.scheme, s.population_hash, std::to_string(s.rounds),
                       fmt(s.final_acc_mean), fmt(s.acc_gap),
                       s.rounds_to_stable_partition ? std::to_string(*s.rounds_to_stable_partition) : "",
                       fmt(s.total_energy), std::to_string(s.cloud_aggregations),
                       fmt(s.energy_savings)});
}

std::vector<SummaryRow> read_summary_csv(std::istream& in) {
  std::vector<std::string> f;
  if (!read_record(in, f) || f != summary_columns()) throw DomainError("summary: unexpected header");
  std::vector<SummaryRow> rows;
  while (read_record(in, f)) {
    if (f.size() == 1 && f[0].empty()) continue;
    if (f.size() != summary_columns().size()) throw DomainError("summary: wrong column count");
    SummaryRow s;
    s.run = f[0];
    s.scheme = f[1];
    s.population_hash = f[2];
    s.rounds = parse_int(f[3], "rounds");
    s.final_acc_mean = parse_double(f[4], "final_acc_mean");
    s.acc_gap = parse_double(f[5], "acc_gap");
    if (!f[6].empty()) s.rounds_to_stable_partition = parse_int(f[6], "rounds_to_stable_partition");
    s.total_energy = parse_double(f[7], "total_energy");
    s.cloud_aggregations = parse_int(f[8], "cloud_aggregations");
    s.energy_savings = parse_double(f[9], "energy_savings");
    rows.push_back(std::move(s));
  }
  return rows;
}

RunOutput run_to_directory(const Population& population, const ExperimentConfig& cfg,
                           const std::string& scheme_name, const fs::path& dir) {
  SchemeConfig scheme = scheme_from_name(scheme_name, cfg.r_agg);
  scheme.t_budget = cfg.t_budget;
  Simulation sim(population, cfg.sim, scheme);
  sim.run();

  RunOutput result;
  result.metrics = sim.metrics();
  result.events = sim.events();
  result.population_hash = population_hash(population);

  fs::create_directories(dir);
  std::vector<MetricsRow> rows;
  for (const auto& m : result.metrics) rows.push_back(to_row(m));
  {
    auto f = open_out(dir / "metrics.csv");
    write_metrics_csv(f, rows);
  }
  {
    auto f = open_out(dir / "clusters.csv");
    write_clusters_csv(f, result.metrics);
  }
  {
    auto f = open_out(dir / "clients.csv");
    write_clients_csv(f, result.metrics);
  }
  {
    auto f = open_out(dir / "events.jsonl");
    write_events_jsonl(f, result.events);
  }
  {
    ExperimentConfig resolved = cfg;
    resolved.scheme = scheme_name;
    json j = config_to_json(resolved);
    j["population_hash"] = result.population_hash;
    auto f = open_out(dir / "config-resolved.json");
    f << j.dump(2) << '\n';
  }
  return result;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hierarchical clustered federated learning simulator"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run one scheme, or every scheme with --sweep");
  std::string config_path;
  std::string scheme;
  int r_agg = 0;
  int rounds = 0;
  std::uint64_t seed = 0;
  std::string out_dir;
  bool sweep = false;
  run->add_option("--config", config_path, "Experiment config (JSON)")->check(CLI::ExistingFile);
  auto* scheme_opt =
      run->add_option("--scheme", scheme, "Scheme to run")->check(CLI::IsMember(scheme_names()));
  auto* r_agg_opt = run->add_option("--r-agg", r_agg, "Cloud aggregation interval (round-based)");
  auto* rounds_opt = run->add_option("--rounds", rounds, "Number of rounds R");
  auto* seed_opt = run->add_option("--seed", seed, "Seed for data, radio and training");
  auto* out_opt = run->add_option("--out", out_dir, "Output directory");
  run->add_flag("--sweep", sweep, "Run all schemes over one shared population");

  auto* summ = app.add_subcommand("summarize", "Compare completed runs over the same population");
  std::vector<std::string> dirs;
  std::string summary_out;
  summ->add_option("dirs", dirs, "Run directories")->required()->check(CLI::ExistingDirectory);
  auto* summary_out_opt = summ->add_option("--out", summary_out, "Write the table here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*summ) {
      if (dirs.size() < 2) {
        err << "summarize: need at least two run directories\n";
        return 2;
      }
      std::vector<RunRecord> runs;
      for (const auto& d : dirs) runs.push_back(load_run(d));
      const auto table = summarize(runs);
      if (*summary_out_opt) {
        auto f = open_out(summary_out);
        write_summary_csv(f, table);
      } else {
        write_summary_csv(out, table);
      }
      return 0;
    }

    ExperimentConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    if (*scheme_opt) cfg.scheme = scheme;
    if (*r_agg_opt) cfg.r_agg = r_agg;
    if (*rounds_opt) cfg.sim.rounds = rounds;
    if (*seed_opt) cfg.population.seed = seed;
    if (*out_opt) cfg.out_dir = out_dir;
    resolve_config(cfg);
    validate_config(cfg);

    const Population pop = generate_population(cfg.population);
    const fs::path root = cfg.out_dir;
    fs::create_directories(root);
    {
      auto f = open_out(root / "population.json");
      f << population_to_json(pop).dump() << '\n';
    }
    if (!sweep) {
      run_to_directory(pop, cfg, cfg.scheme, root);
      out << "wrote " << root.string() << '\n';
      return 0;
    }
    const auto& schemes = cfg.sweep.empty() ? scheme_names() : cfg.sweep;
    std::vector<RunRecord> runs;
    for (const auto& s : schemes) {
      run_to_directory(pop, cfg, s, root / s);
      runs.push_back(load_run(root / s));
      out << "wrote " << (root / s).string() << '\n';
    }
    auto f = open_out(root / "summary.csv");
    write_summary_csv(f, summarize(runs));
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const NumericDivergence& e) {
    err << "numeric failure: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace hcfl
