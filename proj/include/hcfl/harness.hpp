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

#pragma once

#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "hcfl/orchestrator.hpp"
#include "hcfl/synthdata.hpp"

namespace hcfl {

struct ExperimentConfig {
  PopulationConfig population;
  SimConfig sim;
  std::string scheme = "fg-split";
  int r_agg = 5;
  double t_budget = std::numeric_limits<double>::infinity();
  std::vector<std::string> sweep;  // schemes run by --sweep; empty means all
  bool unsafe = false;             // skip the simulation-parameter range checks
  std::string out_dir = "out";
};

/// Parses the key-value tree. Unknown keys and out-of-range values throw
/// ConfigError naming the offending field.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Every field materialized, suitable for re-loading.
nlohmann::json config_to_json(const ExperimentConfig& cfg);
void validate_config(const ExperimentConfig& cfg);

/// Copies the shared seed and batch size into the sub-configs.
void resolve_config(ExperimentConfig& cfg);

/// Top-level per-round columns of metrics.csv.
struct MetricsRow {
  int round = 0;
  double t_round = 0.0;
  double e_round = 0.0;
  double cumulative_time = 0.0;
  double cumulative_energy = 0.0;
  int selected = 0;
  int participants = 0;
  int dropped = 0;
  int splits = 0;
  int cloud_aggregation = 0;
  int clusters_total = 0;
  std::string clusters_per_edge;  // ';'-joined
  int stopped_clusters = 0;
  double acc_min = 0.0;
  double acc_mean = 0.0;
  double acc_max = 0.0;
  std::string partition;

  bool operator==(const MetricsRow&) const = default;
};

MetricsRow to_row(const RoundMetrics& m);

const std::vector<std::string>& metrics_columns();
void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics_csv(std::istream& in);
void write_clusters_csv(std::ostream& out, const std::vector<RoundMetrics>& rounds);
void write_clients_csv(std::ostream& out, const std::vector<RoundMetrics>& rounds);
void write_events_jsonl(std::ostream& out, const std::vector<Event>& events);

/// RFC 4180 field quoting and record splitting.
std::string csv_field(const std::string& s);
std::vector<std::string> csv_split(const std::string& line);

/// Rounds the final partition must survive, counting the last round, before
/// the run counts as stabilized.
inline constexpr int kStabilityWindow = 10;

/// First round of the final partition, or nullopt when it changed within
/// the last kStabilityWindow rounds (or the run is shorter than that).
std::optional<int> rounds_to_stable_partition(const std::vector<MetricsRow>& rows);

struct SummaryRow {
  std::string run;
  std::string scheme;
  std::string population_hash;
  int rounds = 0;
  double final_acc_mean = 0.0;
  double acc_gap = 0.0;  // max - min client accuracy in the final round
  std::optional<int> rounds_to_stable_partition;
  double total_energy = 0.0;
  int cloud_aggregations = 0;
  double energy_savings = 0.0;  // 1 - E / E_reference

  bool operator==(const SummaryRow&) const = default;
};

struct RunRecord {
  std::string run;
  std::string scheme;
  std::string population_hash;
  std::vector<MetricsRow> rows;
};

RunRecord load_run(const std::filesystem::path& dir);

/// Savings are relative to the run named "baseline" when present, else to
/// the first run. Throws DomainError on mismatched population hashes.
std::vector<SummaryRow> summarize(const std::vector<RunRecord>& runs);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);
std::vector<SummaryRow> read_summary_csv(std::istream& in);

struct RunOutput {
  std::vector<RoundMetrics> metrics;
  std::vector<Event> events;
  std::string population_hash;
};

/// Runs one scheme and writes metrics.csv, clusters.csv, clients.csv,
/// events.jsonl and config-resolved.json into `dir`.
RunOutput run_to_directory(const Population& population, const ExperimentConfig& cfg,
                           const std::string& scheme, const std::filesystem::path& dir);

/// Command-line entry point. Exit codes: 0 ok, 1 runtime failure, 2 usage or
/// configuration error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hcfl
