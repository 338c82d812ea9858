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

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "hcfl/clusterer.hpp"
#include "hcfl/learner.hpp"
#include "hcfl/radio.hpp"
#include "hcfl/scheduler.hpp"
#include "hcfl/synthdata.hpp"

namespace hcfl {

enum class Selection { kGreedy, kRoundRobin, kFair, kRandom };
enum class Aggregation { kRoundBased, kSplitBased };

struct SchemeConfig {
  std::string name = "fg-round";
  Selection selection = Selection::kGreedy;
  Aggregation aggregation = Aggregation::kRoundBased;
  int r_agg = 5;
  double t_budget = std::numeric_limits<double>::infinity();
  bool baseline = false;
  bool hfl_only = false;  // clustering disabled
};

/// One of fg-round, fg-split, frr-round, frr-split, baseline, hfl. The
/// baseline and hfl schemes aggregate at the cloud every round.
SchemeConfig scheme_from_name(const std::string& name, int r_agg);
const std::vector<std::string>& scheme_names();

struct RadioConfig {
  double bandwidth_hz = 10e6;  // W, split equally across edges
  double noise_w = 1e-8;
  double edge_rate_bps = 10e6;  // edge -> cloud backhaul
  double edge_power_w = 1.0;
  bool fading = false;
};

struct ClusteringConfig {
  std::optional<double> eps1;  // absolute overrides
  std::optional<double> eps2;
  double eps1_factor = 0.4;  // x |mean delta| at the edge's first evaluation
  double eps2_factor = 1.2;  // x eps1
  double cloud_threshold = 0.9;
  bool cloud_reclustering = true;
  std::size_t exhaustive_limit = cluster::kExhaustiveLimit;
  cluster::BipartitionMethod method = cluster::BipartitionMethod::kAuto;
};

enum class DeadlineMode { kAdaptive, kFixed };

struct SchedulingConfig {
  double availability = 1.0;       // Bernoulli participation probability
  double baseline_fraction = 1.0;  // share of each edge sampled by the baseline
  DeadlineMode deadline_mode = DeadlineMode::kAdaptive;
  double deadline_s = std::numeric_limits<double>::infinity();  // fixed mode
  double deadline_percentile = 100.0;  // adaptive: percentile of projected t_total
  double deadline_slack = 1.0;
};

struct SimConfig {
  ModelSpec model;
  TrainOptions train;
  RadioConfig radio;
  ClusteringConfig clustering;
  SchedulingConfig scheduling;
  int rounds = 100;
  std::uint64_t seed = 1;
};

struct Cluster {
  int id = 0;
  std::vector<int> members;  // ascending
  ModelParams model;
  bool stopped = false;
  int parent = -1;  // -1 for the edge's root cluster
  int split_round = 0;

  bool is_root() const noexcept { return parent < 0; }
};

struct SplitEvent {
  int round = 0;
  int edge = 0;
  int parent = 0;
  int child1 = 0;
  int child2 = 0;
  std::vector<int> c1;
  std::vector<int> c2;
  double max_cross = 0.0;
  double max_gamma = 0.0;
  double gap = 0.0;
};

struct EdgeState {
  int id = 0;
  std::vector<int> clients;  // N_k, ascending
  std::vector<Cluster> clusters;
  ModelParams edge_model;
  std::vector<SplitEvent> split_events;
  double bandwidth_hz = 0.0;
  double weight = 0.0;  // sum of D_n over N_k
  std::optional<double> eps1;
  std::optional<double> eps2;
  sched::RoundRobinCursors cursors;
  int next_cluster_id = 1;
  std::map<int, std::vector<double>> last_delta;  // most recent delta per client
  std::map<int, std::size_t> samples;  // D_n per client

  double cluster_weight(const Cluster& c) const;

  const Cluster& cluster_of(int client) const;
  Cluster& cluster_of(int client);
};

struct CloudState {
  ModelParams global_model;
  SchemeConfig scheme;
  int rounds_elapsed = 0;
  double cumulative_time = 0.0;
  double cumulative_energy = 0.0;
  bool pending_split = false;
  int aggregation_events = 0;
};

struct Event {
  int round = 0;
  int edge = -1;  // -1: cloud-level
  std::string kind;  // split, stop, cloud_agg, deadline_drop, budget_halt
  nlohmann::json payload;
};

nlohmann::json event_to_json(const Event& e);

/// One trained participant as seen by its edge server.
struct ParticipantUpdate {
  int client = 0;
  std::size_t samples = 0;
  std::vector<double> delta;
  ModelParams trained;
};

struct EdgeRoundResult {
  std::vector<SplitEvent> splits;
  std::vector<Event> events;
  std::map<int, double> cluster_mean_delta_norm;  // clusters that had participants
};

/// Edge post-processing for one round: D_n-weighted aggregation per cluster
/// and for the edge model, then per-cluster split/stop evaluation with at
/// most one committed split per cluster.
EdgeRoundResult aggregate_and_cluster(EdgeState& edge, std::span<const ParticipantUpdate> updates,
                                      int round, const ClusteringConfig& cfg, bool clustering);

struct CloudResult {
  bool aggregated = false;
  std::vector<std::vector<std::pair<int, int>>> merged_groups;  // (edge, cluster)
};

/// Aggregation body shared by both cloud schemes: global = D-weighted mean of
/// edge models; when more than two specialized models exist, split-derived
/// models from different edges whose deltas from the previous global model
/// have cosine >= threshold are grouped and replaced by their weighted mean;
/// root clusters and edge models take the new global model. Links join in
/// descending cosine order and a group never holds two clusters of one edge.
/// Clusters created in `round` are not grouped yet.
CloudResult cloud_aggregate(CloudState& cloud, std::vector<EdgeState>& edges, int round,
                            const ClusteringConfig& cfg, bool clustering);

/// Aggregates when r % R_agg == 0; no-op otherwise.
CloudResult cloud_round_based(CloudState& cloud, std::vector<EdgeState>& edges, int round,
                              const ClusteringConfig& cfg, bool clustering);

/// Aggregates only when an edge committed a split this round (pending flag),
/// then clears the flag.
CloudResult cloud_split_based(CloudState& cloud, std::vector<EdgeState>& edges, int round,
                              const ClusteringConfig& cfg, bool clustering);

enum class BudgetDecision { kContinue, kHalt };

/// Halts when cumulative time plus the projected round time exceeds T_budget.
BudgetDecision enforce_budget(const CloudState& cloud, double projected_round_time);

struct ClusterMetrics {
  int edge = 0;
  int cluster = 0;
  std::vector<int> members;
  bool stopped = false;
  int participants = 0;
  double acc_min = 0.0;
  double acc_mean = 0.0;
  double acc_max = 0.0;
  double mean_delta_norm = 0.0;
};

struct ClientMetrics {
  int id = 0;
  int edge = 0;
  int cluster = 0;
  bool selected = false;
  bool participated = false;
  std::string phase;  // empty when not selected
  double delta_norm = 0.0;
  double t_total = 0.0;
  double e_total = 0.0;
  double accuracy = 0.0;
};

struct RoundMetrics {
  int round = 0;
  double t_round = 0.0;
  double e_round = 0.0;
  double cumulative_time = 0.0;
  double cumulative_energy = 0.0;
  int selected = 0;
  int participants = 0;
  int dropped = 0;
  int splits = 0;
  bool cloud_aggregation = false;
  std::vector<int> clusters_per_edge;
  int stopped_clusters = 0;
  double acc_min = 0.0;
  double acc_mean = 0.0;
  double acc_max = 0.0;
  std::string partition;
  std::vector<ClusterMetrics> clusters;
  std::vector<ClientMetrics> clients;
  std::vector<Event> events;
};

/// Canonical partition string: per edge, clusters as '.'-joined ids sorted
/// by smallest member, joined by '|'; edges joined by ';'.
std::string partition_string(const std::vector<EdgeState>& edges);

/// Hierarchical CFL experiment over a fixed population.
class Simulation {
 public:
  Simulation(const Population& population, SimConfig cfg, SchemeConfig scheme);

  /// Runs one round. Returns false without side effects on the models when
  /// the time budget forbids the round or all R rounds are done.
  bool step();
  std::vector<RoundMetrics> run();

  const std::vector<EdgeState>& edges() const { return edges_; }
  const CloudState& cloud() const { return cloud_; }
  const std::vector<RoundMetrics>& metrics() const { return metrics_; }
  const std::vector<Event>& events() const { return events_; }
  bool halted() const { return halted_; }
  std::size_t model_bits() const { return model_bits_; }

 private:
  struct EdgePlan;

  EdgePlan plan_edge(EdgeState& edge, int round);
  double cloud_upload_bits(const EdgeState& edge, bool conservative) const;
  RoundMetrics collect_metrics(int round) const;

  const Population& pop_;
  SimConfig cfg_;
  SchemeConfig scheme_;
  std::vector<EdgeState> edges_;
  CloudState cloud_;
  std::vector<double> latest_t_total_;
  std::vector<RoundMetrics> metrics_;
  std::vector<Event> events_;
  std::size_t model_bits_ = 0;
  bool halted_ = false;
  // per-round scratch used by metrics
  std::vector<ClientMetrics> round_clients_;
  std::map<std::pair<int, int>, double> round_cluster_norms_;
  std::map<std::pair<int, int>, int> round_cluster_participants_;
};

std::vector<RoundMetrics> run_experiment(const Population& population, const SimConfig& cfg,
                                         const SchemeConfig& scheme);

}  // namespace hcfl
