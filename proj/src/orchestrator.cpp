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

#include "hcfl/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <utility>

#include "hcfl/errors.hpp"

namespace hcfl {

namespace {

ModelParams weighted_average(std::span<const ModelParams* const> models,
                             std::span<const double> weights) {
  ModelParams out = *models.front();
  std::fill(out.values.begin(), out.values.end(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < models.size(); ++i) {
    check_compatible(out, *models[i]);
    total += weights[i];
    for (std::size_t j = 0; j < out.size(); ++j) out.values[j] += weights[i] * models[i]->values[j];
  }
  if (!(total > 0.0)) throw DomainError("weighted_average: zero total weight");
  for (double& v : out.values) v /= total;
  return out;
}

std::vector<double> plain_mean(std::span<const cluster::DeltaView> rows,
                               std::span<const std::size_t> pick) {
  std::vector<double> m(rows.front().size(), 0.0);
  for (auto i : pick)
    for (std::size_t j = 0; j < m.size(); ++j) m[j] += rows[i][j];
  for (double& v : m) v /= static_cast<double>(pick.size());
  return m;
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

double percentile(std::vector<double> values, double pct) {
  std::sort(values.begin(), values.end());
  if (pct >= 100.0) return values.back();
  const double rank = std::ceil(pct / 100.0 * static_cast<double>(values.size()));
  const auto idx = static_cast<std::size_t>(std::max(1.0, rank)) - 1;
  return values[std::min(idx, values.size() - 1)];
}

nlohmann::json split_json(const SplitEvent& s) {
  return {{"parent", s.parent}, {"children", {s.child1, s.child2}}, {"c1", s.c1},
          {"c2", s.c2},         {"max_cross", s.max_cross},         {"max_gamma", s.max_gamma},
          {"gap", s.gap}};
}

}  // namespace

SchemeConfig scheme_from_name(const std::string& name, int r_agg) {
  SchemeConfig s;
  s.name = name;
  s.r_agg = r_agg;
  if (name == "fg-round") {
  } else if (name == "fg-split") {
    s.aggregation = Aggregation::kSplitBased;
  } else if (name == "frr-round") {
    s.selection = Selection::kRoundRobin;
  } else if (name == "frr-split") {
    s.selection = Selection::kRoundRobin;
    s.aggregation = Aggregation::kSplitBased;
  } else if (name == "baseline") {
    s.selection = Selection::kRandom;
    s.baseline = true;
    s.r_agg = 1;
  } else if (name == "hfl") {
    s.selection = Selection::kFair;
    s.hfl_only = true;
    s.r_agg = 1;
  } else {
    throw ConfigError("scheme", "unknown scheme '" + name + "'");
  }
  if (s.aggregation == Aggregation::kRoundBased && s.r_agg < 1)
    throw ConfigError("r_agg", "must be >= 1");
  return s;
}

const std::vector<std::string>& scheme_names() {
  static const std::vector<std::string> names{"fg-round",  "fg-split", "frr-round",
                                              "frr-split", "baseline", "hfl"};
  return names;
}

nlohmann::json event_to_json(const Event& e) {
  nlohmann::json j = {{"round", e.round}, {"event", e.kind}, {"payload", e.payload}};
  j["edge"] = e.edge < 0 ? nlohmann::json(nullptr) : nlohmann::json(e.edge);
  return j;
}

const Cluster& EdgeState::cluster_of(int client) const {
  for (const auto& c : clusters)
    if (std::binary_search(c.members.begin(), c.members.end(), client)) return c;
  throw DomainError("client " + std::to_string(client) + " not in edge " + std::to_string(id));
}

Cluster& EdgeState::cluster_of(int client) {
  return const_cast<Cluster&>(std::as_const(*this).cluster_of(client));
}

EdgeRoundResult aggregate_and_cluster(EdgeState& edge, std::span<const ParticipantUpdate> updates,
                                      int round, const ClusteringConfig& cfg, bool clustering) {
  EdgeRoundResult res;
  if (updates.empty()) return res;

  std::vector<const ParticipantUpdate*> ordered;
  for (const auto& u : updates) ordered.push_back(&u);
  std::sort(ordered.begin(), ordered.end(),
            [](const auto* a, const auto* b) { return a->client < b->client; });

  {
    std::vector<const ModelParams*> models;
    std::vector<double> w;
    for (const auto* u : ordered) {
      models.push_back(&u->trained);
      w.push_back(static_cast<double>(u->samples));
    }
    edge.edge_model = weighted_average(models, w);
  }

  if (clustering && !edge.eps1) {
    std::vector<double> mean(ordered.front()->delta.size(), 0.0);
    double total = 0.0;
    for (const auto* u : ordered) {
      total += static_cast<double>(u->samples);
      for (std::size_t j = 0; j < mean.size(); ++j)
        mean[j] += static_cast<double>(u->samples) * u->delta[j];
    }
    for (double& m : mean) m /= total;
    edge.eps1 = cfg.eps1 ? *cfg.eps1 : cfg.eps1_factor * l2_norm(mean);
    edge.eps2 = cfg.eps2 ? *cfg.eps2 : cfg.eps2_factor * *edge.eps1;
  }

  std::vector<Cluster> next;
  for (auto& c : edge.clusters) {
    std::vector<const ParticipantUpdate*> part;
    for (const auto* u : ordered)
      if (std::binary_search(c.members.begin(), c.members.end(), u->client)) part.push_back(u);
    if (part.empty()) {
      next.push_back(std::move(c));
      continue;
    }

    std::vector<const ModelParams*> models;
    std::vector<double> weights;
    std::vector<cluster::DeltaView> deltas;
    for (const auto* u : part) {
      models.push_back(&u->trained);
      weights.push_back(static_cast<double>(u->samples));
      deltas.emplace_back(u->delta);
      edge.last_delta[u->client] = u->delta;
    }
    c.model = weighted_average(models, weights);

    const auto check = cluster::check_split(deltas, weights, edge.eps1.value_or(0.0),
                                            edge.eps2.value_or(0.0));
    res.cluster_mean_delta_norm[c.id] = check.mean_norm;
    if (!clustering) {
      next.push_back(std::move(c));
      continue;
    }

    if (check.decision == cluster::SplitDecision::kSplit) {
      std::vector<cluster::DeltaView> rows;
      std::vector<int> ids;
      for (std::size_t i = 0; i < part.size(); ++i) {
        if (l2_norm(deltas[i]) == 0.0) continue;
        rows.push_back(deltas[i]);
        ids.push_back(part[i]->client);
      }
      if (rows.size() >= 2) {
        const auto sim = cluster::similarity_matrix(rows, ids);
        const auto bp = cluster::bipartition(sim, cfg.method, cfg.exhaustive_limit);
        std::optional<cluster::GammaCheck> gamma;
        try {
          gamma = cluster::gamma_check(rows, bp, sim);
        } catch (const DegenerateDelta&) {
        }
        if (gamma && gamma->accepted) {
          std::vector<int> side1 = bp.c1;
          std::vector<int> side2 = bp.c2;
          const auto mean1 = plain_mean(rows, bp.side1);
          const auto mean2 = plain_mean(rows, bp.side2);
          // members without a usable delta this round join the side their
          // latest delta points to, else the larger side
          for (int id : c.members) {
            if (std::binary_search(ids.begin(), ids.end(), id)) continue;
            bool to_first = side1.size() >= side2.size();
            const auto it = edge.last_delta.find(id);
            if (it != edge.last_delta.end() && l2_norm(it->second) > 0.0)
              to_first = cluster::cosine_similarity(it->second, mean1) >=
                         cluster::cosine_similarity(it->second, mean2);
            (to_first ? side1 : side2).push_back(id);
          }
          std::sort(side1.begin(), side1.end());
          std::sort(side2.begin(), side2.end());

          std::vector<int> group(sim.size(), 1);
          for (auto i : bp.side1) group[i] = 0;
          const auto sep = cluster::cross_and_intra(sim, group);

          SplitEvent ev;
          ev.round = round;
          ev.edge = edge.id;
          ev.parent = c.id;
          ev.child1 = edge.next_cluster_id++;
          ev.child2 = edge.next_cluster_id++;
          ev.c1 = side1;
          ev.c2 = side2;
          ev.max_cross = gamma->max_cross;
          ev.max_gamma = gamma->max_gamma;
          ev.gap = sep.gap;
          for (auto [cid, members] : {std::pair{ev.child1, side1}, std::pair{ev.child2, side2}}) {
            Cluster child;
            child.id = cid;
            child.members = members;
            child.model = c.model;
            child.parent = c.id;
            child.split_round = round;
            next.push_back(std::move(child));
          }
          edge.cursors.erase(c.id);
          res.events.push_back({round, edge.id, "split", split_json(ev)});
          res.splits.push_back(ev);
          edge.split_events.push_back(std::move(ev));
          continue;
        }
      }
    }

    const bool stop = check.decision == cluster::SplitDecision::kStop;
    if (stop && !c.stopped)
      res.events.push_back({round, edge.id, "stop",
                            {{"cluster", c.id}, {"members", c.members}, {"max_norm", check.max_norm}}});
    c.stopped = stop;
    next.push_back(std::move(c));
  }
  edge.clusters = std::move(next);
  return res;
}

CloudResult cloud_aggregate(CloudState& cloud, std::vector<EdgeState>& edges, int round,
                            const ClusteringConfig& cfg, bool clustering) {
  CloudResult res;
  res.aggregated = true;
  const ModelParams previous = cloud.global_model;

  std::vector<const ModelParams*> models;
  std::vector<double> weights;
  for (const auto& e : edges) {
    models.push_back(&e.edge_model);
    weights.push_back(e.weight);
  }
  const ModelParams global = weighted_average(models, weights);

  std::size_t total_models = 0;
  for (const auto& e : edges) total_models += e.clusters.size();

  if (clustering && cfg.cloud_reclustering && total_models > 2) {
    struct Ref { std::size_t e, c; std::vector<double> delta; double weight; };
    std::vector<Ref> refs;
    for (std::size_t e = 0; e < edges.size(); ++e)
      for (std::size_t c = 0; c < edges[e].clusters.size(); ++c) {
        const auto& cl = edges[e].clusters[c];
        // children born this round still hold their parent's model
        if (cl.is_root() || cl.split_round == round) continue;
        Ref r{e, c, cl.model.values, edges[e].cluster_weight(cl)};
        for (std::size_t j = 0; j < r.delta.size(); ++j) r.delta[j] -= previous.values[j];
        if (l2_norm(r.delta) == 0.0) continue;
        refs.push_back(std::move(r));
      }

    struct Pair { double cs; std::size_t a, b; };
    std::vector<Pair> pairs;
    for (std::size_t a = 0; a < refs.size(); ++a)
      for (std::size_t b = a + 1; b < refs.size(); ++b) {
        if (refs[a].e == refs[b].e) continue;
        const double cs = cluster::cosine_similarity(refs[a].delta, refs[b].delta);
        if (cs >= cfg.cloud_threshold) pairs.push_back({cs, a, b});
      }
    std::stable_sort(pairs.begin(), pairs.end(),
                     [](const Pair& x, const Pair& y) { return x.cs > y.cs; });

    // strongest links first; a group never holds two clusters of one edge
    UnionFind uf(refs.size());
    std::vector<std::set<std::size_t>> edges_in(refs.size());
    for (std::size_t i = 0; i < refs.size(); ++i) edges_in[i] = {refs[i].e};
    for (const auto& p : pairs) {
      const auto ra = uf.find(p.a);
      const auto rb = uf.find(p.b);
      if (ra == rb) continue;
      bool overlap = false;
      for (auto e : edges_in[ra]) overlap = overlap || edges_in[rb].count(e) > 0;
      if (overlap) continue;
      uf.unite(ra, rb);
      const auto root = uf.find(ra);
      edges_in[root].insert(edges_in[ra].begin(), edges_in[ra].end());
      edges_in[root].insert(edges_in[rb].begin(), edges_in[rb].end());
    }

    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < refs.size(); ++i) groups[uf.find(i)].push_back(i);
    for (const auto& group : groups) {
      const auto& idx = group.second;
      if (idx.size() < 2) continue;
      std::vector<const ModelParams*> gm;
      std::vector<double> gw;
      std::vector<std::pair<int, int>> record;
      for (auto i : idx) {
        const auto& cl = edges[refs[i].e].clusters[refs[i].c];
        gm.push_back(&cl.model);
        gw.push_back(refs[i].weight);
        record.emplace_back(edges[refs[i].e].id, cl.id);
      }
      const ModelParams merged = weighted_average(gm, gw);
      for (auto i : idx) edges[refs[i].e].clusters[refs[i].c].model = merged;
      res.merged_groups.push_back(std::move(record));
    }
  }
  for (auto& e : edges) {
    for (auto& c : e.clusters)
      if (c.is_root()) c.model = global;
    e.edge_model = global;
  }
  cloud.global_model = global;
  ++cloud.aggregation_events;
  return res;
}

CloudResult cloud_round_based(CloudState& cloud, std::vector<EdgeState>& edges, int round,
                              const ClusteringConfig& cfg, bool clustering) {
  if (cloud.scheme.r_agg < 1) throw ConfigError("r_agg", "must be >= 1");
  cloud.pending_split = false;
  if (round % cloud.scheme.r_agg != 0) return {};
  return cloud_aggregate(cloud, edges, round, cfg, clustering);
}

CloudResult cloud_split_based(CloudState& cloud, std::vector<EdgeState>& edges, int round,
                              const ClusteringConfig& cfg, bool clustering) {
  if (!cloud.pending_split) return {};
  cloud.pending_split = false;
  return cloud_aggregate(cloud, edges, round, cfg, clustering);
}

BudgetDecision enforce_budget(const CloudState& cloud, double projected_round_time) {
  return cloud.cumulative_time + projected_round_time > cloud.scheme.t_budget
             ? BudgetDecision::kHalt
             : BudgetDecision::kContinue;
}

double EdgeState::cluster_weight(const Cluster& c) const {
  double w = 0.0;
  for (int id : c.members) w += static_cast<double>(samples.at(id));
  return w;
}

std::string partition_string(const std::vector<EdgeState>& edges) {
  std::ostringstream out;
  for (std::size_t k = 0; k < edges.size(); ++k) {
    if (k > 0) out << ';';
    std::vector<std::vector<int>> groups;
    for (const auto& c : edges[k].clusters)
      if (!c.members.empty()) groups.push_back(c.members);
    std::sort(groups.begin(), groups.end());
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (g > 0) out << '|';
      for (std::size_t i = 0; i < groups[g].size(); ++i) out << (i > 0 ? "." : "") << groups[g][i];
    }
  }
  return out.str();
}

struct Simulation::EdgePlan {
  sched::SelectionOutcome selection;
  std::vector<radio::CostLedger> ledgers;  // parallel to selection.selected
  std::vector<bool> dropped;
  double deadline = std::numeric_limits<double>::infinity();
  radio::EdgeRoundCost cost;
};

Simulation::Simulation(const Population& population, SimConfig cfg, SchemeConfig scheme)
    : pop_(population), cfg_(std::move(cfg)), scheme_(std::move(scheme)) {
  if (cfg_.model.input_dim != pop_.config.feature_dim)
    throw ConfigError("model.input_dim", "does not match the population feature dimension");
  if (cfg_.model.classes != pop_.config.classes)
    throw ConfigError("model.classes", "does not match the population class count");
  if (cfg_.rounds < 0) throw ConfigError("rounds", "must be >= 0");
  if (scheme_.aggregation == Aggregation::kRoundBased && scheme_.r_agg < 1)
    throw ConfigError("r_agg", "must be >= 1");
  if (!(cfg_.scheduling.availability > 0.0 && cfg_.scheduling.availability <= 1.0))
    throw ConfigError("scheduling.availability", "must be in (0, 1]");
  if (!(cfg_.scheduling.baseline_fraction > 0.0 && cfg_.scheduling.baseline_fraction <= 1.0))
    throw ConfigError("scheduling.baseline_fraction", "must be in (0, 1]");

  const ModelParams init = init_model(cfg_.model, cfg_.seed);
  model_bits_ = model_size_bits(cfg_.model.parameter_count());
  const int k_edges = pop_.num_edges();
  for (int k = 0; k < k_edges; ++k) {
    EdgeState e;
    e.id = k;
    e.clients = pop_.edge_members(k);
    e.bandwidth_hz = cfg_.radio.bandwidth_hz / k_edges;
    for (int id : e.clients) {
      const auto d = pop_.clients[static_cast<std::size_t>(id)].samples();
      e.samples[id] = d;
      e.weight += static_cast<double>(d);
    }
    Cluster root;
    root.members = e.clients;
    root.model = init;
    e.clusters.push_back(std::move(root));
    e.edge_model = init;
    edges_.push_back(std::move(e));
  }
  cloud_.global_model = init;
  cloud_.scheme = scheme_;

  // optimistic first estimate: the whole edge band and the static gain
  latest_t_total_.assign(pop_.clients.size(), 0.0);
  for (const auto& c : pop_.clients)
    latest_t_total_[static_cast<std::size_t>(c.id)] =
        radio::client_round_cost(c.radio, radio::channel_gain(c.radio), cfg_.train.epochs,
                                 static_cast<double>(c.samples()), static_cast<double>(model_bits_),
                                 1.0, cfg_.radio.bandwidth_hz / k_edges, cfg_.radio.noise_w)
            .t_total;
}

double Simulation::cloud_upload_bits(const EdgeState& edge, bool conservative) const {
  const double z = static_cast<double>(model_bits_);
  if (scheme_.hfl_only) return z;
  double specialized = static_cast<double>(edge.clusters.size());
  if (conservative) specialized *= 2.0;
  return (1.0 + specialized) * z;
}

Simulation::EdgePlan Simulation::plan_edge(EdgeState& edge, int round) {
  EdgePlan plan;
  sched::Availability avail(pop_.clients.size(), false);
  for (int id : edge.clients) {
    if (cfg_.scheduling.availability >= 1.0) {
      avail[static_cast<std::size_t>(id)] = true;
    } else {
      auto rng = make_stream(cfg_.seed, "avail", static_cast<std::uint64_t>(id),
                             static_cast<std::uint64_t>(round));
      avail[static_cast<std::size_t>(id)] =
          std::bernoulli_distribution(cfg_.scheduling.availability)(rng);
    }
  }

  std::vector<sched::ClusterView> views;
  for (const auto& c : edge.clusters) views.push_back({c.id, c.members, c.stopped});

  sched::ComposeInputs in;
  Rng baseline_rng = make_stream(cfg_.seed, "baseline", static_cast<std::uint64_t>(edge.id),
                                 static_cast<std::uint64_t>(round));
  if (scheme_.baseline || scheme_.selection == Selection::kRandom) {
    in.policy = sched::Policy::kRandomBaseline;
    in.budget = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(cfg_.scheduling.baseline_fraction *
                                                 static_cast<double>(edge.clients.size()))));
    in.rng = &baseline_rng;
  } else if (scheme_.hfl_only || scheme_.selection == Selection::kFair) {
    in.policy = sched::Policy::kFairOnly;
  } else if (scheme_.selection == Selection::kGreedy) {
    in.policy = sched::Policy::kGreedy;
    in.t_total = latest_t_total_;
  } else {
    in.policy = sched::Policy::kRoundRobin;
    in.cursors = &edge.cursors;
  }
  plan.selection = sched::compose_selection(views, avail, in);

  const auto& sel = plan.selection.selected;
  if (sel.empty()) return plan;
  const double beta = 1.0 / static_cast<double>(sel.size());
  for (int id : sel) {
    const auto& c = pop_.clients[static_cast<std::size_t>(id)];
    double gain = radio::channel_gain(c.radio);
    if (cfg_.radio.fading) {
      auto rng = make_stream(cfg_.seed, "fading", static_cast<std::uint64_t>(id),
                             static_cast<std::uint64_t>(round));
      gain *= radio::fading_draw(rng);
    }
    plan.ledgers.push_back(radio::client_round_cost(
        c.radio, gain, cfg_.train.epochs, static_cast<double>(c.samples()),
        static_cast<double>(model_bits_), beta, edge.bandwidth_hz, cfg_.radio.noise_w));
  }

  if (cfg_.scheduling.deadline_mode == DeadlineMode::kFixed) {
    plan.deadline = cfg_.scheduling.deadline_s;
  } else {
    std::vector<double> projected;
    for (const auto& l : plan.ledgers) projected.push_back(l.t_total);
    plan.deadline =
        cfg_.scheduling.deadline_slack * percentile(projected, cfg_.scheduling.deadline_percentile);
  }

  plan.dropped.assign(sel.size(), false);
  bool any_dropped = false;
  std::vector<radio::CostLedger> kept;
  for (std::size_t i = 0; i < sel.size(); ++i) {
    if (plan.ledgers[i].t_total > plan.deadline) {
      plan.dropped[i] = true;
      any_dropped = true;
      plan.cost.e_edge += plan.ledgers[i].e_cmp;  // computed, never uploaded
    } else {
      kept.push_back(plan.ledgers[i]);
    }
  }
  if (!kept.empty()) {
    plan.cost.t_edge = radio::edge_round_latency(kept);
    plan.cost.e_edge += radio::edge_round_energy(kept);
  }
  if (any_dropped) plan.cost.t_edge = std::max(plan.cost.t_edge, plan.deadline);
  return plan;
}

bool Simulation::step() {
  if (halted_ || cloud_.rounds_elapsed >= cfg_.rounds) return false;
  const int r = cloud_.rounds_elapsed + 1;
  const bool clustering = !scheme_.hfl_only;

  std::vector<EdgePlan> plans;
  std::vector<radio::EdgeRoundCost> projected;
  const bool may_upload = scheme_.aggregation == Aggregation::kSplitBased
                              ? clustering
                              : r % std::max(1, scheme_.r_agg) == 0;
  for (auto& e : edges_) {
    plans.push_back(plan_edge(e, r));
    radio::EdgeRoundCost c = plans.back().cost;
    if (may_upload) {
      std::tie(c.t_cloud, c.e_cloud) = radio::cloud_upload_cost(
          cloud_upload_bits(e, true), cfg_.radio.edge_rate_bps, cfg_.radio.edge_power_w);
      c.uploaded = true;
    }
    projected.push_back(c);
  }
  const double t_projected = radio::system_round_totals(projected).first;
  if (enforce_budget(cloud_, t_projected) == BudgetDecision::kHalt) {
    events_.push_back({r, -1, "budget_halt",
                       {{"cumulative_time", cloud_.cumulative_time},
                        {"projected_round_time", t_projected},
                        {"t_budget", scheme_.t_budget}}});
    halted_ = true;
    return false;
  }

  round_clients_.clear();
  round_cluster_norms_.clear();
  round_cluster_participants_.clear();
  std::vector<Event> round_events;
  int splits = 0;

  for (std::size_t k = 0; k < edges_.size(); ++k) {
    auto& edge = edges_[k];
    const auto& plan = plans[k];
    const auto& sel = plan.selection.selected;
    std::vector<ParticipantUpdate> updates;
    for (std::size_t i = 0; i < sel.size(); ++i) {
      const int id = sel[i];
      const auto& client = pop_.clients[static_cast<std::size_t>(id)];
      ClientMetrics cm;
      cm.id = id;
      cm.edge = edge.id;
      cm.selected = true;
      cm.phase = sched::to_string(plan.selection.provenance[i].phase);
      cm.t_total = plan.ledgers[i].t_total;
      cm.e_total = plan.dropped[i] ? plan.ledgers[i].e_cmp : plan.ledgers[i].e_total;
      if (plan.dropped[i]) {
        round_events.push_back({r, edge.id, "deadline_drop",
                                {{"client", id},
                                 {"t_total", plan.ledgers[i].t_total},
                                 {"deadline", plan.deadline}}});
      } else {
        auto rng = make_stream(cfg_.seed, "train", static_cast<std::uint64_t>(id),
                               static_cast<std::uint64_t>(r));
        auto rep = local_train(cfg_.model, edge.cluster_of(id).model, client.data.train,
                               cfg_.train, rng, id, r);
        cm.participated = true;
        cm.delta_norm = l2_norm(rep.delta.values);
        ++round_cluster_participants_[{edge.id, edge.cluster_of(id).id}];
        updates.push_back({id, client.samples(), std::move(rep.delta.values), std::move(rep.trained)});
        latest_t_total_[static_cast<std::size_t>(id)] = plan.ledgers[i].t_total;
      }
      round_clients_.push_back(std::move(cm));
    }
    if (!sel.empty() && updates.empty())
      round_events.push_back({r, edge.id, "deadline_drop",
                              {{"client", nullptr}, {"deadline", plan.deadline},
                               {"note", "all selected clients dropped; edge skipped aggregation"}}});

    auto res = aggregate_and_cluster(edge, updates, r, cfg_.clustering, clustering);
    for (const auto& [cid, norm] : res.cluster_mean_delta_norm) round_cluster_norms_[{edge.id, cid}] = norm;
    for (const auto& s : res.splits) {
      // children report the statistics of the parent that produced them
      for (int child : {s.child1, s.child2}) {
        round_cluster_norms_[{edge.id, child}] = round_cluster_norms_[{edge.id, s.parent}];
        round_cluster_participants_[{edge.id, child}] =
            round_cluster_participants_[{edge.id, s.parent}];
      }
    }
    if (!res.splits.empty()) cloud_.pending_split = true;
    splits += static_cast<int>(res.splits.size());
    for (auto& ev : res.events) round_events.push_back(std::move(ev));
  }

  const CloudResult cloud_res =
      scheme_.aggregation == Aggregation::kRoundBased
          ? cloud_round_based(cloud_, edges_, r, cfg_.clustering, clustering)
          : cloud_split_based(cloud_, edges_, r, cfg_.clustering, clustering);

  std::vector<radio::EdgeRoundCost> actual;
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    radio::EdgeRoundCost c = plans[k].cost;
    if (cloud_res.aggregated) {
      std::tie(c.t_cloud, c.e_cloud) =
          radio::cloud_upload_cost(cloud_upload_bits(edges_[k], false), cfg_.radio.edge_rate_bps,
                                   cfg_.radio.edge_power_w);
      c.uploaded = true;
    }
    actual.push_back(c);
  }
  const auto [t_r, e_r] = radio::system_round_totals(actual);
  if (cloud_res.aggregated) {
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& g : cloud_res.merged_groups) {
      nlohmann::json members = nlohmann::json::array();
      for (auto [e, c] : g) members.push_back({{"edge", e}, {"cluster", c}});
      groups.push_back(members);
    }
    round_events.push_back({r, -1, "cloud_agg",
                            {{"trigger", scheme_.aggregation == Aggregation::kRoundBased
                                             ? "round"
                                             : "split"},
                             {"merged_groups", groups}}});
  }

  cloud_.cumulative_time += t_r;
  cloud_.cumulative_energy += e_r;
  cloud_.rounds_elapsed = r;

  RoundMetrics m = collect_metrics(r);
  m.t_round = t_r;
  m.e_round = e_r;
  m.splits = splits;
  m.cloud_aggregation = cloud_res.aggregated;
  for (const auto& c : round_clients_) {
    ++m.selected;
    if (c.participated) ++m.participants;
    else ++m.dropped;
  }
  for (const auto& ev : round_events) events_.push_back(ev);
  m.events = std::move(round_events);
  metrics_.push_back(std::move(m));
  return true;
}

RoundMetrics Simulation::collect_metrics(int round) const {
  RoundMetrics m;
  m.round = round;
  m.cumulative_time = cloud_.cumulative_time;
  m.cumulative_energy = cloud_.cumulative_energy;
  m.partition = partition_string(edges_);

  std::map<int, const ClientMetrics*> sel;
  for (const auto& c : round_clients_) sel[c.id] = &c;

  double acc_sum = 0.0;
  std::size_t acc_n = 0;
  m.acc_min = 1.0;
  m.acc_max = 0.0;
  for (const auto& e : edges_) {
    m.clusters_per_edge.push_back(static_cast<int>(e.clusters.size()));
    for (const auto& c : e.clusters) {
      if (c.stopped) ++m.stopped_clusters;
      ClusterMetrics cm;
      cm.edge = e.id;
      cm.cluster = c.id;
      cm.members = c.members;
      cm.stopped = c.stopped;
      if (auto it = round_cluster_participants_.find({e.id, c.id}); it != round_cluster_participants_.end())
        cm.participants = it->second;
      if (auto it = round_cluster_norms_.find({e.id, c.id}); it != round_cluster_norms_.end())
        cm.mean_delta_norm = it->second;
      cm.acc_min = 1.0;
      cm.acc_max = 0.0;
      double sum = 0.0;
      for (int id : c.members) {
        const auto& client = pop_.clients[static_cast<std::size_t>(id)];
        const double acc = evaluate_accuracy(cfg_.model, c.model, client.data.test);
        ClientMetrics row;
        if (auto it = sel.find(id); it != sel.end()) row = *it->second;
        row.id = id;
        row.edge = e.id;
        row.cluster = c.id;
        row.accuracy = acc;
        m.clients.push_back(std::move(row));
        cm.acc_min = std::min(cm.acc_min, acc);
        cm.acc_max = std::max(cm.acc_max, acc);
        sum += acc;
      }
      cm.acc_mean = c.members.empty() ? 0.0 : sum / static_cast<double>(c.members.size());
      acc_sum += sum;
      acc_n += c.members.size();
      m.acc_min = std::min(m.acc_min, cm.acc_min);
      m.acc_max = std::max(m.acc_max, cm.acc_max);
      m.clusters.push_back(std::move(cm));
    }
  }
  std::sort(m.clients.begin(), m.clients.end(),
            [](const ClientMetrics& a, const ClientMetrics& b) { return a.id < b.id; });
  m.acc_mean = acc_n == 0 ? 0.0 : acc_sum / static_cast<double>(acc_n);
  return m;
}

std::vector<RoundMetrics> Simulation::run() {
  while (step()) {
  }
  return metrics_;
}

std::vector<RoundMetrics> run_experiment(const Population& population, const SimConfig& cfg,
                                         const SchemeConfig& scheme) {
  Simulation sim(population, cfg, scheme);
  return sim.run();
}

}  // namespace hcfl
