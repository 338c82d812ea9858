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

#include "properties.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "hcfl/clusterer.hpp"
#include "hcfl/errors.hpp"
#include "hcfl/learner.hpp"
#include "hcfl/orchestrator.hpp"
#include "hcfl/synthdata.hpp"
#include "oracles.hpp"

namespace props {

namespace {

using namespace hcfl;

std::vector<double> gaussian(std::mt19937_64& rng, std::size_t dim, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> v(dim);
  for (auto& x : v) x = g(rng);
  return v;
}

// Returns an empty string on success, else a description of the first failure.
using Check = std::function<std::string(std::mt19937_64&)>;

std::string cosine_properties(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  for (int t = 0; t < 500; ++t) {
    const auto a = gaussian(rng, 1 + t % 40);
    const auto b = gaussian(rng, a.size());
    const double ab = cluster::cosine_similarity(a, b);
    if (ab != cluster::cosine_similarity(b, a)) return "not symmetric";
    if (ab < -1.0 || ab > 1.0) return "outside [-1, 1]";
    if (std::abs(ab - oracle::cosine(a, b)) > 1e-12) return "differs from the oracle";
    auto sa = a;
    const double s = scale(rng);
    for (auto& x : sa) x *= s;
    if (std::abs(cluster::cosine_similarity(sa, b) - ab) > 1e-12) return "not scale invariant";
    if (cluster::cosine_similarity(a, a) > 1.0) return "self similarity above 1";
  }
  // the most similar of a set does not change under positive rescaling
  for (int t = 0; t < 100; ++t) {
    const auto q = gaussian(rng, 8);
    std::vector<std::vector<double>> set;
    for (int i = 0; i < 6; ++i) set.push_back(gaussian(rng, 8));
    auto argmax = [&](const std::vector<std::vector<double>>& vs) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < vs.size(); ++i)
        if (cluster::cosine_similarity(q, vs[i]) > cluster::cosine_similarity(q, vs[best])) best = i;
      return best;
    };
    const auto before = argmax(set);
    for (auto& v : set) {
      const double s = scale(rng);
      for (auto& x : v) x *= s;
    }
    if (argmax(set) != before) return "argmax changed under rescaling";
  }
  const std::vector<double> z(4, 0.0), a{1, 2, 3, 4};
  try {
    cluster::cosine_similarity(a, z);
    return "zero vector accepted";
  } catch (const DegenerateDelta&) {
  }
  return "";
}

std::string bipartition_optimal(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> size(2, cluster::kExhaustiveLimit);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = size(rng);
    const std::size_t dim = 2 + t % 6;
    std::vector<std::vector<double>> d;
    // half the sets carry planted structure
    const auto anchor = gaussian(rng, dim);
    for (std::size_t i = 0; i < n; ++i) {
      auto v = gaussian(rng, dim, t % 2 ? 1.0 : 0.2);
      if (t % 2 == 0)
        for (std::size_t j = 0; j < dim; ++j) v[j] += (i % 2 ? 1.0 : -1.0) * anchor[j];
      d.push_back(std::move(v));
    }
    std::vector<int> ids;
    int next = 0;
    for (std::size_t i = 0; i < n; ++i) ids.push_back(next += 1 + static_cast<int>(rng() % 3));
    const auto sim = cluster::similarity_matrix(cluster::views(d), ids);
    const auto got = cluster::bipartition(sim);
    const auto want = oracle::best_split(d, ids);
    if (std::abs(got.max_cross - want.max_cross) > 1e-12 || got.c1 != want.c1 || got.c2 != want.c2) {
      std::ostringstream s;
      s << "set " << t << " (n=" << n << "): max_cross " << got.max_cross << " vs " << want.max_cross;
      return s.str();
    }
    const auto sl = cluster::bipartition(sim, cluster::BipartitionMethod::kSingleLinkage);
    if (std::abs(sl.max_cross - want.max_cross) > 1e-12) return "single linkage is not optimal";
  }
  return "";
}

std::string split_trichotomy(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + t % 7;
    std::vector<std::vector<double>> d;
    std::vector<double> w;
    for (std::size_t i = 0; i < n; ++i) {
      d.push_back(gaussian(rng, 5));
      w.push_back(1.0 + static_cast<double>(rng() % 50));
    }
    const double eps1 = u(rng), eps2 = u(rng);
    const auto r = cluster::check_split(cluster::views(d), w, eps1, eps2);
    std::vector<double> mean(5, 0.0);
    double total = 0.0, max_norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      total += w[i];
      double sq = 0.0;
      for (std::size_t j = 0; j < 5; ++j) sq += d[i][j] * d[i][j];
      max_norm = std::max(max_norm, std::sqrt(sq));
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < 5; ++j) mean[j] += w[i] / total * d[i][j];
    double m = 0.0;
    for (double x : mean) m += x * x;
    m = std::sqrt(m);
    if (std::abs(m - r.mean_norm) > 1e-12 || std::abs(max_norm - r.max_norm) > 1e-12)
      return "norms differ from the oracle";
    const bool stop = max_norm < eps2;
    const bool split = !stop && m < eps1 && max_norm > eps2;
    const auto want = stop ? cluster::SplitDecision::kStop
                           : split ? cluster::SplitDecision::kSplit : cluster::SplitDecision::kContinue;
    if (r.decision != want) return "decision differs from the definition";
  }
  return "";
}

std::string gradient_matches(std::mt19937_64& rng) {
  for (int t = 0; t < 6; ++t) {
    const ModelSpec spec = t % 2 ? ModelSpec{ModelKind::kMlp, 4, 3, 5} : ModelSpec{ModelKind::kLogistic, 4, 3, 0};
    Dataset d;
    d.dim = 4;
    for (int i = 0; i < 20; ++i) {
      const auto x = gaussian(rng, 4, 2.0);
      d.features.insert(d.features.end(), x.begin(), x.end());
      d.labels.push_back(static_cast<int>(rng() % 3));
    }
    std::vector<std::size_t> idx(d.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    const auto p = gaussian(rng, spec.parameter_count(), 0.5);
    std::vector<double> g(p.size()), scratch(p.size());
    batch_loss_and_gradient(spec, p, d, idx, g);
    for (std::size_t k = 0; k < p.size(); ++k) {
      auto q = p;
      q[k] += 1e-6;
      const double up = batch_loss_and_gradient(spec, q, d, idx, scratch);
      q[k] -= 2e-6;
      const double down = batch_loss_and_gradient(spec, q, d, idx, scratch);
      const double fd = (up - down) / 2e-6;
      if (std::abs(fd - g[k]) / std::max(1e-3, std::abs(fd) + std::abs(g[k])) > 1e-4)
        return spec.arch_tag() + ": gradient entry " + std::to_string(k) + " differs";
    }
  }
  return "";
}

std::string aggregation_conserves(std::mt19937_64& rng) {
  for (int t = 0; t < 50; ++t) {
    const std::size_t dim = 3 + t % 20;
    const ModelParams start{gaussian(rng, dim), "p"};
    EdgeState e;
    const int n = 2 + t % 9;
    for (int c = 0; c < n; ++c) {
      e.clients.push_back(c);
      e.samples[c] = 1 + rng() % 300;
    }
    e.clusters.push_back({0, e.clients, start, false, -1, 0});
    std::vector<ParticipantUpdate> ups;
    std::vector<std::vector<double>> trained;
    std::vector<double> w;
    for (int c = 0; c < n; ++c) {
      ParticipantUpdate u;
      u.client = c;
      u.samples = e.samples[c];
      u.delta = gaussian(rng, dim);
      u.trained = start;
      for (std::size_t j = 0; j < dim; ++j) u.trained.values[j] += u.delta[j];
      trained.push_back(u.trained.values);
      w.push_back(static_cast<double>(u.samples));
      ups.push_back(std::move(u));
    }
    std::shuffle(ups.begin(), ups.end(), rng);
    aggregate_and_cluster(e, ups, 1, ClusteringConfig{}, false);
    const auto want = oracle::weighted_mean(trained, w);
    for (std::size_t j = 0; j < dim; ++j)
      if (std::abs(e.edge_model.values[j] - want[j]) > 1e-10) return "edge model differs from the weighted mean";
  }
  return "";
}

std::string csv_bytes(const std::vector<RoundMetrics>& metrics) {
  std::vector<MetricsRow> rows;
  for (const auto& m : metrics) rows.push_back(to_row(m));
  std::ostringstream out;
  write_metrics_csv(out, rows);
  write_clusters_csv(out, metrics);
  write_clients_csv(out, metrics);
  return out.str();
}

// Full runs: partition integrity, monotone cluster count, per-round cost
// arithmetic, and bit-identical reruns.
std::string full_runs(const ExperimentConfig& cfg) {
  const Population pop = generate_population(cfg.population);
  for (const std::string name : {"fg-split", "frr-round", "baseline"}) {
    auto scheme = scheme_from_name(name, cfg.r_agg);
    Simulation sim(pop, cfg.sim, scheme);
    std::vector<std::size_t> last(static_cast<std::size_t>(pop.num_edges()), 1);
    while (sim.step()) {
      const auto& m = sim.metrics().back();
      std::vector<oracle::EdgeTrace> traces(static_cast<std::size_t>(pop.num_edges()));
      for (const auto& c : m.clients) {
        traces[static_cast<std::size_t>(c.edge)].client_t.push_back(c.t_total);
        traces[static_cast<std::size_t>(c.edge)].client_e.push_back(c.e_total);
      }
      for (const auto& e : sim.edges()) {
        const auto k = static_cast<std::size_t>(e.id);
        std::vector<int> all;
        for (const auto& c : e.clusters) {
          if (c.members.empty()) return name + ": empty cluster";
          all.insert(all.end(), c.members.begin(), c.members.end());
        }
        std::sort(all.begin(), all.end());
        if (all != pop.edge_members(e.id))
          return name + ": round " + std::to_string(m.round) + " partition lost or duplicated clients";
        if (e.clusters.size() < last[k]) return name + ": cluster count decreased";
        last[k] = e.clusters.size();
        traces[k].upload = m.cloud_aggregation;
        const std::size_t models = scheme.hfl_only ? 1 : 1 + e.clusters.size();
        traces[k].z = static_cast<double>(models * sim.model_bits());
        traces[k].rate = cfg.sim.radio.edge_rate_bps;
        traces[k].power = cfg.sim.radio.edge_power_w;
      }
      if (m.dropped == 0) {
        const auto [t, en] = oracle::system_totals(traces);
        if (std::abs(m.t_round - t) > 1e-9 * t || std::abs(m.e_round - en) > 1e-9 * en)
          return name + ": round totals differ from the per-client ledgers";
      }
    }
    const auto again = run_experiment(pop, cfg.sim, scheme);
    if (csv_bytes(again) != csv_bytes(sim.metrics()))
      return name + ": rerun CSV output is not byte-identical";
  }
  return "";
}

}  // namespace

std::vector<PropertyResult> run_all(const ExperimentConfig& cfg, std::uint64_t seed) {
  const std::vector<std::pair<std::string, Check>> checks{
      {"cosine symmetry, range and scale invariance", cosine_properties},
      {"bipartition equals exhaustive search (200 sets, n <= 12)", bipartition_optimal},
      {"split check trichotomy", split_trichotomy},
      {"gradient matches finite differences", gradient_matches},
      {"edge aggregation conserves the weighted mean", aggregation_conserves},
      {"full runs: partitions, cluster counts, costs, determinism",
       [&cfg](std::mt19937_64&) { return full_runs(cfg); }},
  };
  std::vector<PropertyResult> out;
  std::uint64_t stream = 0;
  for (const auto& [name, check] : checks) {
    std::mt19937_64 rng(seed * 1000003ULL + stream++);
    const auto t0 = std::chrono::steady_clock::now();
    PropertyResult r;
    r.name = name;
    try {
      r.detail = check(rng);
      r.passed = r.detail.empty();
    } catch (const std::exception& e) {
      r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace props
