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

#include "hcfl/scheduler.hpp"

#include <algorithm>
#include <numeric>

#include "hcfl/errors.hpp"

namespace hcfl::sched {

namespace {

bool is_available(const Availability& available, int id) {
  return id >= 0 && static_cast<std::size_t>(id) < available.size() &&
         available[static_cast<std::size_t>(id)];
}

void add(SelectionOutcome& out, int client, int cluster, Phase phase) {
  out.selected.push_back(client);
  out.provenance.push_back({client, cluster, phase});
}

void finish(SelectionOutcome& out) {
  std::vector<std::size_t> order(out.selected.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return out.selected[a] < out.selected[b]; });
  SelectionOutcome sorted;
  for (auto i : order) add(sorted, out.provenance[i].client, out.provenance[i].cluster,
                           out.provenance[i].phase);
  if (std::adjacent_find(sorted.selected.begin(), sorted.selected.end()) != sorted.selected.end())
    throw DomainError("selection picked a client twice");
  sorted.starved_clusters = std::move(out.starved_clusters);
  std::sort(sorted.starved_clusters.begin(), sorted.starved_clusters.end());
  out = std::move(sorted);
}

}  // namespace

std::string to_string(Phase p) {
  switch (p) {
    case Phase::kFair: return "fair";
    case Phase::kGreedy: return "greedy";
    case Phase::kRoundRobin: return "round_robin";
    case Phase::kRandom: return "random";
  }
  return "?";
}

bool SelectionOutcome::contains(int client) const {
  return std::binary_search(selected.begin(), selected.end(), client);
}

void SelectionOutcome::merge(const SelectionOutcome& other) {
  for (const auto& p : other.provenance) add(*this, p.client, p.cluster, p.phase);
  starved_clusters.insert(starved_clusters.end(), other.starved_clusters.begin(),
                          other.starved_clusters.end());
  finish(*this);
}

SelectionOutcome select_fair(std::span<const ClusterView> clusters, const Availability& available) {
  SelectionOutcome out;
  for (const auto& c : clusters) {
    if (c.stopped) continue;
    for (int id : c.members)
      if (is_available(available, id)) add(out, id, c.id, Phase::kFair);
  }
  finish(out);
  return out;
}

SelectionOutcome select_greedy(std::span<const ClusterView> stopped,
                               std::span<const double> t_total, const Availability& available) {
  SelectionOutcome out;
  for (const auto& c : stopped) {
    int best = -1;
    for (int id : c.members) {
      if (!is_available(available, id)) continue;
      if (static_cast<std::size_t>(id) >= t_total.size())
        throw DomainError("select_greedy: no latency estimate for client " + std::to_string(id));
      // members are ascending, so strict '<' keeps the lowest id on ties
      if (best < 0 || t_total[static_cast<std::size_t>(id)] < t_total[static_cast<std::size_t>(best)])
        best = id;
    }
    if (best < 0)
      out.starved_clusters.push_back(c.id);
    else
      add(out, best, c.id, Phase::kGreedy);
  }
  finish(out);
  return out;
}

std::size_t RoundRobinCursors::position(int cluster) const {
  const auto it = next_.find(cluster);
  return it == next_.end() ? 0 : it->second;
}

SelectionOutcome select_round_robin(std::span<const ClusterView> stopped,
                                    RoundRobinCursors& cursors, const Availability& available) {
  SelectionOutcome out;
  for (const auto& c : stopped) {
    const std::size_t n = c.members.size();
    if (n == 0) {
      out.starved_clusters.push_back(c.id);
      continue;
    }
    const std::size_t start = cursors.position(c.id) % n;
    bool picked = false;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t pos = (start + k) % n;
      if (!is_available(available, c.members[pos])) continue;
      add(out, c.members[pos], c.id, Phase::kRoundRobin);
      cursors.set(c.id, (pos + 1) % n);
      picked = true;
      break;
    }
    if (!picked) out.starved_clusters.push_back(c.id);
  }
  finish(out);
  return out;
}

SelectionOutcome select_random_baseline(std::span<const ClusterView> clusters, std::size_t budget,
                                        const Availability& available, Rng& rng) {
  std::vector<Pick> pool;
  std::size_t total = 0;
  for (const auto& c : clusters) {
    total += c.members.size();
    for (int id : c.members)
      if (is_available(available, id)) pool.push_back({id, c.id, Phase::kRandom});
  }
  if (budget > total) throw DomainError("select_random_baseline: budget exceeds edge size");
  std::sort(pool.begin(), pool.end(), [](const Pick& a, const Pick& b) { return a.client < b.client; });
  // partial Fisher-Yates over the ascending pool
  const std::size_t take = std::min(budget, pool.size());
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = std::uniform_int_distribution<std::size_t>(i, pool.size() - 1)(rng);
    std::swap(pool[i], pool[j]);
  }
  SelectionOutcome out;
  for (std::size_t i = 0; i < take; ++i) add(out, pool[i].client, pool[i].cluster, pool[i].phase);
  finish(out);
  return out;
}

SelectionOutcome compose_selection(std::span<const ClusterView> clusters,
                                   const Availability& available, const ComposeInputs& in) {
  if (in.policy == Policy::kRandomBaseline) {
    if (in.rng == nullptr) throw DomainError("compose_selection: baseline needs an rng");
    return select_random_baseline(clusters, in.budget, available, *in.rng);
  }
  if (in.policy == Policy::kFairOnly) {
    std::vector<ClusterView> all(clusters.begin(), clusters.end());
    for (auto& c : all) c.stopped = false;
    return select_fair(all, available);
  }

  std::vector<ClusterView> stopped;
  for (const auto& c : clusters)
    if (c.stopped) stopped.push_back(c);
  SelectionOutcome out = select_fair(clusters, available);
  if (stopped.empty()) return out;
  if (in.policy == Policy::kGreedy) {
    out.merge(select_greedy(stopped, in.t_total, available));
  } else {
    if (in.cursors == nullptr) throw DomainError("compose_selection: round robin needs cursors");
    out.merge(select_round_robin(stopped, *in.cursors, available));
  }
  return out;
}

}  // namespace hcfl::sched
