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

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hcfl/rng.hpp"

namespace hcfl::sched {

enum class Phase { kFair, kGreedy, kRoundRobin, kRandom };

std::string to_string(Phase p);

/// What the scheduler needs to know about one cluster of an edge.
struct ClusterView {
  int id = 0;
  std::vector<int> members;  // ascending client ids
  bool stopped = false;
};

struct Pick {
  int client = 0;
  int cluster = 0;
  Phase phase = Phase::kFair;
};

struct SelectionOutcome {
  std::vector<int> selected;    // ascending, unique
  std::vector<Pick> provenance;  // parallel to `selected`
  std::vector<int> starved_clusters;  // stopped clusters with nobody available

  bool contains(int client) const;
  void merge(const SelectionOutcome& other);
};

/// Indexed by client id; true when the client can take part this round.
using Availability = std::vector<bool>;

/// Phase one: every available member of every non-stopped cluster.
SelectionOutcome select_fair(std::span<const ClusterView> clusters, const Availability& available);

/// One member per stopped cluster: the available one with the smallest
/// latest t_total (lowest id on ties). `t_total` is indexed by client id.
SelectionOutcome select_greedy(std::span<const ClusterView> stopped,
                               std::span<const double> t_total, const Availability& available);

/// Per-cluster position of the next member to try, in ascending-id order.
class RoundRobinCursors {
 public:
  std::size_t position(int cluster) const;
  void set(int cluster, std::size_t pos) { next_[cluster] = pos; }
  void erase(int cluster) { next_.erase(cluster); }

 private:
  std::map<int, std::size_t> next_;
};

/// One member per stopped cluster cycling through members; unavailable
/// members are skipped and the cursor moves past the chosen one.
SelectionOutcome select_round_robin(std::span<const ClusterView> stopped,
                                    RoundRobinCursors& cursors, const Availability& available);

/// Uniform sample without replacement of `budget` available clients from
/// `members` (all available ones when fewer remain).
SelectionOutcome select_random_baseline(std::span<const ClusterView> clusters, std::size_t budget,
                                        const Availability& available, Rng& rng);

enum class Policy { kGreedy, kRoundRobin, kRandomBaseline, kFairOnly };

struct ComposeInputs {
  Policy policy = Policy::kGreedy;
  std::span<const double> t_total;  // greedy
  RoundRobinCursors* cursors = nullptr;  // round robin
  std::size_t budget = 0;  // random baseline
  Rng* rng = nullptr;  // random baseline
};

/// Fair phase for non-stopped clusters united with the policy phase for
/// stopped clusters. The baseline ignores clusters and samples at random;
/// kFairOnly selects every available client.
SelectionOutcome compose_selection(std::span<const ClusterView> clusters,
                                   const Availability& available, const ComposeInputs& in);

}  // namespace hcfl::sched
