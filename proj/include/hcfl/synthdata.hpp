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
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "hcfl/learner.hpp"
#include "hcfl/radio.hpp"

namespace hcfl {

/// A latent data distribution: the shared base task seen through a label
/// permutation. Ids are 0-based.
struct DistributionSpec {
  int id = 0;
  std::vector<int> permutation;  // true class -> observed label
};

struct RadioRanges {
  double distance_min_m = 20.0;
  double distance_max_m = 100.0;
  double power_min_dbm = -10.0;
  double power_max_dbm = 20.0;
  double cpu_min_hz = 1e9;
  double cpu_max_hz = 9e9;
  double cycles_per_sample = 20.0;
  double alpha = 2e-28;
  double g0_db = -35.0;
  double d0_m = 2.0;
};

struct PopulationConfig {
  std::uint64_t seed = 1;
  int clients = 200;
  int edges = 3;
  int distributions = 4;
  std::size_t feature_dim = 20;
  std::size_t classes = 10;
  std::size_t samples_min = 100;  // training samples D_n
  std::size_t samples_max = 300;
  std::size_t batch_size = 32;
  double class_separation = 6.0;  // norm of each class mean
  double noise_std = 1.0;
  double test_fraction = 0.2;  // share of each client's generated data held out
  /// Optional explicit client -> edge map; empty means round-robin by id.
  std::vector<int> placement;
  RadioRanges radio;
};

struct ClientState {
  int id = 0;
  int edge = 0;
  int dist_id = 0;
  ClientDataset data;
  radio::RadioProfile radio;

  std::size_t samples() const noexcept { return data.train.size(); }
};

struct Population {
  PopulationConfig config;
  int num_distributions = 1;
  std::vector<DistributionSpec> distributions;
  std::vector<std::vector<double>> class_means;
  std::vector<ClientState> clients;  // indexed by client id
  std::vector<int> edge_assignment;  // client id -> edge id

  int num_edges() const noexcept { return config.edges; }
  /// Client ids of edge k in ascending order.
  std::vector<int> edge_members(int k) const;
  std::size_t total_samples() const;
};

/// Pair-swap permutations arranged as a binary taxonomy: bit b of a
/// distribution id (most significant first) toggles the swap of a disjoint
/// set of class pairs, with higher bits owning more pairs.
std::vector<DistributionSpec> make_distributions(int count, std::size_t classes);

Population generate_population(const PopulationConfig& cfg);

/// Rescales dataset sizes geometrically by size rank so that
/// max D_n / min D_n ~= factor while keeping the total sample count.
Population make_unbalanced(const Population& population, double factor);

/// Ground-truth grouping of an edge's clients by dist_id, as sorted id lists.
std::vector<std::vector<int>> ground_truth_partition(const Population& population, int edge);

double weighted_objective(const ModelSpec& spec, const std::map<int, ModelParams>& models_by_client,
                          const Population& population);

inline constexpr int kPopulationSchemaVersion = 1;

nlohmann::json population_to_json(const Population& population, bool include_data = true);
Population population_from_json(const nlohmann::json& j);
/// FNV-1a 64 over the canonical JSON (with data), as 16 hex digits.
std::string population_hash(const Population& population);

}  // namespace hcfl
