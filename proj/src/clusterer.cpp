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

#include "hcfl/clusterer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hcfl/errors.hpp"
#include "hcfl/learner.hpp"

namespace hcfl::cluster {

namespace {

Bipartition make_split(const SimilarityMatrix& sim, std::vector<std::size_t> a,
                       std::vector<std::size_t> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (b.front() < a.front()) std::swap(a, b);
  Bipartition out;
  out.side1 = std::move(a);
  out.side2 = std::move(b);
  for (auto i : out.side1) out.c1.push_back(sim.ids[i]);
  for (auto i : out.side2) out.c2.push_back(sim.ids[i]);
  out.max_cross = max_cross_similarity(sim, out.side1, out.side2);
  return out;
}

Bipartition exhaustive(const SimilarityMatrix& sim) {
  const std::size_t n = sim.size();
  Bipartition best;
  bool have = false;
  std::vector<std::size_t> s1, s2;
  const std::uint64_t masks = std::uint64_t{1} << (n - 1);
  for (std::uint64_t mask = 1; mask < masks; ++mask) {
    s1.assign(1, 0);
    s2.clear();
    for (std::size_t i = 1; i < n; ++i) ((mask >> (i - 1)) & 1 ? s2 : s1).push_back(i);
    const double cross = max_cross_similarity(sim, s1, s2);
    if (!have || cross < best.max_cross) {
      best = make_split(sim, s1, s2);
      have = true;
    } else if (cross == best.max_cross) {
      auto cand = make_split(sim, s1, s2);
      if (cand.c1 < best.c1) best = std::move(cand);
    }
  }
  return best;
}

// Cutting the heaviest edge of a minimum spanning tree on 1 - CS maximizes
// the smallest cross distance, i.e. minimizes the largest cross similarity.
Bipartition single_linkage(const SimilarityMatrix& sim) {
  const std::size_t n = sim.size();
  std::vector<bool> in_tree(n, false);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> parent(n, 0);
  struct Edge { std::size_t a, b; double w; };
  std::vector<Edge> tree;
  best[0] = 0.0;
  for (std::size_t it = 0; it < n; ++it) {
    std::size_t u = n;
    for (std::size_t v = 0; v < n; ++v)
      if (!in_tree[v] && (u == n || best[v] < best[u])) u = v;
    in_tree[u] = true;
    if (it > 0) tree.push_back({parent[u], u, best[u]});
    for (std::size_t v = 0; v < n; ++v) {
      const double w = 1.0 - sim.at(u, v);
      if (!in_tree[v] && w < best[v]) {
        best[v] = w;
        parent[v] = u;
      }
    }
  }
  std::size_t cut = 0;
  for (std::size_t e = 1; e < tree.size(); ++e)
    if (tree[e].w > tree[cut].w) cut = e;

  // Components of the tree without the cut edge.
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t e = 0; e < tree.size(); ++e) {
    if (e == cut) continue;
    adj[tree[e].a].push_back(tree[e].b);
    adj[tree[e].b].push_back(tree[e].a);
  }
  std::vector<bool> side(n, false);
  std::vector<std::size_t> stack{0};
  side[0] = true;
  while (!stack.empty()) {
    const auto u = stack.back();
    stack.pop_back();
    for (auto v : adj[u])
      if (!side[v]) {
        side[v] = true;
        stack.push_back(v);
      }
  }
  std::vector<std::size_t> a, b;
  for (std::size_t i = 0; i < n; ++i) (side[i] ? a : b).push_back(i);
  return make_split(sim, std::move(a), std::move(b));
}

Bipartition complete_linkage(const SimilarityMatrix& sim) {
  const std::size_t n = sim.size();
  std::vector<std::vector<std::size_t>> groups(n);
  for (std::size_t i = 0; i < n; ++i) groups[i] = {i};
  while (groups.size() > 2) {
    std::size_t ga = 0, gb = 1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < groups.size(); ++a)
      for (std::size_t b = a + 1; b < groups.size(); ++b) {
        double link = -std::numeric_limits<double>::infinity();
        for (auto i : groups[a])
          for (auto j : groups[b]) link = std::max(link, 1.0 - sim.at(i, j));
        if (link < best) {
          best = link;
          ga = a;
          gb = b;
        }
      }
    groups[ga].insert(groups[ga].end(), groups[gb].begin(), groups[gb].end());
    groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(gb));
  }
  return make_split(sim, groups[0], groups[1]);
}

}  // namespace

std::vector<DeltaView> views(const std::vector<std::vector<double>>& deltas) {
  return {deltas.begin(), deltas.end()};
}

double cosine_similarity(DeltaView a, DeltaView b) {
  if (a.size() != b.size()) throw DomainError("cosine_similarity: length mismatch");
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) throw DegenerateDelta("cosine_similarity: zero-norm delta");
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

SimilarityMatrix similarity_matrix(std::span<const DeltaView> deltas, std::vector<int> ids) {
  if (deltas.size() != ids.size()) throw DomainError("similarity_matrix: one id per delta");
  if (!std::is_sorted(ids.begin(), ids.end()) ||
      std::adjacent_find(ids.begin(), ids.end()) != ids.end())
    throw DomainError("similarity_matrix: ids must be strictly ascending");
  const std::size_t n = deltas.size();
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    norms[i] = l2_norm(deltas[i]);
    if (norms[i] == 0.0) throw DegenerateDelta("similarity_matrix: zero-norm delta");
  }
  SimilarityMatrix sim{std::move(ids), std::vector<double>(n * n)};
  for (std::size_t i = 0; i < n; ++i) {
    sim.entries[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double c = std::clamp(dot(deltas[i], deltas[j]) / (norms[i] * norms[j]), -1.0, 1.0);
      sim.entries[i * n + j] = c;
      sim.entries[j * n + i] = c;
    }
  }
  return sim;
}

SplitCheck check_split(std::span<const DeltaView> deltas, std::span<const double> weights,
                       double eps1, double eps2) {
  if (deltas.empty()) throw DomainError("check_split: empty cluster");
  if (weights.size() != deltas.size()) throw DomainError("check_split: one weight per delta");
  const std::size_t dim = deltas.front().size();
  std::vector<double> mean(dim, 0.0);
  double wsum = 0.0;
  SplitCheck out;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (deltas[i].size() != dim) throw DomainError("check_split: length mismatch");
    wsum += weights[i];
    for (std::size_t j = 0; j < dim; ++j) mean[j] += weights[i] * deltas[i][j];
    out.max_norm = std::max(out.max_norm, l2_norm(deltas[i]));
  }
  if (!(wsum > 0.0)) throw DomainError("check_split: weights must sum to > 0");
  for (double& m : mean) m /= wsum;
  out.mean_norm = l2_norm(mean);

  if (out.max_norm < eps2)
    out.decision = SplitDecision::kStop;
  else if (out.mean_norm < eps1 && out.max_norm > eps2)
    out.decision = SplitDecision::kSplit;
  else
    out.decision = SplitDecision::kContinue;
  return out;
}

double max_cross_similarity(const SimilarityMatrix& sim, std::span<const std::size_t> side1,
                            std::span<const std::size_t> side2) {
  double best = -std::numeric_limits<double>::infinity();
  for (auto i : side1)
    for (auto j : side2) best = std::max(best, sim.at(i, j));
  return best;
}

Bipartition bipartition(const SimilarityMatrix& sim, BipartitionMethod method,
                        std::size_t exhaustive_limit) {
  if (sim.size() < 2) throw DomainError("bipartition: cluster needs at least 2 members");
  if (method == BipartitionMethod::kAuto)
    method = sim.size() <= exhaustive_limit ? BipartitionMethod::kExhaustive
                                            : BipartitionMethod::kSingleLinkage;
  switch (method) {
    case BipartitionMethod::kExhaustive:
      if (sim.size() > 62) throw DomainError("bipartition: too many members for exhaustive search");
      return exhaustive(sim);
    case BipartitionMethod::kSingleLinkage:
      return single_linkage(sim);
    case BipartitionMethod::kCompleteLinkage:
      return complete_linkage(sim);
    case BipartitionMethod::kAuto:
      break;
  }
  return exhaustive(sim);
}

GammaCheck gamma_check(std::span<const DeltaView> deltas, const Bipartition& split,
                       const SimilarityMatrix& sim) {
  if (deltas.size() != sim.size()) throw DomainError("gamma_check: one delta per matrix row");
  if (split.side1.empty() || split.side2.empty() ||
      split.side1.size() + split.side2.size() != sim.size())
    throw DomainError("gamma_check: invalid bipartition");
  const std::size_t dim = deltas.front().size();
  GammaCheck out;
  out.gamma.assign(sim.size(), 0.0);

  for (const auto* side : {&split.side1, &split.side2}) {
    std::vector<double> mean(dim, 0.0);
    for (auto i : *side)
      for (std::size_t j = 0; j < dim; ++j) mean[j] += deltas[i][j];
    for (double& m : mean) m /= static_cast<double>(side->size());
    const double mnorm = l2_norm(mean);
    if (mnorm == 0.0) throw DegenerateDelta("gamma_check: zero-norm side mean");
    for (auto i : *side) {
      double s = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        const double r = mean[j] - deltas[i][j];
        s += r * r;
      }
      out.gamma[i] = std::sqrt(s) / mnorm;
    }
  }
  out.max_gamma = *std::max_element(out.gamma.begin(), out.gamma.end());
  out.max_cross = max_cross_similarity(sim, split.side1, split.side2);
  out.threshold = std::sqrt(std::max(0.0, (1.0 - out.max_cross) / 2.0));
  out.accepted = out.max_gamma < out.threshold;
  return out;
}

Separation cross_and_intra(const SimilarityMatrix& sim, std::span<const int> group_of) {
  if (group_of.size() != sim.size()) throw DomainError("cross_and_intra: one group per row");
  Separation out;
  bool any_cross = false;
  bool any_intra = false;
  for (std::size_t i = 0; i < sim.size(); ++i)
    for (std::size_t j = i + 1; j < sim.size(); ++j) {
      const double c = sim.at(i, j);
      if (group_of[i] == group_of[j]) {
        out.min_intra = any_intra ? std::min(out.min_intra, c) : c;
        any_intra = true;
      } else {
        out.max_cross = any_cross ? std::max(out.max_cross, c) : c;
        any_cross = true;
      }
    }
  out.gap = out.min_intra - out.max_cross;
  return out;
}

}  // namespace hcfl::cluster
