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
#include <span>
#include <vector>

namespace hcfl::cluster {

using DeltaView = std::span<const double>;

/// Views over a list of owned vectors, for callers holding plain vectors.
std::vector<DeltaView> views(const std::vector<std::vector<double>>& deltas);

/// <a,b> / (|a||b|) clamped to [-1, 1]. Throws DegenerateDelta on a zero norm.
double cosine_similarity(DeltaView a, DeltaView b);

/// Symmetric pairwise cosine matrix; `ids[i]` labels row i.
struct SimilarityMatrix {
  std::vector<int> ids;
  std::vector<double> entries;  // row-major size() x size()

  std::size_t size() const noexcept { return ids.size(); }
  double at(std::size_t i, std::size_t j) const { return entries[i * ids.size() + j]; }
};

/// All deltas must have non-zero norm; `ids` must be strictly ascending.
SimilarityMatrix similarity_matrix(std::span<const DeltaView> deltas, std::vector<int> ids);

enum class SplitDecision { kSplit, kContinue, kStop };

struct SplitCheck {
  SplitDecision decision = SplitDecision::kContinue;
  double mean_norm = 0.0;  // |sum_n (D_n / D_c) delta_n|
  double max_norm = 0.0;   // max_n |delta_n|
};

/// Stationarity and stopping tests on one cluster's deltas:
///   stop      iff max |delta_n| < eps2
///   split     iff |weighted mean| < eps1 and max |delta_n| > eps2
///   continue  otherwise.
SplitCheck check_split(std::span<const DeltaView> deltas, std::span<const double> weights,
                       double eps1, double eps2);

enum class BipartitionMethod {
  kAuto,             // exhaustive up to the limit, single linkage above it
  kExhaustive,
  kSingleLinkage,    // exact for the min-max-cross objective at any size
  kCompleteLinkage,
};

struct Bipartition {
  std::vector<std::size_t> side1;  // row positions, ascending; contains row 0
  std::vector<std::size_t> side2;
  std::vector<int> c1;  // ids
  std::vector<int> c2;
  double max_cross = 0.0;
};

inline constexpr std::size_t kExhaustiveLimit = 12;

/// Split minimizing the largest cross-side similarity. Ties go to the split
/// whose c1 id list is lexicographically smallest.
Bipartition bipartition(const SimilarityMatrix& sim,
                        BipartitionMethod method = BipartitionMethod::kAuto,
                        std::size_t exhaustive_limit = kExhaustiveLimit);

/// Largest cross-side similarity of a given split.
double max_cross_similarity(const SimilarityMatrix& sim, std::span<const std::size_t> side1,
                            std::span<const std::size_t> side2);

struct GammaCheck {
  bool accepted = false;
  std::vector<double> gamma;  // per row of the similarity matrix
  double max_gamma = 0.0;
  double threshold = 0.0;  // sqrt((1 - max_cross) / 2)
  double max_cross = 0.0;
};

/// gamma_n = |m_s - delta_n| / |m_s| with m_s the plain mean of n's side;
/// accepted iff max gamma_n < sqrt((1 - CS_cross_max) / 2).
GammaCheck gamma_check(std::span<const DeltaView> deltas, const Bipartition& split,
                       const SimilarityMatrix& sim);

struct Separation {
  double max_cross = -1.0;
  double min_intra = 1.0;
  double gap = 2.0;
};

/// Cross/intra similarity extremes for a grouping of the matrix rows
/// (`group_of[i]` is row i's group). With no intra pair the intra term is
/// +1, with no cross pair the cross term is -1.
Separation cross_and_intra(const SimilarityMatrix& sim, std::span<const int> group_of);

}  // namespace hcfl::cluster
