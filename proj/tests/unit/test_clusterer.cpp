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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "hcfl/clusterer.hpp"
#include "hcfl/errors.hpp"
#include "hcfl/rng.hpp"
#include "oracles.hpp"

using namespace hcfl;
using namespace hcfl::cluster;

namespace {

std::vector<std::vector<double>> random_deltas(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> out(n, std::vector<double>(dim));
  for (auto& v : out)
    for (auto& x : v) x = g(rng);
  return out;
}

// two tight groups pointing in opposite-ish directions
std::vector<std::vector<double>> two_groups(std::size_t per_side, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 0.05);
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < 2 * per_side; ++i) {
    const bool left = i % 2 == 0;
    out.push_back({left ? 1.0 + g(rng) : g(rng), left ? g(rng) : 1.0 + g(rng), g(rng)});
  }
  return out;
}

std::vector<int> iota_ids(std::size_t n, int start = 0) {
  std::vector<int> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = start + static_cast<int>(i);
  return ids;
}

}  // namespace

TEST_CASE("cosine similarity") {
  const std::vector<double> a{1, 2, 3}, b{-2, 0.5, 4}, z{0, 0, 0};
  CHECK(cosine_similarity(a, b) == doctest::Approx(oracle::cosine(a, b)).epsilon(1e-14));
  CHECK(cosine_similarity(a, b) == cosine_similarity(b, a));
  CHECK(cosine_similarity(a, a) <= 1.0);
  std::vector<double> scaled{2.5, 5.0, 7.5};
  CHECK(cosine_similarity(a, scaled) == doctest::Approx(1.0));
  CHECK_THROWS_AS(cosine_similarity(a, z), DegenerateDelta);
  CHECK_THROWS_AS(cosine_similarity(a, std::vector<double>{1, 2}), DomainError);
}

TEST_CASE("similarity matrix") {
  const auto d = random_deltas(5, 4, 3);
  const auto v = views(d);
  const auto m = similarity_matrix(v, {2, 5, 7, 8, 11});
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(m.at(i, i) == doctest::Approx(1.0));
    for (std::size_t j = 0; j < 5; ++j) {
      CHECK(m.at(i, j) == m.at(j, i));
      CHECK(m.at(i, j) == doctest::Approx(oracle::cosine(d[i], d[j])).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(similarity_matrix(v, {2, 1, 7, 8, 11}), DomainError);
  CHECK_THROWS_AS(similarity_matrix(v, {1, 2}), DomainError);
  auto with_zero = d;
  with_zero[2].assign(4, 0.0);
  CHECK_THROWS_AS(similarity_matrix(views(with_zero), iota_ids(5)), DegenerateDelta);
}

TEST_CASE("split check trichotomy") {
  const std::vector<std::vector<double>> d{{1, 0}, {-1, 0}, {0, 0.5}};
  const auto v = views(d);
  const std::vector<double> w{1, 1, 1};
  // weighted mean is (0, 1/6), max norm 1
  auto r = check_split(v, w, 0.2, 0.5);
  CHECK(r.decision == SplitDecision::kSplit);
  CHECK(r.mean_norm == doctest::Approx(1.0 / 6.0));
  CHECK(r.max_norm == doctest::Approx(1.0));
  CHECK(check_split(v, w, 0.1, 0.5).decision == SplitDecision::kContinue);
  CHECK(check_split(v, w, 0.2, 1.5).decision == SplitDecision::kStop);
  // stopping wins even when the mean is below eps1
  CHECK(check_split(v, w, 10.0, 1.5).decision == SplitDecision::kStop);
  // weights change the mean
  const std::vector<double> w2{3, 1, 0};
  CHECK(check_split(v, w2, 0.2, 0.5).mean_norm == doctest::Approx(0.5));
  CHECK_THROWS_AS(check_split({}, {}, 1, 1), DomainError);
  CHECK_THROWS_AS(check_split(v, std::vector<double>{0, 0, 0}, 1, 1), DomainError);
}

TEST_CASE("bipartition matches exhaustive oracle") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const std::size_t n = 2 + seed % 9;
    const auto d = random_deltas(n, 3, seed);
    const auto ids = iota_ids(n, 10);
    const auto m = similarity_matrix(views(d), ids);
    const auto got = bipartition(m);
    const auto want = oracle::best_split(d, ids);
    CHECK(got.max_cross == doctest::Approx(want.max_cross).epsilon(1e-12));
    CHECK(got.c1 == want.c1);
    CHECK(got.c2 == want.c2);
    CHECK(got.max_cross == doctest::Approx(max_cross_similarity(m, got.side1, got.side2)));
  }
}

TEST_CASE("single linkage reaches the optimal max-cross") {
  for (std::uint64_t seed = 100; seed < 130; ++seed) {
    const std::size_t n = 3 + seed % 10;
    const auto d = random_deltas(n, 4, seed);
    const auto m = similarity_matrix(views(d), iota_ids(n));
    const auto ex = bipartition(m, BipartitionMethod::kExhaustive);
    const auto sl = bipartition(m, BipartitionMethod::kSingleLinkage);
    CHECK(sl.max_cross == doctest::Approx(ex.max_cross).epsilon(1e-12));
    CHECK(sl.side1.size() + sl.side2.size() == n);
    CHECK(sl.side1.front() == 0);
    const auto cl = bipartition(m, BipartitionMethod::kCompleteLinkage);
    CHECK(cl.max_cross >= ex.max_cross - 1e-12);
  }
}

TEST_CASE("large clusters use single linkage") {
  const auto d = two_groups(15, 7);
  const auto m = similarity_matrix(views(d), iota_ids(30));
  const auto b = bipartition(m);
  std::vector<int> evens;
  for (int i = 0; i < 30; i += 2) evens.push_back(i);
  CHECK(b.c1 == evens);
  CHECK_THROWS_AS(bipartition(similarity_matrix(views({{1.0}}), {0})), DomainError);
}

TEST_CASE("gamma check") {
  SUBCASE("separated groups are accepted") {
    const auto d = two_groups(4, 2);
    const auto v = views(d);
    const auto m = similarity_matrix(v, iota_ids(8));
    const auto b = bipartition(m);
    const auto g = gamma_check(v, b, m);
    CHECK(g.accepted);
    CHECK(g.threshold == doctest::Approx(std::sqrt((1.0 - b.max_cross) / 2.0)));
    CHECK(g.gamma.size() == 8);
    CHECK(g.max_gamma < g.threshold);
  }
  SUBCASE("noise is rejected") {
    const auto d = random_deltas(8, 50, 5);
    const auto v = views(d);
    const auto m = similarity_matrix(v, iota_ids(8));
    CHECK_FALSE(gamma_check(v, bipartition(m), m).accepted);
  }
  SUBCASE("side mean of zero") {
    const std::vector<std::vector<double>> d{{1, 0}, {-1, 0}, {0, 1}, {0, 1.1}};
    const auto v = views(d);
    const auto m = similarity_matrix(v, iota_ids(4));
    Bipartition b;
    b.side1 = {0, 1};
    b.side2 = {2, 3};
    b.c1 = {0, 1};
    b.c2 = {2, 3};
    b.max_cross = max_cross_similarity(m, b.side1, b.side2);
    CHECK_THROWS_AS(gamma_check(v, b, m), DegenerateDelta);
  }
}

TEST_CASE("separation gap") {
  const auto d = two_groups(3, 1);
  const auto m = similarity_matrix(views(d), iota_ids(6));
  const std::vector<int> groups{0, 1, 0, 1, 0, 1};
  const auto s = cross_and_intra(m, groups);
  CHECK(s.gap == doctest::Approx(s.min_intra - s.max_cross));
  CHECK(s.gap > 0.5);
  const std::vector<int> one{0, 0, 0, 0, 0, 0};
  CHECK(cross_and_intra(m, one).max_cross == -1.0);
}
