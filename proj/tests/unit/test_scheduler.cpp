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

#include <set>

#include "hcfl/errors.hpp"
#include "hcfl/scheduler.hpp"

using namespace hcfl;
using namespace hcfl::sched;

namespace {

std::vector<ClusterView> layout() {
  return {{0, {0, 1, 2}, false}, {1, {3, 4, 5}, true}, {2, {6, 7}, true}};
}

Availability all(std::size_t n) { return Availability(n, true); }

}  // namespace

TEST_CASE("fair phase takes every available member of active clusters") {
  auto avail = all(8);
  avail[1] = false;
  const auto c = layout();
  const auto out = select_fair(c, avail);
  CHECK(out.selected == std::vector<int>{0, 2});
  for (const auto& p : out.provenance) {
    CHECK(p.phase == Phase::kFair);
    CHECK(p.cluster == 0);
  }
}

TEST_CASE("greedy picks the fastest member, lowest id on ties") {
  const auto c = layout();
  const std::vector<double> t{9, 9, 9, 5, 2, 2, 1, 1};
  auto out = select_greedy(std::span(c).subspan(1), t, all(8));
  CHECK(out.selected == std::vector<int>{4, 6});
  auto avail = all(8);
  avail[4] = false;
  out = select_greedy(std::span(c).subspan(1), t, avail);
  CHECK(out.selected == std::vector<int>{5, 6});
  avail[6] = avail[7] = false;
  out = select_greedy(std::span(c).subspan(1), t, avail);
  CHECK(out.selected == std::vector<int>{5});
  CHECK(out.starved_clusters == std::vector<int>{2});
}

TEST_CASE("round robin cycles and skips unavailable members") {
  const std::vector<ClusterView> c{{1, {3, 4, 5}, true}};
  RoundRobinCursors cur;
  std::vector<int> seq;
  for (int r = 0; r < 4; ++r) seq.push_back(select_round_robin(c, cur, all(6)).selected.at(0));
  CHECK(seq == std::vector<int>{3, 4, 5, 3});
  auto avail = all(6);
  avail[4] = false;
  CHECK(select_round_robin(c, cur, avail).selected == std::vector<int>{5});
  CHECK(cur.position(1) == 0);
  avail.assign(6, false);
  CHECK(select_round_robin(c, cur, avail).starved_clusters == std::vector<int>{1});
}

TEST_CASE("random baseline") {
  std::vector<ClusterView> c{{0, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, false}};
  Rng a(3), b(3);
  const auto x = select_random_baseline(c, 4, all(10), a);
  const auto y = select_random_baseline(c, 4, all(10), b);
  CHECK(x.selected == y.selected);
  CHECK(x.selected.size() == 4);
  CHECK(std::set<int>(x.selected.begin(), x.selected.end()).size() == 4);
  auto avail = all(10);
  for (int i = 0; i < 8; ++i) avail[static_cast<std::size_t>(i)] = false;
  CHECK(select_random_baseline(c, 4, avail, a).selected == std::vector<int>{8, 9});
  CHECK_THROWS_AS(select_random_baseline(c, 11, all(10), a), DomainError);

  // every client is equally likely
  std::vector<int> hits(10, 0);
  Rng r(11);
  for (int t = 0; t < 5000; ++t)
    for (int id : select_random_baseline(c, 3, all(10), r).selected) ++hits[static_cast<std::size_t>(id)];
  for (int h : hits) CHECK(h == doctest::Approx(1500).epsilon(0.1));
}

TEST_CASE("composed selection") {
  const auto c = layout();
  const std::vector<double> t{1, 1, 1, 5, 2, 2, 4, 3};
  ComposeInputs in;
  in.t_total = t;
  auto out = compose_selection(c, all(8), in);
  CHECK(out.selected == std::vector<int>{0, 1, 2, 4, 7});
  CHECK(out.provenance[3].phase == Phase::kGreedy);
  CHECK(out.provenance[3].cluster == 1);

  RoundRobinCursors cur;
  in.policy = Policy::kRoundRobin;
  in.cursors = &cur;
  CHECK(compose_selection(c, all(8), in).selected == std::vector<int>{0, 1, 2, 3, 6});
  CHECK(compose_selection(c, all(8), in).selected == std::vector<int>{0, 1, 2, 4, 7});
  in.cursors = nullptr;
  CHECK_THROWS_AS(compose_selection(c, all(8), in), DomainError);

  in.policy = Policy::kFairOnly;
  CHECK(compose_selection(c, all(8), in).selected.size() == 8);

  in.policy = Policy::kRandomBaseline;
  CHECK_THROWS_AS(compose_selection(c, all(8), in), DomainError);
  Rng rng(1);
  in.rng = &rng;
  in.budget = 3;
  CHECK(compose_selection(c, all(8), in).selected.size() == 3);
}

TEST_CASE("merge keeps the selection sorted and rejects duplicates") {
  SelectionOutcome a, b;
  a.selected = {1, 5};
  a.provenance = {{1, 0, Phase::kFair}, {5, 0, Phase::kFair}};
  b.selected = {3};
  b.provenance = {{3, 1, Phase::kGreedy}};
  a.merge(b);
  CHECK(a.selected == std::vector<int>{1, 3, 5});
  CHECK(a.contains(3));
  CHECK_FALSE(a.contains(2));
  CHECK_THROWS_AS(a.merge(b), DomainError);
}

TEST_CASE("phase names") {
  CHECK(to_string(Phase::kRoundRobin) == "round_robin");
  CHECK(to_string(Phase::kRandom) == "random");
}
