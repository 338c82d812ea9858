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

// Random cross-check of every cost formula against the oracle, over draws
// inside the simulation parameter ranges.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "hcfl/radio.hpp"
#include "oracles.hpp"

namespace check {

struct RadioReport {
  double max_rel_error = 0.0;
  std::string worst;
  int comparisons = 0;
};

inline void rel(RadioReport& r, const char* what, double got, double want) {
  const double e = want == 0.0 ? std::abs(got) : std::abs(got - want) / std::abs(want);
  ++r.comparisons;
  if (e > r.max_rel_error || std::isnan(e)) {
    r.max_rel_error = std::isnan(e) ? INFINITY : e;
    r.worst = what;
  }
}

inline RadioReport radio_against_oracle(int draws, std::uint64_t seed) {
  using namespace hcfl::radio;
  std::mt19937_64 rng(seed);
  auto u = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  RadioReport r;
  for (int i = 0; i < draws; ++i) {
    RadioProfile p;
    p.distance_m = u(20.0, 100.0);
    p.p_tx_w = oracle::dbm_to_w(u(-10.0, 20.0));
    p.f_cpu_hz = u(1e9, 9e9);
    p.cycles_per_sample = 20.0;
    const double d = std::floor(u(32.0, 1000.0));
    const int epochs = 10;
    const double z = 64.0 + 32.0 * std::floor(u(10.0, 5000.0));
    const int selected = 1 + static_cast<int>(u(0.0, 40.0));
    const double beta = 1.0 / selected;
    const double w = 10e6 / (1 + static_cast<int>(u(0.0, 3.0)));
    const double n0 = 1e-8;
    const double dbm = u(-10.0, 20.0);

    rel(r, "dbm_to_watts", dbm_to_watts(dbm), oracle::dbm_to_w(dbm));
    const double h = channel_gain(p);
    rel(r, "channel_gain", h, oracle::gain(-35.0, 2.0, p.distance_m));
    const double rate = transmission_rate(beta, w, h, p.p_tx_w, n0);
    rel(r, "transmission_rate", rate, oracle::rate(beta, w, h, p.p_tx_w, n0));
    rel(r, "comp_time", comp_time(epochs, d, 20.0, p.f_cpu_hz), oracle::t_cmp(epochs, d, 20.0, p.f_cpu_hz));
    rel(r, "comp_energy", comp_energy(p.alpha, p.f_cpu_hz, epochs, d, 20.0),
        oracle::e_cmp(p.alpha, p.f_cpu_hz, epochs, d, 20.0));
    const double tc = comm_time(z, rate);
    rel(r, "comm_time", tc, oracle::t_com(z, oracle::rate(beta, w, h, p.p_tx_w, n0)));
    rel(r, "comm_energy", comm_energy(tc, p.p_tx_w), oracle::e_com(tc, p.p_tx_w));

    const auto ledger = client_round_cost(p, h, epochs, d, z, beta, w, n0);
    const double o_t = oracle::t_cmp(epochs, d, 20.0, p.f_cpu_hz) +
                       oracle::t_com(z, oracle::rate(beta, w, h, p.p_tx_w, n0));
    const double o_e = oracle::e_cmp(p.alpha, p.f_cpu_hz, epochs, d, 20.0) +
                       oracle::e_com(oracle::t_com(z, oracle::rate(beta, w, h, p.p_tx_w, n0)), p.p_tx_w);
    rel(r, "client t_total", ledger.t_total, o_t);
    rel(r, "client e_total", ledger.e_total, o_e);

    // a small system: 1-3 edges with 1-5 clients each
    const int k_edges = 1 + static_cast<int>(u(0.0, 3.0));
    std::vector<EdgeRoundCost> edges;
    std::vector<oracle::EdgeTrace> traces;
    for (int k = 0; k < k_edges; ++k) {
      std::vector<CostLedger> ledgers;
      oracle::EdgeTrace t;
      const int n = 1 + static_cast<int>(u(0.0, 5.0));
      for (int c = 0; c < n; ++c) {
        RadioProfile q = p;
        q.distance_m = u(20.0, 100.0);
        q.p_tx_w = oracle::dbm_to_w(u(-10.0, 20.0));
        q.f_cpu_hz = u(1e9, 9e9);
        const double dq = std::floor(u(32.0, 1000.0));
        const double hq = oracle::gain(-35.0, 2.0, q.distance_m);
        ledgers.push_back(client_round_cost(q, channel_gain(q), epochs, dq, z, 1.0 / n, w, n0));
        const double rq = oracle::rate(1.0 / n, w, hq, q.p_tx_w, n0);
        t.client_t.push_back(oracle::t_cmp(epochs, dq, 20.0, q.f_cpu_hz) + oracle::t_com(z, rq));
        t.client_e.push_back(oracle::e_cmp(q.alpha, q.f_cpu_hz, epochs, dq, 20.0) +
                             oracle::e_com(oracle::t_com(z, rq), q.p_tx_w));
      }
      EdgeRoundCost e;
      e.t_edge = edge_round_latency(ledgers);
      e.e_edge = edge_round_energy(ledgers);
      rel(r, "edge latency", e.t_edge, *std::max_element(t.client_t.begin(), t.client_t.end()));
      double es = 0.0;
      for (double x : t.client_e) es += x;
      rel(r, "edge energy", e.e_edge, es);
      t.upload = u(0.0, 1.0) < 0.5;
      t.z = z * (1 + static_cast<int>(u(0.0, 4.0)));
      t.rate = u(1e6, 1e8);
      t.power = u(0.1, 2.0);
      if (t.upload) {
        std::tie(e.t_cloud, e.e_cloud) = cloud_upload_cost(t.z, t.rate, t.power);
        e.uploaded = true;
        rel(r, "cloud time", e.t_cloud, t.z / t.rate);
        rel(r, "cloud energy", e.e_cloud, t.z / t.rate * t.power);
      }
      edges.push_back(e);
      traces.push_back(t);
    }
    const auto [tr, er] = system_round_totals(edges);
    const auto [otr, oer] = oracle::system_totals(traces);
    rel(r, "T_r", tr, otr);
    rel(r, "E_r", er, oer);
  }
  return r;
}

}  // namespace check
