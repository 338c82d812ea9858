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

#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "hcfl/rng.hpp"

namespace hcfl::radio {

/// Static per-client radio and compute attributes.
struct RadioProfile {
  double distance_m = 50.0;
  double g0_db = -35.0;
  double d0_m = 2.0;
  double p_tx_w = 0.01;
  double f_cpu_hz = 5e9;
  double cycles_per_sample = 20.0;
  double alpha = 2e-28;
};

struct CostLedger {
  double t_cmp = 0.0;
  double t_com = 0.0;
  double e_cmp = 0.0;
  double e_com = 0.0;
  double t_total = 0.0;
  double e_total = 0.0;
};

inline double dbm_to_watts(double dbm) { return std::pow(10.0, dbm / 10.0 - 3.0); }

/// |h|^2 = 10^(g0/10) (d0/d)^4.
double channel_gain(const RadioProfile& profile);

/// Unit-mean exponential (Rayleigh power) fading multiplier.
double fading_draw(Rng& rng);

/// beta W_k log2(1 + gain P / N0); N0 is a total noise power in watts.
double transmission_rate(double beta, double bandwidth_hz, double gain, double p_tx_w,
                         double noise_w);

/// L D_n B_n / f.
double comp_time(int epochs, double samples, double cycles_per_sample, double f_cpu_hz);

/// (alpha / 2) L f^2 D_n B_n.
double comp_energy(double alpha, double f_cpu_hz, int epochs, double samples,
                   double cycles_per_sample);

double comm_time(double z_bits, double rate_bps);
double comm_energy(double t_com, double p_tx_w);

/// Full per-round ledger for one client uploading a z-bit model over its
/// share beta of W_k.
CostLedger client_round_cost(const RadioProfile& profile, double gain, int epochs,
                             double samples, double z_bits, double beta, double bandwidth_hz,
                             double noise_w);

/// Slowest selected client.
double edge_round_latency(std::span<const CostLedger> selected);
/// Sum of the selected clients' e_total.
double edge_round_energy(std::span<const CostLedger> selected);

struct EdgeRoundCost {
  double t_edge = 0.0;
  double e_edge = 0.0;
  double t_cloud = 0.0;
  double e_cloud = 0.0;
  bool uploaded = false;
};

/// Edge -> cloud upload of z bits at `rate_bps` with transmit power p_w.
std::pair<double, double> cloud_upload_cost(double z_bits, double rate_bps, double p_w);

/// (T_r, E_r); cloud terms count only for edges that upload this round.
std::pair<double, double> system_round_totals(std::span<const EdgeRoundCost> edges);

}  // namespace hcfl::radio
