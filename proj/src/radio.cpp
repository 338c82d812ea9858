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

#include "hcfl/radio.hpp"

#include <algorithm>
#include <cmath>

#include "hcfl/errors.hpp"

namespace hcfl::radio {

double channel_gain(const RadioProfile& profile) {
  if (!(profile.distance_m > 0.0)) throw DomainError("channel_gain: distance must be > 0");
  const double ratio = profile.d0_m / profile.distance_m;
  return std::pow(10.0, profile.g0_db / 10.0) * ratio * ratio * ratio * ratio;
}

double fading_draw(Rng& rng) { return std::exponential_distribution<double>(1.0)(rng); }

double transmission_rate(double beta, double bandwidth_hz, double gain, double p_tx_w,
                         double noise_w) {
  if (!(beta > 0.0 && beta <= 1.0)) throw DomainError("transmission_rate: beta outside (0,1]");
  if (!(bandwidth_hz > 0.0)) throw DomainError("transmission_rate: bandwidth must be > 0");
  if (!(noise_w > 0.0)) throw DomainError("transmission_rate: noise power must be > 0");
  return beta * bandwidth_hz * std::log2(1.0 + gain * p_tx_w / noise_w);
}

double comp_time(int epochs, double samples, double cycles_per_sample, double f_cpu_hz) {
  return static_cast<double>(epochs) * samples * cycles_per_sample / f_cpu_hz;
}

double comp_energy(double alpha, double f_cpu_hz, int epochs, double samples,
                   double cycles_per_sample) {
  return alpha / 2.0 * static_cast<double>(epochs) * f_cpu_hz * f_cpu_hz * samples *
         cycles_per_sample;
}

double comm_time(double z_bits, double rate_bps) {
  if (!(rate_bps > 0.0)) throw DomainError("comm_time: rate must be > 0 (client unreachable)");
  return z_bits / rate_bps;
}

double comm_energy(double t_com, double p_tx_w) { return t_com * p_tx_w; }

CostLedger client_round_cost(const RadioProfile& profile, double gain, int epochs,
                             double samples, double z_bits, double beta, double bandwidth_hz,
                             double noise_w) {
  CostLedger c;
  c.t_cmp = comp_time(epochs, samples, profile.cycles_per_sample, profile.f_cpu_hz);
  c.e_cmp = comp_energy(profile.alpha, profile.f_cpu_hz, epochs, samples,
                        profile.cycles_per_sample);
  const double rate = transmission_rate(beta, bandwidth_hz, gain, profile.p_tx_w, noise_w);
  c.t_com = comm_time(z_bits, rate);
  c.e_com = comm_energy(c.t_com, profile.p_tx_w);
  c.t_total = c.t_cmp + c.t_com;
  c.e_total = c.e_cmp + c.e_com;
  return c;
}

double edge_round_latency(std::span<const CostLedger> selected) {
  if (selected.empty()) throw DomainError("edge_round_latency: empty selection");
  double t = selected.front().t_total;
  for (const auto& c : selected) t = std::max(t, c.t_total);
  return t;
}

double edge_round_energy(std::span<const CostLedger> selected) {
  double e = 0.0;
  for (const auto& c : selected) e += c.e_total;
  return e;
}

std::pair<double, double> cloud_upload_cost(double z_bits, double rate_bps, double p_w) {
  const double t = comm_time(z_bits, rate_bps);
  return {t, t * p_w};
}

std::pair<double, double> system_round_totals(std::span<const EdgeRoundCost> edges) {
  double t = 0.0;
  double e = 0.0;
  for (const auto& k : edges) {
    const double tc = k.uploaded ? k.t_cloud : 0.0;
    const double ec = k.uploaded ? k.e_cloud : 0.0;
    t = std::max(t, tc + k.t_edge);
    e += ec + k.e_edge;
  }
  return {t, e};
}

}  // namespace hcfl::radio
