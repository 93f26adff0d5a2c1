#include "uavpfl/energetics.hpp"

#include <algorithm>

#include "uavpfl/channel.hpp"

namespace uavpfl {

namespace {

double max_or_zero(const std::vector<double>& v) {
  return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

double sum(const std::vector<double>& v) {
  double total = 0.0;
  for (double x : v) total += x;
  return total;
}

}  // namespace

double exchanged_bits(const RoundSchedule& s, const ScenarioConfig& cfg) {
  return s.full_model ? cfg.total_model_bits : cfg.base_model_bits;
}

double local_training_time(int dataset_size, const ScenarioConfig& cfg) {
  return cfg.local_epochs * static_cast<double>(dataset_size) / cfg.device_throughput;
}

std::vector<double> aggregated_models(const RoundSchedule& s) {
  std::vector<double> models(static_cast<std::size_t>(s.num_uavs), 0.0);
  for (int u = 0; u < s.num_uavs; ++u) {
    double n = s.uploads_to(u);
    if (s.is_designated(u)) n += s.forwards_into(u);
    models[static_cast<std::size_t>(u)] = n;
  }
  return models;
}

std::vector<double> aggregation_energy(const RoundSchedule& s, const ScenarioConfig& cfg) {
  const double per_model = cfg.energy_coeff * cfg.uav_cycles * cfg.uav_cpu_freq_hz * cfg.uav_cpu_freq_hz;
  auto e = aggregated_models(s);
  for (auto& x : e) x *= per_model;
  return e;
}

std::vector<double> aggregation_time(const RoundSchedule& s, const ScenarioConfig& cfg) {
  auto t = aggregated_models(s);
  for (auto& x : t) x = cfg.uav_cycles * x / cfg.uav_cpu_freq_hz;
  return t;
}

std::map<int, double> upload_time(const RoundSchedule& s, const Topology& topo,
                                  const ScenarioConfig& cfg) {
  std::map<int, double> out;
  if (s.selected.empty()) return out;
  const double share = cfg.bandwidth_hz / static_cast<double>(s.selected.size());
  const double power = dbm_to_watts(cfg.device_tx_power_dbm);
  const double bits = exchanged_bits(s, cfg);
  for (int k : s.selected) {
    const int u = topo.serving_uav[static_cast<std::size_t>(k)];
    const auto gain = d2u_gain(topo.d2u_distance(k, u), cfg);
    out[k] = bits / link_rate(power, gain, share, cfg);
  }
  return out;
}

std::vector<double> u2u_transmit_time(const RoundSchedule& s, const Topology& topo,
                                      const ScenarioConfig& cfg) {
  std::vector<double> t(static_cast<std::size_t>(s.num_uavs), 0.0);
  if (!s.designated_uav) return t;
  const int lead = *s.designated_uav;
  const int pairs = s.forwards_into(lead);
  if (pairs == 0) return t;
  const double share = cfg.bandwidth_hz / pairs;
  const double bits = exchanged_bits(s, cfg);
  for (int u = 0; u < s.num_uavs; ++u) {
    if (!s.uav_forwards(u, lead)) continue;
    const auto gain = u2u_gain(topo.u2u_distance(u, lead), cfg);
    t[static_cast<std::size_t>(u)] = bits / link_rate(cfg.uav_tx_power_w, gain, share, cfg);
  }
  return t;
}

std::vector<double> broadcast_time(const RoundSchedule& s, const Topology& topo,
                                   const ScenarioConfig& cfg) {
  const int U = s.num_uavs;
  std::vector<double> t(static_cast<std::size_t>(U), 0.0);
  if (s.selected.empty()) return t;
  const double bits = exchanged_bits(s, cfg);
  const double bandwidth = cfg.bandwidth_hz;
  const double power = cfg.uav_tx_power_w;

  std::vector<bool> holds_model(static_cast<std::size_t>(U), false);
  if (s.per_uav_only) {
    for (int u = 0; u < U; ++u) holds_model[static_cast<std::size_t>(u)] = s.uploads_to(u) > 0;
  } else if (s.designated_uav) {
    const int lead = *s.designated_uav;
    holds_model[static_cast<std::size_t>(lead)] = true;
    for (int u = 0; u < U; ++u) {
      if (s.uav_forwards(u, lead)) holds_model[static_cast<std::size_t>(u)] = true;
    }
  }

  for (int u = 0; u < U; ++u) {
    double to_devices = 0.0;
    if (holds_model[static_cast<std::size_t>(u)]) {
      for (int k : topo.served[static_cast<std::size_t>(u)]) {
        const auto gain = d2u_gain(topo.d2u_distance(k, u), cfg);
        to_devices = std::max(to_devices, bits / link_rate(power, gain, bandwidth, cfg));
      }
    }
    double to_uavs = 0.0;
    if (s.is_designated(u)) {
      for (int v = 0; v < U; ++v) {
        if (!s.uav_forwards(v, u)) continue;
        const auto gain = u2u_gain(topo.u2u_distance(v, u), cfg);
        to_uavs = std::max(to_uavs, bits / link_rate(power, gain, bandwidth, cfg));
      }
    }
    t[static_cast<std::size_t>(u)] = to_devices + to_uavs;
  }
  return t;
}

RoundLedger round_ledger(const RoundSchedule& s, const Topology& topo,
                         std::span<const int> dataset_sizes, const ScenarioConfig& cfg,
                         double prev_cumulative) {
  RoundLedger led;
  for (int size : dataset_sizes) {
    led.t_local = std::max(led.t_local, local_training_time(size, cfg));
  }
  for (const auto& [k, t] : upload_time(s, topo, cfg)) led.t_upload = std::max(led.t_upload, t);

  const auto t_agg = aggregation_time(s, cfg);
  const auto t_u2u = u2u_transmit_time(s, topo, cfg);
  const auto t_bc = broadcast_time(s, topo, cfg);
  led.t_agg = max_or_zero(t_agg);
  led.t_u2u = max_or_zero(t_u2u);
  led.t_broadcast = max_or_zero(t_bc);
  led.t_hover = led.t_local + led.t_upload + led.t_agg + led.t_u2u + led.t_broadcast;
  led.e_hover = cfg.hover_power_w * led.t_hover;

  led.e_agg_per_uav = aggregation_energy(s, cfg);
  led.e_u2u_per_uav = t_u2u;
  for (auto& e : led.e_u2u_per_uav) e *= cfg.uav_tx_power_w;
  led.e_broadcast_per_uav = t_bc;
  for (auto& e : led.e_broadcast_per_uav) e *= cfg.uav_tx_power_w;

  led.e_agg = sum(led.e_agg_per_uav);
  led.e_u2u = sum(led.e_u2u_per_uav);
  led.e_broadcast = sum(led.e_broadcast_per_uav);
  led.e_round = s.num_uavs * led.e_hover + led.e_agg + led.e_u2u + led.e_broadcast;
  led.cumulative_energy = prev_cumulative + led.e_round;
  led.budget_exceeded = led.cumulative_energy > cfg.energy_budget_j;
  return led;
}

}  // namespace uavpfl
