#pragma once

#include <map>
#include <span>
#include <vector>

#include "uavpfl/config.hpp"
#include "uavpfl/geometry.hpp"
#include "uavpfl/round_schedule.hpp"

namespace uavpfl {

// Per-round time and energy breakdown. Scalar times are the maxima that enter
// the hovering time; scalar energies are sums over UAVs.
struct RoundLedger {
  double t_local = 0.0;
  double t_upload = 0.0;
  double t_agg = 0.0;
  double t_u2u = 0.0;
  double t_broadcast = 0.0;
  double t_hover = 0.0;
  double e_hover = 0.0;      // per UAV, P_h * T_h
  double e_agg = 0.0;
  double e_u2u = 0.0;
  double e_broadcast = 0.0;
  double e_round = 0.0;      // E(t)
  double cumulative_energy = 0.0;
  bool budget_exceeded = false;

  std::vector<double> e_agg_per_uav;
  std::vector<double> e_u2u_per_uav;
  std::vector<double> e_broadcast_per_uav;

  // UAV communication energy (U2U + broadcast), excluding hovering.
  double communication_energy() const { return e_u2u + e_broadcast; }
};

// Bits on the air for one model transfer under this schedule.
double exchanged_bits(const RoundSchedule& s, const ScenarioConfig& cfg);

double local_training_time(int dataset_size, const ScenarioConfig& cfg);

// Number of models aggregated at each UAV: local uploads plus, at u*, the
// forwarded intermediate sums.
std::vector<double> aggregated_models(const RoundSchedule& s);
std::vector<double> aggregation_energy(const RoundSchedule& s, const ScenarioConfig& cfg);
std::vector<double> aggregation_time(const RoundSchedule& s, const ScenarioConfig& cfg);

// Upload delay of each scheduled device over B / |S_t|.
std::map<int, double> upload_time(const RoundSchedule& s, const Topology& topo,
                                  const ScenarioConfig& cfg);

// U2U delay of each forwarding UAV towards u*, bandwidth split over the
// forwarding UAVs; zero for UAVs that forward nothing.
std::vector<double> u2u_transmit_time(const RoundSchedule& s, const Topology& topo,
                                      const ScenarioConfig& cfg);

// Synchronisation delay of each UAV over the full bandwidth. A UAV that holds
// the new model this round (u*, the forwarding UAVs, or every uploading UAV
// under per-UAV aggregation) sends it to its served devices; u* additionally
// sends it back to the forwarding UAVs.
std::vector<double> broadcast_time(const RoundSchedule& s, const Topology& topo,
                                   const ScenarioConfig& cfg);

// Assembles every component. dataset_sizes holds |D_k| for all K devices,
// all of which train locally every round.
RoundLedger round_ledger(const RoundSchedule& s, const Topology& topo,
                         std::span<const int> dataset_sizes, const ScenarioConfig& cfg,
                         double prev_cumulative);

}  // namespace uavpfl
