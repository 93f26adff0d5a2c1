#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "uavpfl/config.hpp"
#include "uavpfl/geometry.hpp"

namespace uavpfl {

// Who uploads, who relays and who aggregates in one round. Indicator
// matrices are dense row-major byte arrays.
struct RoundSchedule {
  Policy policy = Policy::kTopAlphaRandomUav;
  std::vector<int> selected;             // S_t in selection order
  std::optional<int> designated_uav;     // u*, absent when nothing is aggregated across UAVs
  std::vector<int> active_uavs;          // U_{u*} (or every UAV holding a selected device)
  bool full_model = false;               // FedAvg family exchanges base + head
  bool per_uav_only = false;             // intra-UAV aggregation, no U2U stage

  int num_devices = 0;
  int num_uavs = 0;
  std::vector<std::uint8_t> rho_dev;     // [k * U + u]  device k uploads to UAV u
  std::vector<std::uint8_t> rho_uav;     // [u' * U + u] UAV u' forwards to UAV u
  std::vector<std::uint8_t> mu;          // [u] UAV u performs inter-UAV aggregation

  bool device_uploads(int k, int u) const {
    return rho_dev[static_cast<std::size_t>(k * num_uavs + u)] != 0;
  }
  bool uav_forwards(int from, int to) const {
    return rho_uav[static_cast<std::size_t>(from * num_uavs + to)] != 0;
  }
  bool is_designated(int u) const { return mu[static_cast<std::size_t>(u)] != 0; }
  bool is_selected(int k) const;

  // Number of selected devices served by UAV u.
  int uploads_to(int u) const;
  // Number of UAVs forwarding to u.
  int forwards_into(int u) const;
};

// Fills the indicators from (S_t, u*). With per_uav_only set the designated
// UAV must be empty and no forwarding happens.
RoundSchedule make_schedule(const Topology& topo, Policy policy, std::vector<int> selected,
                            std::optional<int> designated, bool full_model = false,
                            bool per_uav_only = false);

// Description of the first violated structural invariant, if any.
std::optional<std::string> schedule_violation(const RoundSchedule& s, const Topology& topo);

}  // namespace uavpfl
