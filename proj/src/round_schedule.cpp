#include "uavpfl/round_schedule.hpp"

#include <algorithm>
#include <stdexcept>

namespace uavpfl {

bool RoundSchedule::is_selected(int k) const {
  return std::find(selected.begin(), selected.end(), k) != selected.end();
}

int RoundSchedule::uploads_to(int u) const {
  int n = 0;
  for (int k = 0; k < num_devices; ++k) n += device_uploads(k, u) ? 1 : 0;
  return n;
}

int RoundSchedule::forwards_into(int u) const {
  int n = 0;
  for (int v = 0; v < num_uavs; ++v) n += uav_forwards(v, u) ? 1 : 0;
  return n;
}

RoundSchedule make_schedule(const Topology& topo, Policy policy, std::vector<int> selected,
                            std::optional<int> designated, bool full_model, bool per_uav_only) {
  const int num_uavs = topo.num_uavs();
  const int num_devices = topo.num_devices();
  if (per_uav_only && designated) {
    throw std::invalid_argument("per-UAV aggregation has no designated UAV");
  }
  if (designated && (*designated < 0 || *designated >= num_uavs)) {
    throw std::out_of_range("designated UAV index out of range");
  }

  RoundSchedule s;
  s.policy = policy;
  s.selected = std::move(selected);
  s.designated_uav = designated;
  s.full_model = full_model;
  s.per_uav_only = per_uav_only;
  s.num_devices = num_devices;
  s.num_uavs = num_uavs;
  s.rho_dev.assign(static_cast<std::size_t>(num_devices * num_uavs), 0);
  s.rho_uav.assign(static_cast<std::size_t>(num_uavs * num_uavs), 0);
  s.mu.assign(static_cast<std::size_t>(num_uavs), 0);

  std::vector<bool> has_upload(static_cast<std::size_t>(num_uavs), false);
  for (int k : s.selected) {
    if (k < 0 || k >= num_devices) throw std::out_of_range("selected device out of range");
    const int u = topo.serving_uav[static_cast<std::size_t>(k)];
    s.rho_dev[static_cast<std::size_t>(k * num_uavs + u)] = 1;
    has_upload[static_cast<std::size_t>(u)] = true;
  }
  if (designated && !s.selected.empty()) {
    const int lead = *designated;
    s.mu[static_cast<std::size_t>(lead)] = 1;
    for (int v = 0; v < num_uavs; ++v) {
      if (v != lead && has_upload[static_cast<std::size_t>(v)]) {
        s.rho_uav[static_cast<std::size_t>(v * num_uavs + lead)] = 1;
      }
    }
  }
  if (s.active_uavs.empty()) {
    for (int u = 0; u < num_uavs; ++u) {
      if (has_upload[static_cast<std::size_t>(u)] || (designated && *designated == u)) {
        s.active_uavs.push_back(u);
      }
    }
  }
  return s;
}

std::optional<std::string> schedule_violation(const RoundSchedule& s, const Topology& topo) {
  const int U = s.num_uavs;
  if (U != topo.num_uavs() || s.num_devices != topo.num_devices()) {
    return "schedule dimensions do not match the topology";
  }
  std::vector<int> sorted = s.selected;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    return "selected set contains duplicates";
  }
  for (int k = 0; k < s.num_devices; ++k) {
    const bool chosen = std::binary_search(sorted.begin(), sorted.end(), k);
    for (int u = 0; u < U; ++u) {
      const bool expect = chosen && topo.serving_uav[static_cast<std::size_t>(k)] == u;
      if (s.device_uploads(k, u) != expect) return "rho_dev disagrees with S_t and association";
    }
  }
  int designated = 0;
  for (int u = 0; u < U; ++u) designated += s.is_designated(u) ? 1 : 0;
  const bool hierarchical = !s.per_uav_only && !s.selected.empty();
  if (hierarchical && designated != 1) return "mu must mark exactly one UAV";
  if (!hierarchical && designated != 0) return "mu must be all zero without aggregation";
  for (int v = 0; v < U; ++v) {
    for (int u = 0; u < U; ++u) {
      bool expect = false;
      if (hierarchical && s.is_designated(u) && v != u) expect = s.uploads_to(v) > 0;
      if (s.uav_forwards(v, u) != expect) return "rho_uav disagrees with the designated UAV";
    }
  }
  return std::nullopt;
}

}  // namespace uavpfl
