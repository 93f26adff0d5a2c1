#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "uavpfl/config.hpp"
#include "uavpfl/geometry.hpp"
#include "uavpfl/random.hpp"
#include "uavpfl/round_schedule.hpp"

namespace uavpfl {

class SchedulingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ceil(alpha K) devices with the largest norms, largest first; ties go to
// the lower device index.
std::vector<int> top_alpha_select(std::span<const double> grad_norms, double alpha);
// Same rule for an explicit count.
std::vector<int> top_count_select(std::span<const double> grad_norms, int count);

// rank(k) in 1..K, 1 for the largest norm.
std::vector<int> device_ranks(std::span<const double> grad_norms);

// Uniform choice among UAVs serving at least one selected device.
// Throws SchedulingError("no aggregation this round") when there is none.
int random_designated_uav(const Topology& topo, std::span<const int> selected, Rng& rng);

// One leader's view in the joint device / UAV selection.
struct LeaderCandidate {
  int leader = 0;
  std::vector<int> uav_set;      // U_u, leader first, then in priority order
  std::vector<int> devices;      // first ceil(alpha K) covered devices
  double delay = 0.0;            // max U2U time + leader broadcast time (s)
  double importance = 0.0;       // sum of normalised importance over U_u
  double score = 0.0;            // Q_u = delay + lambda * importance
};

struct SelectionWeights {
  double importance_weight = 1.0;  // lambda; 0 reduces Q to pure delay
  bool importance_in_priority = true;
  bool devices_by_rank = true;     // otherwise ascending device index
};

inline constexpr double kNormalisationFloor = 1e-6;

// Min-max normalisation onto [floor, 1]; constant input maps to 1.
std::vector<double> normalise_unit(std::span<const double> values,
                                   double floor = kNormalisationFloor);

// Per-UAV cumulative importance I_u = sum of device ranks (smaller is better).
std::vector<double> cumulative_importance(const Topology& topo, std::span<const int> ranks);

// Evaluates every UAV as leader. Throws SchedulingError when all UAVs
// together cover fewer than ceil(alpha K) devices.
std::vector<LeaderCandidate> evaluate_leaders(std::span<const double> grad_norms,
                                              const Topology& topo, const ScenarioConfig& cfg,
                                              const SelectionWeights& weights);

RoundSchedule grad_energy_tradeoff_select(std::span<const double> grad_norms, const Topology& topo,
                                          const ScenarioConfig& cfg);

// Top-alpha devices, then the designated UAV minimising U2U + broadcast delay.
RoundSchedule max_grad_energy_opt_select(std::span<const double> grad_norms, const Topology& topo,
                                         const ScenarioConfig& cfg);

// Leader and UAV set by channel quality alone; devices filled in index order.
RoundSchedule energy_opt_only_select(const Topology& topo, const ScenarioConfig& cfg);

// Cross-round scheduler state.
struct SchedulerState {
  int round = 0;
  std::span<const double> grad_norms;
};

// Baselines and the default top-alpha + random UAV scheme.
RoundSchedule baseline_select(Policy policy, const SchedulerState& state, const Topology& topo,
                              const ScenarioConfig& cfg, Rng& rng);

// Dispatches on cfg.policy.
RoundSchedule select_round(const SchedulerState& state, const Topology& topo,
                           const ScenarioConfig& cfg, Rng& rng);

}  // namespace uavpfl
