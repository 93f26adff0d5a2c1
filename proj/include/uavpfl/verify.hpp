#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uavpfl/config.hpp"
#include "uavpfl/geometry.hpp"
#include "uavpfl/learning.hpp"
#include "uavpfl/round_schedule.hpp"

namespace uavpfl {

struct CheckResult {
  std::string name;
  bool passed = false;
  double worst = 0.0;      // largest observed deviation
  double tolerance = 0.0;
  double seconds = 0.0;
  double time_limit = 0.0;  // 0 = none
  std::string detail;
};

namespace reference {

// Direct re-derivation of the joint device / designated-UAV rule from the raw
// channel and delay expressions, enumerating every leader.
struct LeaderChoice {
  int leader = -1;
  std::vector<int> uav_set;
  std::vector<int> selected;
  double score = 0.0;
  std::vector<double> scores;  // per leader
};

LeaderChoice grad_energy_tradeoff(std::span<const double> grad_norms, const Topology& topo,
                                  const ScenarioConfig& cfg);

// Full sort by (norm desc, index asc), then the first ceil(percent K / 100).
std::vector<int> top_percent_by_sort(std::span<const double> norms, int percent);

}  // namespace reference

using BaseUpdateFn = std::function<Vector(const Vector&, std::span<const Vector>,
                                          const RoundSchedule&, std::span<const int>, double)>;

// Central differences (step 1e-6) against backpropagation on random models.
CheckResult check_gradients(std::uint64_t seed, int models = 20, int coords = 100);

// Hierarchical per-UAV sums followed by `update` against the single-server
// weighted step, on random rounds. Deviation is relative to the step size.
CheckResult check_aggregation(std::uint64_t seed, int rounds = 1000,
                              const BaseUpdateFn& update = {});

// Ledger of the 2-UAV / 4-device scenario against the committed oracle values.
const nlohmann::json& energy_micro_expected();
CheckResult check_energy_micro(const nlohmann::json& expected = energy_micro_expected());

CheckResult check_top_alpha(std::uint64_t seed, int instances = 1000);
CheckResult check_algorithm2(std::uint64_t seed, int instances = 500);

std::vector<CheckResult> run_verify_suite(std::uint64_t seed);
void print_check_table(std::ostream& out, const std::vector<CheckResult>& results);

}  // namespace uavpfl
