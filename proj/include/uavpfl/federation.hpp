#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uavpfl/config.hpp"
#include "uavpfl/diagnostics.hpp"
#include "uavpfl/energetics.hpp"
#include "uavpfl/geometry.hpp"
#include "uavpfl/learning.hpp"
#include "uavpfl/round_schedule.hpp"

namespace uavpfl {

// g_u = sum_{k in S_t, k served by u} |D_k| g_k; zero for UAVs without uploads.
std::vector<Vector> intra_uav_aggregate(std::span<const Vector> device_grads,
                                        const RoundSchedule& schedule,
                                        std::span<const int> dataset_sizes);

// theta' = theta - eta * sum_u g_u / sum_{k in S_t} |D_k|; theta unchanged
// when S_t is empty.
Vector inter_uav_update(const Vector& theta, std::span<const Vector> uav_sums,
                        const RoundSchedule& schedule, std::span<const int> dataset_sizes,
                        double eta);

// Single-server reference: theta - eta * sum_S |D_k| g_k / sum_S |D_k|.
Vector flat_weighted_update(const Vector& theta, std::span<const Vector> device_grads,
                            std::span<const int> selected, std::span<const int> dataset_sizes,
                            double eta);

enum class Exchanged { kNone, kGradients, kModels };
std::string_view to_string(Exchanged e);

struct RoundRecord {
  int round = 0;
  std::vector<int> selected;
  std::optional<int> designated_uav;
  std::vector<int> active_uavs;
  Exchanged exchanged = Exchanged::kNone;
  RoundLedger ledger;
  double mean_train_loss = 0.0;
  double mean_accuracy = 0.0;  // last evaluated value on rounds that skip evaluation
  bool evaluated = false;
  std::optional<BoundEstimates> bounds;
};

struct TrainerState {
  SplitModel model;
  // Per-UAV bases under intra-UAV FedAvg; empty otherwise.
  std::vector<Vector> cluster_bases;
  Topology topology;
  int round = 0;
  double cumulative_energy = 0.0;
  double last_accuracy = 0.0;
  std::vector<RoundRecord> history;
};

class Trainer {
 public:
  explicit Trainer(const ScenarioConfig& cfg);
  Trainer(const ScenarioConfig& cfg, Topology topology, FederatedData data);

  // One pass of the round loop; appends to and returns the history entry.
  const RoundRecord& run_round();

  // Base that device k trains from and is evaluated with.
  const Vector& device_base(int k) const;

  const ScenarioConfig& config() const { return cfg_; }
  const TrainerState& state() const { return state_; }
  const FederatedData& data() const { return data_; }
  bool budget_exhausted() const { return state_.cumulative_energy > cfg_.energy_budget_j; }

 private:
  void init_model();
  void aggregate(const RoundSchedule& s, std::span<const LocalUpdate> updates);

  ScenarioConfig cfg_;
  FederatedData data_;
  std::vector<int> sizes_;
  TrainerState state_;
};

enum class StopReason { kMaxRounds, kBudget };
std::string_view to_string(StopReason r);

struct TrainingResult {
  std::vector<RoundRecord> rounds;
  SplitModel final_model;
  Topology initial_topology;
  StopReason stop_reason = StopReason::kMaxRounds;
};

// Loops run_round until max_rounds or until the cumulative energy exceeds the
// budget; the round that crosses the budget is kept.
TrainingResult run_training(const ScenarioConfig& cfg);
TrainingResult run_training(Trainer& trainer);

}  // namespace uavpfl
