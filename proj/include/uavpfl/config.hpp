#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace uavpfl {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PlacementMode { kGridLines, kPpp };

enum class Policy {
  kTopAlphaRandomUav,   // "Max-Grad + Random UAV", the default top-alpha scheme
  kGradEnergyTradeoff,  // joint device / designated-UAV selection
  kMaxGradEnergyOpt,
  kEnergyOptOnly,
  kRandomFedPer,
  kSequentialFedPer,
  kGradBasedFedAvg,
  kInterUavFedAvg,
  kIntraUavFedAvg,
  kLocalOnly,
};

std::string_view to_string(Policy policy);
std::string_view to_string(PlacementMode mode);
Policy parse_policy(std::string_view name);
PlacementMode parse_placement(std::string_view name);

// Whether the policy exchanges the whole model (FedAvg family) rather than
// base-part gradients.
bool is_fedavg_family(Policy policy);
// Whether |S_t| = ceil(alpha K) for the policy.
bool is_alpha_governed(Policy policy);

// ceil(alpha K), robust to representation error in products such as 0.3 * 10.
int selection_size(double alpha, int num_devices);

// Full scenario parameterisation. dB / dBm quantities are stored exactly as
// tabulated; conversion to linear units happens in channel/energetics.
struct ScenarioConfig {
  // Deployment
  int num_uavs = 12;
  int num_devices_per_uav = 2;
  double area_side_m = 10'000.0;
  double uav_altitude_m = 100.0;
  double uav_coverage_radius_m = 200.0;
  double min_uav_separation_m = 600.0;
  PlacementMode placement = PlacementMode::kGridLines;
  double ppp_intensity_per_m2 = 0.5e-4;
  bool mobile_devices = true;

  // Radio
  double carrier_freq_hz = 2e9;
  double bandwidth_hz = 80e6;
  double noise_psd_dbm_per_hz = -174.0;
  double d2u_a = 11.95;
  double d2u_b = 0.14;
  double eta_los_db = 3.0;
  double eta_nlos_db = 23.0;
  double u2u_gain_db = -31.5;
  double uav_tx_power_w = 5.0;
  double device_tx_power_dbm = 23.0;

  // UAV computation and hovering
  double uav_cycles = 20'000.0;
  double uav_cpu_freq_hz = 3e9;
  double energy_coeff = 1e-27;
  double hover_power_w = 52.1;

  // Transmitted model sizes (bits)
  double base_model_bits = 169'000.0 * 8.0;
  double total_model_bits = 172'400.0 * 8.0;

  // Local training
  double device_throughput = 500.0;  // samples / (epoch * s)
  int local_epochs = 1;
  int batch_size = 10;
  double lr_base = 0.005;
  double lr_head = 0.005;

  // Synthetic data and model
  int heterogeneity_c = 6;
  int num_classes = 10;
  int samples_per_device = 250;  // before the 80/20 train/test split
  int feature_dim = 32;
  int hidden_dim = 64;
  double class_separation = 1.0;
  double feature_noise = 1.0;
  int modes_per_class = 3;

  // Scheduling and stopping
  double alpha = 0.2;
  int max_rounds = 210;
  double energy_budget_j = 40'000.0;
  Policy policy = Policy::kTopAlphaRandomUav;
  double delay_importance_weight = 1.0;

  // Bookkeeping
  std::uint64_t seed = 1;
  int eval_interval = 1;
  bool diagnostics = false;
  int diag_batches = 8;
  int diag_subset_draws = 16;
  int diag_tracking_steps = 0;  // 0 skips the per-device tracking error

  int num_selected(int num_devices) const { return selection_size(alpha, num_devices); }

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

ScenarioConfig default_config();

// Throws ConfigError naming the first violated invariant.
void validate(const ScenarioConfig& cfg);

nlohmann::json to_json(const ScenarioConfig& cfg);
// Missing keys keep their defaults; unknown keys are rejected.
ScenarioConfig config_from_json(const nlohmann::json& doc);
ScenarioConfig load_config(const std::filesystem::path& path);
void save_config(const ScenarioConfig& cfg, const std::filesystem::path& path);

}  // namespace uavpfl
