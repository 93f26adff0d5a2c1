#include "uavpfl/config.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

namespace uavpfl {

namespace {

constexpr std::array<std::pair<Policy, std::string_view>, 10> kPolicyNames{{
    {Policy::kTopAlphaRandomUav, "top-alpha"},
    {Policy::kGradEnergyTradeoff, "grad-energy-tradeoff"},
    {Policy::kMaxGradEnergyOpt, "max-grad-energy-opt"},
    {Policy::kEnergyOptOnly, "energy-opt-only"},
    {Policy::kRandomFedPer, "random-fedper"},
    {Policy::kSequentialFedPer, "sequential-fedper"},
    {Policy::kGradBasedFedAvg, "grad-based-fedavg"},
    {Policy::kInterUavFedAvg, "inter-uav-fedavg"},
    {Policy::kIntraUavFedAvg, "intra-uav-fedavg"},
    {Policy::kLocalOnly, "local-only"},
}};

// Calls fn(key, member) for every serialisable field, in document order.
template <typename Cfg, typename Fn>
void visit_fields(Cfg& c, Fn&& fn) {
  fn("num_uavs", c.num_uavs);
  fn("num_devices_per_uav", c.num_devices_per_uav);
  fn("area_side_m", c.area_side_m);
  fn("uav_altitude_m", c.uav_altitude_m);
  fn("uav_coverage_radius_m", c.uav_coverage_radius_m);
  fn("min_uav_separation_m", c.min_uav_separation_m);
  fn("placement", c.placement);
  fn("ppp_intensity_per_m2", c.ppp_intensity_per_m2);
  fn("mobile_devices", c.mobile_devices);
  fn("carrier_freq_hz", c.carrier_freq_hz);
  fn("bandwidth_hz", c.bandwidth_hz);
  fn("noise_psd_dbm_per_hz", c.noise_psd_dbm_per_hz);
  fn("d2u_a", c.d2u_a);
  fn("d2u_b", c.d2u_b);
  fn("eta_los_db", c.eta_los_db);
  fn("eta_nlos_db", c.eta_nlos_db);
  fn("u2u_gain_db", c.u2u_gain_db);
  fn("uav_tx_power_w", c.uav_tx_power_w);
  fn("device_tx_power_dbm", c.device_tx_power_dbm);
  fn("uav_cycles", c.uav_cycles);
  fn("uav_cpu_freq_hz", c.uav_cpu_freq_hz);
  fn("energy_coeff", c.energy_coeff);
  fn("hover_power_w", c.hover_power_w);
  fn("base_model_bits", c.base_model_bits);
  fn("total_model_bits", c.total_model_bits);
  fn("device_throughput", c.device_throughput);
  fn("local_epochs", c.local_epochs);
  fn("batch_size", c.batch_size);
  fn("lr_base", c.lr_base);
  fn("lr_head", c.lr_head);
  fn("heterogeneity_c", c.heterogeneity_c);
  fn("num_classes", c.num_classes);
  fn("samples_per_device", c.samples_per_device);
  fn("feature_dim", c.feature_dim);
  fn("hidden_dim", c.hidden_dim);
  fn("class_separation", c.class_separation);
  fn("feature_noise", c.feature_noise);
  fn("modes_per_class", c.modes_per_class);
  fn("alpha", c.alpha);
  fn("max_rounds", c.max_rounds);
  fn("energy_budget_j", c.energy_budget_j);
  fn("policy", c.policy);
  fn("delay_importance_weight", c.delay_importance_weight);
  fn("seed", c.seed);
  fn("eval_interval", c.eval_interval);
  fn("diagnostics", c.diagnostics);
  fn("diag_batches", c.diag_batches);
  fn("diag_subset_draws", c.diag_subset_draws);
  fn("diag_tracking_steps", c.diag_tracking_steps);
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

template <typename T>
void read_field(const nlohmann::json& doc, const char* key, T& out) {
  const auto& v = doc.at(key);
  if constexpr (std::is_same_v<T, Policy>) {
    out = parse_policy(v.get<std::string>());
  } else if constexpr (std::is_same_v<T, PlacementMode>) {
    out = parse_placement(v.get<std::string>());
  } else if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw ConfigError(std::string(key) + " must be a boolean");
    out = v.get<bool>();
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) throw ConfigError(std::string(key) + " must be an integer");
    out = v.get<T>();
  } else {
    if (!v.is_number()) throw ConfigError(std::string(key) + " must be a number");
    out = v.get<T>();
  }
}

}  // namespace

std::string_view to_string(Policy policy) {
  for (const auto& [p, name] : kPolicyNames) {
    if (p == policy) return name;
  }
  return "unknown";
}

std::string_view to_string(PlacementMode mode) {
  return mode == PlacementMode::kPpp ? "ppp" : "grid";
}

Policy parse_policy(std::string_view name) {
  for (const auto& [p, n] : kPolicyNames) {
    if (n == name) return p;
  }
  throw ConfigError("unknown policy '" + std::string(name) + "'");
}

PlacementMode parse_placement(std::string_view name) {
  if (name == "grid" || name == "grid-lines") return PlacementMode::kGridLines;
  if (name == "ppp") return PlacementMode::kPpp;
  throw ConfigError("unknown placement '" + std::string(name) + "'");
}

bool is_fedavg_family(Policy policy) {
  return policy == Policy::kGradBasedFedAvg || policy == Policy::kInterUavFedAvg ||
         policy == Policy::kIntraUavFedAvg;
}

bool is_alpha_governed(Policy policy) {
  switch (policy) {
    case Policy::kTopAlphaRandomUav:
    case Policy::kGradEnergyTradeoff:
    case Policy::kMaxGradEnergyOpt:
    case Policy::kEnergyOptOnly:
    case Policy::kRandomFedPer:
    case Policy::kSequentialFedPer:
      return true;
    default:
      return false;
  }
}

int selection_size(double alpha, int num_devices) {
  const double scaled = alpha * static_cast<double>(num_devices);
  return static_cast<int>(std::ceil(scaled - 1e-9));
}

ScenarioConfig default_config() { return ScenarioConfig{}; }

void validate(const ScenarioConfig& c) {
  require(c.alpha > 0.0 && c.alpha <= 1.0, "alpha must lie in (0,1]");
  require(c.num_uavs > 0, "num_uavs must be positive");
  require(c.num_devices_per_uav > 0, "num_devices_per_uav must be positive");
  require(c.area_side_m > 0, "area_side_m must be positive");
  require(c.uav_altitude_m > 0, "uav_altitude_m must be positive");
  require(c.uav_coverage_radius_m > 0, "uav_coverage_radius_m must be positive");
  require(c.min_uav_separation_m > 0, "min_uav_separation_m must be positive");
  require(c.ppp_intensity_per_m2 > 0, "ppp_intensity_per_m2 must be positive");
  require(c.carrier_freq_hz > 0, "carrier_freq_hz must be positive");
  require(c.bandwidth_hz > 0, "bandwidth_hz must be positive");
  require(c.d2u_a > 0 && c.d2u_b > 0, "d2u_a and d2u_b must be positive");
  require(c.uav_tx_power_w > 0, "uav_tx_power_w must be positive");
  require(c.uav_cycles > 0, "uav_cycles must be positive");
  require(c.uav_cpu_freq_hz > 0, "uav_cpu_freq_hz must be positive");
  require(c.energy_coeff > 0, "energy_coeff must be positive");
  require(c.hover_power_w >= 0, "hover_power_w must be non-negative");
  require(c.base_model_bits > 0, "base_model_bits must be positive");
  require(c.base_model_bits <= c.total_model_bits,
          "base_model_bits must not exceed total_model_bits");
  require(c.device_throughput > 0, "device_throughput must be positive");
  require(c.local_epochs > 0, "local_epochs must be positive");
  require(c.batch_size > 0, "batch_size must be positive");
  require(c.lr_base >= 0 && c.lr_head >= 0, "learning rates must be non-negative");
  require(c.num_classes > 1, "num_classes must be at least 2");
  require(c.heterogeneity_c > 0 && c.heterogeneity_c <= c.num_classes,
          "heterogeneity_c must lie in [1, num_classes]");
  require(c.samples_per_device >= 5, "samples_per_device must be at least 5");
  require(c.feature_dim > 0 && c.hidden_dim > 0, "feature_dim and hidden_dim must be positive");
  require(c.class_separation > 0 && c.feature_noise >= 0,
          "class_separation must be positive and feature_noise non-negative");
  require(c.modes_per_class > 0, "modes_per_class must be positive");
  require(c.max_rounds >= 0, "max_rounds must be non-negative");
  require(c.energy_budget_j > 0, "energy_budget_j must be positive");
  require(c.delay_importance_weight >= 0, "delay_importance_weight must be non-negative");
  require(c.eval_interval > 0, "eval_interval must be positive");
  require(c.diag_batches > 0 && c.diag_subset_draws > 1,
          "diag_batches must be positive and diag_subset_draws at least 2");
  require(c.diag_tracking_steps >= 0, "diag_tracking_steps must be non-negative");
}

nlohmann::json to_json(const ScenarioConfig& cfg) {
  nlohmann::json doc = nlohmann::json::object();
  visit_fields(cfg, [&](const char* key, const auto& value) {
    using T = std::decay_t<decltype(value)>;
    if constexpr (std::is_same_v<T, Policy> || std::is_same_v<T, PlacementMode>) {
      doc[key] = std::string(to_string(value));
    } else {
      doc[key] = value;
    }
  });
  return doc;
}

ScenarioConfig config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
  ScenarioConfig cfg;
  std::set<std::string> known;
  visit_fields(cfg, [&](const char* key, auto& value) {
    known.insert(key);
    if (doc.contains(key)) read_field(doc, key, value);
  });
  for (const auto& item : doc.items()) {
    if (!known.contains(item.key())) {
      throw ConfigError("unknown configuration key '" + item.key() + "'");
    }
  }
  validate(cfg);
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("malformed configuration file " + path.string() + ": " + e.what());
  }
  return config_from_json(doc);
}

void save_config(const ScenarioConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write configuration file " + path.string());
  out << to_json(cfg).dump(2) << '\n';
}

}  // namespace uavpfl
