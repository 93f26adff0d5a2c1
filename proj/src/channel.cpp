#include "uavpfl/channel.hpp"

#include <cmath>
#include <numbers>

namespace uavpfl {

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double noise_psd_watts(const ScenarioConfig& cfg) {
  return dbm_to_watts(cfg.noise_psd_dbm_per_hz);
}

LinkGain LinkGain::from_linear(double linear) {
  if (!(linear > 0.0)) throw ChannelDomainError("linear gain must be positive");
  return {10.0 * std::log10(linear), linear};
}

AirToGroundTerms air_to_ground_terms(double distance_m, const ScenarioConfig& cfg) {
  const double altitude = cfg.uav_altitude_m;
  if (!(distance_m >= altitude)) {
    throw ChannelDomainError("D2U distance " + std::to_string(distance_m) +
                             " m is below the UAV altitude");
  }
  AirToGroundTerms t;
  t.elevation_deg = std::asin(altitude / distance_m) * 180.0 / std::numbers::pi;
  t.p_los = 1.0 / (1.0 + cfg.d2u_a * std::exp(-cfg.d2u_b * (t.elevation_deg - cfg.d2u_a)));
  t.p_nlos = 1.0 - t.p_los;
  const double free_space =
      20.0 * std::log10(4.0 * std::numbers::pi * cfg.carrier_freq_hz * distance_m / kSpeedOfLight);
  t.path_loss_los_db = free_space + cfg.eta_los_db;
  t.path_loss_nlos_db = free_space + cfg.eta_nlos_db;
  return t;
}

LinkGain d2u_gain(double distance_m, const ScenarioConfig& cfg) {
  const auto t = air_to_ground_terms(distance_m, cfg);
  return LinkGain::from_db(-(t.p_los * t.path_loss_los_db + t.p_nlos * t.path_loss_nlos_db));
}

LinkGain u2u_gain(double distance_m, const ScenarioConfig& cfg) {
  if (!(distance_m > 0.0)) throw ChannelDomainError("U2U distance must be positive");
  const double linear = db_to_linear(cfg.u2u_gain_db) / (distance_m * distance_m);
  return {10.0 * std::log10(linear), linear};
}

double link_rate(double tx_power_w, const LinkGain& gain, double bandwidth_hz,
                 const ScenarioConfig& cfg) {
  const double snr = tx_power_w * gain.gain_linear / (bandwidth_hz * noise_psd_watts(cfg));
  return bandwidth_hz * std::log2(1.0 + snr);
}

}  // namespace uavpfl
