#pragma once

#include <stdexcept>

#include "uavpfl/config.hpp"

namespace uavpfl {

class ChannelDomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline constexpr double kSpeedOfLight = 299'792'458.0;

double db_to_linear(double db);
double dbm_to_watts(double dbm);
// N0 in W/Hz.
double noise_psd_watts(const ScenarioConfig& cfg);

struct LinkGain {
  double gain_db = 0.0;
  double gain_linear = 0.0;

  static LinkGain from_db(double db) { return {db, db_to_linear(db)}; }
  static LinkGain from_linear(double linear);
};

// Intermediate terms of the air-to-ground model, exposed for inspection.
struct AirToGroundTerms {
  double elevation_deg = 0.0;
  double p_los = 0.0;
  double p_nlos = 0.0;
  double path_loss_los_db = 0.0;
  double path_loss_nlos_db = 0.0;
};

// Probabilistic LoS/NLoS model; elevation enters the sigmoid in degrees.
// Throws ChannelDomainError when d < L_u.
AirToGroundTerms air_to_ground_terms(double distance_m, const ScenarioConfig& cfg);
LinkGain d2u_gain(double distance_m, const ScenarioConfig& cfg);

// Free-space G d^-2. Throws ChannelDomainError when d <= 0.
LinkGain u2u_gain(double distance_m, const ScenarioConfig& cfg);

// Shannon rate over an equal bandwidth share, noise N0 * share.
double link_rate(double tx_power_w, const LinkGain& gain, double bandwidth_hz,
                 const ScenarioConfig& cfg);

}  // namespace uavpfl
