#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "uavpfl/config.hpp"
#include "uavpfl/random.hpp"

namespace uavpfl {

class PlacementError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  friend bool operator==(const Point3&, const Point3&) = default;
};

double horizontal_distance(const Point2& a, const Point3& b);
double horizontal_distance(const Point3& a, const Point3& b);

// UAVs hover at z = L_u, devices sit on the ground. Association is fixed for
// the lifetime of a run; mobility only moves devices inside their serving disk.
struct Topology {
  std::vector<Point3> uavs;
  std::vector<Point2> devices;
  std::vector<int> serving_uav;           // device -> UAV
  std::vector<std::vector<int>> served;   // UAV -> devices (ascending)

  int num_uavs() const { return static_cast<int>(uavs.size()); }
  int num_devices() const { return static_cast<int>(devices.size()); }

  // d_{k,u}, slant range device k -> UAV u.
  double d2u_distance(int device, int uav) const;
  // d_{u,u'}; UAVs share the same altitude.
  double u2u_distance(int uav_a, int uav_b) const;

  friend bool operator==(const Topology&, const Topology&) = default;
};

// Builds the association lists from the device -> UAV map.
Topology make_topology(std::vector<Point3> uavs, std::vector<Point2> devices,
                       std::vector<int> serving);

// Evenly splits the UAVs across a horizontal, a vertical and a diagonal line
// and jitters each one inside its slot until every pair is at least
// min_uav_separation_m apart. Throws PlacementError after 10,000 attempts.
std::vector<Point3> place_uavs_grid_lines(const ScenarioConfig& cfg, Rng& rng);

// num_devices_per_uav devices uniform over every coverage disk.
Topology place_devices_uniform(const ScenarioConfig& cfg, std::vector<Point3> uavs, Rng& rng);

// Homogeneous PPP restricted to the union of coverage disks. Throws
// PlacementError when no device is realised.
Topology place_devices_ppp(const ScenarioConfig& cfg, std::vector<Point3> uavs, Rng& rng);

// Nearest UAV whose coverage disk contains the point; ties go to the lower index.
std::optional<int> nearest_covering_uav(const Point2& p, std::span<const Point3> uavs,
                                        double coverage_radius);

// Fresh device positions inside the serving disks (same association). Returns
// the input unchanged when mobility is disabled.
Topology remobilize_devices(const Topology& topo, const ScenarioConfig& cfg, Rng& rng);

// Placement for cfg.seed according to cfg.placement.
Topology build_topology(const ScenarioConfig& cfg);

nlohmann::json to_json(const Topology& topo);

}  // namespace uavpfl
