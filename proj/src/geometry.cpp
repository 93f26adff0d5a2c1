#include "uavpfl/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace uavpfl {

namespace {

constexpr int kMaxPlacementAttempts = 10'000;

Point2 uniform_in_disk(const Point3& centre, double radius, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double r = radius * std::sqrt(unit(rng));
  const double angle = 2.0 * std::numbers::pi * unit(rng);
  return {centre.x + r * std::cos(angle), centre.y + r * std::sin(angle)};
}

}  // namespace

Topology make_topology(std::vector<Point3> uavs, std::vector<Point2> devices,
                       std::vector<int> serving) {
  if (serving.size() != devices.size()) {
    throw std::invalid_argument("one serving UAV per device is required");
  }
  Topology topo;
  topo.uavs = std::move(uavs);
  topo.devices = std::move(devices);
  topo.serving_uav = std::move(serving);
  topo.served.assign(topo.uavs.size(), {});
  for (int k = 0; k < topo.num_devices(); ++k) {
    const int u = topo.serving_uav[static_cast<std::size_t>(k)];
    if (u < 0 || u >= topo.num_uavs()) throw std::out_of_range("serving UAV index out of range");
    topo.served[static_cast<std::size_t>(u)].push_back(k);
  }
  return topo;
}

double horizontal_distance(const Point2& a, const Point3& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

double horizontal_distance(const Point3& a, const Point3& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

double Topology::d2u_distance(int device, int uav) const {
  const auto& d = devices.at(static_cast<std::size_t>(device));
  const auto& u = uavs.at(static_cast<std::size_t>(uav));
  return std::hypot(horizontal_distance(d, u), u.z);
}

double Topology::u2u_distance(int uav_a, int uav_b) const {
  const auto& a = uavs.at(static_cast<std::size_t>(uav_a));
  const auto& b = uavs.at(static_cast<std::size_t>(uav_b));
  return std::hypot(a.x - b.x, a.y - b.y, a.z - b.z);
}

std::vector<Point3> place_uavs_grid_lines(const ScenarioConfig& cfg, Rng& rng) {
  const int total = cfg.num_uavs;
  const double side = cfg.area_side_m;
  // Lines: y = side/4 (horizontal), x = 3 side/4 (vertical), y = x (diagonal).
  // Offsetting the first two keeps their slots clear of the diagonal.
  const int lines = std::min(total, 3);
  std::vector<int> per_line(static_cast<std::size_t>(lines), total / lines);
  for (int i = 0; i < total % lines; ++i) ++per_line[static_cast<std::size_t>(i)];

  auto point_on_line = [&](int line, double t) -> Point3 {
    switch (line) {
      case 0: return {t * side, 0.25 * side, cfg.uav_altitude_m};
      case 1: return {0.75 * side, t * side, cfg.uav_altitude_m};
      default: return {t * side, t * side, cfg.uav_altitude_m};
    }
  };

  std::uniform_real_distribution<double> jitter(-0.25, 0.25);
  std::vector<Point3> uavs;
  uavs.reserve(static_cast<std::size_t>(total));
  for (int attempt = 0; attempt < kMaxPlacementAttempts; ++attempt) {
    uavs.clear();
    for (int line = 0; line < lines; ++line) {
      const int n = per_line[static_cast<std::size_t>(line)];
      for (int slot = 0; slot < n; ++slot) {
        const double t = (slot + 0.5 + jitter(rng)) / n;
        uavs.push_back(point_on_line(line, t));
      }
    }
    bool separated = true;
    for (std::size_t i = 0; i < uavs.size() && separated; ++i) {
      for (std::size_t j = i + 1; j < uavs.size(); ++j) {
        if (horizontal_distance(uavs[i], uavs[j]) < cfg.min_uav_separation_m) {
          separated = false;
          break;
        }
      }
    }
    if (separated) return uavs;
  }
  throw PlacementError("UAV placement infeasible: minimum separation of " +
                       std::to_string(cfg.min_uav_separation_m) + " m not met in " +
                       std::to_string(kMaxPlacementAttempts) + " attempts");
}

Topology place_devices_uniform(const ScenarioConfig& cfg, std::vector<Point3> uavs, Rng& rng) {
  std::vector<Point2> devices;
  std::vector<int> serving;
  for (int u = 0; u < static_cast<int>(uavs.size()); ++u) {
    for (int i = 0; i < cfg.num_devices_per_uav; ++i) {
      devices.push_back(uniform_in_disk(uavs[static_cast<std::size_t>(u)],
                                        cfg.uav_coverage_radius_m, rng));
      serving.push_back(u);
    }
  }
  return make_topology(std::move(uavs), std::move(devices), std::move(serving));
}

std::optional<int> nearest_covering_uav(const Point2& p, std::span<const Point3> uavs,
                                        double coverage_radius) {
  std::optional<int> best;
  double best_dist = 0.0;
  for (int u = 0; u < static_cast<int>(uavs.size()); ++u) {
    const double d = horizontal_distance(p, uavs[static_cast<std::size_t>(u)]);
    if (d > coverage_radius) continue;
    if (!best || d < best_dist) {
      best = u;
      best_dist = d;
    }
  }
  return best;
}

Topology place_devices_ppp(const ScenarioConfig& cfg, std::vector<Point3> uavs, Rng& rng) {
  const double radius = cfg.uav_coverage_radius_m;
  const double mean = cfg.ppp_intensity_per_m2 * std::numbers::pi * radius * radius;
  std::poisson_distribution<int> count(mean);
  std::vector<Point2> devices;
  std::vector<int> serving;
  for (std::size_t u = 0; u < uavs.size(); ++u) {
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
      const Point2 p = uniform_in_disk(uavs[u], radius, rng);
      // Overlap regions belong to the lowest-index disk's draw only, so the
      // union carries a single homogeneous process.
      bool claimed_earlier = false;
      for (std::size_t v = 0; v < u; ++v) {
        if (horizontal_distance(p, uavs[v]) <= radius) {
          claimed_earlier = true;
          break;
        }
      }
      if (claimed_earlier) continue;
      const auto owner = nearest_covering_uav(p, uavs, radius);
      if (!owner) continue;  // numerically on the boundary
      devices.push_back(p);
      serving.push_back(*owner);
    }
  }
  if (devices.empty()) {
    throw PlacementError("degenerate topology: PPP realised no devices in any coverage disk");
  }
  return make_topology(std::move(uavs), std::move(devices), std::move(serving));
}

Topology remobilize_devices(const Topology& topo, const ScenarioConfig& cfg, Rng& rng) {
  if (!cfg.mobile_devices) return topo;
  Topology moved = topo;
  for (int k = 0; k < moved.num_devices(); ++k) {
    const auto& uav = moved.uavs[static_cast<std::size_t>(moved.serving_uav[k])];
    moved.devices[static_cast<std::size_t>(k)] =
        uniform_in_disk(uav, cfg.uav_coverage_radius_m, rng);
  }
  return moved;
}

Topology build_topology(const ScenarioConfig& cfg) {
  auto rng = make_rng(cfg.seed, Stream::kPlacement);
  auto uavs = place_uavs_grid_lines(cfg, rng);
  if (cfg.placement == PlacementMode::kPpp) return place_devices_ppp(cfg, std::move(uavs), rng);
  return place_devices_uniform(cfg, std::move(uavs), rng);
}

nlohmann::json to_json(const Topology& topo) {
  nlohmann::json doc;
  doc["uavs"] = nlohmann::json::array();
  for (const auto& u : topo.uavs) doc["uavs"].push_back({u.x, u.y, u.z});
  doc["devices"] = nlohmann::json::array();
  for (const auto& d : topo.devices) doc["devices"].push_back({d.x, d.y});
  doc["serving_uav"] = topo.serving_uav;
  return doc;
}

}  // namespace uavpfl
