#include "uavpfl/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <ostream>

#include "uavpfl/channel.hpp"
#include "uavpfl/energetics.hpp"
#include "uavpfl/federation.hpp"
#include "uavpfl/random.hpp"
#include "uavpfl/scheduling.hpp"

namespace uavpfl {

extern const char* const kEnergyMicroExpectedJson;

namespace {

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

void finish(CheckResult& r, Clock::time_point start) {
  r.seconds = elapsed(start);
  r.passed = r.worst < r.tolerance && (r.time_limit <= 0.0 || r.seconds < r.time_limit) &&
             r.detail.empty();
}

}  // namespace

namespace reference {

namespace {

double gain_d2u(const Topology& topo, int k, int u, const ScenarioConfig& cfg) {
  const auto& p = topo.devices[static_cast<std::size_t>(k)];
  const auto& q = topo.uavs[static_cast<std::size_t>(u)];
  const double d = std::sqrt((p.x - q.x) * (p.x - q.x) + (p.y - q.y) * (p.y - q.y) + q.z * q.z);
  const double r = std::asin(q.z / d) * 180.0 / std::numbers::pi;
  const double p_los = 1.0 / (1.0 + cfg.d2u_a * std::exp(-cfg.d2u_b * (r - cfg.d2u_a)));
  const double fspl = 20.0 * std::log10(4.0 * std::numbers::pi * cfg.carrier_freq_hz * d / 299'792'458.0);
  const double h_db = -(p_los * (fspl + cfg.eta_los_db) + (1.0 - p_los) * (fspl + cfg.eta_nlos_db));
  return std::pow(10.0, h_db / 10.0);
}

double gain_u2u(const Topology& topo, int a, int b, const ScenarioConfig& cfg) {
  const auto& p = topo.uavs[static_cast<std::size_t>(a)];
  const auto& q = topo.uavs[static_cast<std::size_t>(b)];
  const double d2 = (p.x - q.x) * (p.x - q.x) + (p.y - q.y) * (p.y - q.y);
  return std::pow(10.0, cfg.u2u_gain_db / 10.0) / d2;
}

double seconds_for(double bits, double power, double gain, double bw, const ScenarioConfig& cfg) {
  const double n0 = std::pow(10.0, (cfg.noise_psd_dbm_per_hz - 30.0) / 10.0);
  return bits / (bw * std::log2(1.0 + power * gain / (bw * n0)));
}

std::vector<double> unit_scale(const std::vector<double>& v) {
  std::vector<double> out(v.size(), 1.0);
  if (v.empty()) return out;
  const double lo = *std::min_element(v.begin(), v.end());
  const double hi = *std::max_element(v.begin(), v.end());
  if (hi - lo <= 0.0) return out;
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = 1e-6 + (1.0 - 1e-6) * (v[i] - lo) / (hi - lo);
  return out;
}

}  // namespace

std::vector<int> top_percent_by_sort(std::span<const double> norms, int percent) {
  const int K = static_cast<int>(norms.size());
  std::vector<std::pair<double, int>> keyed;
  for (int k = 0; k < K; ++k) keyed.push_back({-norms[static_cast<std::size_t>(k)], k});
  std::sort(keyed.begin(), keyed.end());
  const int m = (percent * K + 99) / 100;
  std::vector<int> out;
  for (int i = 0; i < m; ++i) out.push_back(keyed[static_cast<std::size_t>(i)].second);
  return out;
}

LeaderChoice grad_energy_tradeoff(std::span<const double> grad_norms, const Topology& topo,
                                  const ScenarioConfig& cfg) {
  const int U = topo.num_uavs();
  const int K = topo.num_devices();
  const int m = static_cast<int>(std::ceil(cfg.alpha * K - 1e-9));

  std::vector<int> rank(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    int better = 0;
    for (int j = 0; j < K; ++j) {
      const double nj = grad_norms[static_cast<std::size_t>(j)];
      const double nk = grad_norms[static_cast<std::size_t>(k)];
      if (nj > nk || (nj == nk && j < k)) ++better;
    }
    rank[static_cast<std::size_t>(k)] = better + 1;
  }

  std::vector<int> serving;
  std::vector<double> raw;
  for (int u = 0; u < U; ++u) {
    double sum = 0.0;
    bool any = false;
    for (int k = 0; k < K; ++k) {
      if (topo.serving_uav[static_cast<std::size_t>(k)] == u) {
        sum += rank[static_cast<std::size_t>(k)];
        any = true;
      }
    }
    if (any) {
      serving.push_back(u);
      raw.push_back(sum);
    }
  }
  // UAVs without devices carry the least favourable importance.
  std::vector<double> imp(static_cast<std::size_t>(U), 1.0);
  const auto scaled = unit_scale(raw);
  for (std::size_t i = 0; i < serving.size(); ++i) imp[static_cast<std::size_t>(serving[i])] = scaled[i];

  auto covered_by = [&](int u) {
    int n = 0;
    for (int k = 0; k < K; ++k) n += topo.serving_uav[static_cast<std::size_t>(k)] == u;
    return n;
  };
  const double bits = cfg.base_model_bits;

  LeaderChoice best;
  for (int lead = 0; lead < U; ++lead) {
    std::vector<int> others;
    std::vector<double> gains;
    for (int v : serving) {
      if (v != lead) {
        others.push_back(v);
        gains.push_back(gain_u2u(topo, lead, v, cfg));
      }
    }
    const auto g = unit_scale(gains);
    std::vector<std::pair<double, int>> order;
    for (std::size_t i = 0; i < others.size(); ++i) {
      order.push_back({-(g[i] / imp[static_cast<std::size_t>(others[i])]), static_cast<int>(i)});
    }
    std::sort(order.begin(), order.end());

    std::vector<int> set{lead};
    int covered = covered_by(lead);
    for (const auto& [key, i] : order) {
      if (covered >= m) break;
      set.push_back(others[static_cast<std::size_t>(i)]);
      covered += covered_by(others[static_cast<std::size_t>(i)]);
    }

    std::vector<std::pair<int, int>> pool;
    for (int k = 0; k < K; ++k) {
      const int u = topo.serving_uav[static_cast<std::size_t>(k)];
      if (std::find(set.begin(), set.end(), u) != set.end()) pool.push_back({rank[static_cast<std::size_t>(k)], k});
    }
    std::sort(pool.begin(), pool.end());
    std::vector<int> selected;
    for (int i = 0; i < m && i < static_cast<int>(pool.size()); ++i) {
      selected.push_back(pool[static_cast<std::size_t>(i)].second);
    }

    std::vector<int> senders;
    for (int k : selected) {
      const int u = topo.serving_uav[static_cast<std::size_t>(k)];
      if (u != lead && std::find(senders.begin(), senders.end(), u) == senders.end()) senders.push_back(u);
    }
    double t_u2u = 0.0;
    double t_back = 0.0;
    for (int v : senders) {
      const double gv = gain_u2u(topo, v, lead, cfg);
      t_u2u = std::max(t_u2u, seconds_for(bits, cfg.uav_tx_power_w, gv, cfg.bandwidth_hz / senders.size(), cfg));
      t_back = std::max(t_back, seconds_for(bits, cfg.uav_tx_power_w, gv, cfg.bandwidth_hz, cfg));
    }
    double t_dev = 0.0;
    for (int k = 0; k < K; ++k) {
      if (topo.serving_uav[static_cast<std::size_t>(k)] != lead) continue;
      t_dev = std::max(t_dev, seconds_for(bits, cfg.uav_tx_power_w, gain_d2u(topo, k, lead, cfg),
                                          cfg.bandwidth_hz, cfg));
    }
    double importance = 0.0;
    for (int v : set) importance += imp[static_cast<std::size_t>(v)];
    const double q = t_u2u + t_dev + t_back + cfg.delay_importance_weight * importance;
    best.scores.push_back(q);
    if (best.leader < 0 || q < best.score) {
      best.leader = lead;
      best.score = q;
      best.uav_set = set;
      best.selected = selected;
    }
  }
  return best;
}

}  // namespace reference

CheckResult check_gradients(std::uint64_t seed, int models, int coords) {
  const auto start = Clock::now();
  CheckResult r{"gradient finite differences", false, 0.0, 1e-5, 0.0, 10.0, {}};
  const ModelShape shape{32, 64, 10};
  const double h = 1e-6;
  auto rng = make_rng(seed, Stream::kDiagnostics, {0x6772ULL});
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> label(0, shape.num_classes - 1);
  const auto nb = shape.base_size();
  const auto nh = shape.head_size();
  std::uniform_int_distribution<Eigen::Index> coord(0, nb + nh - 1);

  for (int m = 0; m < models; ++m) {
    auto model = init_model(shape, 1, rng);
    Vector head = model.heads[0];
    for (Eigen::Index i = 0; i < model.base.size(); ++i) model.base[i] += 0.05 * normal(rng);
    for (Eigen::Index i = 0; i < head.size(); ++i) head[i] += 0.1 * normal(rng);
    Matrix x(shape.feature_dim, 10);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
    std::vector<int> y(10);
    for (auto& v : y) v = label(rng);

    const auto g = compute_gradients(shape, model.base, head, x, y);
    for (int c = 0; c < coords; ++c) {
      const Eigen::Index i = coord(rng);
      Vector base = model.base;
      Vector hd = head;
      double* p = i < nb ? &base[i] : &hd[i - nb];
      const double keep = *p;
      *p = keep + h;
      const double up = forward_loss(shape, base, hd, x, y);
      *p = keep - h;
      const double down = forward_loss(shape, base, hd, x, y);
      const double fd = (up - down) / (2.0 * h);
      const double an = i < nb ? g.g_theta[i] : g.g_phi[i - nb];
      // Relative error with a 1e-3 floor: below it the rounding error of the
      // difference quotient (~1e-9) dominates, so those are compared on an
      // absolute scale.
      const double err = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-3});
      r.worst = std::max(r.worst, err);
    }
  }
  finish(r, start);
  return r;
}

CheckResult check_aggregation(std::uint64_t seed, int rounds, const BaseUpdateFn& update) {
  const auto start = Clock::now();
  CheckResult r{"hierarchical vs flat aggregation", false, 0.0, 1e-12, 0.0, 5.0, {}};
  const BaseUpdateFn step = update ? update : BaseUpdateFn(inter_uav_update);
  auto rng = make_rng(seed, Stream::kDiagnostics, {0x6167ULL});
  std::uniform_int_distribution<int> n_uavs(1, 8);
  std::uniform_int_distribution<int> size(1, 1000);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  for (int t = 0; t < rounds; ++t) {
    const int U = n_uavs(rng);
    const int K = std::uniform_int_distribution<int>(1, 24)(rng);
    const int dim = std::uniform_int_distribution<int>(1, 64)(rng);
    std::vector<Point3> uavs;
    for (int u = 0; u < U; ++u) uavs.push_back({1000.0 * u, 0.0, 100.0});
    std::vector<Point2> devices;
    std::vector<int> serving;
    for (int k = 0; k < K; ++k) {
      const int u = std::uniform_int_distribution<int>(0, U - 1)(rng);
      devices.push_back({uavs[static_cast<std::size_t>(u)].x, 0.0});
      serving.push_back(u);
    }
    const auto topo = make_topology(uavs, devices, serving);

    std::vector<int> all(static_cast<std::size_t>(K));
    std::iota(all.begin(), all.end(), 0);
    std::shuffle(all.begin(), all.end(), rng);
    const int m = std::uniform_int_distribution<int>(1, K)(rng);
    std::vector<int> selected(all.begin(), all.begin() + m);
    const int lead = topo.serving_uav[static_cast<std::size_t>(selected.front())];
    const auto s = make_schedule(topo, Policy::kTopAlphaRandomUav, selected, lead);

    std::vector<int> sizes(static_cast<std::size_t>(K));
    for (auto& v : sizes) v = size(rng);
    std::vector<Vector> grads(static_cast<std::size_t>(K), Vector(dim));
    for (auto& g : grads) {
      for (Eigen::Index i = 0; i < dim; ++i) g[i] = normal(rng) * std::exp(3.0 * normal(rng));
    }
    Vector theta(dim);
    for (Eigen::Index i = 0; i < dim; ++i) theta[i] = normal(rng);
    const double eta = 0.001 + unit(rng);

    const auto sums = intra_uav_aggregate(grads, s, sizes);
    const Vector hier = step(theta, sums, s, sizes, eta);
    const Vector flat = flat_weighted_update(theta, grads, selected, sizes, eta);
    const double scale = (flat - theta).norm();
    const double dev = (hier - flat).norm() / std::max(scale, 1e-300);
    r.worst = std::max(r.worst, dev);
  }
  finish(r, start);
  return r;
}

const nlohmann::json& energy_micro_expected() {
  static const nlohmann::json doc = nlohmann::json::parse(kEnergyMicroExpectedJson);
  return doc;
}

CheckResult check_energy_micro(const nlohmann::json& expected) {
  const auto start = Clock::now();
  CheckResult r{"energy ledger micro-scenario", false, 0.0, 1e-9, 0.0, 1.0, {}};
  const auto cfg = default_config();
  const auto& sc = expected.at("scenario");
  std::vector<Point3> uavs;
  for (const auto& u : sc.at("uavs")) uavs.push_back({u[0], u[1], u[2]});
  std::vector<Point2> devices;
  for (const auto& d : sc.at("devices")) devices.push_back({d[0], d[1]});
  const auto topo = make_topology(uavs, devices, sc.at("serving_uav").get<std::vector<int>>());
  const auto sizes = sc.at("dataset_sizes").get<std::vector<int>>();

  auto compare = [&](const std::string& what, double got, double want) {
    const double dev = want == 0.0 ? std::abs(got) : std::abs(got - want) / std::abs(want);
    if (dev > r.worst) r.worst = dev;
    if (!(dev < r.tolerance) && r.detail.empty()) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%s: got %.17g, expected %.17g", what.c_str(), got, want);
      r.detail = buf;
    }
  };

  const auto& cp = expected.at("checkpoints");
  RoundSchedule one = make_schedule(topo, Policy::kTopAlphaRandomUav, {1}, 1);
  compare("per-model aggregation energy", aggregation_energy(one, cfg)[0],
          cp.at("aggregation_energy_per_model").get<double>());
  compare("local training time", local_training_time(sizes[0], cfg),
          cp.at("local_training_time").get<double>());

  for (const auto& [name, c] : expected.at("cases").items()) {
    const auto policy = parse_policy(c.at("policy").get<std::string>());
    std::optional<int> lead;
    if (!c.at("designated_uav").is_null()) lead = c.at("designated_uav").get<int>();
    const bool per_uav = policy == Policy::kIntraUavFedAvg;
    const auto s = make_schedule(topo, policy, c.at("selected").get<std::vector<int>>(), lead,
                                 is_fedavg_family(policy), per_uav);
    const auto led = round_ledger(s, topo, sizes, cfg, 0.0);
    const auto& want = c.at("ledger");
    const std::string p = name + ".";
    compare(p + "t_local", led.t_local, want.at("t_local"));
    compare(p + "t_upload", led.t_upload, want.at("t_upload"));
    for (const auto& [k, t] : upload_time(s, topo, cfg)) {
      compare(p + "t_upload[" + std::to_string(k) + "]", t,
              want.at("t_upload_per_device").at(std::to_string(k)));
    }
    compare(p + "t_agg", led.t_agg, want.at("t_agg"));
    compare(p + "t_u2u", led.t_u2u, want.at("t_u2u"));
    compare(p + "t_broadcast", led.t_broadcast, want.at("t_broadcast"));
    compare(p + "t_hover", led.t_hover, want.at("t_hover"));
    compare(p + "e_hover", led.e_hover, want.at("e_hover"));
    for (std::size_t u = 0; u < uavs.size(); ++u) {
      const auto idx = "[" + std::to_string(u) + "]";
      compare(p + "e_agg" + idx, led.e_agg_per_uav[u], want.at("e_agg_per_uav")[u]);
      compare(p + "e_u2u" + idx, led.e_u2u_per_uav[u], want.at("e_u2u_per_uav")[u]);
      compare(p + "e_broadcast" + idx, led.e_broadcast_per_uav[u], want.at("e_broadcast_per_uav")[u]);
    }
    compare(p + "e_agg", led.e_agg, want.at("e_agg"));
    compare(p + "e_u2u", led.e_u2u, want.at("e_u2u"));
    compare(p + "e_broadcast", led.e_broadcast, want.at("e_broadcast"));
    compare(p + "e_round", led.e_round, want.at("e_round"));
  }
  finish(r, start);
  return r;
}

CheckResult check_top_alpha(std::uint64_t seed, int instances) {
  const auto start = Clock::now();
  CheckResult r{"top-alpha vs full sort", false, 0.0, 0.5, 0.0, 30.0, {}};
  auto rng = make_rng(seed, Stream::kDiagnostics, {0x7461ULL});
  std::uniform_int_distribution<int> n(1, 64);
  std::uniform_int_distribution<int> percent(1, 100);
  std::uniform_real_distribution<double> unit(0.0, 10.0);
  int mismatches = 0;
  for (int i = 0; i < instances; ++i) {
    const int K = n(rng);
    std::vector<double> norms(static_cast<std::size_t>(K));
    const bool coarse = i % 3 == 0;  // force ties
    for (auto& v : norms) v = coarse ? std::floor(unit(rng)) : unit(rng);
    const int p = percent(rng);
    if (top_alpha_select(norms, p / 100.0) != reference::top_percent_by_sort(norms, p)) ++mismatches;
  }
  r.worst = mismatches;
  if (mismatches) r.detail = std::to_string(mismatches) + " mismatching instances";
  finish(r, start);
  return r;
}

CheckResult check_algorithm2(std::uint64_t seed, int instances) {
  const auto start = Clock::now();
  CheckResult r{"joint selection vs leader enumeration", false, 0.0, 0.5, 0.0, 30.0, {}};
  auto rng = make_rng(seed, Stream::kDiagnostics, {0x616cULL});
  std::uniform_real_distribution<double> coord(0.0, 3000.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::array<double, 4> lambdas{0.0, 0.5, 1.0, 2.0};
  int mismatches = 0;
  for (int i = 0; i < instances; ++i) {
    auto cfg = default_config();
    const int U = std::uniform_int_distribution<int>(1, 4)(rng);
    const int K = std::uniform_int_distribution<int>(1, 8)(rng);
    cfg.alpha = std::uniform_int_distribution<int>(1, 10)(rng) / 10.0;
    cfg.delay_importance_weight = lambdas[static_cast<std::size_t>(i % 4)];
    std::vector<Point3> uavs;
    for (int u = 0; u < U; ++u) uavs.push_back({coord(rng), coord(rng), cfg.uav_altitude_m});
    std::vector<Point2> devices;
    std::vector<int> serving;
    for (int k = 0; k < K; ++k) {
      const int u = std::uniform_int_distribution<int>(0, U - 1)(rng);
      const double rad = cfg.uav_coverage_radius_m * std::sqrt(unit(rng));
      const double ang = 2.0 * std::numbers::pi * unit(rng);
      devices.push_back({uavs[static_cast<std::size_t>(u)].x + rad * std::cos(ang),
                         uavs[static_cast<std::size_t>(u)].y + rad * std::sin(ang)});
      serving.push_back(u);
    }
    const auto topo = make_topology(uavs, devices, serving);
    std::vector<double> norms(static_cast<std::size_t>(K));
    for (auto& v : norms) v = unit(rng);

    const auto got = grad_energy_tradeoff_select(norms, topo, cfg);
    const auto want = reference::grad_energy_tradeoff(norms, topo, cfg);
    auto active = got.active_uavs;
    auto want_set = want.uav_set;
    std::sort(active.begin(), active.end());
    std::sort(want_set.begin(), want_set.end());
    if (got.designated_uav != want.leader || got.selected != want.selected || active != want_set) {
      ++mismatches;
    }
  }
  r.worst = mismatches;
  if (mismatches) r.detail = std::to_string(mismatches) + " mismatching instances";
  finish(r, start);
  return r;
}

std::vector<CheckResult> run_verify_suite(std::uint64_t seed) {
  return {check_gradients(seed), check_aggregation(seed), check_energy_micro(),
          check_top_alpha(seed), check_algorithm2(seed)};
}

void print_check_table(std::ostream& out, const std::vector<CheckResult>& results) {
  char line[256];
  std::snprintf(line, sizeof line, "%-40s %-6s %-12s %-12s %-10s\n", "check", "status", "worst",
                "tolerance", "seconds");
  out << line;
  for (const auto& r : results) {
    std::snprintf(line, sizeof line, "%-40s %-6s %-12.3e %-12.3e %-10.3f\n", r.name.c_str(),
                  r.passed ? "PASS" : "FAIL", r.worst, r.tolerance, r.seconds);
    out << line;
    if (!r.detail.empty()) out << "    " << r.detail << '\n';
  }
}

}  // namespace uavpfl
