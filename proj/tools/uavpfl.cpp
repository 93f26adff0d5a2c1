#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uavpfl/channel.hpp"
#include "uavpfl/config.hpp"
#include "uavpfl/diagnostics.hpp"
#include "uavpfl/federation.hpp"
#include "uavpfl/geometry.hpp"
#include "uavpfl/scheduling.hpp"
#include "uavpfl/trace.hpp"
#include "uavpfl/verify.hpp"

namespace fs = std::filesystem;
using namespace uavpfl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitVerify = 3;

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> policy;
  std::optional<double> alpha;
  std::optional<std::string> placement;
  std::optional<std::string> mobile;
  std::optional<int> rounds;
  std::optional<double> budget;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON scenario file (defaults apply to missing keys)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", seed, "override the seed");
    cmd->add_option("--policy", policy, "scheduling policy");
    cmd->add_option("--alpha", alpha, "selection ratio in (0,1]");
    cmd->add_option("--placement", placement, "device placement")
        ->check(CLI::IsMember({"grid", "ppp"}));
    cmd->add_option("--mobile", mobile, "re-sample device positions every round")
        ->check(CLI::IsMember({"on", "off"}));
    cmd->add_option("--rounds", rounds, "override max_rounds");
    cmd->add_option("--budget", budget, "override the energy budget (J)");
  }

  ScenarioConfig resolve() const {
    auto cfg = config_path.empty() ? default_config() : load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (policy) cfg.policy = parse_policy(*policy);
    if (alpha) cfg.alpha = *alpha;
    if (placement) cfg.placement = parse_placement(*placement);
    if (mobile) cfg.mobile_devices = *mobile == "on";
    if (rounds) cfg.max_rounds = *rounds;
    if (budget) cfg.energy_budget_j = *budget;
    validate(cfg);
    return cfg;
  }
};

int cmd_run(const Overrides& o, const std::string& out, bool diagnostics) {
  auto cfg = o.resolve();
  cfg.diagnostics = cfg.diagnostics || diagnostics;
  const auto result = run_training(cfg);
  write_run(out, result, cfg);
  const auto summary = summary_json(result, cfg);
  std::printf("rounds=%zu final_accuracy=%.4f total_energy=%.3f J stop_reason=%s -> %s\n",
              result.rounds.size(), summary["final_accuracy"].get<double>(),
              summary["total_energy"].get<double>(),
              summary["stop_reason"].get<std::string>().c_str(), out.c_str());
  return kExitOk;
}

int cmd_sweep(const Overrides& o, const std::string& spec_path, const std::string& out) {
  const auto cfg = o.resolve();
  const SweepSpec spec = spec_path.empty() ? SweepSpec{} : load_sweep_spec(spec_path);
  const auto index = run_sweep(cfg, spec, out);
  std::printf("%zu cells -> %s\n", index["cells"].size(), (fs::path(out) / spec.name).c_str());
  return kExitOk;
}

int cmd_verify(std::uint64_t seed) {
  const auto results = run_verify_suite(seed);
  print_check_table(std::cout, results);
  for (const auto& r : results) {
    if (!r.passed) return kExitVerify;
  }
  return kExitOk;
}

int cmd_diagnose(const Overrides& o, const std::vector<double>& alphas, int tracking_steps,
                 const std::string& out) {
  auto base = o.resolve();
  base.diagnostics = true;
  base.diag_tracking_steps = tracking_steps;
  std::vector<BoundSeries> series;
  for (double a : alphas) {
    auto cfg = base;
    cfg.alpha = a;
    validate(cfg);
    series.push_back(bound_series(run_training(cfg), cfg));
  }
  fs::create_directories(out);
  {
    std::ofstream csv(fs::path(out) / "diagnostics.csv", std::ios::binary);
    write_bounds_csv(csv, series);
  }
  std::ofstream js(fs::path(out) / "bound_report.json", std::ios::binary);
  js << to_json(bound_trend_report(series)).dump(2) << '\n';
  std::printf("%zu series -> %s\n", series.size(), out.c_str());
  return kExitOk;
}

int cmd_channel_probe(const Overrides& o, double distance, int share) {
  const auto cfg = o.resolve();
  const double bw = cfg.bandwidth_hz / share;
  std::printf("distance_m=%.6g bandwidth_share_hz=%.6g\n", distance, bw);
  if (distance >= cfg.uav_altitude_m) {
    const auto t = air_to_ground_terms(distance, cfg);
    const auto g = d2u_gain(distance, cfg);
    std::printf("d2u elevation_deg=%.6f p_los=%.6f pl_los_db=%.6f pl_nlos_db=%.6f gain_db=%.6f "
                "gain_linear=%.6e\n",
                t.elevation_deg, t.p_los, t.path_loss_los_db, t.path_loss_nlos_db, g.gain_db,
                g.gain_linear);
    std::printf("d2u device_rate_bps=%.6e uav_rate_bps=%.6e\n",
                link_rate(dbm_to_watts(cfg.device_tx_power_dbm), g, bw, cfg),
                link_rate(cfg.uav_tx_power_w, g, bw, cfg));
  } else {
    std::printf("d2u undefined below the UAV altitude (%.6g m)\n", cfg.uav_altitude_m);
  }
  const auto u = u2u_gain(distance, cfg);
  std::printf("u2u gain_db=%.6f gain_linear=%.6e rate_bps=%.6e\n", u.gain_db, u.gain_linear,
              link_rate(cfg.uav_tx_power_w, u, bw, cfg));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UAV-aided personalized federated learning simulator"};
  app.require_subcommand(1);

  Overrides run_o, sweep_o, diag_o, probe_o;
  std::string run_out = "out/run", sweep_out = "out", diag_out = "out/diagnose", spec_path;
  bool run_diag = false;
  std::uint64_t verify_seed = 1;
  std::vector<double> alphas{0.1, 0.2, 0.5, 1.0};
  int tracking_steps = 0;
  double distance = 100.0;
  int share = 1;

  auto* run = app.add_subcommand("run", "train once and write trace.csv + summary.json");
  run_o.attach(run);
  run->add_option("--out", run_out, "output directory");
  run->add_flag("--diagnostics", run_diag, "estimate bound terms every round");

  auto* sweep = app.add_subcommand("sweep", "Cartesian sweep over configuration axes");
  sweep_o.attach(sweep);
  sweep->add_option("--spec", spec_path, "sweep specification (JSON)")->check(CLI::ExistingFile);
  sweep->add_option("--out", sweep_out, "output root");

  auto* verify = app.add_subcommand("verify", "run the oracle suite");
  verify->add_option("--seed", verify_seed, "seed for the random instances");

  auto* diagnose = app.add_subcommand("diagnose", "bound-term estimates for an alpha sweep");
  diag_o.attach(diagnose);
  diagnose->add_option("--alphas", alphas, "selection ratios")->delimiter(',');
  diagnose->add_option("--tracking-steps", tracking_steps, "inner head steps (0 = skip)");
  diagnose->add_option("--out", diag_out, "output directory");

  auto* probe = app.add_subcommand("channel-probe", "print link gains and rates at a distance");
  probe_o.attach(probe);
  probe->add_option("--distance", distance, "slant distance (m)")->required();
  probe->add_option("--share", share, "number of links sharing the bandwidth")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*run) return cmd_run(run_o, run_out, run_diag);
    if (*sweep) return cmd_sweep(sweep_o, spec_path, sweep_out);
    if (*verify) return cmd_verify(verify_seed);
    if (*diagnose) return cmd_diagnose(diag_o, alphas, tracking_steps, diag_out);
    if (*probe) return cmd_channel_probe(probe_o, distance, share);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
