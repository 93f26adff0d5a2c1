// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: acceptance [criterion numbers...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "uavpfl/federation.hpp"
#include "uavpfl/trace.hpp"
#include "uavpfl/verify.hpp"

using namespace uavpfl;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double time_limit_s;
  std::function<Outcome()> run;
};

constexpr int kSeeds = 5;

ScenarioConfig trend_config(std::uint64_t seed) {
  auto cfg = default_config();
  cfg.num_uavs = 12;
  cfg.num_devices_per_uav = 2;
  cfg.heterogeneity_c = 6;
  cfg.max_rounds = 150;
  cfg.energy_budget_j = 1e12;
  cfg.seed = seed;
  return cfg;
}

TrainingResult trend_run(std::uint64_t seed, Policy policy, double alpha) {
  auto cfg = trend_config(seed);
  cfg.policy = policy;
  cfg.alpha = alpha;
  return run_training(cfg);
}

double final_accuracy(const TrainingResult& r) { return r.rounds.back().mean_accuracy; }

// Mean accuracy over a common cumulative-energy grid, linear interpolation.
std::pair<double, double> accuracy_at_equal_energy(const TrainingResult& a, const TrainingResult& b) {
  auto series = [](const TrainingResult& r) {
    std::vector<double> e, acc;
    for (const auto& rec : r.rounds) {
      e.push_back(rec.ledger.cumulative_energy);
      acc.push_back(rec.mean_accuracy);
    }
    return std::pair{e, acc};
  };
  const auto [ea, aa] = series(a);
  const auto [eb, ab] = series(b);
  auto interp = [](const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    if (it == xs.begin()) return ys.front();
    if (it == xs.end()) return ys.back();
    const auto i = static_cast<std::size_t>(it - xs.begin());
    const double w = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    return ys[i - 1] + w * (ys[i] - ys[i - 1]);
  };
  const double lo = std::max(ea.front(), eb.front());
  const double hi = std::min(ea.back(), eb.back());
  constexpr int kGrid = 200;
  double sa = 0.0, sb = 0.0;
  for (int i = 0; i < kGrid; ++i) {
    const double x = lo + (hi - lo) * i / (kGrid - 1);
    sa += interp(ea, aa, x);
    sb += interp(eb, ab, x);
  }
  return {sa / kGrid, sb / kGrid};
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Outcome from_check(const CheckResult& r) {
  return {r.passed, "worst=" + fmt("%.3g", r.worst) + " tol=" + fmt("%.0e", r.tolerance)};
}

Outcome c5_fl_beats_local() {
  std::string gaps;
  bool ok = true;
  for (int s = 1; s <= kSeeds; ++s) {
    const double top = final_accuracy(trend_run(s, Policy::kTopAlphaRandomUav, 0.2));
    const double local = final_accuracy(trend_run(s, Policy::kLocalOnly, 0.2));
    const double gap = 100.0 * (top - local);
    ok = ok && gap >= 5.0;
    gaps += fmt(" %+.1f", gap);
  }
  return {ok, "Top-20 minus LocalOnly (pp):" + gaps};
}

Outcome c6_top_alpha_vs_full() {
  int equal_energy_wins = 0;
  int degradations = 0;
  std::string a_detail, b_detail;
  for (int s = 1; s <= kSeeds; ++s) {
    const auto t10 = trend_run(s, Policy::kTopAlphaRandomUav, 0.1);
    const auto t20 = trend_run(s, Policy::kTopAlphaRandomUav, 0.2);
    const auto t100 = trend_run(s, Policy::kTopAlphaRandomUav, 1.0);
    const auto [m20, m100] = accuracy_at_equal_energy(t20, t100);
    if (m20 >= m100) ++equal_energy_wins;
    const double d = final_accuracy(t20) - final_accuracy(t10);
    if (d > 0.0) ++degradations;
    a_detail += fmt(" %+.1f", 100.0 * (m20 - m100));
    b_detail += fmt(" %+.1f", 100.0 * d);
  }
  const bool ok = equal_energy_wins >= 4 && degradations >= 3;
  return {ok, "Top-20 vs Top-100 at equal energy (pp):" + a_detail + " [" + std::to_string(equal_energy_wins) +
                  "/5, need 4]; Top-20 minus Top-10 final (pp):" + b_detail + " [" +
                  std::to_string(degradations) + "/5, need 3]"};
}

Outcome c7_selection_bias() {
  const std::vector<double> alphas{0.1, 0.2, 0.5, 1.0};
  double worst_beta = 0.0;
  int violations = 0;
  int checked = 0;
  for (int s = 1; s <= 2; ++s) {
    std::vector<BoundSeries> series;
    for (double a : alphas) {
      auto cfg = trend_config(s);
      cfg.max_rounds = 15;
      cfg.alpha = a;
      cfg.diagnostics = true;
      series.push_back(bound_series(run_training(cfg), cfg));
    }
    for (const auto& e : series.back().estimates) worst_beta = std::max(worst_beta, e.beta_sel);
    const auto report = bound_trend_report(series);
    for (std::size_t t = 0; t < report.series.front().rows.size(); ++t) {
      ++checked;
      for (std::size_t i = 0; i + 1 < report.series.size(); ++i) {
        if (!(report.series[i + 1].rows[t].variance_term < report.series[i].rows[t].variance_term)) {
          ++violations;
          break;
        }
      }
    }
  }
  const bool ok = worst_beta <= 1e-12 && violations == 0;
  return {ok, "max beta(alpha=1)=" + fmt("%.2g", worst_beta) + ", non-decreasing sigma/|S| rounds: " +
                  std::to_string(violations) + "/" + std::to_string(checked)};
}

Outcome c8_algorithm2_tradeoff() {
  auto mean_over_seeds = [](Policy p) {
    double acc = 0.0, comm = 0.0;
    for (int s = 1; s <= kSeeds; ++s) {
      const auto r = trend_run(s, p, 0.2);
      acc += final_accuracy(r) / kSeeds;
      double c = 0.0;
      for (const auto& rec : r.rounds) c += rec.ledger.communication_energy();
      comm += c / static_cast<double>(r.rounds.size()) / kSeeds;
    }
    return std::pair{acc, comm};
  };
  const auto [acc_trade, comm_trade] = mean_over_seeds(Policy::kGradEnergyTradeoff);
  const auto [acc_energy, comm_energy] = mean_over_seeds(Policy::kEnergyOptOnly);
  const auto [acc_rand, comm_rand] = mean_over_seeds(Policy::kTopAlphaRandomUav);
  (void)comm_energy;
  (void)acc_rand;
  const double gain = 100.0 * (acc_trade - acc_energy);
  const bool ok = gain >= 2.0 && comm_trade <= comm_rand;
  return {ok, "accuracy gain over EnergyOptOnly=" + fmt("%+.2f", gain) + "pp (need +2), comm J/round " +
                  fmt("%.3f", comm_trade) + " vs MaxGrad+RandomUAV " + fmt("%.3f", comm_rand)};
}

Outcome c9_determinism() {
  auto cfg = default_config();
  cfg.diagnostics = true;
  cfg.max_rounds = 60;
  const auto root = fs::temp_directory_path() / "uavpfl_acceptance_c9";
  fs::remove_all(root);
  write_run(root / "a", run_training(cfg), cfg);
  write_run(root / "b", run_training(cfg), cfg);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const auto a = slurp(root / "a" / "trace.csv");
  const auto b = slurp(root / "b" / "trace.csv");
  fs::remove_all(root);
  return {!a.empty() && a == b, std::to_string(a.size()) + " bytes, identical=" + (a == b ? "yes" : "no")};
}

Outcome c10_budget() {
  auto cfg = default_config();
  cfg.energy_budget_j = 100.0;
  cfg.max_rounds = 100000;
  const auto r = run_training(cfg);
  const auto& last = r.rounds.back().ledger;
  const double over = last.cumulative_energy - cfg.energy_budget_j;
  const bool ok = r.stop_reason == StopReason::kBudget && over > 0.0 && over <= last.e_round;
  return {ok, "stop_reason=" + std::string(to_string(r.stop_reason)) + " rounds=" +
                  std::to_string(r.rounds.size()) + " E=" + fmt("%.3f", last.cumulative_energy) +
                  " J, last E(t)=" + fmt("%.3f", last.e_round) + " J"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "gradient correctness", 10, [] { return from_check(check_gradients(1)); }},
      {2, "aggregation equivalence", 5, [] { return from_check(check_aggregation(2)); }},
      {3, "energy ledger fidelity", 1, [] { return from_check(check_energy_micro()); }},
      {4, "scheduling oracles", 30,
       [] {
         const auto a = check_top_alpha(4);
         const auto b = check_algorithm2(4);
         return Outcome{a.passed && b.passed, "top-alpha mismatches=" + fmt("%.0f", a.worst) +
                                                   ", algorithm2 mismatches=" + fmt("%.0f", b.worst)};
       }},
      {5, "FL beats local-only", 120, c5_fl_beats_local},
      {6, "top-alpha beats full participation", 300, c6_top_alpha_vs_full},
      {7, "selection-bias sanity", 60, c7_selection_bias},
      {8, "Algorithm 2 tradeoff", 300, c8_algorithm2_tradeoff},
      {9, "determinism", 120, c9_determinism},
      {10, "budget enforcement", 10, c10_budget},
  };

  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = dt <= c.time_limit_s;
    const bool pass = o.passed && in_time;
    if (!pass) ++failed;
    std::printf("[%s] C%d %s: %s (%.2fs, limit %.0fs%s)\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                o.detail.c_str(), dt, c.time_limit_s, in_time ? "" : ", TIME EXCEEDED");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
