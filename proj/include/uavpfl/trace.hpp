#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "uavpfl/config.hpp"
#include "uavpfl/diagnostics.hpp"
#include "uavpfl/federation.hpp"

namespace uavpfl {

class TraceFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One CSV row per executed round. Diagnostic columns are NaN when the
// estimators were not run; designated_uav is -1 when no UAV aggregates.
struct TraceRow {
  int round = 0;
  std::string policy;
  double alpha = 0.0;
  int heterogeneity_c = 0;
  std::uint64_t seed = 0;
  double mean_test_accuracy = 0.0;
  double mean_train_loss = 0.0;
  double t_local = 0.0;
  double t_upload = 0.0;
  double t_agg = 0.0;
  double t_u2u = 0.0;
  double t_broadcast = 0.0;
  double t_hover = 0.0;
  double e_hover = 0.0;
  double e_agg = 0.0;
  double e_u2u = 0.0;
  double e_broadcast = 0.0;
  double e_round = 0.0;
  double cumulative_energy = 0.0;
  int num_selected = 0;
  int designated_uav = -1;
  std::string exchanged;
  double beta_sel = 0.0;
  double v_theta = 0.0;
  double sigma_theta = 0.0;
  double samp_var = 0.0;
  double grad_norm_sq = 0.0;

  friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

inline constexpr std::string_view kTraceVersion = "uavpfl-trace/1";
inline constexpr std::array<std::string_view, 27> kTraceColumns{
    "round",        "policy",      "alpha",        "c",           "seed",
    "mean_test_accuracy", "mean_train_loss", "t_local", "t_upload", "t_agg",
    "t_u2u",        "t_broadcast", "t_hover",      "e_hover",     "e_agg",
    "e_u2u",        "e_broadcast", "e_round",      "cumulative_energy", "num_selected",
    "designated_uav", "exchanged", "beta_sel",     "v_theta",     "sigma_theta",
    "samp_var",     "grad_norm_sq"};

std::vector<TraceRow> trace_rows(const TrainingResult& result, const ScenarioConfig& cfg);

// Header line followed by one line per row; reals printed with 17 significant
// digits so that parsing restores them exactly.
void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows);
// Strict inverse of write_trace_csv: exact header, column count and types.
std::vector<TraceRow> read_trace_csv(std::istream& in);

nlohmann::json summary_json(const TrainingResult& result, const ScenarioConfig& cfg);

// Writes trace.csv and summary.json into dir (created if needed).
void write_run(const std::filesystem::path& dir, const TrainingResult& result,
               const ScenarioConfig& cfg);

// Axis name -> values, each axis a configuration key. Cells are the
// Cartesian product in axis order.
struct SweepAxis {
  std::string key;
  std::vector<nlohmann::json> values;
};
struct SweepSpec {
  std::string name = "sweep";
  std::vector<SweepAxis> axes;
};

SweepSpec sweep_spec_from_json(const nlohmann::json& doc);
SweepSpec load_sweep_spec(const std::filesystem::path& path);

struct SweepCell {
  std::string id;
  nlohmann::json overrides;
  ScenarioConfig config;
};

// Expands the spec against a base configuration; an empty spec yields the
// base configuration as a single cell.
std::vector<SweepCell> expand_sweep(const ScenarioConfig& base, const SweepSpec& spec);

// Runs every cell into out_root/<name>/<cell-id>/ and writes index.json.
nlohmann::json run_sweep(const ScenarioConfig& base, const SweepSpec& spec,
                         const std::filesystem::path& out_root);

// Diagnostic rows of a run (rounds without estimates are skipped).
BoundSeries bound_series(const TrainingResult& result, const ScenarioConfig& cfg);
// label,alpha,round,num_selected,beta_sel,samp_var,sigma_theta,variance_term,v_theta,
// grad_norm_sq,mean_tracking_err
void write_bounds_csv(std::ostream& out, std::span<const BoundSeries> series);

}  // namespace uavpfl
