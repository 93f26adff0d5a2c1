#include "uavpfl/trace.hpp"

#include <cctype>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace uavpfl {

namespace {

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_real(const std::string& s, std::string_view column) {
  if (s.empty()) throw TraceFormatError("empty value in column " + std::string(column));
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE) {
    throw TraceFormatError("column " + std::string(column) + ": not a real: '" + s + "'");
  }
  return v;
}

template <typename Int>
Int parse_int(const std::string& s, std::string_view column) {
  Int v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw TraceFormatError("column " + std::string(column) + ": not an integer: '" + s + "'");
  }
  return v;
}

std::string parse_word(const std::string& s, std::string_view column) {
  if (s.empty()) throw TraceFormatError("empty value in column " + std::string(column));
  for (char ch : s) {
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_')) {
      throw TraceFormatError("column " + std::string(column) + ": invalid token '" + s + "'");
    }
  }
  return s;
}

std::string cell_token(const nlohmann::json& v) {
  std::string s = v.is_string() ? v.get<std::string>() : v.dump();
  for (char& ch : s) {
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '-' || ch == '_')) ch = '_';
  }
  return s;
}

}  // namespace

std::vector<TraceRow> trace_rows(const TrainingResult& result, const ScenarioConfig& cfg) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<TraceRow> rows;
  rows.reserve(result.rounds.size());
  for (const auto& r : result.rounds) {
    TraceRow row;
    row.round = r.round;
    row.policy = std::string(to_string(cfg.policy));
    row.alpha = cfg.alpha;
    row.heterogeneity_c = cfg.heterogeneity_c;
    row.seed = cfg.seed;
    row.mean_test_accuracy = r.mean_accuracy;
    row.mean_train_loss = r.mean_train_loss;
    const auto& l = r.ledger;
    row.t_local = l.t_local;
    row.t_upload = l.t_upload;
    row.t_agg = l.t_agg;
    row.t_u2u = l.t_u2u;
    row.t_broadcast = l.t_broadcast;
    row.t_hover = l.t_hover;
    row.e_hover = l.e_hover;
    row.e_agg = l.e_agg;
    row.e_u2u = l.e_u2u;
    row.e_broadcast = l.e_broadcast;
    row.e_round = l.e_round;
    row.cumulative_energy = l.cumulative_energy;
    row.num_selected = static_cast<int>(r.selected.size());
    row.designated_uav = r.designated_uav.value_or(-1);
    row.exchanged = std::string(to_string(r.exchanged));
    if (r.bounds) {
      row.beta_sel = r.bounds->beta_sel;
      row.v_theta = r.bounds->v_theta;
      row.sigma_theta = r.bounds->sigma_theta;
      row.samp_var = r.bounds->samp_var;
      row.grad_norm_sq = r.bounds->grad_norm_sq;
    } else {
      row.beta_sel = row.v_theta = row.sigma_theta = row.samp_var = row.grad_norm_sq = nan;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows) {
  for (std::size_t i = 0; i < kTraceColumns.size(); ++i) {
    out << (i ? "," : "") << kTraceColumns[i];
  }
  out << '\n';
  for (const auto& r : rows) {
    out << r.round << ',' << r.policy << ',' << format_real(r.alpha) << ',' << r.heterogeneity_c
        << ',' << r.seed << ',' << format_real(r.mean_test_accuracy) << ','
        << format_real(r.mean_train_loss) << ',' << format_real(r.t_local) << ','
        << format_real(r.t_upload) << ',' << format_real(r.t_agg) << ',' << format_real(r.t_u2u)
        << ',' << format_real(r.t_broadcast) << ',' << format_real(r.t_hover) << ','
        << format_real(r.e_hover) << ',' << format_real(r.e_agg) << ',' << format_real(r.e_u2u)
        << ',' << format_real(r.e_broadcast) << ',' << format_real(r.e_round) << ','
        << format_real(r.cumulative_energy) << ',' << r.num_selected << ',' << r.designated_uav
        << ',' << r.exchanged << ',' << format_real(r.beta_sel) << ',' << format_real(r.v_theta)
        << ',' << format_real(r.sigma_theta) << ',' << format_real(r.samp_var) << ','
        << format_real(r.grad_norm_sq) << '\n';
  }
}

std::vector<TraceRow> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw TraceFormatError("missing header");
  const auto header = split(line, ',');
  if (header.size() != kTraceColumns.size()) throw TraceFormatError("unexpected column count");
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] != kTraceColumns[i]) {
      throw TraceFormatError("column " + std::to_string(i) + " is '" + header[i] + "', expected '" +
                             std::string(kTraceColumns[i]) + "'");
    }
  }
  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    const auto f = split(line, ',');
    if (f.size() != kTraceColumns.size()) {
      throw TraceFormatError("row " + std::to_string(rows.size()) + " has " +
                             std::to_string(f.size()) + " fields");
    }
    std::size_t i = 0;
    auto real = [&] { const auto c = kTraceColumns[i]; return parse_real(f[i++], c); };
    auto integer = [&] { const auto c = kTraceColumns[i]; return parse_int<int>(f[i++], c); };
    auto word = [&] { const auto c = kTraceColumns[i]; return parse_word(f[i++], c); };
    TraceRow r;
    r.round = integer();
    r.policy = word();
    r.alpha = real();
    r.heterogeneity_c = integer();
    r.seed = parse_int<std::uint64_t>(f[i], kTraceColumns[i]);
    ++i;
    r.mean_test_accuracy = real();
    r.mean_train_loss = real();
    r.t_local = real();
    r.t_upload = real();
    r.t_agg = real();
    r.t_u2u = real();
    r.t_broadcast = real();
    r.t_hover = real();
    r.e_hover = real();
    r.e_agg = real();
    r.e_u2u = real();
    r.e_broadcast = real();
    r.e_round = real();
    r.cumulative_energy = real();
    r.num_selected = integer();
    r.designated_uav = integer();
    r.exchanged = word();
    r.beta_sel = real();
    r.v_theta = real();
    r.sigma_theta = real();
    r.samp_var = real();
    r.grad_norm_sq = real();
    rows.push_back(std::move(r));
  }
  return rows;
}

nlohmann::json summary_json(const TrainingResult& result, const ScenarioConfig& cfg) {
  double max_acc = 0.0;
  for (const auto& r : result.rounds) max_acc = std::max(max_acc, r.mean_accuracy);
  nlohmann::json doc;
  doc["format"] = kTraceVersion;
  doc["rounds"] = result.rounds.size();
  doc["final_accuracy"] = result.rounds.empty() ? 0.0 : result.rounds.back().mean_accuracy;
  doc["max_accuracy"] = max_acc;
  doc["total_energy"] =
      result.rounds.empty() ? 0.0 : result.rounds.back().ledger.cumulative_energy;
  doc["stop_reason"] = to_string(result.stop_reason);
  doc["num_devices"] = result.initial_topology.num_devices();
  doc["seed"] = cfg.seed;
  doc["config"] = to_json(cfg);
  return doc;
}

void write_run(const std::filesystem::path& dir, const TrainingResult& result,
               const ScenarioConfig& cfg) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "trace.csv", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / "trace.csv").string());
    write_trace_csv(out, trace_rows(result, cfg));
  }
  std::ofstream out(dir / "summary.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + (dir / "summary.json").string());
  out << summary_json(result, cfg).dump(2) << '\n';
}

SweepSpec sweep_spec_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("sweep specification must be a JSON object");
  SweepSpec spec;
  if (doc.contains("name")) spec.name = doc.at("name").get<std::string>();
  if (!doc.contains("axes")) return spec;
  const auto& axes = doc.at("axes");
  if (!axes.is_array()) throw ConfigError("sweep axes must be an array");
  const auto known = to_json(default_config());
  for (const auto& a : axes) {
    SweepAxis axis;
    axis.key = a.at("key").get<std::string>();
    if (!known.contains(axis.key)) throw ConfigError("unknown sweep axis '" + axis.key + "'");
    for (const auto& v : a.at("values")) axis.values.push_back(v);
    if (axis.values.empty()) throw ConfigError("sweep axis '" + axis.key + "' has no values");
    spec.axes.push_back(std::move(axis));
  }
  return spec;
}

SweepSpec load_sweep_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open sweep specification " + path.string());
  try {
    return sweep_spec_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed sweep specification " + path.string() + ": " + e.what());
  }
}

std::vector<SweepCell> expand_sweep(const ScenarioConfig& base, const SweepSpec& spec) {
  std::vector<SweepCell> cells;
  const auto base_doc = to_json(base);
  std::vector<std::size_t> idx(spec.axes.size(), 0);
  while (true) {
    SweepCell cell;
    cell.overrides = nlohmann::json::object();
    auto doc = base_doc;
    for (std::size_t a = 0; a < spec.axes.size(); ++a) {
      const auto& axis = spec.axes[a];
      const auto& v = axis.values[idx[a]];
      cell.overrides[axis.key] = v;
      doc[axis.key] = v;
      if (!cell.id.empty()) cell.id += '_';
      cell.id += axis.key + "-" + cell_token(v);
    }
    if (cell.id.empty()) cell.id = "base";
    cell.config = config_from_json(doc);
    cells.push_back(std::move(cell));

    std::size_t a = spec.axes.size();
    while (a > 0) {
      --a;
      if (++idx[a] < spec.axes[a].values.size()) break;
      idx[a] = 0;
      if (a == 0) return cells;
    }
    if (spec.axes.empty()) return cells;
  }
}

nlohmann::json run_sweep(const ScenarioConfig& base, const SweepSpec& spec,
                         const std::filesystem::path& out_root) {
  const auto root = out_root / spec.name;
  std::filesystem::create_directories(root);
  nlohmann::json index;
  index["name"] = spec.name;
  index["cells"] = nlohmann::json::array();
  for (const auto& cell : expand_sweep(base, spec)) {
    const auto result = run_training(cell.config);
    write_run(root / cell.id, result, cell.config);
    index["cells"].push_back({{"id", cell.id},
                              {"overrides", cell.overrides},
                              {"trace", cell.id + "/trace.csv"},
                              {"summary", cell.id + "/summary.json"},
                              {"final_accuracy", result.rounds.empty()
                                                     ? 0.0
                                                     : result.rounds.back().mean_accuracy},
                              {"stop_reason", to_string(result.stop_reason)}});
  }
  std::ofstream out(root / "index.json", std::ios::binary);
  out << index.dump(2) << '\n';
  return index;
}

BoundSeries bound_series(const TrainingResult& result, const ScenarioConfig& cfg) {
  BoundSeries series;
  char label[64];
  std::snprintf(label, sizeof label, "alpha=%g", cfg.alpha);
  series.label = label;
  series.alpha = cfg.alpha;
  for (const auto& r : result.rounds) {
    if (!r.bounds) continue;
    series.rounds.push_back(r.round);
    series.estimates.push_back(*r.bounds);
  }
  return series;
}

void write_bounds_csv(std::ostream& out, std::span<const BoundSeries> series) {
  out << "label,alpha,round,num_selected,beta_sel,samp_var,sigma_theta,variance_term,v_theta,"
         "grad_norm_sq,mean_tracking_err\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.estimates.size(); ++i) {
      const auto& e = s.estimates[i];
      double tracking = nan;
      if (!e.tracking_err.empty()) {
        tracking = 0.0;
        for (double v : e.tracking_err) tracking += v;
        tracking /= static_cast<double>(e.tracking_err.size());
      }
      const double variance_term = e.num_selected > 0 ? e.sigma_theta / e.num_selected : 0.0;
      out << s.label << ',' << format_real(s.alpha) << ',' << s.rounds[i] << ',' << e.num_selected
          << ',' << format_real(e.beta_sel) << ',' << format_real(e.samp_var) << ','
          << format_real(e.sigma_theta) << ',' << format_real(variance_term) << ','
          << format_real(e.v_theta) << ',' << format_real(e.grad_norm_sq) << ','
          << format_real(tracking) << '\n';
    }
  }
}

}  // namespace uavpfl
