#include <optional>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "uavpfl/channel.hpp"
#include "uavpfl/config.hpp"
#include "uavpfl/federation.hpp"
#include "uavpfl/scheduling.hpp"
#include "uavpfl/trace.hpp"
#include "uavpfl/verify.hpp"

namespace py = pybind11;
using namespace uavpfl;

namespace {

// Dicts cross the boundary through the json module.
nlohmann::json to_native(const py::object& obj) {
  const auto text = py::module_::import("json").attr("dumps")(obj).cast<std::string>();
  return nlohmann::json::parse(text);
}

py::object to_python(const nlohmann::json& doc) {
  return py::module_::import("json").attr("loads")(doc.dump());
}

ScenarioConfig resolve(const py::object& config) {
  if (config.is_none()) return default_config();
  return config_from_json(to_native(config));
}

py::dict run(const py::object& config, std::optional<std::string> out) {
  const auto cfg = resolve(config);
  TrainingResult result;
  {
    py::gil_scoped_release release;
    result = run_training(cfg);
  }
  if (out) write_run(*out, result, cfg);
  py::list rounds;
  for (const auto& r : result.rounds) {
    py::dict row;
    row["round"] = r.round;
    row["selected"] = r.selected;
    row["designated_uav"] = r.designated_uav;
    row["mean_accuracy"] = r.mean_accuracy;
    row["mean_train_loss"] = r.mean_train_loss;
    row["e_round"] = r.ledger.e_round;
    row["communication_energy"] = r.ledger.communication_energy();
    row["cumulative_energy"] = r.ledger.cumulative_energy;
    rounds.append(row);
  }
  auto summary = to_python(summary_json(result, cfg)).cast<py::dict>();
  summary["trace"] = rounds;
  return summary;
}

py::list verify(std::uint64_t seed) {
  py::list out;
  for (const auto& r : run_verify_suite(seed)) {
    py::dict d;
    d["name"] = r.name;
    d["passed"] = r.passed;
    d["worst"] = r.worst;
    d["tolerance"] = r.tolerance;
    d["seconds"] = r.seconds;
    out.append(d);
  }
  return out;
}

py::dict channel_probe(double distance, int share, const py::object& config) {
  const auto cfg = resolve(config);
  const double bw = cfg.bandwidth_hz / share;
  py::dict d;
  d["bandwidth_hz"] = bw;
  if (distance >= cfg.uav_altitude_m) {
    const auto t = air_to_ground_terms(distance, cfg);
    const auto g = d2u_gain(distance, cfg);
    d["elevation_deg"] = t.elevation_deg;
    d["p_los"] = t.p_los;
    d["d2u_gain_db"] = g.gain_db;
    d["device_rate_bps"] = link_rate(dbm_to_watts(cfg.device_tx_power_dbm), g, bw, cfg);
  }
  const auto u = u2u_gain(distance, cfg);
  d["u2u_gain_db"] = u.gain_db;
  d["u2u_rate_bps"] = link_rate(cfg.uav_tx_power_w, u, bw, cfg);
  return d;
}

}  // namespace

PYBIND11_MODULE(uavpfl, m) {
  m.doc() = "UAV-aided personalized federated learning simulator";
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("default_config", [] { return to_python(to_json(default_config())); });
  m.def(
      "validate_config", [](const py::object& config) { return to_python(to_json(resolve(config))); },
      py::arg("config"), "Fill defaults, validate and return the full configuration.");
  m.def("selection_size", &selection_size, py::arg("alpha"), py::arg("num_devices"));
  m.def(
      "top_alpha_select",
      [](const std::vector<double>& norms, double alpha) { return top_alpha_select(norms, alpha); },
      py::arg("grad_norms"), py::arg("alpha"));
  m.def("run", &run, py::arg("config") = py::none(), py::arg("out") = py::none(),
        "Train once; optionally write trace.csv and summary.json into `out`.");
  m.def("verify", &verify, py::arg("seed") = 1);
  m.def("channel_probe", &channel_probe, py::arg("distance"), py::arg("share") = 1,
        py::arg("config") = py::none());
}
