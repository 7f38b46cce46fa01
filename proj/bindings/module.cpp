// Python bindings for the main pipeline operations: simulation, density
// fitting, discovery selection and field interpolation.
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "spatmht/bench.hpp"
#include "spatmht/decide.hpp"
#include "spatmht/errors.hpp"
#include "spatmht/fieldsim.hpp"
#include "spatmht/interp.hpp"
#include "spatmht/lfdr.hpp"

namespace py = pybind11;
using namespace spatmht;

namespace {

py::dict simulate_run(const std::string& scenario, int config, int width, int height,
                      std::uint64_t seed, int run) {
  const auto grid = make_grid(width, height);
  if (scenario.size() != 1) throw invalid_argument("scenario must be A, B or C");
  const auto spec = scenario_preset(scenario[0], grid, seed);
  const auto network = network_preset(config);

  Rng rr = Rng(seed).derive(100, run);
  const auto ft = synthesize_field(grid, spec, rr.derive(0));
  const auto layout = build_network_layout(grid, network, rr.derive(1));
  const auto meas = sample_measurements(ft.signal_power, layout, spec, rr.derive(2));
  const auto ps = energy_pvalues(meas);

  py::dict out;
  out["pvals"] = ps.pvals;
  out["sensor_index"] = ps.sensor_index;
  out["n_samples"] = ps.n_samples;
  out["active"] = std::vector<int>(ft.truth.active.begin(), ft.truth.active.end());
  out["signal_power"] = ft.signal_power;
  out["noise_power"] = spec.noise_power;
  out["pi0"] = ft.truth.pi0();
  out["fit_seed"] = rr.derive(3).key();
  return out;
}

py::dict fit_lfdr(const std::vector<double>& pvals, const std::string& method,
                  std::uint64_t seed, int max_d) {
  LfdrResult res;
  if (method == "smom") {
    FitConfig fc;
    fc.seed = seed;
    if (max_d < 2 || max_d > 10) throw invalid_argument("max_d must be in [2, 10]");
    fc.max_d = max_d;
    fc.d_schedule.clear();
    for (int d = 2; d <= max_d; ++d) fc.d_schedule.push_back(d);
    res = lfdr_smom(pvals, fc);
  } else if (method == "bum") {
    res = lfdr_bum(pvals);
  } else {
    throw invalid_argument("unknown method '" + method + "' (smom or bum)");
  }

  py::dict out;
  out["lfdrs"] = res.lfdrs;
  out["pi0"] = res.pi0;
  out["chosen_d"] = res.chosen_d;
  out["chosen_K"] = res.chosen_K;
  out["fit_distance"] = res.fit_distance;
  out["weights"] = std::vector<double>(res.model.weights.begin(), res.model.weights.end());
  out["shapes"] = res.model.shapes;
  out["warnings"] = res.warnings;
  return out;
}

std::vector<double> interpolate_field(const std::vector<int>& sensor_index,
                                      const std::vector<double>& lfdrs, int width,
                                      int height) {
  const auto grid = make_grid(width, height);
  SensorLayout layout;
  layout.sensor_index = sensor_index;
  layout.n_samples.assign(sensor_index.size(), 0);
  return interpolate_lfdr_field(layout, lfdrs, grid).values;
}

}  // namespace

PYBIND11_MODULE(_spatmht, m) {
  m.doc() = "spatial multiple hypothesis testing: lfdr estimation over sensor grids";

  m.def("simulate", &simulate_run, py::arg("scenario") = "B", py::arg("config") = 1,
        py::arg("width") = 60, py::arg("height") = 60, py::arg("seed") = 1,
        py::arg("run") = 0,
        "Synthesize one radio field, place the sensor network and return "
        "energy-detector p-values with the ground truth.");

  m.def("fit_lfdr", &fit_lfdr, py::arg("pvals"), py::arg("method") = "smom",
        py::arg("seed") = 1, py::arg("max_d") = 10,
        "Fit the p-value density (spectral mixture or beta-uniform MLE) and "
        "return local false discovery rates.");

  m.def(
      "bfdr_select",
      [](const std::vector<double>& lfdrs, double alpha, const std::string& rule) {
        const BfdrRule r = rule == "sum" ? BfdrRule::sum : BfdrRule::mean;
        if (rule != "sum" && rule != "mean") {
          throw invalid_argument("rule must be 'mean' or 'sum'");
        }
        return bfdr_select(lfdrs, alpha, r);
      },
      py::arg("lfdrs"), py::arg("alpha"), py::arg("rule") = "mean",
      "Select discoveries whose running lfdr aggregate stays below alpha.");

  m.def("bh_select", &bh_procedure, py::arg("pvals"), py::arg("alpha"),
        "Benjamini-Hochberg step-up selection on raw p-values.");

  m.def("interpolate_lfdr", &interpolate_field, py::arg("sensor_index"),
        py::arg("lfdrs"), py::arg("width"), py::arg("height"),
        "Thin-plate-spline extension of sensor lfdr's to every grid point.");

  m.def("p_to_z", &p_to_z, py::arg("p"), "Probit transform (standard normal quantile).");

  py::register_exception<insufficient_data>(m, "InsufficientData");
}
