#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "semtrack/errors.hpp"
#include "semtrack/experiment.hpp"
#include "semtrack/hindsight.hpp"
#include "semtrack/metrics.hpp"
#include "semtrack/model.hpp"
#include "semtrack/tracker.hpp"

namespace py = pybind11;
using namespace semtrack;

namespace {

py::dict snapshot_dict(const TopologySnapshot& s) {
  py::dict d;
  d["t"] = s.t;
  d["A"] = s.A;
  d["b"] = s.b;
  return d;
}

ObservationStream stream_from(const Matrix& X, const std::vector<Matrix>& Y) {
  ObservationStream data;
  data.X = X;
  int t = 0;
  for (const auto& y : Y) data.batches.push_back({++t, y});
  return data;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Online proximal-gradient tracking of time-varying SEM topologies";

  py::register_exception<DimensionMismatch>(m, "DimensionMismatch", PyExc_ValueError);
  py::register_exception<NonFiniteValue>(m, "NonFiniteValue", PyExc_ArithmeticError);
  py::register_exception<SingularSystem>(m, "SingularSystem", PyExc_ArithmeticError);
  py::register_exception<AssumptionViolated>(m, "AssumptionViolated", PyExc_ValueError);
  py::register_exception<NoConsistentPattern>(m, "NoConsistentPattern", PyExc_RuntimeError);
  py::register_exception<DegenerateData>(m, "DegenerateData", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::enum_<Regime>(m, "Regime").value("Smooth", Regime::Smooth).value("Abrupt", Regime::Abrupt);

  py::class_<GeneratorConfig>(m, "GeneratorConfig")
      .def(py::init<>())
      .def_readwrite("nodes", &GeneratorConfig::nodes)
      .def_readwrite("contagions", &GeneratorConfig::contagions)
      .def_readwrite("horizon", &GeneratorConfig::horizon)
      .def_readwrite("edge_probability", &GeneratorConfig::edge_probability)
      .def_readwrite("sigma", &GeneratorConfig::sigma)
      .def_readwrite("regime", &GeneratorConfig::regime)
      .def_readwrite("seed", &GeneratorConfig::seed)
      .def("validate", &GeneratorConfig::validate);

  py::class_<AlgoConfig>(m, "AlgoConfig")
      .def(py::init<>())
      .def(py::init([](double gamma, double lambda, double alpha) {
             AlgoConfig c{gamma, lambda, alpha};
             c.validate();
             return c;
           }),
           py::arg("gamma"), py::arg("lambda_"), py::arg("alpha"))
      .def_readwrite("gamma", &AlgoConfig::gamma)
      .def_readwrite("lambda_", &AlgoConfig::lambda)
      .def_readwrite("alpha", &AlgoConfig::alpha);

  py::class_<SolverOptions>(m, "SolverOptions")
      .def(py::init<>())
      .def_readwrite("tol", &SolverOptions::tol)
      .def_readwrite("max_iter", &SolverOptions::max_iter)
      .def_readwrite("step", &SolverOptions::step);

  m.def("simulate", [](const GeneratorConfig& config) {
    const SyntheticRun run = simulate(config);
    py::dict out;
    py::list truth, ys;
    for (const auto& s : run.truth.snapshots) truth.append(snapshot_dict(s));
    for (const auto& b : run.data.batches) ys.append(b.Y);
    out["support"] = run.support;
    out["truth"] = truth;
    out["scale"] = run.truth.scale;
    out["X"] = run.data.X;
    out["Y"] = ys;
    return out;
  }, "Synthetic support, topology sequence and observations for one seed.");

  m.def("spectral_radius", &spectral_radius);
  m.def("build_regressor", &build_regressor, py::arg("Y"), py::arg("X"), py::arg("i"));
  m.def("soft_threshold", &soft_threshold, py::arg("w"), py::arg("kappa"));
  m.def("prox_partial_l1", &prox_partial_l1, py::arg("v"), py::arg("alpha"), py::arg("lambda_"));

  py::class_<TrackerState>(m, "Tracker")
      .def(py::init([](const AlgoConfig& config, const Matrix& X) {
             return init(static_cast<int>(X.rows()), static_cast<int>(X.cols()), config, X);
           }),
           py::arg("config"), py::arg("X"))
      .def("step", [](TrackerState& s, const Matrix& Y) {
        StepResult r = step(s, Y);
        return py::make_tuple(snapshot_dict(r.estimate), snapshot_dict(r.prediction));
      }, py::arg("Y"), "Consume Y^t; returns (estimate for t, prediction for t+1).")
      .def_property_readonly("t", &TrackerState::t)
      .def("estimates", [](const TrackerState& s) { return estimates(s); })
      .def("moments", [](const TrackerState& s, int i) {
        const auto& n = s.nodes.at(static_cast<std::size_t>(i));
        return py::make_tuple(n.phi, n.r, n.c);
      }, py::arg("i"))
      .def("objective", [](const TrackerState& s, int i, const Vector& v) {
        return evaluate_objective(s.nodes.at(static_cast<std::size_t>(i)), v, s.config.lambda);
      }, py::arg("i"), py::arg("v"))
      .def("to_checkpoint", &checkpoint_to_string)
      .def_static("from_checkpoint", &checkpoint_from_string, py::arg("text"));

  m.def("solve_comparator", [](const Matrix& phi, const Vector& r, double lambda, const SolverOptions& opts) {
    const auto sol = solve_comparator(phi, r, lambda, opts);
    return py::make_tuple(sol.v, sol.converged, sol.iterations);
  }, py::arg("Phi"), py::arg("r"), py::arg("lambda_"), py::arg("options") = SolverOptions{});
  m.def("exact_oracle", &exact_oracle, py::arg("Phi"), py::arg("r"), py::arg("lambda_"));

  m.def("path_length", [](const std::vector<Vector>& seq) { return path_length(seq); });
  m.def("regret_constant", [](double B_xy, double beta, double L_f, double lambda, double alpha,
                              double gamma, int C, int N) {
    return regret_constant({B_xy, beta, L_f, lambda, alpha, gamma, C, N});
  }, py::arg("B_xy"), py::arg("beta"), py::arg("L_f"), py::arg("lambda_"), py::arg("alpha"),
     py::arg("gamma"), py::arg("C"), py::arg("N"));
  m.def("resolve_alpha", [](const Matrix& X, const std::vector<Matrix>& Y, double gamma) {
    return resolve_alpha(stream_from(X, Y), gamma);
  }, py::arg("X"), py::arg("Y"), py::arg("gamma"));

  m.def("analyze_stream", [](const Matrix& X, const std::vector<Matrix>& Y, const AlgoConfig& algo, int t_burn) {
    const ObservationStream data = stream_from(X, Y);
    const RunTrace trace = track_and_compare(data, algo);
    const RegretReport report = analyze(trace, data, nullptr, t_burn);
    py::dict out;
    out["regret"] = report.regret.cumulative;
    out["per_node_regret"] = report.regret.per_node;
    out["D_h"] = report.bound ? py::cast(report.bound->D_h) : py::none();
    out["bound"] = report.bound ? py::cast(report.bound->per_node) : py::none();
    out["beta"] = report.constants.beta;
    out["L_f"] = report.constants.L_f;
    out["B_xy"] = report.constants.B_xy;
    out["estimates"] = trace.estimates();
    out["comparators"] = trace.comparators();
    return out;
  }, py::arg("X"), py::arg("Y"), py::arg("algo"), py::arg("t_burn") = 0,
     "Track a stream, solve the comparators and return the regret summary.");

  m.def("run_experiment", [](const std::string& config_json, const std::string& output_dir) {
    ExperimentConfig cfg = config_from_json_string(config_json);
    cfg.output_dir = output_dir;
    std::ostringstream log;
    const int code = run_experiment(cfg, log);
    return py::make_tuple(code, log.str());
  }, py::arg("config_json"), py::arg("output_dir"),
     "Run the full experiment; returns (exit_code, log).");
}
