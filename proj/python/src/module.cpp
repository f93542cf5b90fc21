#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sdcam/diagnostics.hpp"
#include "sdcam/problems.hpp"
#include "sdcam/prox.hpp"
#include "sdcam/solver.hpp"

namespace py = pybind11;
using namespace sdcam;

namespace {

struct PyInstance {
  Instance inst;
};

py::dict trace_columns(const Trace& trace) {
  const auto n = static_cast<py::ssize_t>(trace.size());
  auto column = [&](auto get) {
    py::array_t<double> a(n);
    auto m = a.mutable_unchecked<1>();
    for (py::ssize_t k = 0; k < n; ++k) m(k) = get(trace[k]);
    return a;
  };
  py::dict d;
  d["t"] = column([](const TraceRow& r) { return double(r.t); });
  d["mu_t"] = column([](const TraceRow& r) { return r.mu_t; });
  d["beta_t"] = column([](const TraceRow& r) { return r.beta_t; });
  d["step_norm"] = column([](const TraceRow& r) { return r.step_norm; });
  d["scaled_step"] = column([](const TraceRow& r) { return r.scaled_step; });
  d["gap"] = column([](const TraceRow& r) { return r.gap; });
  d["prev_gap"] = column([](const TraceRow& r) { return r.prev_gap; });
  d["residual"] = column([](const TraceRow& r) { return r.residual; });
  d["fg_value"] = column([](const TraceRow& r) { return r.fg_value; });
  d["h_at_y"] = column([](const TraceRow& r) { return r.h_at_y; });
  d["H_value"] = column([](const TraceRow& r) { return r.H_value; });
  d["Theta_value"] = column([](const TraceRow& r) { return r.Theta_value.value_or(NAN); });
  d["unsuccessful_this_iter"] = column([](const TraceRow& r) { return double(r.unsuccessful_this_iter); });
  d["rel_feas"] = column([](const TraceRow& r) { return r.rel_feas.value_or(NAN); });
  d["margin_i"] = column([](const TraceRow& r) { return r.margin_i; });
  d["margin_ii"] = column([](const TraceRow& r) { return r.margin_ii; });
  return d;
}

py::dict solve_instance(const PyInstance& pi, const SolverConfig& cfg, const std::string& regime) {
  const RunSetup setup = make_setup(pi.inst);
  SolveResult res;
  {
    py::gil_scoped_release release;
    res = solve(setup.problem, cfg, setup.x0, setup.y0, setup.metric);
  }
  py::dict out;
  out["status"] = to_string(res.status);
  out["successful_iterations"] = res.trace.size();
  out["total_trials"] = res.final_state.trial_count;
  out["total_unsuccessful"] = res.final_state.unsuccessful_count;
  out["x"] = res.final_state.x;
  out["y"] = res.final_state.y;
  out["trace"] = trace_columns(res.trace);

  py::dict consts, report;
  if (!res.trace.empty()) {
    const RateConstants k = rate_constants(setup.problem, cfg, res);
    for (const auto& [name, c] : k.items()) {
      consts[py::str(name)] = c->value ? py::object(py::float_(*c->value)) : py::object(py::none());
    }
    const RateReport rep = rate_bound_check(res.trace, k, parse_regime(regime));
    report["regime"] = regime;
    report["checked"] = rep.checked;
    py::list skipped;
    for (const auto& s : rep.skipped) skipped.append(py::make_tuple(s.inequality, s.missing));
    report["skipped"] = skipped;
    py::list viol;
    for (const auto& v : rep.violations) viol.append(py::make_tuple(v.inequality, v.T, v.lhs, v.rhs));
    report["violations"] = viol;
  }
  out["constants"] = consts;
  out["rate_check"] = report;
  return out;
}

}  // namespace

PYBIND11_MODULE(_sdcam, m) {
  m.doc() = "Single-loop successive DC approximation solver";

  py::register_exception<InvariantViolation>(m, "InvariantViolation", PyExc_RuntimeError);
  py::register_exception<NumericalFailure>(m, "NumericalFailure", PyExc_ArithmeticError);

  py::class_<QcqpParams>(m, "QcqpParams")
      .def(py::init<>())
      .def_readwrite("n", &QcqpParams::n)
      .def_readwrite("m", &QcqpParams::m)
      .def_readwrite("alpha", &QcqpParams::alpha)
      .def_readwrite("p", &QcqpParams::p)
      .def_readwrite("scale0", &QcqpParams::scale0);

  py::class_<MimoParams>(m, "MimoParams")
      .def(py::init<>())
      .def_readwrite("n", &MimoParams::n)
      .def_readwrite("m", &MimoParams::m)
      .def_readwrite("p_psk", &MimoParams::p_psk)
      .def_readwrite("lambda1", &MimoParams::lambda1)
      .def_readwrite("lambda2", &MimoParams::lambda2)
      .def_readwrite("r_lo", &MimoParams::r_lo)
      .def_readwrite("noise", &MimoParams::noise);

  py::class_<MlpParams>(m, "MlpParams")
      .def(py::init<>())
      .def_readwrite("layer_dims", &MlpParams::layer_dims)
      .def_property(
          "activation", [](const MlpParams& p) { return to_string(p.activation); },
          [](MlpParams& p, const std::string& s) { p.activation = parse_activation(s); })
      .def_readwrite("n_samples", &MlpParams::n_samples)
      .def_readwrite("p", &MlpParams::p)
      .def_readwrite("lambda_", &MlpParams::lambda)
      .def_readwrite("source", &MlpParams::source)
      .def_readwrite("idx_images", &MlpParams::idx_images)
      .def_readwrite("idx_labels", &MlpParams::idx_labels);

  py::class_<PyInstance>(m, "Instance")
      .def_property_readonly("family", [](const PyInstance& i) { return family_of(i.inst); })
      .def_property_readonly("n", [](const PyInstance& i) { return make_setup(i.inst).problem.n; })
      .def_property_readonly("m", [](const PyInstance& i) { return make_setup(i.inst).problem.m; })
      .def("to_json", [](const PyInstance& i) { return write_instance_json(i.inst); })
      .def_static("from_json", [](const std::string& text) { return PyInstance{read_instance_json(text)}; })
      .def("save", [](const PyInstance& i, const std::string& path) { save_instance(i.inst, path); })
      .def_static("load", [](const std::string& path) { return PyInstance{load_instance(path)}; });

  m.def("generate_qcqp", [](std::uint64_t seed, const QcqpParams& p) { return PyInstance{qcqp_generate(seed, p)}; });
  m.def("generate_mimo", [](std::uint64_t seed, const MimoParams& p) { return PyInstance{mimo_generate(seed, p)}; });
  m.def("generate_mlp", [](std::uint64_t seed, const MlpParams& p) { return PyInstance{mlp_generate(seed, p)}; });

  py::class_<SolverConfig>(m, "SolverConfig")
      .def(py::init<>())
      .def_readwrite("mu_max", &SolverConfig::mu_max)
      .def_readwrite("mu_init", &SolverConfig::mu_init)
      .def_readwrite("rho", &SolverConfig::rho)
      .def_readwrite("eta", &SolverConfig::eta)
      .def_readwrite("max_successful_iters", &SolverConfig::max_successful_iters)
      .def_readwrite("max_total_trials", &SolverConfig::max_total_trials)
      .def_readwrite("stop_residual", &SolverConfig::stop_residual)
      .def_readwrite("stop_gap", &SolverConfig::stop_gap)
      .def_readwrite("tol_cond_rel", &SolverConfig::tol_cond_rel)
      .def_property(
          "assert_level", [](const SolverConfig& c) { return to_string(c.assert_level); },
          [](SolverConfig& c, const std::string& s) { c.assert_level = parse_assert_level(s); })
      .def_property(
          "schedule", [](const SolverConfig& c) { return to_string(c.schedule.family); },
          [](SolverConfig& c, const std::string& s) { c.schedule.family = parse_schedule_family(s); })
      .def_property(
          "beta0", [](const SolverConfig& c) { return c.schedule.beta0; },
          [](SolverConfig& c, double v) { c.schedule.beta0 = v; })
      .def_property(
          "delta", [](const SolverConfig& c) { return c.schedule.delta; },
          [](SolverConfig& c, double v) { c.schedule.delta = v; })
      .def_property(
          "K", [](const SolverConfig& c) { return c.schedule.K; },
          [](SolverConfig& c, std::int64_t v) { c.schedule.K = v; })
      .def("validate", &SolverConfig::validate);

  m.def("default_solver_config", &default_solver_config, py::arg("family"));
  m.def("solve", &solve_instance, py::arg("instance"), py::arg("config"), py::arg("regime"));

  m.def(
      "prox_lp_power",
      [](const Vector& z, double p, double alpha, double gamma) {
        LpProxParams prm;
        prm.p = p;
        prm.alpha = alpha;
        prm.gamma = gamma;
        prm.validate();
        return prox_lp_power(z, prm);
      },
      py::arg("z"), py::arg("p"), py::arg("alpha"), py::arg("gamma"));
  m.def(
      "lp_prox_objective",
      [](double u, double z, double p, double alpha, double gamma) {
        LpProxParams prm;
        prm.p = p;
        prm.alpha = alpha;
        prm.gamma = gamma;
        return lp_prox_objective(u, z, prm);
      },
      py::arg("u"), py::arg("z"), py::arg("p"), py::arg("alpha"), py::arg("gamma"));
  m.def("soft_threshold", &soft_threshold, py::arg("z"), py::arg("tau"));
  m.def(
      "beta_at",
      [](std::int64_t t, double beta0, double delta, const std::string& family, std::int64_t K) {
        ScheduleSpec s;
        s.family = parse_schedule_family(family);
        s.beta0 = beta0;
        s.delta = delta;
        s.K = K;
        s.validate();
        return beta_at(s, t);
      },
      py::arg("t"), py::arg("beta0"), py::arg("delta"), py::arg("family") = "power", py::arg("K") = 1);
  m.def("suggest_delta", &suggest_delta, py::arg("eps1"), py::arg("eps2"));
  m.def(
      "select_subsequence", [](const std::vector<double>& a) { return select_subsequence(a); },
      py::arg("a"));
  m.def(
      "running_averages", [](const std::vector<double>& a) { return running_averages(a); },
      py::arg("a"));
}
