#include <sstream>

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "vanhove/dynamics.hpp"
#include "vanhove/hybrid.hpp"
#include "vanhove/operators.hpp"
#include "vanhove/scenario.hpp"
#include "vanhove/states.hpp"
#include "vanhove/timeop.hpp"

namespace py = pybind11;
using namespace vanhove;

namespace {

using AxisTuple = std::tuple<double, double, int>;

Axis to_axis(const AxisTuple& t) { return {std::get<0>(t), std::get<1>(t), std::get<2>(t)}; }

template <typename T>
py::array_t<T> to_numpy(const Field<T>& f) {
  const auto [nq, np, nx] = f.grid().shape();
  std::vector<py::ssize_t> shape{nq, np};
  if (f.grid().has_x()) shape.push_back(nx);
  py::array_t<T> out(shape);
  std::copy(f.values().begin(), f.values().end(), out.mutable_data());
  return out;
}

template <typename T>
Field<T> from_numpy(const PhaseSpaceGrid& grid, py::array_t<T, py::array::c_style | py::array::forcecast> a) {
  if (static_cast<std::size_t>(a.size()) != grid.size()) throw PreconditionError("array size does not match grid");
  return Field<T>(grid, std::vector<T>(a.data(), a.data() + a.size()));
}

StencilOrder to_order(int order) {
  if (order == 2) return StencilOrder::second;
  if (order == 4) return StencilOrder::fourth;
  throw PreconditionError("stencil order must be 2 or 4");
}

PhaseFunction function_of(const PhaseSpaceGrid& grid, const Polynomial& poly) {
  return PhaseFunction::sample(grid.phase_plane(), AnalyticRule::from(poly, poly.to_string()));
}

py::dict constraint_dict(const ConstraintReport& r) {
  py::dict d;
  d["r1"] = r.r1;
  d["r2"] = r.r2;
  d["r3"] = r.r3;
  d["boundary_mass"] = r.boundary_mass;
  d["pass"] = r.pass();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Van Hove operators, constrained classical wavefunctions and hybrid dynamics";

  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  py::class_<PhaseSpaceGrid>(m, "Grid")
      .def(py::init([](AxisTuple q, AxisTuple p, std::optional<AxisTuple> x) {
             return x ? PhaseSpaceGrid(to_axis(q), to_axis(p), to_axis(*x)) : PhaseSpaceGrid(to_axis(q), to_axis(p));
           }),
           py::arg("q"), py::arg("p"), py::arg("x") = std::nullopt)
      .def_property_readonly("shape", [](const PhaseSpaceGrid& g) {
        const auto s = g.shape();
        if (g.has_x()) return py::tuple(py::make_tuple(s[0], s[1], s[2]));
        return py::tuple(py::make_tuple(s[0], s[1]));
      })
      .def("coords", [](const PhaseSpaceGrid& g, const std::string& axis) {
        const Axis& a = axis == "q" ? g.q() : axis == "p" ? g.p() : g.x();
        std::vector<double> c(a.n);
        for (int i = 0; i < a.n; ++i) c[i] = a.coord(i);
        return c;
      });

  py::class_<Polynomial>(m, "Polynomial")
      .def(py::init([](const std::vector<std::tuple<double, int, int>>& terms) {
             std::vector<Polynomial::Term> t;
             for (const auto& [c, a, b] : terms) t.push_back({c, a, b});
             return Polynomial(t);
           }),
           py::arg("terms"), "Sum of coeff * q^a * p^b from (coeff, a, b) triples")
      .def("__call__", &Polynomial::operator())
      .def("bracket", [](const Polynomial& f, const Polynomial& g) { return poisson_bracket(f, g); })
      .def("__repr__", &Polynomial::to_string);

  m.def(
      "apply_vanhove",
      [](const Polynomial& f, const PhaseSpaceGrid& grid, py::array_t<Complex> phi, double hbar, int order) {
        const VanHoveOperator op = build_vanhove(function_of(grid, f), hbar, to_order(order));
        return to_numpy(apply(op, from_numpy<Complex>(grid, phi), to_order(order)));
      },
      py::arg("f"), py::arg("grid"), py::arg("phi"), py::arg("hbar") = 1.0, py::arg("order") = 4);

  m.def(
      "commutator_residual",
      [](const Polynomial& f, const Polynomial& g, const PhaseSpaceGrid& grid, py::array_t<Complex> phi, double hbar,
         int order) {
        return commutator_residual(function_of(grid, f), function_of(grid, g), from_numpy<Complex>(grid, phi), hbar,
                                   to_order(order))
            .relative;
      },
      py::arg("f"), py::arg("g"), py::arg("grid"), py::arg("phi"), py::arg("hbar") = 1.0, py::arg("order") = 4);

  m.def(
      "dirac_rule_audit",
      [](const Polynomial& f, const Polynomial& g, const PhaseSpaceGrid& grid, py::array_t<Complex> phi, double a,
         double b, double hbar) {
        return dirac_rule_audit(function_of(grid, f), function_of(grid, g), from_numpy<Complex>(grid, phi), a, b, hbar)
            .to_json()
            .dump();
      },
      py::arg("f"), py::arg("g"), py::arg("grid"), py::arg("phi"), py::arg("a") = 1.0, py::arg("b") = 1.0,
      py::arg("hbar") = 1.0, "JSON text with one entry per quantization rule");

  m.def(
      "gaussian_density",
      [](const PhaseSpaceGrid& grid, std::pair<double, double> center, double wq, double wp) {
        return to_numpy(gaussian_density(grid, {center.first, center.second}, wq, wp));
      },
      py::arg("grid"), py::arg("center"), py::arg("wq"), py::arg("wp"));

  m.def(
      "construct_oscillator_sigma",
      [](const PhaseSpaceGrid& grid, std::pair<double, double> reference, double mass, double omega, double t) {
        return to_numpy(construct_sigma(oscillator_sigma_spec(mass, omega, {reference.first, reference.second}, t), grid)
                            .sigma.field());
      },
      py::arg("grid"), py::arg("reference"), py::arg("mass") = 1.0, py::arg("omega") = 1.0, py::arg("t") = 0.0);

  m.def(
      "verify_constraints",
      [](const PhaseSpaceGrid& grid, py::array_t<double> rho, py::array_t<double> sigma, double hbar, double mass,
         double omega) {
        const ClassicalWavefunction s = make_wavefunction(from_numpy<double>(grid, rho), from_numpy<double>(grid, sigma), hbar);
        ConstraintOptions opts;
        opts.timescale = 1.0 / omega;
        return constraint_dict(verify_constraints(s, Hamiltonian::harmonic_oscillator(mass, omega), std::nullopt, opts, false));
      },
      py::arg("grid"), py::arg("rho"), py::arg("sigma"), py::arg("hbar") = 1.0, py::arg("mass") = 1.0,
      py::arg("omega") = 1.0, "Residuals r1, r2 of a state against the oscillator Hamiltonian");

  m.def(
      "expectation",
      [](const Polynomial& f, const PhaseSpaceGrid& grid, py::array_t<double> rho, py::array_t<double> sigma, double hbar) {
        const ClassicalWavefunction s = make_wavefunction(from_numpy<double>(grid, rho), from_numpy<double>(grid, sigma), hbar);
        const ExpectationResult r = expectation(function_of(grid, f), s);
        py::dict d;
        d["operator_value"] = r.operator_value;
        d["classical_average"] = r.classical_average;
        d["absolute"] = r.absolute;
        d["relative"] = r.relative;
        d["imaginary_leakage"] = r.imaginary_leakage;
        return d;
      },
      py::arg("f"), py::arg("grid"), py::arg("rho"), py::arg("sigma"), py::arg("hbar") = 1.0);

  m.def(
      "liouville_evolve",
      [](const PhaseSpaceGrid& grid, py::array_t<double> rho, py::array_t<double> sigma, double t_final, int steps,
         double mass, double omega, double hbar) {
        const ClassicalWavefunction s = make_wavefunction(from_numpy<double>(grid, rho), from_numpy<double>(grid, sigma), hbar);
        EvolutionConfig cfg;
        cfg.t_final = t_final;
        cfg.dt = t_final / steps;
        const EvolutionResult res = [&] {
          py::gil_scoped_release release;
          return evolve(s, Hamiltonian::harmonic_oscillator(mass, omega), cfg);
        }();
        return py::make_tuple(to_numpy(res.state.rho.field()), to_numpy(res.state.sigma.field()), res.cumulative_deficit);
      },
      py::arg("grid"), py::arg("rho"), py::arg("sigma"), py::arg("t_final"), py::arg("steps"), py::arg("mass") = 1.0,
      py::arg("omega") = 1.0, py::arg("hbar") = 1.0, "Oscillator evolution; returns (rho, sigma, cumulative deficit)");

  m.def(
      "tau_flow",
      [](double q0, double p0, double lambda_target, double dlambda) {
        const TauFlowResult r = tau_flow(q0, p0, lambda_target, dlambda);
        py::dict d;
        d["lambda"] = r.lambda;
        d["q"] = r.q;
        d["p"] = r.p;
        d["H"] = r.energy;
        d["E0"] = r.e0;
        d["termination_lambda"] = r.termination_lambda;
        d["reason"] = to_string(r.reason);
        return d;
      },
      py::arg("q0"), py::arg("p0"), py::arg("lambda_target"), py::arg("dlambda") = 1e-3);

  m.def(
      "qubit_measurement",
      [](double w_plus, double K, double epsilon, int nq, int np) {
        MeasurementConfig cfg;
        cfg.w_plus = w_plus;
        cfg.time = 1.0;
        cfg.kappa = K;
        cfg.epsilon = epsilon;
        const PhaseSpaceGrid grid({-K - 1.0, K + 1.0, nq}, {-6 * epsilon, 6 * epsilon, np});
        return qubit_measurement_run(grid, cfg).report().dump();
      },
      py::arg("w_plus"), py::arg("K"), py::arg("epsilon"), py::arg("nq") = 513, py::arg("np") = 64,
      "JSON measurement report");

  m.def(
      "run_scenario",
      [](const std::filesystem::path& path, const std::filesystem::path& out, double grid_scale, const std::string& format) {
        RunOptions opts;
        opts.out_root = out;
        opts.grid_scale = grid_scale;
        opts.format = parse_format(format);
        std::ostringstream log;
        ScenarioOutcome outcome;
        {
          py::gil_scoped_release release;
          outcome = run_scenario_file(path, opts, log);
        }
        return py::make_tuple(outcome.exit_code, log.str());
      },
      py::arg("path"), py::arg("out"), py::arg("grid_scale") = 1.0, py::arg("format") = "both");

  m.def("list_scenarios", [] {
    std::vector<std::tuple<std::string, std::string, std::string>> out;
    for (const CatalogEntry& e : list_scenarios()) out.emplace_back(e.name, e.kind, e.description);
    return out;
  });
}
