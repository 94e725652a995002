#include "vanhove/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "vanhove/dynamics.hpp"
#include "vanhove/hybrid.hpp"
#include "vanhove/operators.hpp"
#include "vanhove/states.hpp"
#include "vanhove/timeop.hpp"

namespace vanhove {

using nlohmann::json;
namespace fs = std::filesystem;

const std::vector<std::string>& scenario_kinds() {
  static const std::vector<std::string> kinds = {"algebra_audit", "classical_evolution", "time_operator",
                                                 "eigenstate",    "superposition",       "hybrid_continuous",
                                                 "qubit_measurement"};
  return kinds;
}

namespace {

// Keys each kind reads from [params]; anything else is a typo.
const std::map<std::string, std::set<std::string>>& known_params() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"algebra_audit", {"audit", "functions", "order", "state", "tolerance"}},
      {"classical_evolution",
       {"bundle", "hamiltonian", "integrator", "interpolation", "observables", "periods", "propagator_check",
        "record_every", "steps", "t_final", "timescale"}},
      {"time_operator",
       {"dlambda", "eps_h", "generator_step", "overshoot", "reference", "shell_energy", "shell_eps", "start",
        "weight"}},
      {"eigenstate", {"energy", "eps", "evolve_period", "reference", "steps", "weight"}},
      {"superposition", {"bundle1", "bundle2", "w1", "w2"}},
      {"hybrid_continuous", {"classical", "coupling", "dt", "k", "quantum", "record_every", "steps"}},
      {"qubit_measurement",
       {"K", "b0", "epsilon", "full_hamiltonian", "kappa", "steps", "time", "v_c_omega", "w_plus"}},
  };
  return keys;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void parse_fail(const fs::path& source, int line, const std::string& what) {
  std::ostringstream msg;
  msg << (source.empty() ? std::string("<config>") : source.string());
  if (line > 0) msg << ":" << line;
  msg << ": " << what;
  throw ParseError(msg.str());
}

}  // namespace

Scenario parse_scenario(const std::string& text, const fs::path& source) {
  std::map<std::string, json> sections;
  std::string current;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  bool any = false;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    any = true;
    if (line.front() == '[') {
      if (line.back() != ']') parse_fail(source, line_no, "unterminated section header");
      current = trim(line.substr(1, line.size() - 2));
      if (current.empty()) parse_fail(source, line_no, "empty section name");
      if (sections.count(current)) parse_fail(source, line_no, "duplicate section [" + current + "]");
      sections[current] = json::object();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) parse_fail(source, line_no, "expected 'key = value'");
    if (current.empty()) parse_fail(source, line_no, "key outside of any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) parse_fail(source, line_no, "missing key");
    if (sections[current].contains(key)) parse_fail(source, line_no, "duplicate key '" + key + "'");
    try {
      sections[current][key] = json::parse(value);
    } catch (const json::parse_error& e) {
      parse_fail(source, line_no, "value of '" + key + "' is not valid JSON: " + value);
    }
  }
  if (!any) parse_fail(source, 0, "empty configuration");
  for (const auto& [name, _] : sections) {
    if (name != "scenario" && name != "grid" && name != "constants" && name != "params") {
      parse_fail(source, 0, "unknown section [" + name + "]");
    }
  }
  if (!sections.count("scenario")) parse_fail(source, 0, "missing [scenario] section");

  Scenario sc;
  sc.source = source;
  try {
    const json& head = sections["scenario"];
    if (!head.contains("kind")) parse_fail(source, 0, "[scenario] needs a kind");
    sc.kind = head.at("kind").get<std::string>();
    const auto& kinds = scenario_kinds();
    if (std::find(kinds.begin(), kinds.end(), sc.kind) == kinds.end()) {
      parse_fail(source, 0, "unknown scenario kind '" + sc.kind + "'");
    }
    sc.name = head.value("name", source.empty() ? sc.kind : source.stem().string());
    sc.description = head.value("description", std::string());
    sc.seed = head.value("seed", std::uint64_t{0});
    for (const auto& [key, _] : head.items()) {
      if (key != "kind" && key != "name" && key != "description" && key != "seed") {
        parse_fail(source, 0, "unknown key '" + key + "' in [scenario]");
      }
    }
    if (sections.count("grid")) sc.grid = sections["grid"];
    if (sections.count("params")) sc.params = sections["params"];
    const bool volume = sc.kind == "hybrid_continuous";
    for (const auto& [key, _] : sc.grid.items()) {
      if (key != "q" && key != "p" && !(volume && key == "x")) {
        parse_fail(source, 0, "unknown axis '" + key + "' in [grid]");
      }
    }
    const std::set<std::string>& allowed = known_params().at(sc.kind);
    for (const auto& [key, _] : sc.params.items()) {
      if (!allowed.count(key)) parse_fail(source, 0, "unknown parameter '" + key + "' for kind " + sc.kind);
    }
    if (sections.count("constants")) {
      const json& c = sections["constants"];
      for (const auto& [key, _] : c.items()) {
        if (key != "hbar" && key != "mass" && key != "mass_quantum" && key != "omega") {
          parse_fail(source, 0, "unknown constant '" + key + "'");
        }
      }
      sc.constants.hbar = c.value("hbar", 1.0);
      sc.constants.mass = c.value("mass", 1.0);
      sc.constants.mass_quantum = c.value("mass_quantum", 1.0);
      sc.constants.omega = c.value("omega", 1.0);
    }
  } catch (const json::exception& e) {
    parse_fail(source, 0, std::string("malformed value: ") + e.what());
  }
  if (sc.name.empty() || sc.name.find_first_of("/\\") != std::string::npos) {
    parse_fail(source, 0, "scenario name must be a plain file name");
  }
  return sc;
}

Scenario load_scenario(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open configuration");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str(), path);
}

namespace {

// ---------------------------------------------------------------------------
// Shared plumbing for the scenario kinds.

class Runner {
 public:
  Runner(const Scenario& sc, const RunOptions& options, std::ostream& log, ScenarioOutcome& outcome)
      : sc_(sc), options_(options), log_(log), outcome_(outcome), dir_(options.out_root / sc.name) {}

  const Scenario& scenario() const { return sc_; }
  const PhysicalConstants& constants() const { return sc_.constants; }
  OutputFormat format() const { return options_.format; }
  const fs::path& dir() const { return dir_; }

  template <typename T>
  T param(const std::string& key, T fallback) const {
    return sc_.params.contains(key) ? sc_.params.at(key).get<T>() : fallback;
  }
  bool has(const std::string& key) const { return sc_.params.contains(key); }
  const json& raw(const std::string& key) const {
    if (!sc_.params.contains(key)) throw ParseError(sc_.name + ": missing parameter '" + key + "'");
    return sc_.params.at(key);
  }

  Axis axis(const std::string& key, Axis fallback) const {
    if (!sc_.grid.contains(key)) return fallback;
    const json& a = sc_.grid.at(key);
    if (!a.is_array() || a.size() != 3) throw ParseError(sc_.name + ": grid." + key + " must be [min, max, n]");
    return {a[0].get<double>(), a[1].get<double>(), a[2].get<int>()};
  }
  PhaseSpaceGrid plane(Axis q, Axis p) const {
    return PhaseSpaceGrid(axis("q", q), axis("p", p)).refined(options_.grid_scale);
  }
  PhaseSpaceGrid volume(Axis q, Axis p, Axis x) const {
    return PhaseSpaceGrid(axis("q", q), axis("p", p), axis("x", x)).refined(options_.grid_scale);
  }

  // A check passes when value < bound (or > bound with `above`).
  void below(const std::string& name, double value, double bound) { record(name, value, value < bound, "< " + short_number(bound)); }
  void above(const std::string& name, double value, double bound) { record(name, value, value > bound, "> " + short_number(bound)); }
  void within(const std::string& name, double value, double target, double tol) {
    record(name, value, std::abs(value - target) <= tol, "= " + short_number(target) + " +- " + short_number(tol));
  }
  static std::string short_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
  }
  void holds(const std::string& name, bool ok, double value = 0.0, const std::string& criterion = "true") {
    record(name, value, ok, criterion);
  }

  void artifact(const fs::path& p) { outcome_.artifacts.push_back(p); }
  void json_file(const std::string& file, const json& value) {
    write_json(dir_ / file, value);
    artifact(dir_ / file);
  }
  std::ofstream csv_file(const std::string& file) {
    fs::create_directories(dir_);
    std::ofstream out(dir_ / file, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + (dir_ / file).string());
    artifact(dir_ / file);
    return out;
  }
  void state(const std::string& name, const ClassicalWavefunction& s, const json& meta = json::object()) {
    for (const fs::path& p : save_state(dir_, name, s, options_.format, meta)) artifact(p);
  }
  void field(const std::string& name, const RealField& f) {
    if (wants_csv(options_.format)) {
      write_field_csv(dir_ / (name + ".csv"), f);
      artifact(dir_ / (name + ".csv"));
    }
    if (wants_json(options_.format)) {
      write_field_binary(dir_ / (name + ".json"), f, name);
      artifact(dir_ / (name + ".json"));
      artifact(dir_ / (name + ".bin"));
    }
  }

  void write_summary() {
    json checks = json::array();
    for (const CheckResult& c : outcome_.checks) {
      checks.push_back({{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"criterion", c.criterion}});
    }
    if (wants_json(options_.format)) {
      json_file("checks.json", {{"scenario", sc_.name}, {"kind", sc_.kind}, {"checks", checks}});
    }
    if (wants_csv(options_.format)) {
      std::ofstream out = csv_file("checks.csv");
      out << "check,pass,value,criterion\n";
      for (const CheckResult& c : outcome_.checks) {
        out << c.name << ',' << (c.pass ? "PASS" : "FAIL") << ',' << format_double(c.value) << ",\"" << c.criterion
            << "\"\n";
      }
    }
  }

 private:
  void record(const std::string& name, double value, bool pass, const std::string& criterion) {
    outcome_.checks.push_back({name, pass, value, criterion});
    log_ << (pass ? "PASS " : "FAIL ") << sc_.name << "." << name << "  value=" << format_double(value) << "  "
         << criterion << '\n';
  }

  const Scenario& sc_;
  const RunOptions& options_;
  std::ostream& log_;
  ScenarioOutcome& outcome_;
  fs::path dir_;
};

PhasePoint point(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ParseError("expected a [q, p] pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

Polynomial named_polynomial(const std::string& name, const PhysicalConstants& c) {
  const Polynomial q = Polynomial::q(), p = Polynomial::p();
  if (name == "1") return Polynomial::constant(1.0);
  if (name == "q") return q;
  if (name == "p") return p;
  if (name == "q2") return q * q;
  if (name == "p2") return p * p;
  if (name == "qp") return q * p;
  if (name == "q2p") return q * q * p;
  if (name == "H") {
    return (0.5 / c.mass) * (p * p) + (0.5 * c.mass * c.omega * c.omega) * (q * q);
  }
  throw ParseError("unknown phase-space function '" + name + "'");
}

PhaseFunction named_function(const std::string& name, const PhaseSpaceGrid& grid, const PhysicalConstants& c) {
  return PhaseFunction::sample(grid, AnalyticRule::from(named_polynomial(name, c), name));
}

// sqrt of a normalized Gaussian times a plane wave exp(i (kq q + kp p)).
ComplexField gaussian_state(const PhaseSpaceGrid& grid, PhasePoint center, double width, PhasePoint wave) {
  const RealField rho = gaussian_density(grid, center, width, width);
  ComplexField phi(grid);
  for (int i = 0; i < grid.q().n; ++i) {
    for (int j = 0; j < grid.p().n; ++j) {
      const double phase = wave.q * grid.q().coord(i) + wave.p * grid.p().coord(j);
      phi.at(i, j) = std::polar(std::sqrt(rho.at(i, j)), phase);
    }
  }
  return phi;
}

double period_of(const PhysicalConstants& c) { return 2.0 * std::numbers::pi / c.omega; }

// ---------------------------------------------------------------------------

void run_algebra(Runner& r) {
  const PhysicalConstants& c = r.constants();
  const PhaseSpaceGrid grid = r.plane({-6, 6, 128}, {-6, 6, 128});
  const StencilOrder order = r.param("order", 4) == 2 ? StencilOrder::second : StencilOrder::fourth;
  const double tol = r.param("tolerance", 1e-2);
  const json state = r.has("state") ? r.raw("state") : json::object();
  const PhasePoint center = state.contains("center") ? point(state["center"]) : PhasePoint{0.3, -0.2};
  const double width = state.value("width", 1.0);
  const PhasePoint wave = state.contains("wave") ? point(state["wave"]) : PhasePoint{0.5, -0.3};
  const ComplexField phi = gaussian_state(grid, center, width, wave);

  const auto names = r.param("functions", std::vector<std::string>{"q", "p", "q2", "p2", "qp", "q2p", "H"});
  std::vector<PhaseFunction> fns;
  for (const std::string& n : names) fns.push_back(named_function(n, grid, c));

  json pairs = json::array();
  std::ostringstream table;
  table << "f,g,residual,relative\n";
  for (std::size_t a = 0; a < fns.size(); ++a) {
    for (std::size_t b = a + 1; b < fns.size(); ++b) {
      const CommutatorResidual res = commutator_residual(fns[a], fns[b], phi, c.hbar, order);
      pairs.push_back({{"f", names[a]}, {"g", names[b]}, {"residual", res.residual}, {"relative", res.relative}});
      table << names[a] << ',' << names[b] << ',' << format_double(res.residual) << ',' << format_double(res.relative)
            << '\n';
      r.below("commutator[" + names[a] + "," + names[b] + "]", res.relative, tol);
    }
  }
  if (wants_csv(r.format())) r.csv_file("commutators.csv") << table.str();
  if (wants_json(r.format())) r.json_file("commutators.json", pairs);

  // Canonical pair: [O_q, O_p] = i hbar.
  const PhaseFunction q = named_function("q", grid, c), p = named_function("p", grid, c);
  r.below("canonical_pair", commutator_residual(q, p, phi, c.hbar, order).relative, 1e-3);

  // O_q O_q - O_{q^2} = -hbar^2 d^2/dp^2.
  const VanHoveOperator oq = build_vanhove(q, c.hbar, order);
  const VanHoveOperator oq2 = build_vanhove(named_function("q2", grid, c), c.hbar, order);
  const ComplexField defect = apply(oq, apply(oq, phi, order), order) - apply(oq2, phi, order);
  const ComplexField closed = defect + (c.hbar * c.hbar) * second_derivative(phi, AxisId::p, order);
  const double norm = l2_norm(phi);
  r.below("power_rule_closed_form", l2_norm(closed) / norm, 1e-3);
  r.above("power_rule_violation", l2_norm(defect) / norm, 1e-2);

  const json audit = r.has("audit") ? r.raw("audit") : json::object();
  const std::string fname = audit.value("f", std::string("H")), gname = audit.value("g", std::string("qp"));
  const DiracAuditReport report =
      dirac_rule_audit(named_function(fname, grid, c), named_function(gname, grid, c), phi, audit.value("a", 2.0),
                       audit.value("b", -0.5), c.hbar, order);
  r.json_file("dirac_audit.json", {{"f", fname}, {"g", gname}, {"rules", report.to_json()}});
  for (const RuleCheck& rule : report.rules) {
    r.holds("dirac_" + rule.rule + (rule.expected_to_hold ? "_holds" : "_fails"), rule.as_expected(), rule.relative,
            rule.expected_to_hold ? "relative <= " + Runner::short_number(rule.tolerance)
                                  : "relative > " + Runner::short_number(rule.tolerance));
  }
}

// ---------------------------------------------------------------------------

struct Bundle {
  Hamiltonian h;
  SigmaSpec spec;
  ClassicalWavefunction state;
};

Bundle make_bundle(const Runner& r, const PhaseSpaceGrid& grid, const json& cfg, const std::string& kind) {
  const PhysicalConstants& c = r.constants();
  const PhasePoint center = point(cfg.at("center"));
  double wq = 0.1, wp = 0.1;
  if (cfg.contains("width")) {
    const json& w = cfg["width"];
    if (w.is_array()) {
      const PhasePoint pw = point(w);
      wq = pw.q;
      wp = pw.p;
    } else {
      wq = wp = w.get<double>();
    }
  }
  RealField rho = gaussian_density(grid, center, wq, wp);
  const PhasePoint ref = centroid(rho);
  const bool free = kind == "free";
  if (!free && kind != "oscillator") throw ParseError("hamiltonian must be 'oscillator' or 'free'");
  SigmaSpec spec = free ? free_particle_sigma_spec(c.mass, ref) : oscillator_sigma_spec(c.mass, c.omega, ref);
  const SigmaField sigma = construct_sigma(spec, grid);
  Hamiltonian h = spec.hamiltonian;
  return {h, spec, make_wavefunction(std::move(rho), sigma.sigma.field(), c.hbar)};
}

constexpr double kResidualFloor = 1e-6;

double wrapped_sigma_l2(const ClassicalWavefunction& a, const ClassicalWavefunction& b) {
  const double period = 2.0 * std::numbers::pi * a.hbar;
  RealField w(a.grid());
  for (std::size_t n = 0; n < w.size(); ++n) {
    double d = a.sigma[n] - b.sigma[n];
    d -= period * std::round(d / period);
    w[n] = std::max(a.rho[n], 0.0) * d * d;
  }
  return std::sqrt(quadrature(w));
}

void run_evolution(Runner& r) {
  const PhysicalConstants& c = r.constants();
  const std::string kind = r.param("hamiltonian", std::string("oscillator"));
  const PhaseSpaceGrid grid = r.plane({-5, 5, 128}, {-5, 5, 128});
  const Bundle b = make_bundle(r, grid, r.raw("bundle"), kind);
  const bool oscillator = kind == "oscillator";

  const double periods = r.param("periods", 0.0);
  const double t_final = oscillator && periods > 0.0 ? periods * period_of(c) : r.param("t_final", 1.0);
  const int steps = r.param("steps", 200);
  if (steps < 1) throw PreconditionError("steps must be >= 1");
  EvolutionConfig cfg;
  cfg.dt = t_final / steps;
  cfg.t_final = t_final;
  cfg.integrator = r.param("integrator", std::string("verlet")) == "rk4" ? Integrator::rk4 : Integrator::verlet;
  cfg.interpolation = r.param("interpolation", std::string("cubic")) == "linear" ? Interpolation::linear
                                                                                  : Interpolation::cubic;
  EvolveOptions opts;
  const auto observables = r.param("observables", std::vector<std::string>{"q", "p"});
  for (const std::string& n : observables) opts.observables.push_back(named_function(n, grid, c));
  opts.constraints.timescale = oscillator ? 1.0 / c.omega : r.param("timescale", 1.0);
  opts.record_every = r.param("record_every", std::max(1, steps / 20));

  const EvolutionResult res = evolve(b.state, b.h, cfg, opts);
  if (wants_csv(r.format())) {
    write_timeseries_csv(r.dir() / "timeseries.csv", res.series, observables);
    r.artifact(r.dir() / "timeseries.csv");
  }
  if (wants_json(r.format())) r.json_file("timeseries.json", timeseries_json(res.series, observables));
  const json meta = {{"hamiltonian", b.h.name()}, {"sigma", "eta + H (tau - tau_ref - t)"},
                     {"reference", {b.spec.reference.q, b.spec.reference.p}}};
  r.state("initial", b.state, meta);
  r.state("final", res.state, meta);

  const TimeSample& first = res.series.front();
  double energy_drift = 0.0;
  for (const TimeSample& s : res.series) {
    energy_drift = std::max(energy_drift, std::abs(s.energy - first.energy) / std::abs(first.energy));
  }
  r.below("norm_drift", std::abs(res.cumulative_deficit), 1e-4);
  r.below("energy_drift", energy_drift, 1e-3);
  // Residuals at round-off level are floored so their growth stays meaningful.
  const TimeSample& last = res.series.back();
  r.below("r1_growth", last.r1 / std::max(first.r1, kResidualFloor), 5.0);
  r.below("r2_growth", last.r2 / std::max(first.r2, kResidualFloor), 5.0);

  if (oscillator && periods > 0.0 && std::abs(periods - std::round(periods)) < 1e-12) {
    r.below("period_return_l1", l1_distance(res.state.rho.field(), b.state.rho.field()), 1e-2);
  }
  if (!oscillator) {
    const PhasePoint start = centroid(b.state.rho.field()), end = centroid(res.state.rho.field());
    r.below("centroid_q_error", std::abs(end.q - (start.q + start.p * t_final / c.mass)), 1e-3);
    r.below("centroid_p_error", std::abs(end.p - start.p), 1e-3);
  }
  if (r.param("propagator_check", false)) {
    const ClassicalWavefunction prop = propagator_apply(b.state, b.h, b.spec, t_final, cfg.dt, cfg.interpolation);
    r.below("propagator_rho_l1", l1_distance(prop.rho.field(), res.state.rho.field()), 1e-2);
    r.below("propagator_sigma_l2", wrapped_sigma_l2(res.state, prop), 1e-2);
    r.state("propagated", prop, meta);
  }
}

// ---------------------------------------------------------------------------

std::optional<RealField> shell_weight(const Runner& r, const PhaseSpaceGrid& grid) {
  if (!r.has("weight")) return std::nullopt;
  const json& w = r.raw("weight");
  if (w.is_string() && w.get<std::string>() == "uniform") return std::nullopt;
  const PhasePoint center = point(w.at("center"));
  const double width = w.at("width").get<double>();
  return sample(grid, [&](double q, double p) {
    const double a = (q - center.q) / width, b = (p - center.p) / width;
    return std::exp(-0.5 * (a * a + b * b));
  });
}

void run_time_operator(Runner& r) {
  const PhysicalConstants& c = r.constants();
  const PhasePoint start = r.has("start") ? point(r.raw("start")) : PhasePoint{1.0, 0.5};
  const double dlambda = r.param("dlambda", 1e-3);
  const Hamiltonian h = Hamiltonian::harmonic_oscillator(c.mass, c.omega);
  const double e0 = h(start.q, start.p);

  const TauFlowResult inside = tau_flow(start.q, start.p, 0.9 * e0, dlambda, c.mass, c.omega);
  double h_err = 0.0, q_err = 0.0, p_err = 0.0, ratio_err = 0.0;
  for (std::size_t i = 0; i < inside.lambda.size(); ++i) {
    const double s = std::sqrt((e0 - inside.lambda[i]) / e0);
    h_err = std::max(h_err, std::abs(inside.energy[i] - (e0 - inside.lambda[i])));
    q_err = std::max(q_err, std::abs(inside.q[i] - start.q * s));
    p_err = std::max(p_err, std::abs(inside.p[i] - start.p * s));
    ratio_err = std::max(ratio_err, std::abs(inside.p[i] * start.q - inside.q[i] * start.p) / (s * e0));
  }
  r.below("energy_linear_in_lambda", h_err, 1e-4);
  r.below("q_scaling", q_err, 1e-4);
  r.below("p_scaling", p_err, 1e-4);
  r.below("p_over_q_constant", ratio_err, 1e-8);

  const double overshoot = r.param("overshoot", 1.5);
  const TauFlowResult beyond = tau_flow(start.q, start.p, overshoot * e0, dlambda, c.mass, c.omega);
  r.holds("incompleteness_boundary", beyond.reason == TauTermination::incompleteness_boundary,
          beyond.termination_lambda, "terminates before E0");
  r.above("energy_stays_positive", beyond.energy.back(), 0.0);
  if (wants_csv(r.format())) {
    write_tau_flow_csv(r.dir() / "tau_flow.csv", beyond);
    r.artifact(r.dir() / "tau_flow.csv");
  }

  // Shell state and O_tau.
  const PhaseSpaceGrid grid = r.plane({-3, 3, 128}, {-3, 3, 128});
  const double energy = r.param("shell_energy", 1.0);
  const double eps_h = r.param("eps_h", 0.1);
  const std::optional<double> eps = r.has("shell_eps") ? std::optional(r.param("shell_eps", 0.1)) : std::nullopt;
  const PhasePoint ref = r.has("reference") ? point(r.raw("reference")) : PhasePoint{0.0, std::sqrt(2.0 * energy)};
  const SigmaSpec spec = oscillator_sigma_spec(c.mass, c.omega, ref);
  const LevelSetState shell = energy_eigenstate(grid, spec, energy, shell_weight(r, grid), eps, c.hbar);
  const ComplexField phi = shell.state.compose();
  const TimeOperatorResult ot = apply_time_operator(phi, eps_h, c.hbar, c.mass, c.omega);
  r.below("masked_support_mass", ot.masked_mass, 1e-6);

  const double dl = r.param("generator_step", 1e-2) * energy;
  ComplexField moved(grid);
  for (std::size_t n = 0; n < moved.size(); ++n) moved[n] = phi[n] - Complex(0.0, dl / c.hbar) * ot.value[n];
  const VanHoveOperator oh = build_vanhove(h.sample(grid), c.hbar);
  auto mean_energy = [&](const ComplexField& f) {
    return inner_product(f, apply(oh, f)).real() / inner_product(f, f).real();
  };
  const double shift = mean_energy(moved) - mean_energy(phi);
  r.below("generator_shift_error", std::abs(shift + dl) / dl, 0.1);

  // {tau, H} = 1 on 0.2 <= H <= 4, away from the tau branch cut (p > 0).
  const PhaseFunction tau(sample(grid, [&](double q, double p) { return std::atan2(c.mass * c.omega * q, p) / c.omega; }));
  const PhaseFunction bracket = poisson_bracket(tau, h.sample(grid));
  double worst = 0.0;
  for (int i = 0; i < grid.q().n; ++i) {
    for (int j = 2; j < grid.p().n - 2; ++j) {
      const double q = grid.q().coord(i), p = grid.p().coord(j);
      const double e = h(q, p);
      if (p <= 0.2 || e < 0.2 || e > 4.0 || i < 2 || i >= grid.q().n - 2) continue;
      worst = std::max(worst, std::abs(bracket[grid.index(i, j)] - 1.0));
    }
  }
  r.below("tau_H_bracket", worst, 1e-3);

  if (wants_json(r.format())) {
    r.json_file("time_operator.json", {{"E0", e0},
                                       {"termination_lambda", beyond.termination_lambda},
                                       {"termination_reason", to_string(beyond.reason)},
                                       {"final_energy", beyond.energy.back()},
                                       {"masked_nodes", ot.masked},
                                       {"masked_mass", ot.masked_mass},
                                       {"generator_step", dl},
                                       {"energy_shift", shift},
                                       {"shell_eps", shell.eps}});
  }
}

// ---------------------------------------------------------------------------

void run_eigenstate(Runner& r) {
  const PhysicalConstants& c = r.constants();
  const PhaseSpaceGrid grid = r.plane({-3, 3, 128}, {-3, 3, 128});
  const double energy = r.param("energy", 1.0);
  const std::optional<double> eps = r.has("eps") ? std::optional(r.param("eps", 0.1)) : std::nullopt;
  const PhasePoint ref = r.has("reference") ? point(r.raw("reference")) : PhasePoint{0.0, std::sqrt(2.0 * energy)};
  const SigmaSpec spec = oscillator_sigma_spec(c.mass, c.omega, ref);
  const LevelSetState shell = energy_eigenstate(grid, spec, energy, shell_weight(r, grid), eps, c.hbar);
  r.state("eigenstate", shell.state, {{"energy", energy}, {"eps", shell.eps}});

  r.below("off_shell_mass", shell.off_shell_fraction, 1e-6);
  r.within("norm", shell.state.norm(), 1.0, 1e-4);
  const double radius = std::sqrt(2.0 * energy / (c.mass * c.omega * c.omega));
  RealField weighted_radius = sample(grid, [&](double q, double p) {
    return std::sqrt(c.mass * c.omega * c.omega * q * q + p * p / c.mass) / (c.omega * std::sqrt(c.mass));
  });
  weighted_radius = combine(weighted_radius, shell.state.rho.field(), [](double a, double b) { return a * b; });
  r.within("shell_radius", quadrature(weighted_radius), radius, shell.eps);

  const ExpectationResult ex = expectation(spec.hamiltonian.sample(grid), shell.state);
  r.below("expectation_identity", ex.relative, 1e-3);

  if (r.param("evolve_period", false)) {
    EvolutionConfig cfg;
    const int steps = r.param("steps", 200);
    cfg.t_final = period_of(c);
    cfg.dt = cfg.t_final / steps;
    EvolveOptions opts;
    opts.constraints.timescale = 1.0 / c.omega;
    const EvolutionResult res = evolve(shell.state, spec.hamiltonian, cfg, opts);
    r.below("period_return_l1", l1_distance(res.state.rho.field(), shell.state.rho.field()), 1e-3);
    r.state("eigenstate_after_period", res.state);
  }
}

// ---------------------------------------------------------------------------

void run_superposition(Runner& r) {
  const PhysicalConstants& c = r.constants();
  const PhaseSpaceGrid grid = r.plane({-2.3, 2.3, 128}, {3.3, 6.7, 128});
  const Bundle b1 = make_bundle(r, grid, r.raw("bundle1"), "oscillator");
  const Bundle b2 = make_bundle(r, grid, r.raw("bundle2"), "oscillator");
  const double w1 = r.param("w1", 1.0), w2 = r.param("w2", 1.0);
  ConstraintOptions opts;
  opts.timescale = 1.0 / c.omega;
  const ConstraintReport s1 = verify_constraints(b1.state, b1.h, std::nullopt, opts, false);
  const ConstraintReport s2 = verify_constraints(b2.state, b2.h, std::nullopt, opts, false);
  const SuperpositionResult sup = superposition_diagnostic(b1.state, b2.state, w1, w2, b1.h, opts);
  const double baseline = std::max(s1.r1, s2.r1);

  r.above("fringe_contrast", sup.fringe.contrast, 0.5);
  r.above("r1_over_baseline", sup.report.r1 / baseline, 10.0);
  r.state("superposed", sup.state);

  json profile = sup.fringe.profile;
  if (wants_json(r.format())) {
    r.json_file("superposition.json", {{"contrast", sup.fringe.contrast},
                                       {"incoherent_contrast", sup.fringe.incoherent_contrast},
                                       {"r1", sup.report.r1},
                                       {"r2", sup.report.r2},
                                       {"baseline_r1", baseline},
                                       {"single_reports", {s1.to_json(), s2.to_json()}},
                                       {"centroids", {{sup.fringe.centroid1.q, sup.fringe.centroid1.p},
                                                      {sup.fringe.centroid2.q, sup.fringe.centroid2.p}}},
                                       {"profile", profile}});
  }
  if (wants_csv(r.format())) {
    std::ofstream out = r.csv_file("fringe_profile.csv");
    out << "s,rho\n";
    const std::size_t n = sup.fringe.profile.size();
    for (std::size_t i = 0; i < n; ++i) {
      out << format_double(static_cast<double>(i) / (n - 1)) << ',' << format_double(sup.fringe.profile[i]) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------

ComplexField random_hybrid_state(const PhaseSpaceGrid& grid, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double cq = u(rng), cp = u(rng), cx = u(rng), kq = u(rng), kp = u(rng), kx = u(rng);
  const double w = 0.8 + 0.2 * u(rng);
  ComplexField psi = sample<Complex>(grid, [&](double q, double p, double x) {
    const double a = (q - cq) / w, b = (p - cp) / w, d = (x - cx) / w;
    return std::polar(std::exp(-0.25 * (a * a + b * b + d * d) - 0.1 * a * d), kq * q + kp * p + kx * x);
  });
  const double norm = l2_norm(psi);
  for (Complex& z : psi.values()) z /= norm;
  return psi;
}

void run_hybrid(Runner& r) {
  const PhysicalConstants& c = r.constants();
  const PhaseSpaceGrid grid = r.volume({-6, 6, 64}, {-6, 6, 64}, {-8, 8, 64});
  const PhaseSpaceGrid plane = grid.phase_plane();

  const json classical = r.raw("classical");
  const PhasePoint cc = point(classical.at("center"));
  const double cw = classical.value("width", 0.5);
  const RealField rho_c = gaussian_density(plane, cc, cw, cw);
  // Plane-wave phase p0 q makes dsigma/dq match the bundle momentum.
  const ComplexField phi = transform(rho_c, [](double v) { return Complex(std::sqrt(v), 0.0); });
  ComplexField phi_c(plane);
  for (int i = 0; i < plane.q().n; ++i) {
    for (int j = 0; j < plane.p().n; ++j) {
      phi_c.at(i, j) = phi.at(i, j) * std::polar(1.0, cc.p * plane.q().coord(i) / c.hbar);
    }
  }
  const json quantum = r.raw("quantum");
  const double x0 = quantum.value("center", 0.0), s0 = quantum.value("width", 1.0), k0 = quantum.value("k0", 0.0);
  std::vector<Complex> chi(grid.x().n);
  for (int k = 0; k < grid.x().n; ++k) {
    const double x = grid.x().coord(k);
    chi[k] = std::polar(std::pow(2.0 * std::numbers::pi * s0 * s0, -0.25) * std::exp(-(x - x0) * (x - x0) / (4 * s0 * s0)),
                        k0 * x);
  }

  const std::string coupling = r.param("coupling", std::string("harmonic"));
  HybridStateContinuous state{product_state(phi_c, grid.x(), chi), c.mass, c.mass_quantum, c.hbar,
                              HybridPotential::none(), 0.0};
  if (coupling == "harmonic") {
    state.potential = HybridPotential::harmonic_coupling(r.param("k", 1.0));
  } else if (coupling != "none") {
    throw ParseError("coupling must be 'harmonic' or 'none'");
  }
  const double norm0 = state.norm();
  for (Complex& z : state.psi.values()) z /= std::sqrt(norm0);

  const double dt = r.param("dt", 1e-3);
  const int steps = r.param("steps", 1000);
  const int every = r.param("record_every", std::max(1, steps / 20));
  const HybridPropagator prop(grid, settings_of(state), dt);

  struct Row {
    double t, norm, energy, oq, x, width, fact;
  };
  auto width_x = [](const HybridMarginals& m) {
    double mean = 0.0, second = 0.0;
    const double h = m.x.spacing();
    for (int k = 0; k < m.x.n; ++k) {
      const double w = (k == 0 || k == m.x.n - 1) ? 0.5 * h : h;
      mean += w * m.x.coord(k) * m.rho_q[k];
      second += w * m.x.coord(k) * m.x.coord(k) * m.rho_q[k];
    }
    return std::sqrt(second / m.mass_q - mean * mean / (m.mass_q * m.mass_q));
  };
  std::vector<Row> rows;
  auto record = [&] {
    const HybridMarginals m = hybrid_marginals(state);
    rows.push_back({state.t, state.norm(), hybrid_energy(state), mean_vanhove_q(state), mean_x(state), width_x(m),
                    factorization_residual(state.psi)});
  };
  record();
  for (int s = 1; s <= steps; ++s) {
    prop.step(state.psi);
    state.t = s * dt;
    if (s % every == 0 || s == steps) record();
  }
  if (!all_finite(state.psi)) throw NumericalError("hybrid evolution produced non-finite values");

  double norm_drift = 0.0, energy_drift = 0.0, fact = 0.0;
  for (const Row& row : rows) {
    norm_drift = std::max(norm_drift, std::abs(row.norm - rows.front().norm));
    energy_drift = std::max(energy_drift, std::abs(row.energy - rows.front().energy) / std::abs(rows.front().energy));
    fact = std::max(fact, row.fact);
  }
  r.below("norm_drift", norm_drift, 1e-4);
  r.below("energy_drift", energy_drift, 1e-3);
  const HybridMarginals m = hybrid_marginals(state);
  r.within("classical_marginal_mass", m.mass_c, 1.0, 1e-4);
  r.within("quantum_marginal_mass", m.mass_q, 1.0, 1e-4);
  if (coupling == "none") {
    r.below("factorization_residual", fact, 1e-6);
    const double t = state.t;
    const double expected = s0 * std::sqrt(1.0 + std::pow(c.hbar * t / (2.0 * c.mass_quantum * s0 * s0), 2));
    r.below("free_spreading_width_error", std::abs(rows.back().width - expected) / expected, 1e-3);
  }

  std::mt19937_64 rng(r.scenario().seed);
  const PhaseFunction fq = named_function("q", plane, c), fp = named_function("p", plane, c);
  const PhaseFunction fh = named_function("H", plane, c);
  double sep_qx = 0.0, sep_pk = 0.0, sep_hx2 = 0.0;
  std::vector<ComplexField> probes{state.psi};
  for (int i = 0; i < 3; ++i) probes.push_back(random_hybrid_state(grid, rng));
  for (const ComplexField& psi : probes) {
    sep_qx = std::max(sep_qx, separability_check(fq, QuantumObservable::position(), psi, c.hbar));
    sep_pk = std::max(sep_pk, separability_check(fp, QuantumObservable::momentum(c.hbar), psi, c.hbar));
    sep_hx2 = std::max(sep_hx2, separability_check(fh, QuantumObservable::position_squared(), psi, c.hbar));
  }
  r.below("separability_q_x", sep_qx, 1e-12);
  r.below("separability_p_px", sep_pk, 1e-10);
  r.below("separability_H_x2", sep_hx2, 1e-6);

  if (wants_csv(r.format())) {
    std::ofstream out = r.csv_file("hybrid_timeseries.csv");
    out << "t,norm,energy,mean_Oq,mean_x,width_x,factorization_residual\n";
    for (const Row& row : rows) {
      out << format_double(row.t) << ',' << format_double(row.norm) << ',' << format_double(row.energy) << ','
          << format_double(row.oq) << ',' << format_double(row.x) << ',' << format_double(row.width) << ','
          << format_double(row.fact) << '\n';
    }
    std::ofstream q = r.csv_file("quantum_marginal.csv");
    q << "x,rho_Q\n";
    for (int k = 0; k < m.x.n; ++k) q << format_double(m.x.coord(k)) << ',' << format_double(m.rho_q[k]) << '\n';
  }
  r.field("classical_marginal", m.rho_c);
  if (wants_json(r.format())) {
    json series = json::array();
    for (const Row& row : rows) {
      series.push_back({{"t", row.t}, {"norm", row.norm}, {"energy", row.energy}, {"mean_Oq", row.oq},
                        {"mean_x", row.x}, {"width_x", row.width}, {"factorization_residual", row.fact}});
    }
    r.json_file("hybrid_report.json", {{"coupling", state.potential.name},
                                       {"dt", dt},
                                       {"steps", steps},
                                       {"norm_drift", norm_drift},
                                       {"energy_drift", energy_drift},
                                       {"separability", {{"q_x", sep_qx}, {"p_px", sep_pk}, {"H_x2", sep_hx2}}},
                                       {"series", series}});
  }
}

// ---------------------------------------------------------------------------

void run_qubit(Runner& r) {
  const PhysicalConstants& c = r.constants();
  const PhaseSpaceGrid grid = r.plane({-3, 3, 512}, {-0.3, 0.3, 64});
  MeasurementConfig cfg;
  cfg.w_plus = r.param("w_plus", 0.5);
  cfg.epsilon = r.param("epsilon", 0.05);
  cfg.time = r.param("time", 1.0);
  cfg.kappa = r.has("K") ? r.param("K", 2.0) / cfg.time : r.param("kappa", 2.0);
  cfg.b0 = r.param("b0", 0.0);
  cfg.steps = r.param("steps", 20);
  cfg.hbar = c.hbar;
  cfg.mass = c.mass;
  cfg.full_hamiltonian = r.param("full_hamiltonian", false);
  if (cfg.full_hamiltonian && r.has("v_c_omega")) {
    const double w = r.param("v_c_omega", 0.0), m = c.mass;
    cfg.v_c = [w, m](double q) { return 0.5 * m * w * w * q * q; };
    cfg.dv_c = [w, m](double q) { return m * w * w * q; };
  }
  const MeasurementResult res = qubit_measurement_run(grid, cfg);
  r.json_file("measurement_report.json", res.report());

  const double wp = cfg.w_plus, wm = cfg.w_minus();
  const ConditionalDensityOperator& pre = res.rho_series.front();
  const ConditionalDensityOperator& post = res.rho_series.back();
  r.within("pointer_mass_positive", res.pointer_mass_positive, wp, 1e-3);
  r.within("offdiag_pre", pre.offdiag_magnitude(), std::sqrt(wp * wm), 1e-3);
  r.below("offdiag_post", post.offdiag_magnitude(), 1e-6);
  r.within("diag_plus", post.rho(0, 0).real(), wp, 1e-3);
  r.within("diag_minus", post.rho(1, 1).real(), wm, 1e-3);

  double herm = 0.0, trace = 0.0, min_eig = 0.0, increase = 0.0;
  for (std::size_t i = 0; i < res.rho_series.size(); ++i) {
    const ConditionalDensityOperator& rho = res.rho_series[i];
    herm = std::max(herm, rho.hermiticity_error());
    trace = std::max(trace, std::abs(rho.trace() - 1.0));
    min_eig = std::min(min_eig, rho.min_eigenvalue());
    if (i > 0) increase = std::max(increase, res.offdiag_series[i].second - res.offdiag_series[i - 1].second);
  }
  r.below("hermiticity", herm, 1e-10);
  r.below("trace_error", trace, 1e-4);
  r.above("min_eigenvalue", min_eig, -1e-8);
  r.below("offdiag_increase", increase, 1e-12);

  // P(q, 0) = delta_eps(q).
  double p0_err = 0.0, p0_max = 0.0;
  for (int i = 0; i < grid.q().n; ++i) {
    const double expected = mollified_delta(grid.q().coord(i), cfg.epsilon);
    p0_err = std::max(p0_err, std::abs(res.pointer_initial[i] - expected));
    p0_max = std::max(p0_max, expected);
  }
  r.below("initial_pointer_density", p0_err / p0_max, 1e-3);

  if (wants_csv(r.format())) {
    std::ofstream out = r.csv_file("pointer_density.csv");
    out << "q,P_initial,P_final\n";
    for (int i = 0; i < grid.q().n; ++i) {
      out << format_double(grid.q().coord(i)) << ',' << format_double(res.pointer_initial[i]) << ','
          << format_double(res.pointer_final[i]) << '\n';
    }
    std::ofstream series = r.csv_file("offdiag_series.csv");
    series << "t,offdiag_magnitude\n";
    for (const auto& [t, v] : res.offdiag_series) series << format_double(t) << ',' << format_double(v) << '\n';
  }
}

}  // namespace

ScenarioOutcome run_scenario(const Scenario& scenario, const RunOptions& options, std::ostream& log) {
  ScenarioOutcome outcome;
  outcome.name = scenario.name;
  try {
    scenario.constants.validate();
    Runner runner(scenario, options, log, outcome);
    fs::create_directories(runner.dir());
    const std::string& k = scenario.kind;
    if (k == "algebra_audit") run_algebra(runner);
    else if (k == "classical_evolution") run_evolution(runner);
    else if (k == "time_operator") run_time_operator(runner);
    else if (k == "eigenstate") run_eigenstate(runner);
    else if (k == "superposition") run_superposition(runner);
    else if (k == "hybrid_continuous") run_hybrid(runner);
    else if (k == "qubit_measurement") run_qubit(runner);
    runner.write_summary();
    const bool ok = std::all_of(outcome.checks.begin(), outcome.checks.end(), [](const CheckResult& c) { return c.pass; });
    outcome.exit_code = ok ? 0 : 1;
  } catch (const ParseError& e) {
    outcome.exit_code = 2;
    outcome.error = e.what();
  } catch (const nlohmann::json::exception& e) {
    outcome.exit_code = 2;
    outcome.error = scenario.name + ": malformed parameter: " + e.what();
  } catch (const PreconditionError& e) {
    outcome.exit_code = 3;
    outcome.error = e.what();
  } catch (const NumericalError& e) {
    outcome.exit_code = 4;
    outcome.error = e.what();
  }
  if (!outcome.error.empty()) log << "error: " << outcome.error << '\n';
  return outcome;
}

ScenarioOutcome run_scenario_file(const fs::path& path, const RunOptions& options, std::ostream& log) {
  Scenario sc;
  try {
    sc = load_scenario(path);
  } catch (const ParseError& e) {
    ScenarioOutcome outcome;
    outcome.name = path.stem().string();
    outcome.exit_code = 2;
    outcome.error = e.what();
    log << "error: " << e.what() << '\n';
    return outcome;
  }
  return run_scenario(sc, options, log);
}

fs::path default_scenario_dir() {
  if (const char* env = std::getenv("VANHOVE_SCENARIO_DIR"); env && *env) return env;
  return VANHOVE_SCENARIO_DIR;
}

std::vector<CatalogEntry> list_scenarios(const fs::path& dir) {
  std::vector<CatalogEntry> out;
  if (!fs::is_directory(dir)) return out;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".cfg") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const fs::path& f : files) {
    try {
      const Scenario sc = load_scenario(f);
      out.push_back({sc.name, sc.kind, sc.description, f});
    } catch (const ParseError& e) {
      out.push_back({f.stem().string(), "invalid", e.what(), f});
    }
  }
  return out;
}

}  // namespace vanhove
