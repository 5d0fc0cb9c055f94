#include "porosplit/scenario.hpp"

#include "porosplit/error.hpp"
#include "porosplit/report.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace porosplit {

using nlohmann::json;

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::ContractionStudy: return "contraction-study";
    case ScenarioKind::EquivalenceCheck: return "equivalence-check";
    case ScenarioKind::TimeConvergence: return "time-convergence";
    case ScenarioKind::Column: return "column";
  }
  return "?";
}

namespace {

// Collects every problem of a document together with its field path.
class Reader {
 public:
  explicit Reader(std::vector<std::string>& issues) : issues_(issues) {}

  void fail(const std::string& path, const std::string& message) {
    issues_.push_back(path + ": " + message);
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

  const json* object(const json& parent, const std::string& path, const char* key) {
    if (!parent.is_object() || !parent.contains(key)) return nullptr;
    const json& v = parent.at(key);
    if (!v.is_object()) {
      fail(join(path, key), "must be an object");
      return nullptr;
    }
    return &v;
  }

  double number(const json& obj, const std::string& path, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) {
      fail(join(path, key), "must be a number");
      return fallback;
    }
    return v.get<double>();
  }

  int integer(const json& obj, const std::string& path, const char* key, int fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) {
      fail(join(path, key), "must be an integer");
      return fallback;
    }
    return v.get<int>();
  }

  std::string text(const json& obj, const std::string& path, const char* key,
                   const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_string()) {
      fail(join(path, key), "must be a string");
      return fallback;
    }
    return v.get<std::string>();
  }

  Vec2 vec2(const json& obj, const std::string& path, const char* key, const Vec2& fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      fail(join(path, key), "must be an array of two numbers");
      return fallback;
    }
    return {v[0].get<double>(), v[1].get<double>()};
  }

  template <int N>
  std::optional<Eigen::Matrix<double, N, N>> matrix(const json& obj, const std::string& path,
                                                    const char* key) {
    if (!obj.contains(key)) return std::nullopt;
    const json& v = obj.at(key);
    Eigen::Matrix<double, N, N> m;
    bool ok = v.is_array() && v.size() == N;
    for (int i = 0; ok && i < N; ++i) {
      ok = v[i].is_array() && v[i].size() == N;
      for (int j = 0; ok && j < N; ++j) {
        ok = v[i][j].is_number();
        if (ok) m(i, j) = v[i][j].get<double>();
      }
    }
    if (!ok) {
      fail(join(path, key), "must be a " + std::to_string(N) + "x" + std::to_string(N) +
                                " array of numbers");
      return std::nullopt;
    }
    return m;
  }

  template <class T>
  std::vector<T> list(const json& obj, const std::string& path, const char* key) {
    std::vector<T> out;
    if (!obj.contains(key)) return out;
    const json& v = obj.at(key);
    if (!v.is_array() || v.empty()) {
      fail(join(path, key), "must be a non-empty array");
      return out;
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
      const bool ok = std::is_integral_v<T> ? v[i].is_number_integer() : v[i].is_number();
      if (!ok) {
        fail(join(path, key) + "[" + std::to_string(i) + "]", "must be a number");
        continue;
      }
      out.push_back(v[i].get<T>());
    }
    return out;
  }

  void positive(double value, const std::string& path) {
    if (!(value > 0.0) || !std::isfinite(value)) fail(path, "must be positive");
  }

 private:
  std::vector<std::string>& issues_;
};

TimeProfile read_profile(Reader& r, const json& parent, const std::string& path,
                         const char* key) {
  TimeProfile p;
  const json* obj = r.object(parent, path, key);
  if (!obj) return p;
  const std::string at = Reader::join(path, key);
  const std::string type = r.text(*obj, at, "type", "constant");
  if (type == "constant") {
    p.kind = ProfileKind::Constant;
  } else if (type == "ramp") {
    p.kind = ProfileKind::Ramp;
    p.duration = r.number(*obj, at, "duration", 1.0);
    r.positive(p.duration, at + ".duration");
  } else if (type == "sinusoid") {
    p.kind = ProfileKind::Sinusoid;
    p.frequency = r.number(*obj, at, "frequency", 1.0);
    p.phase = r.number(*obj, at, "phase", 0.0);
  } else if (type == "step") {
    p.kind = ProfileKind::Step;
    p.start = r.number(*obj, at, "start", 0.0);
  } else {
    r.fail(at + ".type", "unknown load preset '" + type + "'");
  }
  return p;
}

SideCondition read_side(Reader& r, const json& obj, const std::string& path) {
  SideCondition c;
  const std::string disp = r.text(obj, path, "displacement", "free");
  if (disp == "fixed") c.displacement = DisplacementKind::Fixed;
  else if (disp == "roller") c.displacement = DisplacementKind::Roller;
  else if (disp == "free") c.displacement = DisplacementKind::Free;
  else if (disp == "traction") c.displacement = DisplacementKind::Traction;
  else r.fail(path + ".displacement", "unknown displacement condition '" + disp + "'");
  c.traction = r.vec2(obj, path, "traction", Vec2::Zero());
  if (obj.contains("traction") && c.displacement != DisplacementKind::Traction)
    r.fail(path + ".traction", "only allowed with displacement \"traction\"");

  const std::string flow = r.text(obj, path, "flow", "impermeable");
  if (flow == "impermeable") c.flow = FlowKind::Impermeable;
  else if (flow == "drained") c.flow = FlowKind::Drained;
  else r.fail(path + ".flow", "unknown flow condition '" + flow + "'");
  c.pressure = r.number(obj, path, "pressure", 0.0);
  if (obj.contains("pressure") && c.flow != FlowKind::Drained)
    r.fail(path + ".pressure", "only allowed with flow \"drained\"");
  return c;
}

MaterialRecord read_material(Reader& r, const json& obj, const std::string& path) {
  MaterialRecord m;
  m.rho = r.number(obj, path, "rho", 1.0);
  m.c0 = r.number(obj, path, "c0", 1.0);

  if (auto C = r.matrix<3>(obj, path, "elasticity")) {
    m.elasticity.voigt = *C;
  } else {
    const double mu = r.number(obj, path, "mu", 1.0);
    const double lambda = r.number(obj, path, "lambda", 1.0);
    try {
      m.elasticity = isotropic_elasticity(mu, lambda);
    } catch (const MaterialError& e) {
      r.fail(path + ".mu", e.what());
    }
  }
  if (auto a = r.matrix<2>(obj, path, "biot")) m.biot.value = *a;
  else m.biot.value = r.number(obj, path, "alpha", 1.0) * Mat2::Identity();
  if (auto k = r.matrix<2>(obj, path, "permeability")) m.permeability.value = *k;
  else m.permeability.value = r.number(obj, path, "kappa", 1.0) * Mat2::Identity();

  for (const auto& issue : validate_material(MaterialField::homogeneous(m), 1))
    r.fail(path, issue.message);
  return m;
}

ScenarioConfig read_config(const json& doc, std::vector<std::string>& issues) {
  Reader r(issues);
  ScenarioConfig cfg;
  if (!doc.is_object()) {
    r.fail("$", "configuration must be a JSON object");
    return cfg;
  }
  cfg.source = doc;

  const std::string kind = r.text(doc, "", "scenario", "");
  if (kind == "contraction-study") cfg.kind = ScenarioKind::ContractionStudy;
  else if (kind == "equivalence-check") cfg.kind = ScenarioKind::EquivalenceCheck;
  else if (kind == "time-convergence") cfg.kind = ScenarioKind::TimeConvergence;
  else if (kind == "column") cfg.kind = ScenarioKind::Column;
  else r.fail("scenario", kind.empty() ? "required" : "unknown scenario '" + kind + "'");

  if (const json* mesh = r.object(doc, "", "mesh")) {
    cfg.nx = r.integer(*mesh, "mesh", "nx", cfg.nx);
    cfg.ny = r.integer(*mesh, "mesh", "ny", cfg.ny);
    cfg.lx = r.number(*mesh, "mesh", "Lx", cfg.lx);
    cfg.ly = r.number(*mesh, "mesh", "Ly", cfg.ly);
  }
  if (cfg.nx < 1) r.fail("mesh.nx", "must be at least 1");
  if (cfg.ny < 1) r.fail("mesh.ny", "must be at least 1");
  r.positive(cfg.lx, "mesh.Lx");
  r.positive(cfg.ly, "mesh.Ly");

  if (const json* mat = r.object(doc, "", "material")) cfg.material = read_material(r, *mat, "material");
  else cfg.material = read_material(r, json::object(), "material");

  if (const json* time = r.object(doc, "", "time")) {
    cfg.theta.theta1 = r.number(*time, "time", "theta1", 1.0);
    cfg.theta.theta2 = r.number(*time, "time", "theta2", 1.0);
    cfg.theta.dt = r.number(*time, "time", "dt", 0.01);
    cfg.final_time = r.number(*time, "time", "T", cfg.theta.dt);
    cfg.checkpoint_every = r.integer(*time, "time", "checkpoint_every", 0);
    if (cfg.checkpoint_every < 0) r.fail("time.checkpoint_every", "must be nonnegative");
  } else {
    cfg.theta.dt = 0.01;
    cfg.final_time = 0.01;
  }
  auto unit = [&](double t, const char* path) {
    if (!(t > 0.0 && t <= 1.0)) r.fail(path, "must lie in (0,1]");
  };
  unit(cfg.theta.theta1, "time.theta1");
  unit(cfg.theta.theta2, "time.theta2");
  r.positive(cfg.theta.dt, "time.dt");
  r.positive(cfg.final_time, "time.T");

  if (const json* bc = r.object(doc, "", "boundary")) {
    for (const auto& [key, value] : bc->items()) {
      const std::string path = "boundary." + key;
      bool known = false;
      for (BoundarySide side : kAllSides) {
        if (key != to_string(side)) continue;
        known = true;
        if (!value.is_object()) r.fail(path, "must be an object");
        else cfg.bc[side] = read_side(r, value, path);
      }
      if (!known) r.fail(path, "unknown boundary side");
    }
  }

  if (const json* loads = r.object(doc, "", "loads")) {
    const std::string at = "loads";
    if (const json* b = r.object(*loads, at, "body_force")) {
      cfg.loads.body_force = r.vec2(*b, at + ".body_force", "value", Vec2::Zero());
      cfg.loads.body_force_profile = read_profile(r, *b, at + ".body_force", "profile");
    }
    if (const json* s = r.object(*loads, at, "source")) {
      cfg.loads.source = r.number(*s, at + ".source", "value", 0.0);
      cfg.loads.source_profile = read_profile(r, *s, at + ".source", "profile");
    }
    if (const json* g = r.object(*loads, at, "darcy_force")) {
      cfg.loads.darcy_force = r.vec2(*g, at + ".darcy_force", "value", Vec2::Zero());
      cfg.loads.darcy_force_profile = read_profile(r, *g, at + ".darcy_force", "profile");
    }
    cfg.loads.traction_profile = read_profile(r, *loads, at, "traction_profile");
    cfg.loads.pressure_profile = read_profile(r, *loads, at, "pressure_profile");
  }

  if (const json* s = r.object(doc, "", "solver")) {
    cfg.solver.tol_outer = r.number(*s, "solver", "tol_outer", cfg.solver.tol_outer);
    cfg.solver.max_outer = r.integer(*s, "solver", "max_outer", cfg.solver.max_outer);
    cfg.solver.tol_lin = r.number(*s, "solver", "tol_lin", cfg.solver.tol_lin);
    const std::string inner = r.text(*s, "solver", "inner", "direct");
    if (inner == "direct") cfg.solver.inner = InnerMethod::Direct;
    else if (inner == "pcg") cfg.solver.inner = InnerMethod::PreconditionedCG;
    else r.fail("solver.inner", "must be \"direct\" or \"pcg\"");
    const std::string method = r.text(*s, "solver", "coupling", "undrained-split");
    try {
      cfg.method = coupling_method_from_string(method);
    } catch (const ConfigError&) {
      r.fail("solver.coupling", "unknown coupling method '" + method + "'");
    }
  }
  r.positive(cfg.solver.tol_outer, "solver.tol_outer");
  r.positive(cfg.solver.tol_lin, "solver.tol_lin");
  if (cfg.solver.max_outer < 1) r.fail("solver.max_outer", "must be at least 1");

  if (const json* sw = r.object(doc, "", "sweep")) {
    for (const auto& [key, value] : sw->items()) {
      (void)value;
      if (key != "c0" && key != "dt" && key != "theta2")
        r.fail("sweep." + key, "unknown sweep parameter");
    }
    cfg.sweep.c0 = r.list<double>(*sw, "sweep", "c0");
    cfg.sweep.dt = r.list<double>(*sw, "sweep", "dt");
    cfg.sweep.theta2 = r.list<double>(*sw, "sweep", "theta2");
    for (std::size_t i = 0; i < cfg.sweep.c0.size(); ++i)
      r.positive(cfg.sweep.c0[i], "sweep.c0[" + std::to_string(i) + "]");
    for (std::size_t i = 0; i < cfg.sweep.dt.size(); ++i)
      r.positive(cfg.sweep.dt[i], "sweep.dt[" + std::to_string(i) + "]");
    for (std::size_t i = 0; i < cfg.sweep.theta2.size(); ++i)
      if (!(cfg.sweep.theta2[i] > 0.0 && cfg.sweep.theta2[i] <= 1.0))
        r.fail("sweep.theta2[" + std::to_string(i) + "]", "must lie in (0,1]");
  }

  if (const json* c = r.object(doc, "", "convergence")) {
    if (c->contains("steps")) cfg.convergence.steps = r.list<int>(*c, "convergence", "steps");
    cfg.convergence.reference_factor =
        r.integer(*c, "convergence", "reference_factor", cfg.convergence.reference_factor);
    cfg.convergence.min_order = r.number(*c, "convergence", "min_order", cfg.convergence.min_order);
  }
  if (cfg.kind == ScenarioKind::TimeConvergence) {
    if (cfg.convergence.steps.size() < 2)
      r.fail("convergence.steps", "needs at least two step counts");
    if (cfg.convergence.reference_factor < 2)
      r.fail("convergence.reference_factor", "must be at least 2");
    for (std::size_t i = 0; i < cfg.convergence.steps.size(); ++i) {
      const int n = cfg.convergence.steps[i];
      if (n < 1 || (i > 0 && n <= cfg.convergence.steps[i - 1]))
        r.fail("convergence.steps", "step counts must be positive and increasing");
      if (n >= cfg.convergence.reference_steps())
        r.fail("convergence.steps", "step counts must stay below the reference step count");
    }
  }

  cfg.output_dir = r.text(doc, "", "output", "");
  return cfg;
}

// Integer steps for T / dt; dt must divide T up to rounding.
int step_count(double final_time, double dt) {
  const double n = final_time / dt;
  const long rounded = std::lround(n);
  if (rounded < 1 || std::abs(n - static_cast<double>(rounded)) > 1e-9 * n)
    throw ConfigError("time.T must be an integer multiple of time.dt");
  return static_cast<int>(rounded);
}

std::string two_digits(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02zu", i);
  return buf;
}

class Emitter {
 public:
  explicit Emitter(RunArtifacts& art) : art_(art) {}

  void text(const std::string& name, const std::string& content) {
    const auto path = art_.directory / name;
    write_text_file(path, content);
    art_.files.push_back(path);
  }
  void json_file(const std::string& name, const json& j) { text(name, j.dump(2) + "\n"); }
  void gate(std::string name, bool passed, std::string detail) {
    art_.gates.push_back({std::move(name), passed, std::move(detail)});
  }

 private:
  RunArtifacts& art_;
};

std::string describe(double value) { return format_number(value); }

// Factor and energy-gap gates of one iteration report.
void report_gates(Emitter& out, const std::string& tag, const IterationReport& rep) {
  constexpr double kFactorSlack = 1e-8;
  constexpr double kGapSlack = 1e-12;
  const double rate = rep.theory_rate;

  double worst = 0.0;
  bool factors_ok = true;
  for (const auto& r : rep.records)
    if (r.factor) {
      worst = std::max(worst, *r.factor);
      if (*r.factor > rate + kFactorSlack) factors_ok = false;
    }
  out.gate("contraction_bound[" + tag + "]", factors_ok,
           "max factor " + describe(worst) + " vs rate " + describe(rate));

  bool gaps_ok = true;
  const double gap0 = rep.records.front().energy_gap;
  for (std::size_t k = 1; k < rep.records.size(); ++k)
    if (rep.records[k].energy_gap >
        rate * rate * rep.records[k - 1].energy_gap + kGapSlack * gap0)
      gaps_ok = false;
  out.gate("energy_gap_recursion[" + tag + "]", gaps_ok, "rate^2 = " + describe(rate * rate));

  out.gate("converged[" + tag + "]", rep.converged(),
           to_string(rep.stop) + " after " + std::to_string(rep.sweeps) + " sweeps");
}

json stage_summary(const IterationReport& rep) {
  json j = report_to_json(rep);
  j.erase("records");
  return j;
}

void run_contraction(const ScenarioConfig& base, Emitter& out, json& summary) {
  const auto c0s = base.sweep.c0.empty() ? std::vector<double>{base.material.c0} : base.sweep.c0;
  const auto dts = base.sweep.dt.empty() ? std::vector<double>{base.theta.dt} : base.sweep.dt;
  const auto t2s =
      base.sweep.theta2.empty() ? std::vector<double>{base.theta.theta2} : base.sweep.theta2;
  const CouplingMethod method =
      base.method == CouplingMethod::Monolithic ? CouplingMethod::UndrainedSplit : base.method;

  json runs = json::array();
  std::size_t index = 0;
  for (double c0 : c0s)
    for (double dt : dts)
      for (double t2 : t2s) {
        ScenarioConfig cfg = base;
        cfg.material.c0 = c0;
        cfg.theta.dt = dt;
        cfg.theta.theta2 = t2;
        const StageSetup setup = first_stage(cfg);
        StageSolver solver(setup.problem.ops, setup.rhs.params, cfg.solver);
        solver.set_theory_rate(setup.theory_rate);
        const StageState init = solver.initial_state(
            Vector::Zero(static_cast<Eigen::Index>(setup.problem.ops.nu())), setup.rhs);
        const auto [state, rep] = method == CouplingMethod::UndrainedSplit
                                      ? solver.undrained_split_solve(init, setup.rhs)
                                      : solver.alternating_minimization_solve(init, setup.rhs);
        const std::string tag = two_digits(index);
        out.text("contraction_" + tag + ".csv", report_to_csv(rep));
        out.json_file("contraction_" + tag + ".json", report_to_json(rep));
        report_gates(out, tag, rep);
        if (rep.gap_to_norm_constant)
          out.gate("gap_to_norm_constant[" + tag + "]", rep.gap_to_norm_spread <= 1e-8,
                   "constant " + describe(*rep.gap_to_norm_constant) + ", spread " +
                       describe(rep.gap_to_norm_spread));
        json entry = stage_summary(rep);
        entry["index"] = index;
        entry["c0"] = c0;
        entry["dt"] = dt;
        entry["theta2"] = t2;
        entry["csv"] = "contraction_" + tag + ".csv";
        runs.push_back(std::move(entry));
        ++index;
      }
  summary["runs"] = std::move(runs);
  summary["coupling"] = to_string(method);
}

void run_equivalence(const ScenarioConfig& cfg, Emitter& out, json& summary) {
  const StageSetup setup = first_stage(cfg);
  SolverSettings settings = cfg.solver;
  settings.keep_iterates = true;
  StageSolver solver(setup.problem.ops, setup.rhs.params, settings);
  solver.set_theory_rate(setup.theory_rate);
  const StageState init = solver.initial_state(
      Vector::Zero(static_cast<Eigen::Index>(setup.problem.ops.nu())), setup.rhs);
  const auto split = solver.undrained_split_solve(init, setup.rhs).second;
  const auto am = solver.alternating_minimization_solve(init, setup.rhs).second;

  const std::size_t n = std::min(split.iterates.size(), am.iterates.size());
  double worst = 0.0;
  json per_k = json::array();
  for (std::size_t k = 0; k < n; ++k) {
    const auto& a = split.iterates[k];
    const auto& b = am.iterates[k];
    const double scale = triple_norm(a.u, a.q, setup.problem.ops, setup.rhs.params);
    const double diff = triple_norm(a.u - b.u, a.q - b.q, setup.problem.ops, setup.rhs.params);
    const double rel = scale > 0.0 ? diff / scale : diff;
    worst = std::max(worst, rel);
    per_k.push_back({{"k", k}, {"relative_discrepancy", rel}});
  }
  out.text("equivalence_split.csv", report_to_csv(split));
  out.text("equivalence_am.csv", report_to_csv(am));
  out.json_file("equivalence.json", {{"iterates", per_k}, {"max_relative_discrepancy", worst}});
  out.gate("am_split_equivalence", worst <= 1e-10,
           "max relative discrepancy " + describe(worst));
  report_gates(out, "split", split);
  summary["max_relative_discrepancy"] = worst;
  summary["compared_iterates"] = n;
  summary["split"] = stage_summary(split);
  summary["alternating_minimization"] = stage_summary(am);
}

void run_time_convergence(const ScenarioConfig& cfg, Emitter& out, json& summary) {
  const Problem problem = cfg.problem();
  const SchemeParams scheme{cfg.theta.theta1, cfg.theta.theta2};
  const int nref = cfg.convergence.reference_steps();
  const TimeGrid ref_grid{cfg.final_time, nref};
  const Trajectory ref = run(ref_grid, problem, scheme, cfg.solver, CouplingMethod::Monolithic);
  const ThetaParams norm_params{cfg.theta.theta1, cfg.theta.theta2, ref_grid.dt()};
  const StageState& ref_final = ref.states.back();

  std::vector<double> dts, errors;
  for (int n : cfg.convergence.steps) {
    const TimeGrid grid{cfg.final_time, n};
    const Trajectory traj = run(grid, problem, scheme, cfg.solver, cfg.method);
    const StageState& fin = traj.states.back();
    dts.push_back(grid.dt());
    errors.push_back(triple_norm(fin.u - ref_final.u, fin.q - ref_final.q, problem.ops, norm_params));
  }

  std::string csv = "dt,error,order\n";
  double min_order = INFINITY;
  json rows = json::array();
  for (std::size_t i = 0; i < dts.size(); ++i) {
    std::optional<double> order;
    if (i > 0) {
      order = std::log(errors[i - 1] / errors[i]) / std::log(dts[i - 1] / dts[i]);
      min_order = std::min(min_order, *order);
    }
    csv += format_number(dts[i]) + "," + format_number(errors[i]) + "," +
           (order ? format_number(*order) : std::string()) + "\n";
    rows.push_back({{"dt", dts[i]}, {"error", errors[i]},
                    {"order", order ? json(*order) : json(nullptr)}});
  }
  out.text("time_convergence.csv", csv);
  out.gate("observed_order", min_order >= cfg.convergence.min_order,
           "min observed order " + describe(min_order) + " vs " +
               describe(cfg.convergence.min_order));
  summary["table"] = rows;
  summary["reference_dt"] = ref_grid.dt();
  summary["min_order"] = min_order;
}

void run_column(const ScenarioConfig& cfg, Emitter& out, json& summary) {
  const Problem problem = cfg.problem();
  const TimeGrid grid{cfg.final_time, step_count(cfg.final_time, cfg.theta.dt)};
  const Trajectory traj =
      run(grid, problem, {cfg.theta.theta1, cfg.theta.theta2}, cfg.solver, cfg.method);

  std::string csv = "t,top_displacement,basal_pressure,iterations\n";
  int max_iterations = 0;
  double worst_factor = 0.0;
  bool factors_ok = true;
  const double rate = theoretical_rate(problem.material);
  for (std::size_t n = 0; n < traj.states.size(); ++n) {
    int its = 0;
    if (n > 0) {
      const auto& rep = traj.reports[n - 1];
      its = rep.iterations();
      for (const auto& r : rep.records)
        if (r.factor) {
          worst_factor = std::max(worst_factor, *r.factor);
          if (*r.factor > rate + 1e-8) factors_ok = false;
        }
    }
    max_iterations = std::max(max_iterations, its);
    csv += format_number(traj.times[n]) + "," +
           format_number(top_displacement(problem, traj.states[n].u)) + "," +
           format_number(basal_pressure(problem, traj.states[n].p)) + "," + std::to_string(its) +
           "\n";
  }
  out.text("column_timeseries.csv", csv);
  out.json_file("trajectory_norms.json", trajectory_norms_json(traj, problem.ops));
  if (cfg.checkpoint_every > 0)
    for (int n = 0; n <= grid.steps; ++n)
      if (n % cfg.checkpoint_every == 0 || n == grid.steps) {
        char name[32];
        std::snprintf(name, sizeof name, "checkpoint_%05d.csv", n);
        out.text(name, checkpoint_to_csv(traj, static_cast<std::size_t>(n)));
      }
  out.gate("completed", true, std::to_string(grid.steps) + " steps");
  if (cfg.method != CouplingMethod::Monolithic)
    out.gate("contraction_bound[column]", factors_ok,
             "max factor " + describe(worst_factor) + " vs rate " + describe(rate));
  summary["steps"] = grid.steps;
  summary["dt"] = grid.dt();
  summary["coupling"] = to_string(cfg.method);
  summary["max_iterations"] = max_iterations;
  summary["theory_rate"] = rate;
  summary["final_top_displacement"] = top_displacement(problem, traj.states.back().u);
  summary["final_basal_pressure"] = basal_pressure(problem, traj.states.back().p);
}

}  // namespace

Problem ScenarioConfig::problem() const {
  return Problem::build(mesh(), bc, MaterialField::homogeneous(material), loads);
}

std::vector<std::string> validate_scenario(const json& doc) {
  std::vector<std::string> issues;
  const ScenarioConfig cfg = read_config(doc, issues);
  if (issues.empty() && cfg.kind == ScenarioKind::Column) {
    try {
      step_count(cfg.final_time, cfg.theta.dt);
    } catch (const ConfigError& e) {
      issues.push_back(std::string("time.T: ") + e.what());
    }
  }
  return issues;
}

ScenarioConfig parse_scenario(const json& doc) {
  std::vector<std::string> issues = validate_scenario(doc);
  if (!issues.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& i : issues) msg += "\n  " + i;
    throw ConfigError(msg);
  }
  std::vector<std::string> ignored;
  return read_config(doc, ignored);
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_scenario(doc);
}

StageSetup first_stage(const ScenarioConfig& cfg) {
  StageSetup s{cfg.problem(), {}, 0.0};
  const auto& ops = s.problem.ops;
  const History rest = init_history(Vector::Zero(static_cast<Eigen::Index>(ops.nu())),
                                    Vector::Zero(static_cast<Eigen::Index>(ops.nu())),
                                    Vector::Zero(static_cast<Eigen::Index>(ops.np())),
                                    cfg.theta.dt,
                                    Vector::Zero(static_cast<Eigen::Index>(ops.nq())));
  s.rhs = theta_rhs(rest, s.problem, cfg.theta.dt, cfg.theta.dt, cfg.theta.theta1,
                    cfg.theta.theta2);
  s.theory_rate = theoretical_rate(s.problem.material);
  return s;
}

bool RunArtifacts::passed() const {
  return std::all_of(gates.begin(), gates.end(), [](const GateResult& g) { return g.passed; });
}

RunArtifacts run_scenario(const ScenarioConfig& cfg, const std::filesystem::path& requested) {
  const auto start = std::chrono::steady_clock::now();
  const std::filesystem::path out_dir =
      requested.empty() ? std::filesystem::path(cfg.output_dir) : requested;
  if (out_dir.empty()) throw ConfigError("output: no output directory given");
  RunArtifacts art;
  art.directory = out_dir;
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + out_dir.string() + "': " + ec.message());

  Emitter out(art);
  json summary = {{"scenario", to_string(cfg.kind)}};
  switch (cfg.kind) {
    case ScenarioKind::ContractionStudy: run_contraction(cfg, out, summary); break;
    case ScenarioKind::EquivalenceCheck: run_equivalence(cfg, out, summary); break;
    case ScenarioKind::TimeConvergence: run_time_convergence(cfg, out, summary); break;
    case ScenarioKind::Column: run_column(cfg, out, summary); break;
  }
  out.json_file("summary.json", summary);
  art.summary = summary;

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json files = json::array();
  for (const auto& f : art.files)
    files.push_back({{"path", f.filename().string()}, {"sha256", sha256_file(f)}});
  json gates = json::array();
  for (const auto& g : art.gates)
    gates.push_back({{"name", g.name}, {"passed", g.passed}, {"detail", g.detail}});
  const json manifest = {{"config", cfg.source},
                         {"version", PROJECT_VERSION_STRING},
                         {"wall_time_seconds", wall},
                         {"files", files},
                         {"gates", gates},
                         {"passed", art.passed()}};
  art.manifest = out_dir / "manifest.json";
  write_text_file(art.manifest, manifest.dump(2) + "\n");
  return art;
}

}  // namespace porosplit
