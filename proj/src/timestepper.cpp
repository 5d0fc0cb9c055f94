#include "porosplit/timestepper.hpp"

#include "porosplit/error.hpp"

#include <cmath>
#include <numbers>

namespace porosplit {

double TimeProfile::operator()(double t) const {
  switch (kind) {
    case ProfileKind::Constant: return 1.0;
    case ProfileKind::Ramp: return duration > 0.0 ? std::min(1.0, std::max(0.0, t / duration)) : 1.0;
    case ProfileKind::Sinusoid: return std::sin(2.0 * std::numbers::pi * frequency * t + phase);
    case ProfileKind::Step: return t >= start ? 1.0 : 0.0;
  }
  return 1.0;
}

void TimeGrid::validate() const {
  if (!(final_time > 0.0) || !std::isfinite(final_time))
    throw ConfigError("time.T must be finite and positive");
  if (steps < 1) throw ConfigError("time: number of steps must be at least 1");
}

Problem Problem::build(Mesh mesh, BCSpec bc, MaterialField material, LoadSpec loads,
                       int quadrature_points) {
  Problem p;
  p.dofs = build_spaces(mesh, bc);
  p.ops = assemble_operators(mesh, p.dofs, material, quadrature_points);
  p.mesh = std::move(mesh);
  p.bc = bc;
  p.material = std::move(material);
  p.loads = loads;
  return p;
}

LoadVectors Problem::loads_at(double t) const {
  LoadVectors lv{Vector::Zero(static_cast<Eigen::Index>(dofs.nu)),
                 Vector::Zero(static_cast<Eigen::Index>(dofs.np)),
                 Vector::Zero(static_cast<Eigen::Index>(dofs.nq))};
  const Vec2 body = loads.body_force * loads.body_force_profile(t);
  const double source = loads.source * loads.source_profile(t);
  const Vec2 darcy = loads.darcy_force * loads.darcy_force_profile(t);

  for (std::size_t tr = 0; tr < mesh.triangle_count(); ++tr) {
    const Triangle& tri = mesh.triangles()[tr];
    const double area = mesh.area(tr);
    for (int k = 0; k < 3; ++k)
      for (int c = 0; c < 2; ++c) {
        const int dof = dofs.u_index[2 * tri.vertices[k] + c];
        if (dof >= 0) lv.f[dof] += body[c] * area / 3.0;
      }
    lv.h[static_cast<Eigen::Index>(tr)] = source * area;
    if (darcy.squaredNorm() > 0.0) {
      const Vec2 m = mesh.centroid(tr);
      for (int i = 0; i < 3; ++i) {
        const int dof = dofs.q_index[tri.edges[i]];
        if (dof < 0) continue;
        // Integral of the face basis is its value at the centroid times |T|.
        lv.g[dof] += darcy.dot(face_basis(mesh, tr, i, m)) * area;
      }
    }
  }

  const double traction_scale = loads.traction_profile(t);
  const double pressure_scale = loads.pressure_profile(t);
  for (std::size_t e = 0; e < mesh.edge_count(); ++e) {
    const Edge& edge = mesh.edges()[e];
    if (!edge.side) continue;
    const SideCondition& cond = bc[*edge.side];
    const double len = mesh.edge_length(e);
    if (cond.displacement == DisplacementKind::Traction) {
      for (int v : edge.vertices)
        for (int c = 0; c < 2; ++c) {
          const int dof = dofs.u_index[2 * v + c];
          if (dof >= 0) lv.f[dof] += cond.traction[c] * traction_scale * len / 2.0;
        }
    }
    if (cond.flow == FlowKind::Drained && dofs.q_index[e] >= 0) {
      const Triangle& tri = mesh.triangles()[edge.triangles[0]];
      int outward = 1;
      for (int k = 0; k < 3; ++k)
        if (tri.edges[k] == static_cast<int>(e)) outward = tri.edge_signs[k];
      lv.g[dofs.q_index[e]] -= cond.pressure * pressure_scale * len * outward;
    }
  }
  return lv;
}

History init_history(const Vector& u0, const Vector& v0, const Vector& p0, double dt,
                     const Vector& q0, double t0) {
  if (u0.size() != v0.size()) throw SizeMismatchError("initial velocity size mismatch");
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  History h;
  h.u1 = u0;
  h.u2 = u0 - dt * v0;
  h.p1 = p0;
  h.q1 = q0;
  h.t1 = t0;
  return h;
}

namespace {

void check_history(const History& h, const OperatorSet& ops) {
  const auto nu = static_cast<Eigen::Index>(ops.nu());
  if (h.u1.size() != nu || h.u2.size() != nu)
    throw SizeMismatchError("history displacement size mismatch");
  if (h.p1.size() != static_cast<Eigen::Index>(ops.np()))
    throw SizeMismatchError("history pressure size mismatch");
  if (h.q1.size() != 0 && h.q1.size() != static_cast<Eigen::Index>(ops.nq()))
    throw SizeMismatchError("history flux size mismatch");
}

}  // namespace

StageRHS backward_euler_rhs(const History& hist, const Problem& problem, double t_n, double dt) {
  const OperatorSet& ops = problem.ops;
  check_history(hist, ops);
  const LoadVectors now = problem.loads_at(t_n);
  StageRHS rhs;
  rhs.params = {1.0, 1.0, dt};
  rhs.params.validate();
  rhs.f = ops.mass_u * (2.0 * hist.u1 - hist.u2) / (dt * dt) + now.f;
  rhs.h = dt * now.h + ops.mass_p.cwiseProduct(hist.p1) + ops.coupling * hist.u1;
  rhs.g = now.g;
  return rhs;
}

StageRHS theta_rhs(const History& hist, const Problem& problem, double t_n, double dt,
                   double theta1, double theta2) {
  const OperatorSet& ops = problem.ops;
  check_history(hist, ops);
  StageRHS rhs;
  rhs.params = {theta1, theta2, dt};
  rhs.params.validate();
  const LoadVectors now = problem.loads_at(t_n);

  rhs.f = ops.mass_u * (2.0 * hist.u1 - hist.u2) / (dt * dt) + theta1 * now.f;
  rhs.h = dt * (theta2 * now.h) + ops.mass_p.cwiseProduct(hist.p1) + ops.coupling * hist.u1;
  rhs.g = now.g;

  if (theta1 < 1.0 || theta2 < 1.0) {
    const LoadVectors before = problem.loads_at(hist.t1);
    if (theta1 < 1.0) {
      const double w = 1.0 - theta1;
      rhs.f += w * before.f - w * (ops.stiffness * hist.u1) +
               w * (ops.coupling.transpose() * hist.p1);
    }
    if (theta2 < 1.0) {
      const double w = 1.0 - theta2;
      rhs.h += dt * w * before.h;
      if (hist.q1.size() > 0) rhs.h -= dt * w * (ops.divergence * hist.q1);
    }
  }
  return rhs;
}

History advance(const History& hist, const StageState& state, double t_n) {
  History next;
  next.u2 = hist.u1;
  next.u1 = state.u;
  next.p1 = state.p;
  next.q1 = state.q;
  next.t1 = t_n;
  return next;
}

std::string to_string(CouplingMethod method) {
  switch (method) {
    case CouplingMethod::Monolithic: return "monolithic";
    case CouplingMethod::UndrainedSplit: return "undrained-split";
    case CouplingMethod::AlternatingMinimization: return "alternating-minimization";
  }
  return "?";
}

CouplingMethod coupling_method_from_string(const std::string& name) {
  if (name == "monolithic") return CouplingMethod::Monolithic;
  if (name == "undrained-split") return CouplingMethod::UndrainedSplit;
  if (name == "alternating-minimization") return CouplingMethod::AlternatingMinimization;
  throw ConfigError("unknown coupling method '" + name + "'");
}

Trajectory run(const TimeGrid& grid, const Problem& problem, const SchemeParams& scheme,
               const SolverSettings& settings, CouplingMethod method, const InitialData& init) {
  grid.validate();
  const OperatorSet& ops = problem.ops;
  const double dt = grid.dt();
  const ThetaParams params{scheme.theta1, scheme.theta2, dt};
  params.validate();

  const auto or_zero = [](const Vector& v, std::size_t n) {
    return v.size() == 0 ? Vector::Zero(static_cast<Eigen::Index>(n)) : v;
  };
  const Vector u0 = or_zero(init.u0, ops.nu());
  const Vector v0 = or_zero(init.v0, ops.nu());
  const Vector p0 = or_zero(init.p0, ops.np());
  const Vector q0 = or_zero(init.q0, ops.nq());

  StageSolver solver(ops, params, settings);
  solver.set_theory_rate(theoretical_rate(problem.material));

  Trajectory traj;
  traj.times.push_back(0.0);
  traj.states.push_back({u0, p0, q0});
  History hist = init_history(u0, v0, p0, dt, q0, 0.0);

  for (int n = 1; n <= grid.steps; ++n) {
    const double t_n = grid.time(n);
    const StageRHS rhs = (scheme.theta1 == 1.0 && scheme.theta2 == 1.0)
                             ? backward_euler_rhs(hist, problem, t_n, dt)
                             : theta_rhs(hist, problem, t_n, dt, scheme.theta1, scheme.theta2);
    StageState state;
    IterationReport report;
    if (method == CouplingMethod::Monolithic) {
      state = solver.monolithic_solve(rhs);
    } else {
      const StageState start = solver.initial_state(hist.u1, rhs);
      std::tie(state, report) = method == CouplingMethod::UndrainedSplit
                                    ? solver.undrained_split_solve(start, rhs)
                                    : solver.alternating_minimization_solve(start, rhs);
      if (!report.converged())
        throw Error(ErrorCode::NotConverged,
                    "step " + std::to_string(n) + ": " + to_string(method) +
                        " did not converge within " + std::to_string(settings.max_outer) +
                        " iterations");
    }
    hist = advance(hist, state, t_n);
    traj.times.push_back(t_n);
    traj.states.push_back(std::move(state));
    traj.reports.push_back(std::move(report));
  }
  return traj;
}

double physical_energy(const Vector& u, const Vector& u_prev, const Vector& p,
                       const OperatorSet& ops, double dt) {
  const Vector v = (u - u_prev) / dt;
  return 0.5 * v.dot(ops.mass_u * v) + 0.5 * u.dot(ops.stiffness * u) +
         0.5 * p.dot(ops.mass_p.cwiseProduct(p));
}

double top_displacement(const Problem& problem, const Vector& u) {
  const Vector full = extend_displacement(problem.dofs, u);
  const int row = problem.mesh.nx() + 1;
  const int first = problem.mesh.ny() * row;
  double sum = 0.0;
  for (int i = 0; i < row; ++i) sum += full[2 * (first + i) + 1];
  return sum / row;
}

double basal_pressure(const Problem& problem, const Vector& p) {
  double sum = 0.0, area = 0.0;
  for (std::size_t e = 0; e < problem.mesh.edge_count(); ++e) {
    const Edge& edge = problem.mesh.edges()[e];
    if (edge.side != BoundarySide::Bottom) continue;
    const auto t = static_cast<std::size_t>(edge.triangles[0]);
    sum += p[static_cast<Eigen::Index>(t)] * problem.mesh.area(t);
    area += problem.mesh.area(t);
  }
  return area > 0.0 ? sum / area : 0.0;
}

}  // namespace porosplit
