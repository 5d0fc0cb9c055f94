// One PASS/FAIL line per acceptance criterion. Reference values come from
// dense solves and closed forms computed here, not from the library.

#include "support.hpp"

#include "porosplit/scenario.hpp"

#include <chrono>
#include <cstdio>
#include <functional>

using namespace porosplit;
using namespace porosplit::test;

namespace {

int failed = 0;

void verdict(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("%s [%d] %s: %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failed;
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

// Dense three-field solve and the quadratic form of the energy.
struct Oracle {
  DenseEnergy E;
  Vector xs;  // (u*, q*)
  Vector ps;

  Oracle(const OperatorSet& ops, const StageRHS& rhs) : E(dense_energy(ops, rhs)) {
    const double t1 = rhs.params.theta1, s = rhs.params.theta2 * rhs.params.dt;
    const double dt2 = rhs.params.dt * rhs.params.dt;
    const auto nu = static_cast<Eigen::Index>(ops.nu()), nq = static_cast<Eigen::Index>(ops.nq()),
               np = static_cast<Eigen::Index>(ops.np());
    Dense S = Dense::Zero(nu + nq + np, nu + nq + np);
    S.block(0, 0, nu, nu) = dense(ops.mass_u) / dt2 + t1 * dense(ops.stiffness);
    S.block(0, nu + nq, nu, np) = -t1 * dense(ops.coupling).transpose();
    S.block(nu, nu, nq, nq) = dense(ops.mass_q);
    S.block(nu, nu + nq, nq, np) = -dense(ops.divergence).transpose();
    S.block(nu + nq, 0, np, nu) = dense(ops.coupling);
    S.block(nu + nq, nu, np, nq) = s * dense(ops.divergence);
    S.block(nu + nq, nu + nq, np, np) = Dense(ops.mass_p.asDiagonal());
    Vector b(nu + nq + np);
    b << rhs.f, rhs.g, rhs.h;
    const Vector x = S.partialPivLu().solve(b);
    xs = x.head(nu + nq);
    ps = x.tail(np);
  }

  Vector join(const StageState& s) const {
    Vector x(xs.size());
    x << s.u, s.q;
    return x;
  }
  double norm(const Vector& d) const { return std::sqrt(d.dot(E.H * d)); }
  // E(xs + d) - E(xs), written without subtracting two energies
  double gap(const Vector& d) const { return d.dot(E.H * (xs + 0.5 * d) - E.b); }
};

struct StageCase {
  Problem problem;
  StageRHS rhs;
};

// First backward Euler step of a loaded column from rest.
StageCase loaded_stage(int nx, int ny, const MaterialRecord& mat, double dt) {
  LoadSpec loads;
  loads.body_force = Vec2(0.0, -1.0);
  loads.source = 1.0;
  loads.darcy_force = Vec2(0.3, 0.0);
  StageCase c{make_problem(nx, ny, mat, column_bc(), loads), {}};
  const auto& ops = c.problem.ops;
  const auto hist = init_history(Vector::Zero(static_cast<Eigen::Index>(ops.nu())),
                                 Vector::Zero(static_cast<Eigen::Index>(ops.nu())),
                                 Vector::Zero(static_cast<Eigen::Index>(ops.np())), dt);
  c.rhs = backward_euler_rhs(hist, c.problem, dt, dt);
  return c;
}

SolverSettings settings(double tol = 1e-10) {
  SolverSettings s;
  s.tol_outer = tol;
  s.max_outer = 5000;
  s.keep_iterates = true;
  return s;
}

void contraction_and_gaps() {
  const double x = 0.5;  // alpha : C^-1 : alpha for mu = lambda = alpha = 1
  const double machine = std::numeric_limits<double>::epsilon();
  bool factors_ok = true, gaps_ok = true;
  double worst_margin = -INFINITY, worst_gap = 0;
  double seconds = 0;
  std::string per_c0;
  for (double c0 : {0.01, 0.1, 1.0, 10.0}) {
    const double rate = x / (c0 + x);
    const auto c = loaded_stage(16, 16, isotropic(1, 1, 1, c0, 1, 1), 0.01);
    const auto start = std::chrono::steady_clock::now();
    StageSolver solver(c.problem.ops, c.rhs.params, settings());
    solver.set_theory_rate(rate);
    const auto init =
        solver.initial_state(Vector::Zero(static_cast<Eigen::Index>(c.problem.ops.nu())), c.rhs);
    const auto rep = solver.undrained_split_solve(init, c.rhs).second;
    seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const Oracle o(c.problem.ops, c.rhs);
    std::vector<double> err, gap;
    for (const auto& it : rep.iterates) {
      const Vector d = o.join(it) - o.xs;
      err.push_back(o.norm(d));
      gap.push_back(o.gap(d));
    }
    double worst_factor = 0;
    for (std::size_t k = 2; k < err.size(); ++k) {
      if (err[k - 1] < 1e3 * machine * err[0]) continue;
      const double f = err[k] / err[k - 1];
      worst_factor = std::max(worst_factor, f);
      worst_margin = std::max(worst_margin, f - rate);
      if (f > rate + 1e-8) factors_ok = false;
    }
    for (std::size_t k = 1; k < gap.size(); ++k) {
      const double excess = gap[k] - rate * rate * gap[k - 1];
      worst_gap = std::max(worst_gap, excess / gap[0]);
      if (excess > 1e-12 * gap[0]) gaps_ok = false;
    }
    if (!rep.converged()) factors_ok = gaps_ok = false;
    per_c0 += " c0=" + num(c0) + ": max " + num(worst_factor) + " <= " + num(rate) + " (" +
              std::to_string(rep.iterations()) + " its);";
  }
  verdict(1, "contraction bound", factors_ok && seconds <= 60.0,
          "16x16," + per_c0 + " solve time " + num(seconds) + " s");
  verdict(2, "energy-gap recursion", gaps_ok,
          "max (gap_k - rate^2 gap_{k-1}) / gap_0 = " + num(worst_gap));
}

void equivalence() {
  double worst = 0;
  for (int n : {4, 16}) {
    const auto c = loaded_stage(n, n, isotropic(1, 1, 1, 0.25), 0.01);
    StageSolver solver(c.problem.ops, c.rhs.params, settings(1e-12));
    const auto init =
        solver.initial_state(Vector::Zero(static_cast<Eigen::Index>(c.problem.ops.nu())), c.rhs);
    const auto split = solver.undrained_split_solve(init, c.rhs).second;
    const auto am = solver.alternating_minimization_solve(init, c.rhs).second;
    if (split.iterates.size() != am.iterates.size()) worst = INFINITY;
    const Oracle o(c.problem.ops, c.rhs);
    for (std::size_t k = 0; k < std::min(split.iterates.size(), am.iterates.size()); ++k) {
      const Vector a = o.join(split.iterates[k]), b = o.join(am.iterates[k]);
      worst = std::max(worst, o.norm(a - b) / o.norm(a));
    }
  }
  verdict(3, "AM / undrained-split equivalence", worst <= 1e-10,
          "max relative iterate discrepancy " + num(worst) + " on 4x4 and 16x16");
}

void monolithic_and_recovery() {
  const double tol = 1e-10;
  const auto c = loaded_stage(12, 12, isotropic(1, 1, 1, 0.1), 0.01);
  const auto& ops = c.problem.ops;
  StageSolver solver(ops, c.rhs.params, settings(tol));
  const auto star = solver.monolithic_solve(c.rhs);
  const auto init = solver.initial_state(Vector::Zero(static_cast<Eigen::Index>(ops.nu())), c.rhs);
  const auto [split, rep] = solver.undrained_split_solve(init, c.rhs);
  const Oracle o(ops, c.rhs);
  const double gap = o.norm(o.join(split) - o.join(star)) / o.norm(o.join(star));
  const double oracle_gap = o.norm(o.join(star) - o.xs) / o.norm(o.xs);

  // residuals of the three stage equations, relative to their largest term
  const double dt = c.rhs.params.dt, s = c.rhs.params.theta2 * dt;
  const Dense M = dense(ops.mass_u), K = dense(ops.stiffness), A = dense(ops.coupling),
              D = dense(ops.divergence), Mk = dense(ops.mass_q);
  const Vector r1 = M * star.u / (dt * dt) + K * star.u - A.transpose() * star.p - c.rhs.f;
  const Vector r2 = ops.mass_p.cwiseProduct(star.p) + A * star.u + s * D * star.q - c.rhs.h;
  const Vector r3 = Mk * star.q - D.transpose() * star.p - c.rhs.g;
  const double res = std::max({r1.norm() / std::max((M * star.u / (dt * dt)).norm(), c.rhs.f.norm()),
                               r2.norm() / std::max(ops.mass_p.cwiseProduct(star.p).norm(), c.rhs.h.norm()),
                               r3.norm() / std::max((Mk * star.q).norm(), (D.transpose() * star.p).norm())});
  verdict(4, "monolithic consistency", rep.converged() && gap <= 10 * tol && res <= 1e-9 && oracle_gap <= 1e-9,
          "split vs monolithic " + num(gap) + " (<= " + num(10 * tol) + "), residual " + num(res) +
              ", dense oracle " + num(oracle_gap));

  // pressure recovery
  Rng rng(5);
  double identity = 0;
  for (int i = 0; i < 20; ++i) {
    const auto rhs = random_rhs(ops, c.rhs.params, rng);
    const auto st = random_state(ops, rng);
    const Vector p = recover_pressure(st.u, st.q, rhs, ops);
    const Vector Au = A * st.u, Dq = s * (D * st.q);
    for (Eigen::Index t = 0; t < p.size(); ++t) {
      const double terms[] = {ops.mass_p[t] * p[t], Au[t], Dq[t], rhs.h[t]};
      double scale = 0;
      for (double v : terms) scale = std::max(scale, std::abs(v));
      identity = std::max(identity, std::abs(terms[0] + terms[1] + terms[2] - terms[3]) / scale);
    }
  }
  const Vector p_rec = recover_pressure(split.u, split.q, c.rhs, ops);
  const Vector p_flow = solver.flow_step(split.u, c.rhs).first;
  const double match = rel(p_rec, p_flow);
  verdict(5, "pressure recovery", identity <= 1e-13 && match <= 1e-12,
          "identity residual " + num(identity) + ", recovered vs flow-step p " + num(match));
}

void gradients() {
  double worst = 0;
  Rng rng(6);
  for (auto [nx, ny] : {std::pair{1, 1}, std::pair{8, 8}}) {
    MaterialRecord m = isotropic(1.3, 0.7, 0.9, 0.4, 1.5, 1.2);
    const auto pb = make_problem(nx, ny, m, column_bc());
    const auto& ops = pb.ops;
    const ThetaParams prm{0.9, 0.7, 0.1};
    for (int sample = 0; sample < 20; ++sample) {
      const auto rhs = random_rhs(ops, prm, rng);
      const auto st = random_state(ops, rng);
      const Vector gu = grad_u(st.u, st.q, rhs, ops), gq = grad_q(st.u, st.q, rhs, ops);
      Vector fu(gu.size()), fq(gq.size());
      for (Eigen::Index i = 0; i < gu.size(); ++i) {
        const double h = 1e-6 * std::max(1.0, std::abs(st.u[i]));
        Vector a = st.u, b = st.u;
        a[i] += h;
        b[i] -= h;
        fu[i] = (evaluate_energy(a, st.q, rhs, ops) - evaluate_energy(b, st.q, rhs, ops)) / (2 * h);
      }
      for (Eigen::Index i = 0; i < gq.size(); ++i) {
        const double h = 1e-6 * std::max(1.0, std::abs(st.q[i]));
        Vector a = st.q, b = st.q;
        a[i] += h;
        b[i] -= h;
        fq[i] = (evaluate_energy(st.u, a, rhs, ops) - evaluate_energy(st.u, b, rhs, ops)) / (2 * h);
      }
      worst = std::max({worst, rel(gu, fu), rel(gq, fq)});
    }
  }
  verdict(6, "gradient correctness", worst <= 1e-6,
          "max relative deviation from central differences " + num(worst));
}

void hessian_norm() {
  Rng rng(7);
  const auto mesh = Mesh::rectangle(6, 6, 1, 1);
  std::vector<MaterialRecord> recs;
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    MaterialRecord m;
    m.rho = rng.uniform(0.5, 2);
    m.c0 = rng.uniform(0.05, 1);
    m.elasticity.voigt = rng.spd3();
    m.biot.value = rng.sym2();
    m.permeability.value = rng.spd2();
    recs.push_back(m);
  }
  const auto field = MaterialField::per_element(recs);
  const auto pb = Problem::build(mesh, column_bc(), field, {});
  const auto& ops = pb.ops;
  const ThetaParams prm{1.0, 1.0, 0.05};
  const auto rhs = random_rhs(ops, prm, rng);
  const auto E = dense_energy(ops, rhs);

  double x = 0, c0 = INFINITY;
  for (const auto& r : recs) {
    x = std::max(x, r.biot.value.cwiseProduct(from_voigt(r.elasticity.voigt.ldlt().solve(
                                                  to_voigt(r.biot.value))))
                        .sum());
    c0 = std::min(c0, r.c0);
  }
  const double beta = 1 + x / c0;

  double expansion = 0;
  int violations = 0;
  for (int i = 0; i < 200; ++i) {
    const Vector v = rng.vec(ops.nu()), w = rng.vec(ops.nq());
    Vector d(v.size() + w.size());
    d << v, w;
    const double t2 = std::pow(triple_norm(v, w, ops, prm), 2);
    expansion = std::max(expansion, rel(d.dot(E.H * d), t2));
    if (i < 20) {
      const auto st = random_state(ops, rng);
      Vector g(d.size());
      g << grad_u(st.u, st.q, rhs, ops), grad_q(st.u, st.q, rhs, ops);
      for (double t : {1.0, 0.5}) {
        const double lhs =
            energy_difference(st.u + t * v, st.q + t * w, st.u, st.q, rhs, ops) - t * g.dot(d);
        expansion = std::max(expansion, rel(lhs, 0.5 * t * t * t2));
      }
    }
    if (std::pow(mech_norm(v, ops, prm), 2) > beta * t2 * (1 + 1e-12)) ++violations;
    if (std::pow(flux_norm(w, ops, prm), 2) > beta * t2 * (1 + 1e-12)) ++violations;
    const Vector Av = ops.coupling * v;
    if (Av.cwiseProduct(Av).cwiseQuotient(ops.areas).sum() > x * v.dot(ops.stiffness * v) * (1 + 1e-12))
      ++violations;
  }
  verdict(7, "Hessian-norm identity", expansion <= 1e-10 && violations == 0,
          "max relative expansion mismatch " + num(expansion) + ", bound violations " +
              std::to_string(violations) + " of 600");
}

void isotropic_reduction() {
  double worst = 0;
  for (double mu : {0.2, 1.0, 30.0})
    for (double lambda : {0.0, 1.0, 250.0})
      for (double a : {0.1, 1.0, 2.5}) {
        BiotTensor alpha;
        alpha.value = a * Mat2::Identity();
        const double kdr = lambda + 2 * mu / 2;
        worst = std::max(worst, rel(alpha_C_inv_alpha(isotropic_elasticity(mu, lambda), alpha),
                                    a * a / kdr));
      }
  verdict(8, "isotropic reduction", worst <= 1e-14, "max relative deviation " + num(worst));
}

void time_convergence() {
  ScenarioConfig cfg;
  cfg.kind = ScenarioKind::TimeConvergence;
  cfg.nx = 8;
  cfg.ny = 32;
  cfg.lx = 0.25;
  cfg.ly = 1.0;
  cfg.material = isotropic(1, 1, 1, 0.1);
  cfg.bc = column_bc();
  cfg.loads.traction_profile = {ProfileKind::Step};
  const Problem pb = cfg.problem();
  const double T = 0.1;
  SolverSettings s;
  s.tol_outer = 1e-12;
  s.max_outer = 2000;

  const int ref_steps = 8 * 64;
  const auto ref = run(TimeGrid{T, ref_steps}, pb, {}, s, CouplingMethod::Monolithic);
  const ThetaParams prm{1, 1, T / ref_steps};
  std::vector<double> err;
  for (int n : {8, 16, 32}) {
    const auto traj = run(TimeGrid{T, n}, pb, {}, s, CouplingMethod::UndrainedSplit);
    const auto& a = traj.states.back();
    const auto& b = ref.states.back();
    err.push_back(triple_norm(a.u - b.u, a.q - b.q, pb.ops, prm));
  }
  const double o1 = std::log2(err[0] / err[1]), o2 = std::log2(err[1] / err[2]);
  verdict(9, "time-stepping self-convergence", std::min(o1, o2) >= 0.9,
          "errors " + num(err[0]) + ", " + num(err[1]) + ", " + num(err[2]) + "; orders " + num(o1) +
              ", " + num(o2) + " (reference dt = T/" + std::to_string(ref_steps) + ")");
}

void decoupling() {
  const auto c = loaded_stage(8, 8, isotropic(1, 1, 0.0, 0.5), 0.01);
  StageSolver solver(c.problem.ops, c.rhs.params, settings(1e-12));
  const double rate = theoretical_rate(c.problem.material);
  const auto init =
      solver.initial_state(Vector::Zero(static_cast<Eigen::Index>(c.problem.ops.nu())), c.rhs);
  const auto rep = solver.undrained_split_solve(init, c.rhs).second;
  const Oracle o(c.problem.ops, c.rhs);
  double second = INFINITY;
  if (rep.iterates.size() >= 3)
    second = o.norm(o.join(rep.iterates[2]) - o.join(rep.iterates[1])) / o.norm(o.xs);
  verdict(10, "degenerate decoupling",
          rate == 0.0 && rep.converged() && rep.iterations() == 1 && second <= 1e-12,
          "iterations " + std::to_string(rep.iterations()) + ", second increment " + num(second) +
              ", rate " + num(rate));
}

void gap_to_norm() {
  const auto c = loaded_stage(16, 16, isotropic(1, 1, 1, 0.1), 0.01);
  StageSolver solver(c.problem.ops, c.rhs.params, settings(1e-11));
  const auto init =
      solver.initial_state(Vector::Zero(static_cast<Eigen::Index>(c.problem.ops.nu())), c.rhs);
  const auto rep = solver.undrained_split_solve(init, c.rhs).second;
  const Oracle o(c.problem.ops, c.rhs);
  const double scale = o.norm(o.xs);
  std::vector<double> ratios;
  for (const auto& it : rep.iterates) {
    const Vector d = o.join(it) - o.xs;
    const double e = o.norm(d);
    if (e >= 1e-6 * scale) ratios.push_back(o.gap(d) / (e * e));
  }
  double mean = 0;
  for (double r : ratios) mean += r;
  mean /= static_cast<double>(ratios.size());
  double spread = 0;
  for (double r : ratios) spread = std::max(spread, std::abs(r - mean) / mean);
  const bool reported = rep.gap_to_norm_constant.has_value() &&
                        std::abs(*rep.gap_to_norm_constant - mean) <= 1e-8 * mean;
  verdict(11, "gap-to-norm constant", ratios.size() >= 2 && spread <= 1e-8 && reported,
          "constant " + num(mean) + " over " + std::to_string(ratios.size()) +
              " iterates, spread " + num(spread) + ", reported " +
              (rep.gap_to_norm_constant ? num(*rep.gap_to_norm_constant) : "none"));
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> criteria = {
      contraction_and_gaps, equivalence, monolithic_and_recovery, gradients, hessian_norm,
      isotropic_reduction,  time_convergence, decoupling,         gap_to_norm};
  for (const auto& c : criteria) {
    try {
      c();
    } catch (const std::exception& e) {
      std::printf("FAIL exception: %s\n", e.what());
      ++failed;
    }
  }
  std::printf("%d criterion check(s) failed\n", failed);
  return failed == 0 ? 0 : 1;
}
