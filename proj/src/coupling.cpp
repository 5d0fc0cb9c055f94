#include "porosplit/coupling.hpp"

#include "porosplit/error.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <cmath>
#include <limits>

namespace porosplit {

void SolverSettings::validate() const {
  if (!(tol_outer > 0.0)) throw ConfigError("solver.tol_outer must be positive");
  if (!(tol_lin > 0.0)) throw ConfigError("solver.tol_lin must be positive");
  if (max_outer < 1) throw ConfigError("solver.max_outer must be at least 1");
}

std::string to_string(StopReason reason) {
  return reason == StopReason::Converged ? "converged" : "max_outer reached";
}

std::optional<double> IterationReport::max_factor() const {
  std::optional<double> worst;
  for (const auto& r : records)
    if (r.factor && (!worst || *r.factor > *worst)) worst = r.factor;
  return worst;
}

// ---------------------------------------------------------------------------
// SPD block solver

struct SpdSolver::Impl {
  Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> llt;
  Eigen::IncompleteCholesky<double, Eigen::Lower, Eigen::AMDOrdering<int>> ichol;
};

SpdSolver::SpdSolver(const SparseMatrix& matrix, const SolverSettings& settings,
                     std::string block)
    : matrix_(matrix), settings_(settings), block_(std::move(block)),
      impl_(std::make_unique<Impl>()) {
  if (matrix_.rows() != matrix_.cols())
    throw SolverError(block_ + ": matrix is not square");
  if (matrix_.rows() == 0) return;
  const Vector diag = matrix_.diagonal();
  for (Eigen::Index i = 0; i < diag.size(); ++i)
    if (!(diag[i] > 0.0))
      throw SolverError(block_ + ": nonpositive diagonal entry in row " + std::to_string(i) +
                        " (matrix not SPD)");
  if (settings_.inner == InnerMethod::Direct) {
    impl_->llt.compute(matrix_);
    if (impl_->llt.info() != Eigen::Success)
      throw SolverError(block_ + ": Cholesky factorization failed (matrix not SPD)");
  } else {
    impl_->ichol.compute(matrix_);
    if (impl_->ichol.info() != Eigen::Success)
      throw SolverError(block_ + ": incomplete Cholesky preconditioner failed");
  }
}

SpdSolver::~SpdSolver() = default;
SpdSolver::SpdSolver(SpdSolver&&) noexcept = default;
SpdSolver& SpdSolver::operator=(SpdSolver&&) noexcept = default;

Vector SpdSolver::solve(const Vector& b) const {
  if (b.size() != matrix_.rows())
    throw SizeMismatchError(block_ + ": right-hand side has wrong size");
  if (matrix_.rows() == 0) {
    last_iterations_ = 0;
    return Vector(0);
  }
  if (settings_.inner == InnerMethod::Direct) {
    Vector x = impl_->llt.solve(b);
    if (impl_->llt.info() != Eigen::Success || !x.allFinite())
      throw SolverError(block_ + ": direct solve failed");
    last_iterations_ = 1;
    return x;
  }

  // Preconditioned CG with a curvature check.
  const double bnorm = b.norm();
  Vector x = Vector::Zero(b.size());
  if (bnorm == 0.0) {
    last_iterations_ = 0;
    return x;
  }
  Vector r = b;
  Vector z = impl_->ichol.solve(r);
  Vector d = z;
  double rz = r.dot(z);
  const int max_it = std::max<int>(100, 10 * static_cast<int>(b.size()));
  for (int it = 1; it <= max_it; ++it) {
    const Vector Ad = matrix_ * d;
    const double curvature = d.dot(Ad);
    if (!(curvature > 0.0))
      throw SolverError(block_ + ": negative curvature in CG (matrix not SPD)");
    const double step = rz / curvature;
    x += step * d;
    r -= step * Ad;
    if (r.norm() <= settings_.tol_lin * bnorm) {
      last_iterations_ = it;
      return x;
    }
    z = impl_->ichol.solve(r);
    const double rz_new = r.dot(z);
    d = z + (rz_new / rz) * d;
    rz = rz_new;
  }
  throw SolverError(block_ + ": CG did not reach the linear tolerance");
}

Vector spd_solve(const SparseMatrix& matrix, const Vector& rhs, const SolverSettings& settings,
                 const std::string& block) {
  return SpdSolver(matrix, settings, block).solve(rhs);
}

// ---------------------------------------------------------------------------
// Stage solver

namespace {

SparseMatrix symmetrized(const SparseMatrix& m) {
  return 0.5 * (m + SparseMatrix(m.transpose()));
}

SparseMatrix mechanics_operator(const OperatorSet& ops, const ThetaParams& p) {
  return symmetrized(ops.mass_u / (p.dt * p.dt) + p.theta1 * (ops.stiffness + ops.stabilization));
}

SparseMatrix flow_operator(const OperatorSet& ops, const ThetaParams& p) {
  const Eigen::DiagonalMatrix<double, Eigen::Dynamic> W(inverse_pressure_mass(ops));
  const SparseMatrix WD = W * ops.divergence;
  return symmetrized(ops.mass_q +
                     p.theta2 * p.dt * SparseMatrix(ops.divergence.transpose() * WD));
}

SparseMatrix block_operator(const EnergyHessian& H) {
  const Eigen::Index nu = H.uu.rows(), nq = H.qq.rows();
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(H.uu.nonZeros() + 2 * H.uq.nonZeros() + H.qq.nonZeros()));
  for (Eigen::Index c = 0; c < H.uu.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(H.uu, c); it; ++it)
      t.emplace_back(it.row(), it.col(), it.value());
  for (Eigen::Index c = 0; c < H.uq.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(H.uq, c); it; ++it) {
      t.emplace_back(it.row(), nu + it.col(), it.value());
      t.emplace_back(nu + it.col(), it.row(), it.value());
    }
  for (Eigen::Index c = 0; c < H.qq.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(H.qq, c); it; ++it)
      t.emplace_back(nu + it.row(), nu + it.col(), it.value());
  SparseMatrix m(nu + nq, nu + nq);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

}  // namespace

StageSolver::StageSolver(const OperatorSet& ops, const ThetaParams& params,
                         SolverSettings settings)
    : ops_(&ops), params_(params), settings_(settings),
      hessian_((params.validate(), settings.validate(), energy_hessian(ops, params))),
      mech_(mechanics_operator(ops, params), settings, "mechanics"),
      flow_(flow_operator(ops, params), settings, "flow"),
      hess_uu_(hessian_.uu, settings, "energy u-block"),
      hess_qq_(hessian_.qq, settings, "energy q-block"),
      monolithic_(block_operator(hessian_), settings, "monolithic") {}

Vector StageSolver::mechanics_step(const Vector& u_prev, const Vector& p_prev,
                                   const StageRHS& rhs) const {
  check_sizes(rhs, *ops_);
  const double t1 = params_.theta1;
  const Vector b = rhs.f + t1 * (ops_->stabilization * u_prev) +
                   t1 * (ops_->coupling.transpose() * p_prev);
  return mech_.solve(b);
}

std::pair<Vector, Vector> StageSolver::flow_step(const Vector& u, const StageRHS& rhs) const {
  check_sizes(rhs, *ops_);
  const Vector storage_rhs = rhs.h - ops_->coupling * u;
  const Vector b =
      rhs.g + ops_->divergence.transpose() * storage_rhs.cwiseQuotient(ops_->mass_p);
  Vector q = flow_.solve(b);
  Vector p = recover_pressure(u, q, rhs, *ops_);
  return {std::move(p), std::move(q)};
}

Vector StageSolver::minimize_displacement(const Vector& u, const Vector& q,
                                          const StageRHS& rhs) const {
  // E is quadratic in u: one Newton step from any u is exact.
  return u - hess_uu_.solve(grad_u(u, q, rhs, *ops_));
}

Vector StageSolver::minimize_flux(const Vector& u, const Vector& q, const StageRHS& rhs) const {
  return q - hess_qq_.solve(grad_q(u, q, rhs, *ops_));
}

StageState StageSolver::monolithic_solve(const StageRHS& rhs) const {
  check_sizes(rhs, *ops_);
  const auto nu = static_cast<Eigen::Index>(ops_->nu());
  const auto nq = static_cast<Eigen::Index>(ops_->nq());
  // Gradient at zero is -b of the quadratic form 1/2 x^T H x - b^T x.
  const Vector zu = Vector::Zero(nu), zq = Vector::Zero(nq);
  Vector b(nu + nq);
  b << -grad_u(zu, zq, rhs, *ops_), -grad_q(zu, zq, rhs, *ops_);
  const Vector x = monolithic_.solve(b);
  StageState s;
  s.u = x.head(nu);
  s.q = x.tail(nq);
  s.p = recover_pressure(s.u, s.q, rhs, *ops_);
  return s;
}

StageState StageSolver::initial_state(const Vector& u_prev, const StageRHS& rhs) const {
  StageState s;
  s.u = u_prev;
  std::tie(s.p, s.q) = flow_step(u_prev, rhs);
  return s;
}

namespace {
constexpr double kMaxRate = 0.999;
constexpr double kRoundoff = 64 * std::numeric_limits<double>::epsilon();
}  // namespace

template <class Step>
std::pair<StageState, IterationReport> StageSolver::iterate(const StageState& init,
                                                            const StageRHS& rhs,
                                                            Step step) const {
  check_sizes(rhs, *ops_);
  const StageState ref = monolithic_solve(rhs);
  const auto err = [&](const Vector& u, const Vector& q) {
    return triple_norm(u - ref.u, q - ref.q, *ops_, params_);
  };
  const auto gap = [&](const Vector& u, const Vector& q) {
    return energy_difference(u, q, ref.u, ref.q, rhs, *ops_);
  };

  IterationReport report;
  report.theory_rate = theory_rate_;
  report.solution_norm = triple_norm(ref.u, ref.q, *ops_, params_);

  StageState cur = init;
  IterationRecord first;
  first.k = 0;
  first.err_norm = err(cur.u, cur.q);
  first.energy_gap = first.half_step_gap = gap(cur.u, cur.q);
  report.records.push_back(first);
  if (settings_.keep_iterates) report.iterates.push_back(cur);

  const double e0 = first.err_norm;
  const double noise_floor = 1e3 * std::numeric_limits<double>::epsilon() * e0;
  double previous_increment = 0.0;

  for (int k = 1; k <= settings_.max_outer; ++k) {
    StageState next;
    const auto [mech_its, flow_its] = step(cur, next);

    IterationRecord rec;
    rec.k = k;
    // Both paths update u first, so (u^k, q^{k-1}) is the half-step iterate.
    rec.half_step_gap = gap(next.u, cur.q);
    rec.energy_gap = gap(next.u, next.q);
    rec.err_norm = err(next.u, next.q);
    rec.increment = triple_norm(next.u - cur.u, next.q - cur.q, *ops_, params_);
    rec.mech_iterations = mech_its;
    rec.flow_iterations = flow_its;
    const double prev_err = report.records.back().err_norm;
    if (e0 > 0.0 && prev_err >= noise_floor) rec.factor = rec.err_norm / prev_err;
    report.records.push_back(rec);
    report.sweeps = k;
    cur = std::move(next);
    if (settings_.keep_iterates) report.iterates.push_back(cur);

    // Error estimate |x^k - x*| <= rho / (1 - rho) |x^k - x^{k-1}| for a
    // contraction with rate rho; rho is the larger of the theoretical rate and
    // the observed increment ratio.
    double rho = theory_rate_ < 1.0 ? theory_rate_ : 0.0;
    if (k >= 2 && previous_increment > 0.0)
      rho = std::max(rho, rec.increment / previous_increment);
    rho = std::min(rho, kMaxRate);
    const double estimate = rec.increment * rho / (1.0 - rho);
    const double size = triple_norm(cur.u, cur.q, *ops_, params_);
    const double tol = settings_.tol_outer * size;
    const bool resolved = rec.increment <= kRoundoff * size;
    if ((k >= 2 || rec.increment <= tol) && (estimate <= tol || resolved)) {
      report.stop = StopReason::Converged;
      break;
    }
    previous_increment = rec.increment;
  }

  // Gap-to-norm constant over iterations where the gap is well resolved.
  std::vector<double> ratios;
  for (const auto& r : report.records)
    if (r.err_norm > 0.0 && r.err_norm >= 1e-6 * report.solution_norm)
      ratios.push_back(r.energy_gap / (r.err_norm * r.err_norm));
  if (!ratios.empty()) {
    double mean = 0.0;
    for (double v : ratios) mean += v;
    mean /= static_cast<double>(ratios.size());
    double spread = 0.0;
    for (double v : ratios) spread = std::max(spread, std::abs(v - mean) / std::abs(mean));
    report.gap_to_norm_constant = mean;
    report.gap_to_norm_spread = spread;
  }
  return {std::move(cur), std::move(report)};
}

std::pair<StageState, IterationReport> StageSolver::undrained_split_solve(
    const StageState& init, const StageRHS& rhs) const {
  return iterate(init, rhs, [&](const StageState& cur, StageState& next) {
    next.u = mechanics_step(cur.u, cur.p, rhs);
    std::tie(next.p, next.q) = flow_step(next.u, rhs);
    return std::pair{mech_.last_iterations(), flow_.last_iterations()};
  });
}

std::pair<StageState, IterationReport> StageSolver::alternating_minimization_solve(
    const StageState& init, const StageRHS& rhs) const {
  return iterate(init, rhs, [&](const StageState& cur, StageState& next) {
    next.u = minimize_displacement(cur.u, cur.q, rhs);
    next.q = minimize_flux(next.u, cur.q, rhs);
    next.p = recover_pressure(next.u, next.q, rhs, *ops_);
    return std::pair{hess_uu_.last_iterations(), hess_qq_.last_iterations()};
  });
}

// ---------------------------------------------------------------------------

Vector mechanics_step(const Vector& u_prev, const Vector& p_prev, const StageRHS& rhs,
                      const OperatorSet& ops, const SolverSettings& settings) {
  settings.validate();
  rhs.params.validate();
  const SpdSolver solver(mechanics_operator(ops, rhs.params), settings, "mechanics");
  const double t1 = rhs.params.theta1;
  check_sizes(rhs, ops);
  return solver.solve(rhs.f + t1 * (ops.stabilization * u_prev) +
                      t1 * (ops.coupling.transpose() * p_prev));
}

std::pair<Vector, Vector> flow_step(const Vector& u, const StageRHS& rhs, const OperatorSet& ops,
                                    const SolverSettings& settings) {
  settings.validate();
  rhs.params.validate();
  check_sizes(rhs, ops);
  const SpdSolver solver(flow_operator(ops, rhs.params), settings, "flow");
  const Vector storage_rhs = rhs.h - ops.coupling * u;
  Vector q = solver.solve(rhs.g + ops.divergence.transpose() * storage_rhs.cwiseQuotient(ops.mass_p));
  Vector p = recover_pressure(u, q, rhs, ops);
  return {std::move(p), std::move(q)};
}

StageState monolithic_solve(const StageRHS& rhs, const OperatorSet& ops,
                            const SolverSettings& settings) {
  return StageSolver(ops, rhs.params, settings).monolithic_solve(rhs);
}

std::pair<StageState, IterationReport> undrained_split_solve(const StageState& init,
                                                             const StageRHS& rhs,
                                                             const OperatorSet& ops,
                                                             const SolverSettings& settings,
                                                             double theory_rate) {
  StageSolver solver(ops, rhs.params, settings);
  solver.set_theory_rate(theory_rate);
  return solver.undrained_split_solve(init, rhs);
}

std::pair<StageState, IterationReport> alternating_minimization_solve(
    const StageState& init, const StageRHS& rhs, const OperatorSet& ops,
    const SolverSettings& settings, double theory_rate) {
  StageSolver solver(ops, rhs.params, settings);
  solver.set_theory_rate(theory_rate);
  return solver.alternating_minimization_solve(init, rhs);
}

std::array<double, 3> stage_residuals(const StageState& s, const StageRHS& rhs,
                                      const OperatorSet& ops) {
  check_sizes(rhs, ops);
  const auto& pr = rhs.params;
  const double t1 = pr.theta1, sc = pr.theta2 * pr.dt;
  const auto rel = [](const Vector& r, std::initializer_list<double> norms) {
    double denom = 0.0;
    for (double n : norms) denom += n;
    return denom > 0.0 ? r.norm() / denom : r.norm();
  };

  const Vector inertia = ops.mass_u * s.u / (pr.dt * pr.dt);
  const Vector elastic = t1 * (ops.stiffness * s.u);
  const Vector coupling = t1 * (ops.coupling.transpose() * s.p);
  const double ra =
      rel(inertia + elastic - coupling - rhs.f,
          {inertia.norm(), elastic.norm(), coupling.norm(), rhs.f.norm()});

  const Vector storage = ops.mass_p.cwiseProduct(s.p);
  const Vector strain = ops.coupling * s.u;
  const Vector div = sc * (ops.divergence * s.q);
  const double rb = rel(storage + strain + div - rhs.h,
                        {storage.norm(), strain.norm(), div.norm(), rhs.h.norm()});

  const Vector friction = ops.mass_q * s.q;
  const Vector grad = ops.divergence.transpose() * s.p;
  const double rc = rel(friction - grad - rhs.g, {friction.norm(), grad.norm(), rhs.g.norm()});
  return {ra, rb, rc};
}

}  // namespace porosplit
