#pragma once

// Three ways to solve one stage problem: the monolithic minimization, the
// alternating minimization of the stage energy over (u, q), and the
// undrained split that alternates a stabilized mechanics solve with a mixed
// flow solve. The two iterative paths produce the same iterates.

#include "porosplit/energy.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace porosplit {

enum class InnerMethod { Direct, PreconditionedCG };

struct SolverSettings {
  /// Stop once rho/(1-rho) times the triple-norm increment is below
  /// tol_outer relative to the iterate.
  double tol_outer = 1e-10;
  int max_outer = 200;
  double tol_lin = 1e-12;
  InnerMethod inner = InnerMethod::Direct;
  /// Store every iterate in the report (for iterate-wise comparisons).
  bool keep_iterates = false;

  void validate() const;
};

/// Factorization (or preconditioner) of one SPD block, reused across solves.
class SpdSolver {
 public:
  SpdSolver(const SparseMatrix& matrix, const SolverSettings& settings, std::string block);
  ~SpdSolver();
  SpdSolver(SpdSolver&&) noexcept;
  SpdSolver& operator=(SpdSolver&&) noexcept;

  Vector solve(const Vector& rhs) const;
  /// Iterations of the last solve; 1 for a direct solve.
  int last_iterations() const { return last_iterations_; }
  std::size_t size() const { return static_cast<std::size_t>(matrix_.rows()); }

 private:
  struct Impl;
  SparseMatrix matrix_;
  SolverSettings settings_;
  std::string block_;
  std::unique_ptr<Impl> impl_;
  mutable int last_iterations_ = 0;
};

/// One-shot solve of A x = b.
Vector spd_solve(const SparseMatrix& matrix, const Vector& rhs,
                 const SolverSettings& settings = {}, const std::string& block = "system");

enum class StopReason { Converged, MaxIterations };
std::string to_string(StopReason reason);

struct IterationRecord {
  int k = 0;
  double energy_gap = 0;       // E(u^k, q^k) - E*
  double half_step_gap = 0;    // E(u^k, q^{k-1}) - E*; equals energy_gap at k = 0
  double err_norm = 0;         // |(u^k - u*, q^k - q*)|
  std::optional<double> factor;  // err_norm / previous err_norm
  double increment = 0;        // |(u^k - u^{k-1}, q^k - q^{k-1})|
  int mech_iterations = 0;
  int flow_iterations = 0;
};

struct IterationReport {
  std::vector<IterationRecord> records;  // k = 0, 1, ...
  double theory_rate = 0;
  StopReason stop = StopReason::MaxIterations;
  int sweeps = 0;
  double solution_norm = 0;  // |(u*, q*)|
  /// Mean of (E_k - E*) / |e^k|^2 over iterations where the gap is resolved
  /// in floating point, and the largest relative deviation from that mean.
  std::optional<double> gap_to_norm_constant;
  double gap_to_norm_spread = 0;
  std::vector<StageState> iterates;  // only with SolverSettings::keep_iterates

  bool converged() const { return stop == StopReason::Converged; }
  /// Sweeps minus the final confirming sweep, i.e. the number of updates that
  /// changed the iterate.
  int iterations() const { return converged() ? std::max(0, sweeps - 1) : sweeps; }
  std::optional<double> max_factor() const;
};

/// Caches the factorizations of one stage operator; right-hand sides may vary.
class StageSolver {
 public:
  StageSolver(const OperatorSet& ops, const ThetaParams& params, SolverSettings settings);

  const OperatorSet& operators() const { return *ops_; }
  const ThetaParams& params() const { return params_; }
  const SolverSettings& settings() const { return settings_; }
  void set_theory_rate(double rate) { theory_rate_ = rate; }

  /// Stabilized mechanics update of the undrained split.
  Vector mechanics_step(const Vector& u_prev, const Vector& p_prev, const StageRHS& rhs) const;
  /// Mixed flow update at fixed displacement, returning (p, q). The pressure
  /// is eliminated element-wise and recovered afterwards.
  std::pair<Vector, Vector> flow_step(const Vector& u, const StageRHS& rhs) const;

  /// argmin_u E(u, q) and argmin_q E(u, q), computed from the energy gradient
  /// and the Hessian blocks.
  Vector minimize_displacement(const Vector& u, const Vector& q, const StageRHS& rhs) const;
  Vector minimize_flux(const Vector& u, const Vector& q, const StageRHS& rhs) const;

  StageState monolithic_solve(const StageRHS& rhs) const;

  /// Warm start: u from `u_prev`, (p, q) from one flow step.
  StageState initial_state(const Vector& u_prev, const StageRHS& rhs) const;

  /// Uses init.u and init.p; init.q only enters the k = 0 diagnostics.
  std::pair<StageState, IterationReport> undrained_split_solve(const StageState& init,
                                                               const StageRHS& rhs) const;
  /// Uses init.u and init.q.
  std::pair<StageState, IterationReport> alternating_minimization_solve(
      const StageState& init, const StageRHS& rhs) const;

  int last_mech_iterations() const { return mech_.last_iterations(); }
  int last_flow_iterations() const { return flow_.last_iterations(); }

 private:
  template <class Step>
  std::pair<StageState, IterationReport> iterate(const StageState& init, const StageRHS& rhs,
                                                 Step step) const;

  const OperatorSet* ops_;
  ThetaParams params_;
  SolverSettings settings_;
  double theory_rate_ = 0;
  EnergyHessian hessian_;
  SpdSolver mech_;       // rho/dt^2 M + theta1 (K + K_stab), assembled stabilization
  SpdSolver flow_;       // M_kappa + theta2 dt D^T M_p^-1 D
  SpdSolver hess_uu_;    // Hessian u-u block from the energy
  SpdSolver hess_qq_;    // Hessian q-q block from the energy
  SpdSolver monolithic_;
};

/// Free-function forms; each builds the factorizations it needs.
Vector mechanics_step(const Vector& u_prev, const Vector& p_prev, const StageRHS& rhs,
                      const OperatorSet& ops, const SolverSettings& settings = {});
std::pair<Vector, Vector> flow_step(const Vector& u, const StageRHS& rhs, const OperatorSet& ops,
                                    const SolverSettings& settings = {});
StageState monolithic_solve(const StageRHS& rhs, const OperatorSet& ops,
                            const SolverSettings& settings = {});
std::pair<StageState, IterationReport> undrained_split_solve(const StageState& init,
                                                             const StageRHS& rhs,
                                                             const OperatorSet& ops,
                                                             const SolverSettings& settings = {},
                                                             double theory_rate = 0);
std::pair<StageState, IterationReport> alternating_minimization_solve(
    const StageState& init, const StageRHS& rhs, const OperatorSet& ops,
    const SolverSettings& settings = {}, double theory_rate = 0);

/// Relative residuals of the three stage equations (energy-consistent form):
/// momentum, storage, Darcy. Each is |r| / (sum of the norms of its terms).
std::array<double, 3> stage_residuals(const StageState& state, const StageRHS& rhs,
                                      const OperatorSet& ops);

}  // namespace porosplit
