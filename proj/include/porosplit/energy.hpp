#pragma once

// Stage energy of the minimization form of one time step,
//
//   E(u,q) = rho/(2 dt^2) |u|^2 + theta1/2 <C eps(u), eps(u)>
//          + theta1 theta2 dt/2 <kappa^-1 q, q>
//          + theta1/(2 c0) |h - alpha:eps(u) - theta2 dt div q|^2
//          - <f, u> - theta1 theta2 dt <g, q>,
//
// its partial gradients, the local pressure recovery and the Hessian-induced
// norms used by the convergence analysis. All vectors are coefficient vectors
// on the reduced dof spaces; right-hand sides are dual (integrated) vectors.

#include "porosplit/discretization.hpp"
#include "porosplit/model.hpp"

namespace porosplit {

struct StageRHS {
  Vector f;  // on u-dofs
  Vector h;  // on p-dofs, element integrals
  Vector g;  // on q-dofs, at the scale of the Darcy equation
  ThetaParams params;
};

struct StageState {
  Vector u;
  Vector p;
  Vector q;

  static StageState zeros(const OperatorSet& ops);
};

/// Throws SizeMismatchError unless the sizes match the operators.
void check_sizes(const StageRHS& rhs, const OperatorSet& ops);

double evaluate_energy(const Vector& u, const Vector& q, const StageRHS& rhs,
                       const OperatorSet& ops);

/// E(u1,q1) - E(u0,q0) evaluated from the differences of the arguments, which
/// avoids cancelling the constant and the large quadratic terms.
double energy_difference(const Vector& u1, const Vector& q1, const Vector& u0,
                         const Vector& q0, const StageRHS& rhs, const OperatorSet& ops);

Vector grad_u(const Vector& u, const Vector& q, const StageRHS& rhs, const OperatorSet& ops);
Vector grad_q(const Vector& u, const Vector& q, const StageRHS& rhs, const OperatorSet& ops);

/// p = c0^-1 (h - alpha:eps(u) - theta2 dt div q), element by element.
Vector recover_pressure(const Vector& u, const Vector& q, const StageRHS& rhs,
                        const OperatorSet& ops);

/// |(v,w)|: the norm induced by the Hessian of E.
double triple_norm(const Vector& v, const Vector& w, const OperatorSet& ops,
                   const ThetaParams& params);
/// |v|_m: the norm induced by the u-u block of the Hessian.
double mech_norm(const Vector& v, const OperatorSet& ops, const ThetaParams& params);
/// |w|_f: the norm induced by the q-q block of the Hessian.
double flux_norm(const Vector& w, const OperatorSet& ops, const ThetaParams& params);

/// Hessian blocks assembled from the definition of E (the stabilization
/// block is formed as the product coupling^T M_p^-1 coupling here, not taken
/// from the assembled operator).
struct EnergyHessian {
  SparseMatrix uu;
  SparseMatrix uq;  // nu x nq
  SparseMatrix qq;
};
EnergyHessian energy_hessian(const OperatorSet& ops, const ThetaParams& params);

/// Element-wise weights 1/(c0 |T|).
Vector inverse_pressure_mass(const OperatorSet& ops);

}  // namespace porosplit
