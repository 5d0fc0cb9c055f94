#include "porosplit/energy.hpp"

#include "porosplit/error.hpp"

#include <cmath>

namespace porosplit {

namespace {

double flux_scale(const ThetaParams& p) { return p.theta2 * p.dt; }

void check_vector(const Vector& v, std::size_t n, const char* what) {
  if (static_cast<std::size_t>(v.size()) != n)
    throw SizeMismatchError(std::string(what) + ": expected size " + std::to_string(n) +
                            ", got " + std::to_string(v.size()));
}

void check_state(const Vector& u, const Vector& q, const OperatorSet& ops) {
  check_vector(u, ops.nu(), "displacement");
  check_vector(q, ops.nq(), "flux");
}

// h - alpha:eps(u) - theta2 dt div q as a dual vector on elements.
Vector misfit(const Vector& u, const Vector& q, const StageRHS& rhs, const OperatorSet& ops) {
  return rhs.h - ops.coupling * u - flux_scale(rhs.params) * (ops.divergence * q);
}

}  // namespace

StageState StageState::zeros(const OperatorSet& ops) {
  return {Vector::Zero(static_cast<Eigen::Index>(ops.nu())),
          Vector::Zero(static_cast<Eigen::Index>(ops.np())),
          Vector::Zero(static_cast<Eigen::Index>(ops.nq()))};
}

void check_sizes(const StageRHS& rhs, const OperatorSet& ops) {
  check_vector(rhs.f, ops.nu(), "rhs f");
  check_vector(rhs.h, ops.np(), "rhs h");
  check_vector(rhs.g, ops.nq(), "rhs g");
}

Vector inverse_pressure_mass(const OperatorSet& ops) { return ops.mass_p.cwiseInverse(); }

double evaluate_energy(const Vector& u, const Vector& q, const StageRHS& rhs,
                       const OperatorSet& ops) {
  check_sizes(rhs, ops);
  check_state(u, q, ops);
  const auto& pr = rhs.params;
  const double s = flux_scale(pr);
  const Vector r = misfit(u, q, rhs, ops);
  const double inertia = u.dot(ops.mass_u * u) / (2.0 * pr.dt * pr.dt);
  const double elastic = 0.5 * pr.theta1 * u.dot(ops.stiffness * u);
  const double darcy = 0.5 * pr.theta1 * s * q.dot(ops.mass_q * q);
  const double storage = 0.5 * pr.theta1 * r.dot(r.cwiseQuotient(ops.mass_p));
  return inertia + elastic + darcy + storage - rhs.f.dot(u) - pr.theta1 * s * rhs.g.dot(q);
}

double energy_difference(const Vector& u1, const Vector& q1, const Vector& u0,
                         const Vector& q0, const StageRHS& rhs, const OperatorSet& ops) {
  check_sizes(rhs, ops);
  check_state(u1, q1, ops);
  check_state(u0, q0, ops);
  const auto& pr = rhs.params;
  const double s = flux_scale(pr);
  const Vector du = u1 - u0, dq = q1 - q0;
  const Vector su = u1 + u0, sq = q1 + q0;
  const Vector dr = -(ops.coupling * du) - s * (ops.divergence * dq);
  const Vector sr = 2.0 * rhs.h - ops.coupling * su - s * (ops.divergence * sq);
  const double inertia = du.dot(ops.mass_u * su) / (2.0 * pr.dt * pr.dt);
  const double elastic = 0.5 * pr.theta1 * du.dot(ops.stiffness * su);
  const double darcy = 0.5 * pr.theta1 * s * dq.dot(ops.mass_q * sq);
  const double storage = 0.5 * pr.theta1 * dr.dot(sr.cwiseQuotient(ops.mass_p));
  return inertia + elastic + darcy + storage - rhs.f.dot(du) - pr.theta1 * s * rhs.g.dot(dq);
}

Vector grad_u(const Vector& u, const Vector& q, const StageRHS& rhs, const OperatorSet& ops) {
  check_sizes(rhs, ops);
  check_state(u, q, ops);
  const auto& pr = rhs.params;
  const Vector p = misfit(u, q, rhs, ops).cwiseQuotient(ops.mass_p);
  return ops.mass_u * u / (pr.dt * pr.dt) + pr.theta1 * (ops.stiffness * u) -
         pr.theta1 * (ops.coupling.transpose() * p) - rhs.f;
}

Vector grad_q(const Vector& u, const Vector& q, const StageRHS& rhs, const OperatorSet& ops) {
  check_sizes(rhs, ops);
  check_state(u, q, ops);
  const auto& pr = rhs.params;
  const double s = flux_scale(pr);
  const Vector p = misfit(u, q, rhs, ops).cwiseQuotient(ops.mass_p);
  return pr.theta1 * s * (ops.mass_q * q - ops.divergence.transpose() * p - rhs.g);
}

Vector recover_pressure(const Vector& u, const Vector& q, const StageRHS& rhs,
                        const OperatorSet& ops) {
  check_sizes(rhs, ops);
  check_state(u, q, ops);
  return misfit(u, q, rhs, ops).cwiseQuotient(ops.mass_p);
}

double triple_norm(const Vector& v, const Vector& w, const OperatorSet& ops,
                   const ThetaParams& params) {
  check_state(v, w, ops);
  const double s = flux_scale(params);
  const Vector r = ops.coupling * v + s * (ops.divergence * w);
  const double sq = v.dot(ops.mass_u * v) / (params.dt * params.dt) +
                    params.theta1 * v.dot(ops.stiffness * v) +
                    params.theta1 * s * w.dot(ops.mass_q * w) +
                    params.theta1 * r.dot(r.cwiseQuotient(ops.mass_p));
  return std::sqrt(std::max(0.0, sq));
}

double mech_norm(const Vector& v, const OperatorSet& ops, const ThetaParams& params) {
  check_vector(v, ops.nu(), "displacement");
  const Vector r = ops.coupling * v;
  const double sq = v.dot(ops.mass_u * v) / (params.dt * params.dt) +
                    params.theta1 * v.dot(ops.stiffness * v) +
                    params.theta1 * r.dot(r.cwiseQuotient(ops.mass_p));
  return std::sqrt(std::max(0.0, sq));
}

double flux_norm(const Vector& w, const OperatorSet& ops, const ThetaParams& params) {
  check_vector(w, ops.nq(), "flux");
  const double s = flux_scale(params);
  const Vector r = s * (ops.divergence * w);
  const double sq = params.theta1 * s * w.dot(ops.mass_q * w) +
                    params.theta1 * r.dot(r.cwiseQuotient(ops.mass_p));
  return std::sqrt(std::max(0.0, sq));
}

EnergyHessian energy_hessian(const OperatorSet& ops, const ThetaParams& params) {
  const double s = flux_scale(params);
  const double t1 = params.theta1;
  const Eigen::DiagonalMatrix<double, Eigen::Dynamic> W(inverse_pressure_mass(ops));
  const SparseMatrix WA = W * ops.coupling;
  const SparseMatrix WD = W * ops.divergence;
  EnergyHessian H;
  H.uu = ops.mass_u / (params.dt * params.dt) + t1 * ops.stiffness +
         t1 * SparseMatrix(ops.coupling.transpose() * WA);
  H.uq = t1 * s * SparseMatrix(ops.coupling.transpose() * WD);
  H.qq = t1 * s * ops.mass_q + t1 * s * s * SparseMatrix(ops.divergence.transpose() * WD);
  // Exact symmetry for the factorizations.
  H.uu = 0.5 * (H.uu + SparseMatrix(H.uu.transpose()));
  H.qq = 0.5 * (H.qq + SparseMatrix(H.qq.transpose()));
  return H;
}

}  // namespace porosplit
