#pragma once

// Helpers shared by the unit tests: random data, dense conversions and a
// brute-force dense form of the stage energy built directly from its
// definition.

#include "porosplit/coupling.hpp"
#include "porosplit/energy.hpp"
#include "porosplit/timestepper.hpp"

#include <Eigen/Dense>

#include <random>

namespace porosplit::test {

using Dense = Eigen::MatrixXd;

inline Dense dense(const SparseMatrix& m) { return Dense(m); }

class Rng {
 public:
  explicit Rng(unsigned seed = 7) : gen_(seed) {}
  double uniform(double a = -1.0, double b = 1.0) {
    return std::uniform_real_distribution<double>(a, b)(gen_);
  }
  Vector vec(std::size_t n, double scale = 1.0) {
    Vector v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = scale * uniform();
    return v;
  }
  Mat2 sym2() {
    Mat2 m;
    m << uniform(), uniform(), 0, uniform();
    m(1, 0) = m(0, 1);
    return m;
  }
  Mat2 spd2() {
    Eigen::Matrix2d b = Eigen::Matrix2d::NullaryExpr([&] { return uniform(); });
    return b * b.transpose() + 0.5 * Mat2::Identity();
  }
  Mat3 spd3() {
    Eigen::Matrix3d b = Eigen::Matrix3d::NullaryExpr([&] { return uniform(); });
    return b * b.transpose() + 0.5 * Mat3::Identity();
  }
  std::mt19937& engine() { return gen_; }

 private:
  std::mt19937 gen_;
};

inline MaterialRecord isotropic(double mu = 1, double lambda = 1, double alpha = 1,
                                double c0 = 1, double kappa = 1, double rho = 1) {
  MaterialRecord m;
  m.rho = rho;
  m.c0 = c0;
  m.elasticity = isotropic_elasticity(mu, lambda);
  m.biot.value = alpha * Mat2::Identity();
  m.permeability.value = kappa * Mat2::Identity();
  return m;
}

/// Everything free and drained: no dof is eliminated.
inline BCSpec open_bc() {
  BCSpec bc;
  for (auto s : kAllSides) bc[s].flow = FlowKind::Drained;
  return bc;
}

/// Bottom fixed, rollers on the sides, drained top.
inline BCSpec column_bc() {
  BCSpec bc;
  bc[BoundarySide::Bottom].displacement = DisplacementKind::Fixed;
  bc[BoundarySide::Left].displacement = DisplacementKind::Roller;
  bc[BoundarySide::Right].displacement = DisplacementKind::Roller;
  bc[BoundarySide::Top].displacement = DisplacementKind::Traction;
  bc[BoundarySide::Top].traction = Vec2(0.0, -1.0);
  bc[BoundarySide::Top].flow = FlowKind::Drained;
  return bc;
}

inline Problem make_problem(int nx, int ny, const MaterialRecord& mat, const BCSpec& bc,
                            LoadSpec loads = {}, double lx = 1.0, double ly = 1.0) {
  return Problem::build(Mesh::rectangle(nx, ny, lx, ly), bc, MaterialField::homogeneous(mat),
                        loads);
}

inline StageRHS random_rhs(const OperatorSet& ops, const ThetaParams& params, Rng& rng) {
  return {rng.vec(ops.nu()), rng.vec(ops.np()), rng.vec(ops.nq()), params};
}

inline StageState random_state(const OperatorSet& ops, Rng& rng, double scale = 1.0) {
  return {rng.vec(ops.nu(), scale), rng.vec(ops.np(), scale), rng.vec(ops.nq(), scale)};
}

/// E(x) = 1/2 x^T H x - b^T x + c on x = (u, q), expanded by hand from the
/// definition of the stage energy.
struct DenseEnergy {
  Dense H;
  Vector b;
  double c = 0;
  std::size_t nu = 0, nq = 0;

  double operator()(const Vector& u, const Vector& q) const {
    Vector x(H.rows());
    x << u, q;
    return 0.5 * x.dot(H * x) - b.dot(x) + c;
  }
  Vector minimizer() const { return H.ldlt().solve(b); }
};

inline DenseEnergy dense_energy(const OperatorSet& ops, const StageRHS& rhs) {
  const double t1 = rhs.params.theta1;
  const double s = rhs.params.theta2 * rhs.params.dt;
  const double dt2 = rhs.params.dt * rhs.params.dt;
  const Dense M = dense(ops.mass_u), K = dense(ops.stiffness), Mk = dense(ops.mass_q);
  const Dense A = dense(ops.coupling), D = dense(ops.divergence);
  Dense W = Dense::Zero(A.rows(), A.rows());
  for (Eigen::Index e = 0; e < W.rows(); ++e) W(e, e) = 1.0 / ops.mass_p[e];

  DenseEnergy E;
  E.nu = ops.nu();
  E.nq = ops.nq();
  const auto nu = static_cast<Eigen::Index>(E.nu), nq = static_cast<Eigen::Index>(E.nq);
  E.H = Dense::Zero(nu + nq, nu + nq);
  E.H.topLeftCorner(nu, nu) = M / dt2 + t1 * K + t1 * A.transpose() * W * A;
  E.H.topRightCorner(nu, nq) = t1 * s * A.transpose() * W * D;
  E.H.bottomLeftCorner(nq, nu) = E.H.topRightCorner(nu, nq).transpose();
  E.H.bottomRightCorner(nq, nq) = t1 * s * Mk + t1 * s * s * D.transpose() * W * D;
  E.b.resize(nu + nq);
  E.b << rhs.f + t1 * A.transpose() * W * rhs.h, t1 * s * rhs.g + t1 * s * D.transpose() * W * rhs.h;
  E.c = 0.5 * t1 * rhs.h.dot(W * rhs.h);
  return E;
}

inline double rel(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

inline double rel(const Vector& a, const Vector& b) {
  const double scale = std::max(a.norm(), b.norm());
  return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

}  // namespace porosplit::test
