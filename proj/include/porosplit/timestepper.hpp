#pragma once

// Time stepping for the dynamic Biot system. Each step assembles a stage
// right-hand side from the loads and the history and hands it to one of the
// stage solvers. The inertia term uses the three-level second difference;
// the storage equation and the momentum balance use theta-weighted explicit
// parts for theta < 1.

#include "porosplit/coupling.hpp"
#include "porosplit/discretization.hpp"

#include <string>
#include <vector>

namespace porosplit {

enum class ProfileKind { Constant, Ramp, Sinusoid, Step };

/// Scalar time factor of a load.
struct TimeProfile {
  ProfileKind kind = ProfileKind::Constant;
  double duration = 1.0;   // ramp: reaches 1 at t = duration
  double frequency = 1.0;  // sinusoid: sin(2 pi frequency t + phase)
  double phase = 0.0;
  double start = 0.0;      // step: 1 for t >= start

  double operator()(double t) const;
};

/// Spatially constant loads with time profiles. Boundary tractions and
/// drained-boundary pressures come from the BCSpec and are scaled by their
/// profiles.
struct LoadSpec {
  Vec2 body_force = Vec2::Zero();  // N/m^3
  TimeProfile body_force_profile;
  double source = 0.0;             // 1/s
  TimeProfile source_profile;
  Vec2 darcy_force = Vec2::Zero(); // Pa/m
  TimeProfile darcy_force_profile;
  TimeProfile traction_profile;
  TimeProfile pressure_profile;
};

struct TimeGrid {
  double final_time = 1.0;
  int steps = 1;

  double dt() const { return final_time / steps; }
  double time(int n) const { return final_time * n / steps; }
  void validate() const;
};

/// Load functionals at one instant: F on u-dofs, H (element integrals of the
/// source) on p-dofs, G on q-dofs.
struct LoadVectors {
  Vector f, h, g;
};

/// Mesh, spaces, material, operators and loads of one configuration.
struct Problem {
  Mesh mesh;
  BCSpec bc;
  DofMap dofs;
  MaterialField material;
  OperatorSet ops;
  LoadSpec loads;

  static Problem build(Mesh mesh, BCSpec bc, MaterialField material, LoadSpec loads,
                       int quadrature_points = 3);
  LoadVectors loads_at(double t) const;
};

struct History {
  Vector u1;  // u^{n-1}
  Vector u2;  // u^{n-2}
  Vector p1;  // p^{n-1}
  Vector q1;  // q^{n-1}
  double t1 = 0.0;
};

/// u^{n-1} = u0, u^{n-2} = u0 - dt v0, p^{n-1} = p0; q0 defaults to zero.
History init_history(const Vector& u0, const Vector& v0, const Vector& p0, double dt,
                     const Vector& q0 = Vector(), double t0 = 0.0);

StageRHS backward_euler_rhs(const History& hist, const Problem& problem, double t_n, double dt);
StageRHS theta_rhs(const History& hist, const Problem& problem, double t_n, double dt,
                   double theta1, double theta2);

/// Shifts the history by one step.
History advance(const History& hist, const StageState& state, double t_n);

enum class CouplingMethod { Monolithic, UndrainedSplit, AlternatingMinimization };
std::string to_string(CouplingMethod method);
CouplingMethod coupling_method_from_string(const std::string& name);

struct InitialData {
  Vector u0, v0, p0, q0;  // empty means zero
};

struct Trajectory {
  std::vector<double> times;        // t_0 .. t_N
  std::vector<StageState> states;   // states[0] is the initial data
  std::vector<IterationReport> reports;  // one per step; empty records for monolithic
};

struct SchemeParams {
  double theta1 = 1.0;
  double theta2 = 1.0;
};

/// Throws Error(NotConverged) naming the step when an iterative stage solve
/// hits max_outer.
Trajectory run(const TimeGrid& grid, const Problem& problem, const SchemeParams& scheme,
               const SolverSettings& settings, CouplingMethod method,
               const InitialData& init = {});

/// Kinetic + elastic + storage energy of the discrete solution at step n,
/// 1/2 |(u^n - u^{n-1})/dt|_M^2 + 1/2 <K u^n, u^n> + 1/2 c0 |p^n|^2.
double physical_energy(const Vector& u, const Vector& u_prev, const Vector& p,
                       const OperatorSet& ops, double dt);

/// Mean vertical displacement of the top boundary vertices.
double top_displacement(const Problem& problem, const Vector& u);
/// Mean pressure over triangles adjacent to the bottom boundary.
double basal_pressure(const Problem& problem, const Vector& p);

}  // namespace porosplit
