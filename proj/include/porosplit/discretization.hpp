#pragma once

// Structured triangulation of a rectangle and the discrete spaces
//   V_h: continuous piecewise-linear vector displacement,
//   W_h: lowest-order H(div) face elements (one normal flux per edge),
//   Q_h: piecewise-constant pressure,
// together with the sparse operators of the stage problem.

#include "porosplit/model.hpp"

#include <Eigen/Sparse>

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace porosplit {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

enum class BoundarySide { Bottom = 0, Right = 1, Top = 2, Left = 3 };
inline constexpr std::array<BoundarySide, 4> kAllSides = {
    BoundarySide::Bottom, BoundarySide::Right, BoundarySide::Top, BoundarySide::Left};
std::string to_string(BoundarySide side);

struct Triangle {
  std::array<int, 3> vertices;  // counter-clockwise
  std::array<int, 3> edges;     // edges[i] is opposite vertices[i]
  /// +1 when the global orientation of edges[i] points out of the triangle.
  std::array<int, 3> edge_signs;
};

struct Edge {
  std::array<int, 2> vertices;  // vertices[0] < vertices[1]
  std::optional<BoundarySide> side;
  std::array<int, 2> triangles{-1, -1};
};

class Mesh {
 public:
  /// Splits every cell of an nx-by-ny grid on [0,Lx]x[0,Ly] along the
  /// diagonal from its lower-left to its upper-right corner.
  static Mesh rectangle(int nx, int ny, double lx, double ly);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double lx() const { return lx_; }
  double ly() const { return ly_; }

  const std::vector<Vec2>& vertices() const { return vertices_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  std::size_t triangle_count() const { return triangles_.size(); }

  double area(std::size_t t) const { return areas_[t]; }
  double signed_area(std::size_t t) const;
  double edge_length(std::size_t e) const;
  /// Unit normal of the global edge orientation: the direction vector
  /// (v1 - v0) rotated clockwise.
  Vec2 edge_normal(std::size_t e) const;
  Vec2 centroid(std::size_t t) const;

 private:
  int nx_ = 0, ny_ = 0;
  double lx_ = 0, ly_ = 0;
  std::vector<Vec2> vertices_;
  std::vector<Edge> edges_;
  std::vector<Triangle> triangles_;
  std::vector<double> areas_;
};

enum class DisplacementKind { Fixed, Roller, Free, Traction };
enum class FlowKind { Impermeable, Drained };

struct SideCondition {
  DisplacementKind displacement = DisplacementKind::Free;
  /// Traction vector (Pa), scaled in time by the traction profile.
  Vec2 traction = Vec2::Zero();
  FlowKind flow = FlowKind::Impermeable;
  /// Boundary pressure (Pa) of a drained side, scaled by the pressure profile.
  double pressure = 0.0;
};

/// One condition per side of the rectangle. A roller fixes the displacement
/// component normal to its side.
struct BCSpec {
  std::array<SideCondition, 4> sides;
  SideCondition& operator[](BoundarySide s) { return sides[static_cast<int>(s)]; }
  const SideCondition& operator[](BoundarySide s) const {
    return sides[static_cast<int>(s)];
  }
};

/// Reduced numbering. u-dofs are (vertex, component) pairs that are not
/// essential; q-dofs are edges with free normal flux; p-dofs are triangles.
struct DofMap {
  std::vector<int> u_index;  // size 2 * vertices, -1 when eliminated
  std::vector<int> q_index;  // size edges, -1 when eliminated
  std::size_t nu = 0, nq = 0, np = 0;
  std::vector<std::string> warnings;

  std::size_t u_offset() const { return 0; }
  std::size_t q_offset() const { return nu; }
  std::size_t p_offset() const { return nu + nq; }
  std::size_t total() const { return nu + nq + np; }
};

DofMap build_spaces(const Mesh& mesh, const BCSpec& bc);

/// Integration rule on the reference triangle, barycentric points.
struct QuadratureRule {
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;  // sum to 1 (multiply by the area)
};
QuadratureRule triangle_rule(int points);

/// Sparse operators on the reduced spaces. Symmetric blocks store both
/// triangles.
struct OperatorSet {
  SparseMatrix mass_u;        // rho-weighted vector mass, nu x nu
  SparseMatrix stiffness;     // <C eps(u), eps(v)>
  SparseMatrix stabilization; // <(alpha x alpha / c0) eps(u), eps(v)>
  SparseMatrix mass_q;        // <kappa^-1 q, w>
  SparseMatrix coupling;      // np x nu, element integrals of alpha : eps(u)
  SparseMatrix divergence;    // np x nq, element integrals of div q
  Vector mass_p;              // c0 |T| per element
  Vector areas;               // |T| per element

  std::size_t nu() const { return static_cast<std::size_t>(mass_u.rows()); }
  std::size_t nq() const { return static_cast<std::size_t>(mass_q.rows()); }
  std::size_t np() const { return static_cast<std::size_t>(mass_p.size()); }
};

/// Assembles every operator. `quadrature_points` selects the rule used for
/// the quadratic integrands (vector mass, flux mass); 3 and 7 are exact.
OperatorSet assemble_operators(const Mesh& mesh, const DofMap& dofs,
                               const MaterialField& material, int quadrature_points = 3);

/// Strain-displacement matrix of a P1 triangle in Voigt form; columns are
/// (u_x, u_y) of the three vertices.
Eigen::Matrix<double, 3, 6> strain_matrix(const Mesh& mesh, std::size_t triangle);

/// Value of the face basis function of local edge i at point x.
Vec2 face_basis(const Mesh& mesh, std::size_t triangle, int local_edge, const Vec2& x);

/// Compares D q per element with the boundary flux of q for `samples` random
/// fluxes and returns the largest absolute difference.
double divergence_check(const Mesh& mesh, const DofMap& dofs, const SparseMatrix& divergence,
                        int samples = 20, unsigned seed = 1);

/// Scatter a full per-edge flux (normal components along the global edge
/// orientation) into reduced q-dofs and back.
Vector restrict_flux(const DofMap& dofs, const Vector& edge_flux);
Vector extend_flux(const DofMap& dofs, const Vector& q);
Vector extend_displacement(const DofMap& dofs, const Vector& u);

}  // namespace porosplit
