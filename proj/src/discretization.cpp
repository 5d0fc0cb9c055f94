#include "porosplit/discretization.hpp"

#include "porosplit/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace porosplit {

std::string to_string(BoundarySide side) {
  switch (side) {
    case BoundarySide::Bottom: return "bottom";
    case BoundarySide::Right: return "right";
    case BoundarySide::Top: return "top";
    case BoundarySide::Left: return "left";
  }
  return "?";
}

Mesh Mesh::rectangle(int nx, int ny, double lx, double ly) {
  if (nx < 1 || ny < 1) throw ConfigError("mesh: nx and ny must be at least 1");
  if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly))
    throw ConfigError("mesh: extents Lx and Ly must be positive");

  Mesh m;
  m.nx_ = nx;
  m.ny_ = ny;
  m.lx_ = lx;
  m.ly_ = ly;

  const int row = nx + 1;
  m.vertices_.reserve(static_cast<std::size_t>(row) * (ny + 1));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      m.vertices_.emplace_back(lx * i / nx, ly * j / ny);

  std::vector<std::array<int, 3>> tris;
  tris.reserve(2 * static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int a = j * row + i, b = a + 1, c = a + row + 1, d = a + row;
      tris.push_back({a, b, c});
      tris.push_back({a, c, d});
    }
  }

  // Lexicographic edge numbering over (low, high) vertex pairs.
  std::map<std::pair<int, int>, int> edge_id;
  for (const auto& t : tris)
    for (int k = 0; k < 3; ++k) {
      const int v0 = t[(k + 1) % 3], v1 = t[(k + 2) % 3];
      edge_id.emplace(std::minmax(v0, v1), 0);
    }
  int next = 0;
  m.edges_.reserve(edge_id.size());
  for (auto& [key, id] : edge_id) {
    id = next++;
    Edge e;
    e.vertices = {key.first, key.second};
    const int i0 = key.first % row, j0 = key.first / row;
    const int i1 = key.second % row, j1 = key.second / row;
    if (j0 == 0 && j1 == 0) e.side = BoundarySide::Bottom;
    else if (j0 == ny && j1 == ny) e.side = BoundarySide::Top;
    else if (i0 == 0 && i1 == 0) e.side = BoundarySide::Left;
    else if (i0 == nx && i1 == nx) e.side = BoundarySide::Right;
    m.edges_.push_back(e);
  }

  m.triangles_.reserve(tris.size());
  m.areas_.reserve(tris.size());
  for (std::size_t t = 0; t < tris.size(); ++t) {
    Triangle tri;
    tri.vertices = tris[t];
    for (int k = 0; k < 3; ++k) {
      const int from = tris[t][(k + 1) % 3], to = tris[t][(k + 2) % 3];
      const int id = edge_id.at(std::minmax(from, to));
      tri.edges[k] = id;
      // Counter-clockwise traversal from -> to has the outward normal on its
      // right, which is the global normal iff from < to.
      tri.edge_signs[k] = from < to ? 1 : -1;
      auto& inc = m.edges_[id].triangles;
      (inc[0] < 0 ? inc[0] : inc[1]) = static_cast<int>(t);
    }
    m.triangles_.push_back(tri);
    m.areas_.push_back(0.0);
    m.areas_.back() = m.signed_area(t);
  }
  return m;
}

double Mesh::signed_area(std::size_t t) const {
  const auto& v = triangles_[t].vertices;
  const Vec2 a = vertices_[v[1]] - vertices_[v[0]];
  const Vec2 b = vertices_[v[2]] - vertices_[v[0]];
  return 0.5 * (a.x() * b.y() - a.y() * b.x());
}

double Mesh::edge_length(std::size_t e) const {
  const auto& v = edges_[e].vertices;
  return (vertices_[v[1]] - vertices_[v[0]]).norm();
}

Vec2 Mesh::edge_normal(std::size_t e) const {
  const auto& v = edges_[e].vertices;
  const Vec2 d = vertices_[v[1]] - vertices_[v[0]];
  return Vec2(d.y(), -d.x()) / d.norm();
}

Vec2 Mesh::centroid(std::size_t t) const {
  const auto& v = triangles_[t].vertices;
  return (vertices_[v[0]] + vertices_[v[1]] + vertices_[v[2]]) / 3.0;
}

DofMap build_spaces(const Mesh& mesh, const BCSpec& bc) {
  if (mesh.triangle_count() == 0) throw ConfigError("mesh has no triangles");

  std::vector<char> fixed_u(2 * mesh.vertex_count(), 0);
  std::vector<char> fixed_q(mesh.edge_count(), 0);
  for (std::size_t e = 0; e < mesh.edge_count(); ++e) {
    const auto& edge = mesh.edges()[e];
    if (!edge.side) continue;
    const SideCondition& cond = bc[*edge.side];
    const bool horizontal =
        *edge.side == BoundarySide::Bottom || *edge.side == BoundarySide::Top;
    for (int v : edge.vertices) {
      if (cond.displacement == DisplacementKind::Fixed) {
        fixed_u[2 * v] = fixed_u[2 * v + 1] = 1;
      } else if (cond.displacement == DisplacementKind::Roller) {
        fixed_u[2 * v + (horizontal ? 1 : 0)] = 1;
      }
    }
    if (cond.flow == FlowKind::Impermeable) fixed_q[e] = 1;
  }

  DofMap d;
  d.u_index.assign(fixed_u.size(), -1);
  for (std::size_t i = 0; i < fixed_u.size(); ++i)
    if (!fixed_u[i]) d.u_index[i] = static_cast<int>(d.nu++);
  d.q_index.assign(fixed_q.size(), -1);
  for (std::size_t e = 0; e < fixed_q.size(); ++e)
    if (!fixed_q[e]) d.q_index[e] = static_cast<int>(d.nq++);
  d.np = mesh.triangle_count();

  const bool any_fixed = std::any_of(fixed_u.begin(), fixed_u.end(), [](char c) { return c; });
  if (!any_fixed)
    d.warnings.push_back("singular mechanics operator compensated by mass term");
  return d;
}

QuadratureRule triangle_rule(int points) {
  QuadratureRule r;
  switch (points) {
    case 1:
      r.points = {{1.0 / 3, 1.0 / 3, 1.0 / 3}};
      r.weights = {1.0};
      break;
    case 3:
      // edge midpoints, exact for quadratics
      r.points = {{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}};
      r.weights = {1.0 / 3, 1.0 / 3, 1.0 / 3};
      break;
    case 7: {
      // degree 5
      const double a1 = 0.059715871789770, b1 = 0.470142064105115;
      const double a2 = 0.797426985353087, b2 = 0.101286507323456;
      const double w1 = 0.132394152788506, w2 = 0.125939180544827;
      r.points = {{1.0 / 3, 1.0 / 3, 1.0 / 3},
                  {a1, b1, b1}, {b1, a1, b1}, {b1, b1, a1},
                  {a2, b2, b2}, {b2, a2, b2}, {b2, b2, a2}};
      r.weights = {0.225, w1, w1, w1, w2, w2, w2};
      break;
    }
    default:
      throw ConfigError("unsupported quadrature rule: " + std::to_string(points) + " points");
  }
  return r;
}

Eigen::Matrix<double, 3, 6> strain_matrix(const Mesh& mesh, std::size_t t) {
  const auto& v = mesh.triangles()[t].vertices;
  const auto& X = mesh.vertices();
  const double twice_area = 2.0 * mesh.area(t);
  constexpr double r2 = 0.70710678118654752440;  // sqrt(2)/2
  Eigen::Matrix<double, 3, 6> B = Eigen::Matrix<double, 3, 6>::Zero();
  for (int k = 0; k < 3; ++k) {
    const Vec2& p1 = X[v[(k + 1) % 3]];
    const Vec2& p2 = X[v[(k + 2) % 3]];
    const double dx = (p1.y() - p2.y()) / twice_area;  // d(lambda_k)/dx
    const double dy = (p2.x() - p1.x()) / twice_area;  // d(lambda_k)/dy
    B(0, 2 * k) = dx;
    B(1, 2 * k + 1) = dy;
    B(2, 2 * k) = r2 * dy;
    B(2, 2 * k + 1) = r2 * dx;
  }
  return B;
}

Vec2 face_basis(const Mesh& mesh, std::size_t t, int i, const Vec2& x) {
  const auto& tri = mesh.triangles()[t];
  const Vec2& opposite = mesh.vertices()[tri.vertices[i]];
  const double scale =
      tri.edge_signs[i] * mesh.edge_length(tri.edges[i]) / (2.0 * mesh.area(t));
  return scale * (x - opposite);
}

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

SparseMatrix from_triplets(std::size_t rows, std::size_t cols, const Triplets& t) {
  SparseMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

Vec2 point_at(const Mesh& mesh, std::size_t t, const std::array<double, 3>& bary) {
  const auto& v = mesh.triangles()[t].vertices;
  const auto& X = mesh.vertices();
  return bary[0] * X[v[0]] + bary[1] * X[v[1]] + bary[2] * X[v[2]];
}

}  // namespace

OperatorSet assemble_operators(const Mesh& mesh, const DofMap& dofs,
                               const MaterialField& material, int quadrature_points) {
  const std::size_t nt = mesh.triangle_count();
  if (dofs.np != nt || dofs.u_index.size() != 2 * mesh.vertex_count() ||
      dofs.q_index.size() != mesh.edge_count())
    throw SizeMismatchError("dof map does not match mesh");
  require_valid_material(material, nt);
  const QuadratureRule rule = triangle_rule(quadrature_points);

  Triplets tm, tk, ts, tq, ta, td;
  OperatorSet ops;
  ops.mass_p.resize(static_cast<Eigen::Index>(nt));
  ops.areas.resize(static_cast<Eigen::Index>(nt));

  for (std::size_t t = 0; t < nt; ++t) {
    const MaterialRecord& mat = material.at(t);
    const Triangle& tri = mesh.triangles()[t];
    const double area = mesh.area(t);
    ops.areas[t] = area;
    ops.mass_p[t] = mat.c0 * area;

    std::array<int, 6> u_dof;
    for (int k = 0; k < 3; ++k) {
      u_dof[2 * k] = dofs.u_index[2 * tri.vertices[k]];
      u_dof[2 * k + 1] = dofs.u_index[2 * tri.vertices[k] + 1];
    }
    std::array<int, 3> q_dof;
    for (int k = 0; k < 3; ++k) q_dof[k] = dofs.q_index[tri.edges[k]];

    // Vector mass: scalar P1 mass per component.
    Mat3 scalar_mass = Mat3::Zero();
    for (std::size_t g = 0; g < rule.points.size(); ++g) {
      const auto& l = rule.points[g];
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) scalar_mass(a, b) += rule.weights[g] * l[a] * l[b];
    }
    scalar_mass *= mat.rho * area;

    const auto B = strain_matrix(mesh, t);
    const Eigen::Matrix<double, 6, 6> Ke = area * B.transpose() * mat.elasticity.voigt * B;
    const Eigen::Matrix<double, 1, 6> aB = to_voigt(mat.biot.value).transpose() * B;
    const Eigen::Matrix<double, 6, 6> Se = (area / mat.c0) * aB.transpose() * aB;

    for (int a = 0; a < 6; ++a) {
      if (u_dof[a] < 0) continue;
      for (int b = 0; b < 6; ++b) {
        if (u_dof[b] < 0) continue;
        if (a % 2 == b % 2) tm.emplace_back(u_dof[a], u_dof[b], scalar_mass(a / 2, b / 2));
        tk.emplace_back(u_dof[a], u_dof[b], Ke(a, b));
        ts.emplace_back(u_dof[a], u_dof[b], Se(a, b));
      }
      ta.emplace_back(static_cast<int>(t), u_dof[a], area * aB(a));
    }

    const Mat2 k_inv = mat.permeability.value.inverse();
    Mat3 flux_mass = Mat3::Zero();
    for (std::size_t g = 0; g < rule.points.size(); ++g) {
      const Vec2 x = point_at(mesh, t, rule.points[g]);
      std::array<Vec2, 3> phi;
      for (int i = 0; i < 3; ++i) phi[i] = face_basis(mesh, t, i, x);
      for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j)
          flux_mass(i, j) += rule.weights[g] * phi[i].dot(k_inv * phi[j]);
    }
    flux_mass *= area;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < i; ++j) flux_mass(i, j) = flux_mass(j, i);

    for (int i = 0; i < 3; ++i) {
      if (q_dof[i] < 0) continue;
      for (int j = 0; j < 3; ++j)
        if (q_dof[j] >= 0) tq.emplace_back(q_dof[i], q_dof[j], flux_mass(i, j));
      td.emplace_back(static_cast<int>(t), q_dof[i],
                      tri.edge_signs[i] * mesh.edge_length(tri.edges[i]));
    }
  }

  ops.mass_u = from_triplets(dofs.nu, dofs.nu, tm);
  ops.stiffness = from_triplets(dofs.nu, dofs.nu, tk);
  ops.stabilization = from_triplets(dofs.nu, dofs.nu, ts);
  ops.mass_q = from_triplets(dofs.nq, dofs.nq, tq);
  ops.coupling = from_triplets(nt, dofs.nu, ta);
  ops.divergence = from_triplets(nt, dofs.nq, td);
  return ops;
}

double divergence_check(const Mesh& mesh, const DofMap& dofs, const SparseMatrix& divergence,
                        int samples, unsigned seed) {
  // Two-point Gauss rule along each edge; the normal trace is constant, so
  // this is exact.
  constexpr double g = 0.21132486540518711775;  // (1 - 1/sqrt(3)) / 2
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    Vector q(static_cast<Eigen::Index>(dofs.nq));
    for (Eigen::Index i = 0; i < q.size(); ++i) q[i] = dist(rng);
    const Vector dq = divergence * q;
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
      const Triangle& tri = mesh.triangles()[t];
      double boundary_flux = 0.0;
      for (int k = 0; k < 3; ++k) {
        const Vec2& a = mesh.vertices()[tri.vertices[(k + 1) % 3]];
        const Vec2& b = mesh.vertices()[tri.vertices[(k + 2) % 3]];
        const Vec2 d = b - a;
        const Vec2 n_out = Vec2(d.y(), -d.x()) / d.norm();
        for (double s_param : {g, 1.0 - g}) {
          const Vec2 x = a + s_param * d;
          Vec2 value = Vec2::Zero();
          for (int i = 0; i < 3; ++i) {
            const int dof = dofs.q_index[tri.edges[i]];
            if (dof >= 0) value += q[dof] * face_basis(mesh, t, i, x);
          }
          boundary_flux += 0.5 * d.norm() * value.dot(n_out);
        }
      }
      worst = std::max(worst, std::abs(dq[static_cast<Eigen::Index>(t)] - boundary_flux));
    }
  }
  return worst;
}

Vector restrict_flux(const DofMap& dofs, const Vector& edge_flux) {
  if (static_cast<std::size_t>(edge_flux.size()) != dofs.q_index.size())
    throw SizeMismatchError("edge flux size does not match edge count");
  Vector q = Vector::Zero(static_cast<Eigen::Index>(dofs.nq));
  for (std::size_t e = 0; e < dofs.q_index.size(); ++e)
    if (dofs.q_index[e] >= 0) q[dofs.q_index[e]] = edge_flux[static_cast<Eigen::Index>(e)];
  return q;
}

Vector extend_flux(const DofMap& dofs, const Vector& q) {
  if (static_cast<std::size_t>(q.size()) != dofs.nq)
    throw SizeMismatchError("flux vector size does not match q-dofs");
  Vector full = Vector::Zero(static_cast<Eigen::Index>(dofs.q_index.size()));
  for (std::size_t e = 0; e < dofs.q_index.size(); ++e)
    if (dofs.q_index[e] >= 0) full[static_cast<Eigen::Index>(e)] = q[dofs.q_index[e]];
  return full;
}

Vector extend_displacement(const DofMap& dofs, const Vector& u) {
  if (static_cast<std::size_t>(u.size()) != dofs.nu)
    throw SizeMismatchError("displacement vector size does not match u-dofs");
  Vector full = Vector::Zero(static_cast<Eigen::Index>(dofs.u_index.size()));
  for (std::size_t i = 0; i < dofs.u_index.size(); ++i)
    if (dofs.u_index[i] >= 0) full[static_cast<Eigen::Index>(i)] = u[dofs.u_index[i]];
  return full;
}

}  // namespace porosplit
