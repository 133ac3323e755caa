#pragma once

// Independent physical-space evaluators and quadrature oracles used by the
// operator tests and the acceptance suite. These deliberately avoid the
// reference-operator path: basis functions are evaluated through the physical
// maps and integrals are done with generic rules mapped to physical cells.

#include <array>
#include <random>
#include <vector>

#include "staggdg/basis.hpp"
#include "staggdg/mesh.hpp"
#include "staggdg/operators.hpp"

namespace staggdg::testing {

// physical main basis phi_k^{(i)}(x)
inline void phys_main(const StaggeredMesh& m, const NodalBasis& nb, int i, const Vec2& x,
                      double* out) {
  nb.eval(m.elem_map(i).to_reference(x), out);
}

inline void phys_main_grad(const StaggeredMesh& m, const NodalBasis& nb, int i, const Vec2& x,
                           double* out /* nphi x 2 */) {
  std::vector<double> g(2 * nb.size());
  nb.eval_grad(m.elem_map(i).to_reference(x), g.data());
  const Mat2 J = m.elem_map(i).jac_inv;  // d xi / d x
  for (int k = 0; k < nb.size(); ++k) {
    out[2 * k] = J(0, 0) * g[2 * k] + J(1, 0) * g[2 * k + 1];
    out[2 * k + 1] = J(0, 1) * g[2 * k] + J(1, 1) * g[2 * k + 1];
  }
}

// physical dual basis psi_k^{(j)}(x) for x known to lie in sub-triangle T_{i,j}
inline void phys_dual(const StaggeredMesh& m, const DualBasis& db, int i, int j, const Vec2& x,
                      double* out) {
  Vec2 zeta = m.dual_side_map(i, j).to_reference(x);
  if (m.left_of(j) != i) zeta = Vec2(1.0, 1.0) - zeta;
  db.eval(zeta, out);
}

// D_{i,j} component c by direct quadrature of its definition
inline MatrixXd oracle_divergence(const StaggeredMesh& m, const ReferenceOperatorSet& R, int i,
                                  int j, int c) {
  const auto& nb = R.main_basis();
  const auto& db = R.dual_basis();
  const int np = nb.size(), nq = db.size();
  MatrixXd out = MatrixXd::Zero(np, nq);
  const auto tri = quadrature(QuadDomain::Triangle, 2 * R.degree() + 2);
  const auto seg = quadrature(QuadDomain::Segment, 2 * R.degree() + 2);
  const TriMap sub = m.dual_side_map(i, j);
  std::vector<double> phi(np), psi(nq), grad(2 * np);
  // volume: - int_{T_ij} d_c phi_k psi_l
  for (std::size_t g = 0; g < tri.points.size(); ++g) {
    const Vec2 x = sub.to_physical(tri.points[g]);
    const double w = tri.weights[g] * sub.det;
    phys_main_grad(m, nb, i, x, grad.data());
    phys_dual(m, db, i, j, x, psi.data());
    for (int k = 0; k < np; ++k)
      for (int l = 0; l < nq; ++l) out(k, l) -= w * grad[2 * k + c] * psi[l];
  }
  // line: + int_{Gamma_j} phi_k psi_l sigma n_c (edge in i's frame)
  Vec2 e1 = m.edge_node(j, 0), e2 = m.edge_node(j, 1);
  if (m.right_of(j) == i) {
    e1 += m.shift(j);
    e2 += m.shift(j);
  }
  const double sig = m.sigma(i, j);
  const double nc = m.edge_normal(j)[c];
  for (std::size_t g = 0; g < seg.points.size(); ++g) {
    const Vec2 x = e1 + seg.points[g].x() * (e2 - e1);
    const double w = seg.weights[g] * m.edge_length(j);
    phys_main(m, nb, i, x, phi.data());
    phys_dual(m, db, i, j, x, psi.data());
    for (int k = 0; k < np; ++k)
      for (int l = 0; l < nq; ++l) out(k, l) += w * sig * nc * phi[k] * psi[l];
  }
  return out;
}

// Q_{i,j} component c by direct quadrature of its definition
inline MatrixXd oracle_gradient(const StaggeredMesh& m, const ReferenceOperatorSet& R, int i,
                                int j, int c) {
  const auto& nb = R.main_basis();
  const auto& db = R.dual_basis();
  const int np = nb.size(), nq = db.size();
  MatrixXd out = MatrixXd::Zero(nq, np);
  const auto tri = quadrature(QuadDomain::Triangle, 2 * R.degree() + 2);
  const auto seg = quadrature(QuadDomain::Segment, 2 * R.degree() + 2);
  const TriMap sub = m.dual_side_map(i, j);
  std::vector<double> phi(np), psi(nq), grad(2 * np);
  for (std::size_t g = 0; g < tri.points.size(); ++g) {
    const Vec2 x = sub.to_physical(tri.points[g]);
    const double w = tri.weights[g] * sub.det;
    phys_main_grad(m, nb, i, x, grad.data());
    phys_dual(m, db, i, j, x, psi.data());
    for (int k = 0; k < nq; ++k)
      for (int l = 0; l < np; ++l) out(k, l) += w * psi[k] * grad[2 * l + c];
  }
  Vec2 e1 = m.edge_node(j, 0), e2 = m.edge_node(j, 1);
  if (m.right_of(j) == i) {
    e1 += m.shift(j);
    e2 += m.shift(j);
  }
  const double sig = m.sigma(i, j);
  const double nc = m.edge_normal(j)[c];
  for (std::size_t g = 0; g < seg.points.size(); ++g) {
    const Vec2 x = e1 + seg.points[g].x() * (e2 - e1);
    const double w = seg.weights[g] * m.edge_length(j);
    phys_main(m, nb, i, x, phi.data());
    phys_dual(m, db, i, j, x, psi.data());
    for (int k = 0; k < nq; ++k)
      for (int l = 0; l < np; ++l) out(k, l) -= w * sig * nc * psi[k] * phi[l];
  }
  return out;
}

inline MatrixXd oracle_coupling(const StaggeredMesh& m, const ReferenceOperatorSet& R, int i,
                                int j) {
  const auto& nb = R.main_basis();
  const auto& db = R.dual_basis();
  const int np = nb.size(), nq = db.size();
  MatrixXd out = MatrixXd::Zero(nq, np);
  const auto tri = quadrature(QuadDomain::Triangle, 2 * R.degree() + 2);
  const TriMap sub = m.dual_side_map(i, j);
  std::vector<double> phi(np), psi(nq);
  for (std::size_t g = 0; g < tri.points.size(); ++g) {
    const Vec2 x = sub.to_physical(tri.points[g]);
    const double w = tri.weights[g] * sub.det;
    phys_main(m, nb, i, x, phi.data());
    phys_dual(m, db, i, j, x, psi.data());
    for (int k = 0; k < nq; ++k)
      for (int l = 0; l < np; ++l) out(k, l) += w * psi[k] * phi[l];
  }
  return out;
}

inline MatrixXd oracle_mass_dual(const StaggeredMesh& m, const ReferenceOperatorSet& R, int j) {
  const auto& db = R.dual_basis();
  const int nq = db.size();
  MatrixXd out = MatrixXd::Zero(nq, nq);
  const auto tri = quadrature(QuadDomain::Triangle, 2 * R.degree() + 2);
  std::vector<double> psi(nq);
  for (int side = 0; side < 2; ++side) {
    const int i = side == 0 ? m.left_of(j) : m.right_of(j);
    if (i < 0) continue;
    const TriMap sub = m.dual_side_map(i, j);
    for (std::size_t g = 0; g < tri.points.size(); ++g) {
      const Vec2 x = sub.to_physical(tri.points[g]);
      const double w = tri.weights[g] * sub.det;
      phys_dual(m, db, i, j, x, psi.data());
      for (int k = 0; k < nq; ++k)
        for (int l = 0; l < nq; ++l) out(k, l) += w * psi[k] * psi[l];
    }
  }
  if (m.is_boundary(j))
    for (int k = R.nphi(); k < nq; ++k) out(k, k) = 1.0;  // padding convention
  return out;
}

// helper meshes shared by tests
inline StaggeredMesh jiggled_square(int n, unsigned seed, bool px = false, bool py = false) {
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> tris;
  generate_rect_mesh(0, 1, 0, 1, n, n, nodes, tris);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-0.25 / n, 0.25 / n);
  for (auto& p : nodes) {
    const bool bx = p.x() < 1e-12 || p.x() > 1 - 1e-12;
    const bool by = p.y() < 1e-12 || p.y() > 1 - 1e-12;
    if (bx || by) continue;  // keep the boundary intact so periodic faces pair
    p.x() += u(rng);
    p.y() += u(rng);
  }
  StaggeredMesh::BuildOptions o;
  o.periodic_x = px;
  o.periodic_y = py;
  return StaggeredMesh::build(nodes, tris, o);
}

} // namespace staggdg::testing
