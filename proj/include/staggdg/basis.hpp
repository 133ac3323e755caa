#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

namespace staggdg {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Nodal polynomial basis of degree p on the reference triangle
/// T_ref = {(xi,eta) : xi >= 0, eta >= 0, xi+eta <= 1}.
/// Equispaced nodes; phi_k(node_l) = delta_kl.
class NodalBasis {
 public:
  explicit NodalBasis(int degree);

  int degree() const { return p_; }
  int size() const { return nphi_; }
  const std::vector<Vec2>& nodes() const { return nodes_; }

  // values of all phi_k at a reference point (evaluation outside T_ref is
  // polynomial extrapolation and permitted)
  void eval(const Vec2& xi, double* out) const;
  std::vector<double> eval(const Vec2& xi) const;

  // reference gradients, out is nphi x 2 row-major
  void eval_grad(const Vec2& xi, double* out) const;

 private:
  int p_;
  int nphi_;
  std::vector<Vec2> nodes_;
  std::vector<std::array<int, 2>> mono_;  // monomial exponents (a,b): xi^a eta^b
  Eigen::MatrixXd coeff_;                 // coeff_(m,k): phi_k = sum_m coeff(m,k) xi^am eta^bm
};

/// C0 basis on the reference square [0,1]^2 split along xi+eta=1 into the
/// left sub-triangle (T_ref) and the right one (1-T_ref). Dimension (p+1)^2.
/// Dof ordering: the N_phi left-triangle nodes first (NodalBasis order), then
/// the right-only nodes. Restricted to either side, psi_k is a main basis
/// function through an index permutation (identity map on the left, xi -> 1-xi
/// on the right), so values on the diagonal agree from both sides.
class DualBasis {
 public:
  explicit DualBasis(const NodalBasis& main);

  int degree() const { return p_; }
  int size() const { return npsi_; }
  const NodalBasis& main() const { return *main_; }
  const std::vector<Vec2>& nodes() const { return nodes_; }

  // left_index[k]  = main-basis index of psi_k on the left side, -1 if absent
  // right_index[k] = main-basis index (applied at 1-xi) on the right, -1 if absent
  const std::vector<int>& left_index() const { return left_; }
  const std::vector<int>& right_index() const { return right_; }
  // dofs whose node lies on the diagonal xi+eta=1 (the physical edge trace)
  const std::vector<int>& trace_dofs() const { return trace_; }

  void eval(const Vec2& xi, double* out) const;
  std::vector<double> eval(const Vec2& xi) const;

 private:
  int p_;
  int npsi_;
  const NodalBasis* main_;
  std::vector<Vec2> nodes_;
  std::vector<int> left_, right_, trace_;
};

/// Quadrature rule on the reference triangle (collapsed Gauss) or the unit
/// segment (Gauss-Legendre). Exact for polynomials up to the stated degree.
struct QuadratureRule {
  std::vector<Vec2> points;     // segment rules use points[i].x(), y = 0
  std::vector<double> weights;
  int exactness = 0;
};

enum class QuadDomain { Triangle, Segment };

QuadratureRule quadrature(QuadDomain domain, int exactness);

// Affine reference<->physical maps for a triangle with vertices a,b,c:
// x = a + xi*(b-a) + eta*(c-a).
struct TriMap {
  Vec2 a;
  Mat2 jac;      // d x / d xi
  Mat2 jac_inv;  // d xi / d x
  double det;    // |jac| = 2*area

  TriMap() = default;
  TriMap(const Vec2& v0, const Vec2& v1, const Vec2& v2);
  Vec2 to_physical(const Vec2& xi) const { return a + jac * xi; }
  Vec2 to_reference(const Vec2& x) const { return jac_inv * (x - a); }
};

} // namespace staggdg
