#pragma once

#include <Eigen/Dense>

#include "staggdg/basis.hpp"
#include "staggdg/fields.hpp"
#include "staggdg/mesh.hpp"

namespace staggdg {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Element-independent reference matrices: mass matrices, the 12 reference
/// divergence/gradient operators (line + volume, 3 local edges x 2 sides),
/// coupling matrices, quadrature tables and basis value caches. Everything an
/// operator application needs besides per-element geometry. Immutable.
class ReferenceOperatorSet {
 public:
  explicit ReferenceOperatorSet(int degree);

  int degree() const { return p_; }
  int nphi() const { return main_.size(); }
  int npsi() const { return dual_.size(); }
  const NodalBasis& main_basis() const { return main_; }
  const DualBasis& dual_basis() const { return dual_; }

  const MatrixXd& mass_main_ref() const { return Mref_; }          // N_phi x N_phi
  const MatrixXd& mass_main_ref_inv() const { return Mref_inv_; }
  const MatrixXd& mass_dual_L() const { return MhatL_; }           // N_psi x N_psi
  const MatrixXd& mass_dual_R() const { return MhatR_; }

  // alpha in {0,1,2} (local edge slot), side 0=L, 1=R
  const MatrixXd& div_line(int alpha, int side) const { return DL_[alpha][side]; }
  const MatrixXd& div_vol(int alpha, int side, int comp) const { return DV_[alpha][side][comp]; }
  const MatrixXd& grad_line(int alpha, int side) const { return QL_[alpha][side]; }
  const MatrixXd& grad_vol(int alpha, int side, int comp) const { return QV_[alpha][side][comp]; }
  const MatrixXd& coupling(int alpha, int side) const { return U_[alpha][side]; }

  const QuadratureRule& volume_rule() const { return qvol_; }
  const QuadratureRule& edge_rule() const { return qedge_; }
  // main basis values at volume quadrature points: (g,k)
  const MatrixXd& phi_at_volume() const { return phi_vol_; }
  // dual basis values at volume points, left rep psi(xi_g) and right rep psi(1-xi_g)
  const MatrixXd& psi_at_volume_L() const { return psiL_vol_; }
  const MatrixXd& psi_at_volume_R() const { return psiR_vol_; }

 private:
  int p_;
  NodalBasis main_;
  DualBasis dual_;
  QuadratureRule qvol_, qedge_;
  MatrixXd Mref_, Mref_inv_, MhatL_, MhatR_;
  MatrixXd DL_[3][2], QL_[3][2], U_[3][2];
  MatrixXd DV_[3][2][2], QV_[3][2][2];
  MatrixXd phi_vol_, psiL_vol_, psiR_vol_;
};

/// Per-edge boundary treatment used inside operator applications.
///  Interior: full dual cell (also merged periodic edges).
///  Ghost:    boundary edge of a scalar/Dirichlet or wall boundary; dual cell
///            is the left sub-triangle; line terms of D and Q drop (ghost
///            trace equals the interior trace) so gradients of constants
///            vanish and D = -Q^T is preserved.
///  SlipWall: Ghost + the wall-normal velocity trace dofs are constrained to
///            zero through a symmetric projection in the dual mass solve.
enum class EdgeKind : unsigned char { Interior, Ghost, SlipWall };

struct EdgeConditions {
  std::vector<EdgeKind> kind;  // size N_d
  explicit EdgeConditions(const StaggeredMesh& m, EdgeKind boundary_kind = EdgeKind::Ghost)
      : kind(m.num_edges(), EdgeKind::Interior) {
    for (int j = 0; j < m.num_edges(); ++j)
      if (m.is_boundary(j)) kind[j] = boundary_kind;
  }
};

/// Assembles per-element operators transiently from the reference set plus
/// geometry, and provides the global matrix-free operations. No per-element
/// operator storage.
class Operators {
 public:
  Operators(const StaggeredMesh& mesh, const ReferenceOperatorSet& ref);

  const StaggeredMesh& mesh() const { return *mesh_; }
  const ReferenceOperatorSet& ref() const { return *ref_; }
  int nphi() const { return ref_->nphi(); }
  int npsi() const { return ref_->npsi(); }

  // M_i = A_i * Mref
  MatrixXd assemble_mass_main(int i) const;
  // Mhat_j = A_{l(j)j} MhatL + A_{r(j)j} MhatR (boundary: left term with
  // identity padding on right-only dofs)
  MatrixXd assemble_mass_dual(int j) const;

  // D_{i,j} / Q_{i,j} per vector component; comp selects the x/y slice
  MatrixXd assemble_divergence(int i, int j, int comp) const;
  MatrixXd assemble_gradient(int i, int j, int comp) const;
  // U_{i,j}
  MatrixXd assemble_coupling(int i, int j) const;
  // G_j = integral of psi_k * gvec over R_j (npsi x 2)
  MatrixXd assemble_source(int j, const Vec2& gvec) const;

  // solve Mhat_j X = B respecting boundary padding and, for SlipWall edges,
  // the normal-trace constraint of the given velocity component (comp < 0
  // for scalar quantities: no wall constraint)
  void dual_mass_solve(int j, const EdgeConditions& bc, int comp, VectorXd& rhs_in_out) const;

  // L_{d->m} and L_{m->d} projections (componentwise)
  MainField project_dual_to_main(const DualField& q) const;
  DualField project_main_to_dual(const MainField& q, const EdgeConditions& bc) const;

  // moment-form discrete divergence: out_i = sum_j D_{i,j} v_j  (scalar main moments)
  MainField discrete_divergence(const DualField& v, const EdgeConditions& bc) const;
  // field-form discrete gradient: out_j = Mhat_j^{-1} (Q_l p_l + Q_r p_r)
  DualField discrete_gradient(const MainField& p, const EdgeConditions& bc) const;

  // applies bc-aware line-term dropping; comp slice
  MatrixXd divergence_bc(int i, int j, int comp, const EdgeConditions& bc) const;
  MatrixXd gradient_bc(int i, int j, int comp, const EdgeConditions& bc) const;

  // evaluate a main field at a reference point of element i
  double eval_main(const MainField& f, int i, int comp, const Vec2& ref) const;
  // evaluate a dual field at a physical point known to lie in element i
  double eval_dual(const DualField& f, int i, const Vec2& x, int comp) const;

  // L2 projection of an analytic function onto the main grid
  template <class F>
  MainField project_function(int comps, F&& fn) const;

  // integral of a main-grid field over the domain (component 0)
  double integral_main(const MainField& f) const;

 private:
  const StaggeredMesh* mesh_;
  const ReferenceOperatorSet* ref_;

  friend class DualMassCache;
};

template <class F>
MainField Operators::project_function(int comps, F&& fn) const {
  const int ne = mesh_->num_elements();
  const int np = nphi();
  MainField out(ne, comps, np);
  const auto& rule = ref_->volume_rule();
  const auto& phi = ref_->phi_at_volume();
  const int ng = static_cast<int>(rule.points.size());
  for (int i = 0; i < ne; ++i) {
    Eigen::MatrixXd mom = Eigen::MatrixXd::Zero(np, comps);
    for (int g = 0; g < ng; ++g) {
      const Vec2 x = mesh_->elem_map(i).to_physical(rule.points[g]);
      for (int c = 0; c < comps; ++c) {
        const double v = fn(x, c) * rule.weights[g];
        for (int k = 0; k < np; ++k) mom(k, c) += phi(g, k) * v;
      }
    }
    // A_i cancels between the moment and the mass inverse
    Eigen::MatrixXd coef = ref_->mass_main_ref_inv() * mom;
    for (int c = 0; c < comps; ++c)
      for (int k = 0; k < np; ++k) out.at(i, c, k) = coef(k, c);
  }
  return out;
}

} // namespace staggdg
