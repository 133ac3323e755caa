#include "staggdg/operators.hpp"

#include <cmath>
#include <stdexcept>

namespace staggdg {

namespace {

// affine map through three point correspondences
struct Affine {
  Mat2 B;
  Vec2 C;
  Vec2 operator()(const Vec2& x) const { return B * x + C; }
};

Affine affine_from(const Vec2& s0, const Vec2& s1, const Vec2& s2,
                   const Vec2& d0, const Vec2& d1, const Vec2& d2) {
  Mat2 S, D;
  S.col(0) = s1 - s0;
  S.col(1) = s2 - s0;
  D.col(0) = d1 - d0;
  D.col(1) = d2 - d0;
  Affine a;
  a.B = D * S.inverse();
  a.C = d0 - a.B * s0;
  return a;
}

} // namespace

ReferenceOperatorSet::ReferenceOperatorSet(int degree)
    : p_(degree), main_(degree), dual_(main_) {
  const int np = main_.size();
  const int nq = dual_.size();
  qvol_ = quadrature(QuadDomain::Triangle, 2 * p_ + 2);
  qedge_ = quadrature(QuadDomain::Segment, 2 * p_ + 1);
  const int ng = static_cast<int>(qvol_.points.size());
  const int nge = static_cast<int>(qedge_.points.size());

  phi_vol_.resize(ng, np);
  psiL_vol_.resize(ng, nq);
  psiR_vol_.resize(ng, nq);
  std::vector<double> buf(std::max(np, nq));
  for (int g = 0; g < ng; ++g) {
    main_.eval(qvol_.points[g], buf.data());
    for (int k = 0; k < np; ++k) phi_vol_(g, k) = buf[k];
    dual_.eval(qvol_.points[g], buf.data());
    for (int k = 0; k < nq; ++k) psiL_vol_(g, k) = buf[k];
    dual_.eval(Vec2(1.0, 1.0) - qvol_.points[g], buf.data());
    for (int k = 0; k < nq; ++k) psiR_vol_(g, k) = buf[k];
  }

  Mref_ = MatrixXd::Zero(np, np);
  MhatL_ = MatrixXd::Zero(nq, nq);
  MhatR_ = MatrixXd::Zero(nq, nq);
  for (int g = 0; g < ng; ++g) {
    const double w = qvol_.weights[g];
    Mref_.noalias() += w * phi_vol_.row(g).transpose() * phi_vol_.row(g);
    MhatL_.noalias() += w * psiL_vol_.row(g).transpose() * psiL_vol_.row(g);
    MhatR_.noalias() += w * psiR_vol_.row(g).transpose() * psiR_vol_.row(g);
  }
  Mref_inv_ = Mref_.llt().solve(MatrixXd::Identity(np, np));

  // reference sub-triangles: edge slot a connects local ref vertices
  // (V_a, V_{a+1}), plus the reference centroid
  const Vec2 V[3] = {Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)};
  const Vec2 Z(1.0 / 3.0, 1.0 / 3.0);

  std::vector<double> phiv(np), psiv(nq), gradv(2 * np);
  for (int a = 0; a < 3; ++a) {
    const Vec2 Va = V[a], Vb = V[(a + 1) % 3];
    const TriMap sub(Va, Vb, Z);  // T_ref -> T_ref^alpha (|J| = 1/3)
    for (int side = 0; side < 2; ++side) {
      // T_beta: main reference coords -> dual square coords
      const Affine Tb = (side == 0)
          ? affine_from(Va, Vb, Z, Vec2(1, 0), Vec2(0, 1), Vec2(0, 0))
          : affine_from(Va, Vb, Z, Vec2(0, 1), Vec2(1, 0), Vec2(1, 1));
      const double sigma_beta = side == 0 ? 1.0 : -1.0;

      MatrixXd dl = MatrixXd::Zero(np, nq);
      MatrixXd ql = MatrixXd::Zero(nq, np);
      MatrixXd u = MatrixXd::Zero(nq, np);
      MatrixXd dv[2] = {MatrixXd::Zero(np, nq), MatrixXd::Zero(np, nq)};
      MatrixXd qv[2] = {MatrixXd::Zero(nq, np), MatrixXd::Zero(nq, np)};

      for (int g = 0; g < ng; ++g) {
        const double w = qvol_.weights[g];
        const Vec2 xi = sub.to_physical(qvol_.points[g]);
        main_.eval(xi, phiv.data());
        main_.eval_grad(xi, gradv.data());
        dual_.eval(Tb(xi), psiv.data());
        for (int k = 0; k < np; ++k)
          for (int l = 0; l < nq; ++l) {
            dv[0](k, l) += w * gradv[2 * k] * psiv[l];
            dv[1](k, l) += w * gradv[2 * k + 1] * psiv[l];
          }
        for (int k = 0; k < nq; ++k)
          for (int l = 0; l < np; ++l) {
            u(k, l) += w * psiv[k] * phiv[l];
            qv[0](k, l) -= w * psiv[k] * gradv[2 * l];
            qv[1](k, l) -= w * psiv[k] * gradv[2 * l + 1];
          }
      }
      for (int g = 0; g < nge; ++g) {
        const double w = qedge_.weights[g];
        const double tau = qedge_.points[g].x();
        // edge parameterization follows the physical edge direction: for the
        // right side the local traversal is reversed
        const Vec2 xi = (side == 0) ? Vec2(Va + tau * (Vb - Va)) : Vec2(Vb + tau * (Va - Vb));
        main_.eval(xi, phiv.data());
        dual_.eval(Tb(xi), psiv.data());
        for (int k = 0; k < np; ++k)
          for (int l = 0; l < nq; ++l) dl(k, l) += w * sigma_beta * phiv[k] * psiv[l];
        for (int k = 0; k < nq; ++k)
          for (int l = 0; l < np; ++l) ql(k, l) -= w * sigma_beta * psiv[k] * phiv[l];
      }
      DL_[a][side] = std::move(dl);
      QL_[a][side] = std::move(ql);
      U_[a][side] = std::move(u);
      for (int c = 0; c < 2; ++c) {
        DV_[a][side][c] = std::move(dv[c]);
        QV_[a][side][c] = std::move(qv[c]);
      }
    }
  }
}

Operators::Operators(const StaggeredMesh& mesh, const ReferenceOperatorSet& ref)
    : mesh_(&mesh), ref_(&ref) {}

MatrixXd Operators::assemble_mass_main(int i) const {
  return mesh_->jac_det(i) * ref_->mass_main_ref();
}

MatrixXd Operators::assemble_mass_dual(int j) const {
  const int nq = npsi();
  const int l = mesh_->left_of(j);
  const double Al = mesh_->subtri_jac_det(l, mesh_->local_slot(l, j));
  if (!mesh_->is_boundary(j)) {
    const int r = mesh_->right_of(j);
    const double Ar = mesh_->subtri_jac_det(r, mesh_->local_slot(r, j));
    return Al * ref_->mass_dual_L() + Ar * ref_->mass_dual_R();
  }
  MatrixXd M = Al * ref_->mass_dual_L();
  // identity padding on right-only dofs keeps the matrix invertible
  const int np = nphi();
  for (int k = np; k < nq; ++k) {
    M.row(k).setZero();
    M.col(k).setZero();
    M(k, k) = 1.0;
  }
  return M;
}

MatrixXd Operators::assemble_divergence(int i, int j, int comp) const {
  const int slot = mesh_->local_slot(i, j);
  const int side = mesh_->left_of(j) == i ? 0 : 1;
  const double len = mesh_->edge_length(j);
  const double n = mesh_->edge_normal(j)[comp];
  const double Aij = mesh_->subtri_jac_det(i, slot);
  const Mat2 Ji = mesh_->elem_map(i).jac_inv;  // d xi / d x
  return len * n * ref_->div_line(slot, side) -
         Aij * (Ji(0, comp) * ref_->div_vol(slot, side, 0) +
                Ji(1, comp) * ref_->div_vol(slot, side, 1));
}

MatrixXd Operators::assemble_gradient(int i, int j, int comp) const {
  const int slot = mesh_->local_slot(i, j);
  const int side = mesh_->left_of(j) == i ? 0 : 1;
  const double len = mesh_->edge_length(j);
  const double n = mesh_->edge_normal(j)[comp];
  const double Aij = mesh_->subtri_jac_det(i, slot);
  const Mat2 Ji = mesh_->elem_map(i).jac_inv;
  return len * n * ref_->grad_line(slot, side) -
         Aij * (Ji(0, comp) * ref_->grad_vol(slot, side, 0) +
                Ji(1, comp) * ref_->grad_vol(slot, side, 1));
}

MatrixXd Operators::assemble_coupling(int i, int j) const {
  const int slot = mesh_->local_slot(i, j);
  const int side = mesh_->left_of(j) == i ? 0 : 1;
  return mesh_->subtri_jac_det(i, slot) * ref_->coupling(slot, side);
}

MatrixXd Operators::assemble_source(int j, const Vec2& gvec) const {
  const int nq = npsi();
  MatrixXd out = MatrixXd::Zero(nq, 2);
  const auto& rule = ref_->volume_rule();
  const int ng = static_cast<int>(rule.points.size());
  const int l = mesh_->left_of(j);
  const double Al = mesh_->subtri_jac_det(l, mesh_->local_slot(l, j));
  for (int g = 0; g < ng; ++g) {
    const double w = rule.weights[g] * Al;
    for (int k = 0; k < nq; ++k) {
      out(k, 0) += w * ref_->psi_at_volume_L()(g, k) * gvec.x();
      out(k, 1) += w * ref_->psi_at_volume_L()(g, k) * gvec.y();
    }
  }
  if (!mesh_->is_boundary(j)) {
    const int r = mesh_->right_of(j);
    const double Ar = mesh_->subtri_jac_det(r, mesh_->local_slot(r, j));
    for (int g = 0; g < ng; ++g) {
      const double w = rule.weights[g] * Ar;
      for (int k = 0; k < nq; ++k) {
        out(k, 0) += w * ref_->psi_at_volume_R()(g, k) * gvec.x();
        out(k, 1) += w * ref_->psi_at_volume_R()(g, k) * gvec.y();
      }
    }
  }
  return out;
}

MatrixXd Operators::divergence_bc(int i, int j, int comp, const EdgeConditions& bc) const {
  if (bc.kind[j] == EdgeKind::Interior) return assemble_divergence(i, j, comp);
  // ghost trace cancels the line term; only the volume part remains
  const int slot = mesh_->local_slot(i, j);
  const int side = mesh_->left_of(j) == i ? 0 : 1;
  const double Aij = mesh_->subtri_jac_det(i, slot);
  const Mat2 Ji = mesh_->elem_map(i).jac_inv;
  return -Aij * (Ji(0, comp) * ref_->div_vol(slot, side, 0) +
                 Ji(1, comp) * ref_->div_vol(slot, side, 1));
}

MatrixXd Operators::gradient_bc(int i, int j, int comp, const EdgeConditions& bc) const {
  if (bc.kind[j] == EdgeKind::Interior) return assemble_gradient(i, j, comp);
  const int slot = mesh_->local_slot(i, j);
  const int side = mesh_->left_of(j) == i ? 0 : 1;
  const double Aij = mesh_->subtri_jac_det(i, slot);
  const Mat2 Ji = mesh_->elem_map(i).jac_inv;
  return -Aij * (Ji(0, comp) * ref_->grad_vol(slot, side, 0) +
                 Ji(1, comp) * ref_->grad_vol(slot, side, 1));
}

void Operators::dual_mass_solve(int j, const EdgeConditions& bc, int comp,
                                VectorXd& rhs) const {
  MatrixXd M = assemble_mass_dual(j);
  const int nq = npsi();
  if (mesh_->is_boundary(j)) {
    for (int k = nphi(); k < nq; ++k) rhs[k] = 0.0;
    if (bc.kind[j] == EdgeKind::SlipWall && comp >= 0) {
      const Vec2 n = mesh_->edge_normal(j);
      const int axis = std::abs(n.x()) > std::abs(n.y()) ? 0 : 1;
      if (std::abs(n[axis]) < 1.0 - 1e-9)
        throw std::runtime_error("slip wall requires axis-aligned boundary edges");
      if (comp == axis) {
        for (int k : ref_->dual_basis().trace_dofs()) {
          M.row(k).setZero();
          M.col(k).setZero();
          M(k, k) = 1.0;
          rhs[k] = 0.0;
        }
      }
    }
  }
  rhs = M.llt().solve(rhs);
}

MainField Operators::project_dual_to_main(const DualField& q) const {
  const int ne = mesh_->num_elements();
  const int np = nphi(), nq = npsi(), nc = q.comps;
  MainField out(ne, nc, np);
  for (int i = 0; i < ne; ++i) {
    for (int c = 0; c < nc; ++c) {
      VectorXd acc = VectorXd::Zero(np);
      for (int s = 0; s < 3; ++s) {
        const int j = mesh_->edges_of(i)[s];
        const MatrixXd U = assemble_coupling(i, j);
        Eigen::Map<const VectorXd> qj(q.block(j, c), nq);
        acc.noalias() += U.transpose() * qj;
      }
      const VectorXd coef = ref_->mass_main_ref_inv() * (acc / mesh_->jac_det(i));
      for (int k = 0; k < np; ++k) out.at(i, c, k) = coef[k];
    }
  }
  return out;
}

DualField Operators::project_main_to_dual(const MainField& q, const EdgeConditions& bc) const {
  const int nd = mesh_->num_edges();
  const int np = nphi(), nq = npsi(), nc = q.comps;
  DualField out(nd, nc, nq);
  for (int j = 0; j < nd; ++j) {
    const int l = mesh_->left_of(j), r = mesh_->right_of(j);
    for (int c = 0; c < nc; ++c) {
      VectorXd rhs = VectorXd::Zero(nq);
      Eigen::Map<const VectorXd> ql(q.block(l, c), np);
      rhs.noalias() += assemble_coupling(l, j) * ql;
      if (r >= 0) {
        Eigen::Map<const VectorXd> qr(q.block(r, c), np);
        rhs.noalias() += assemble_coupling(r, j) * qr;
      }
      dual_mass_solve(j, bc, nc == 2 ? c : -1, rhs);
      for (int k = 0; k < nq; ++k) out.at(j, c, k) = rhs[k];
    }
  }
  return out;
}

MainField Operators::discrete_divergence(const DualField& v, const EdgeConditions& bc) const {
  const int ne = mesh_->num_elements();
  const int np = nphi(), nq = npsi();
  MainField out(ne, 1, np);
  for (int i = 0; i < ne; ++i) {
    VectorXd acc = VectorXd::Zero(np);
    for (int s = 0; s < 3; ++s) {
      const int j = mesh_->edges_of(i)[s];
      for (int c = 0; c < 2; ++c) {
        Eigen::Map<const VectorXd> vj(v.block(j, c), nq);
        acc.noalias() += divergence_bc(i, j, c, bc) * vj;
      }
    }
    for (int k = 0; k < np; ++k) out.at(i, 0, k) = acc[k];
  }
  return out;
}

DualField Operators::discrete_gradient(const MainField& p, const EdgeConditions& bc) const {
  const int nd = mesh_->num_edges();
  const int np = nphi(), nq = npsi();
  DualField out(nd, 2, nq);
  for (int j = 0; j < nd; ++j) {
    const int l = mesh_->left_of(j), r = mesh_->right_of(j);
    Eigen::Map<const VectorXd> pl(p.block(l, 0), np);
    for (int c = 0; c < 2; ++c) {
      VectorXd rhs = gradient_bc(l, j, c, bc) * pl;
      if (r >= 0) {
        Eigen::Map<const VectorXd> pr(p.block(r, 0), np);
        rhs.noalias() += gradient_bc(r, j, c, bc) * pr;
      }
      dual_mass_solve(j, bc, -1, rhs);
      for (int k = 0; k < nq; ++k) out.at(j, c, k) = rhs[k];
    }
  }
  return out;
}

double Operators::eval_main(const MainField& f, int i, int comp, const Vec2& ref) const {
  double phi[15];
  ref_->main_basis().eval(ref, phi);
  const double* c = f.block(i, comp);
  double s = 0.0;
  for (int k = 0; k < nphi(); ++k) s += c[k] * phi[k];
  return s;
}

double Operators::eval_dual(const DualField& f, int i, const Vec2& x, int comp) const {
  // find the sub-triangle of i containing x
  int best_s = 0;
  double best = -1e300;
  Vec2 best_ref;
  for (int s = 0; s < 3; ++s) {
    const int j = mesh_->edges_of(i)[s];
    const TriMap m = mesh_->dual_side_map(i, j);
    const Vec2 r = m.to_reference(x);
    const double b = std::min({r.x(), r.y(), 1.0 - r.x() - r.y()});
    if (b > best) {
      best = b;
      best_s = s;
      best_ref = r;
    }
  }
  const int j = mesh_->edges_of(i)[best_s];
  Vec2 zeta = best_ref;
  if (mesh_->left_of(j) != i) zeta = Vec2(1.0, 1.0) - zeta;
  double psi[25];
  ref_->dual_basis().eval(zeta, psi);
  const double* c = f.block(j, comp);
  double s = 0.0;
  for (int k = 0; k < npsi(); ++k) s += c[k] * psi[k];
  return s;
}

double Operators::integral_main(const MainField& f) const {
  const auto& rule = ref_->volume_rule();
  const auto& phi = ref_->phi_at_volume();
  const int ng = static_cast<int>(rule.points.size());
  double total = 0.0;
  for (int i = 0; i < mesh_->num_elements(); ++i) {
    const double* c = f.block(i, 0);
    double s = 0.0;
    for (int g = 0; g < ng; ++g) {
      double v = 0.0;
      for (int k = 0; k < nphi(); ++k) v += phi(g, k) * c[k];
      s += rule.weights[g] * v;
    }
    total += s * mesh_->jac_det(i);
  }
  return total;
}

} // namespace staggdg
