#include "staggdg/krylov.hpp"

#include <cmath>
#include <stdexcept>

#include "staggdg/parallel.hpp"

namespace staggdg {

SolveCounters& solve_counters() {
  static SolveCounters c;
  return c;
}

LinearSolveReport cg_solve(
    const std::function<void(std::span<const double>, std::span<double>)>& apply,
    std::span<const double> rhs, std::span<double> x, const CgOptions& opts,
    const std::function<void(std::span<const double>, std::span<double>)>& precond) {
  const std::size_t n = rhs.size();
  const int maxit = opts.maxit > 0 ? opts.maxit : static_cast<int>(10 * n);

  std::vector<double> b(rhs.begin(), rhs.end());
  auto demean = [&](std::span<double> v) {
    const double m = det_sum(v) / double(v.size());
    for (double& e : v) e -= m;
  };
  if (opts.remove_mean) {
    demean(b);
    demean(x);
  }

  std::vector<double> r(n), z(n), p(n), q(n);
  apply(x, q);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
  if (opts.remove_mean) demean(r);

  const double bnorm = std::sqrt(det_dot(b, b));
  LinearSolveReport rep;
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    rep.converged = true;
    return rep;
  }

  auto apply_precond = [&](std::span<const double> in, std::span<double> out) {
    if (precond) precond(in, out);
    else std::copy(in.begin(), in.end(), out.begin());
  };

  apply_precond(r, z);
  double rho = det_dot(r, z);
  p = z;
  double rnorm = std::sqrt(det_dot(r, r));
  for (int it = 0; it < maxit; ++it) {
    if (rnorm <= opts.tol * bnorm) {
      rep.converged = true;
      break;
    }
    apply(p, q);
    const double pq = det_dot(p, q);
    if (!(pq > 0.0)) {
      // loss of positive definiteness or exhausted nullspace component
      break;
    }
    const double alpha = rho / pq;
    if (!std::isfinite(alpha)) throw std::runtime_error("cg: non-finite step");
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    if (opts.remove_mean) demean(r);
    apply_precond(r, z);
    const double rho_new = det_dot(r, z);
    const double beta = rho_new / rho;
    rho = rho_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    rnorm = std::sqrt(det_dot(r, r));
    rep.iterations = it + 1;
    if (!std::isfinite(rnorm)) throw std::runtime_error("cg: non-finite residual");
  }
  if (rnorm <= opts.tol * bnorm) rep.converged = true;
  if (opts.remove_mean) demean(x);
  rep.relative_residual = rnorm / bnorm;
  return rep;
}

namespace {

// gamma_j = Mhat_j^{-1} (Q_l c_l + Q_r c_r), bc-aware
void edge_gradient_moments(const Operators& ops, const EdgeConditions& bc, const MainField& c,
                           DualField& gamma, bool as_velocity) {
  const auto& mesh = ops.mesh();
  const int np = ops.nphi(), nq = ops.npsi();
  parallel_for(mesh.num_edges(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t j = lo; j < hi; ++j) {
      const int l = mesh.left_of(int(j)), r = mesh.right_of(int(j));
      Eigen::Map<const VectorXd> cl(c.block(l, 0), np);
      for (int comp = 0; comp < 2; ++comp) {
        VectorXd rhs = ops.gradient_bc(l, int(j), comp, bc) * cl;
        if (r >= 0) {
          Eigen::Map<const VectorXd> cr(c.block(r, 0), np);
          rhs.noalias() += ops.gradient_bc(r, int(j), comp, bc) * cr;
        }
        ops.dual_mass_solve(int(j), bc, as_velocity ? comp : -1, rhs);
        for (int k = 0; k < nq; ++k) gamma.at(int(j), comp, k) = rhs[k];
      }
    }
  });
}

} // namespace

void diffusion_operator_apply(const Operators& ops, const EdgeConditions& bc, double kappa,
                              double lambda, const MainField& c, MainField& out) {
  const auto& mesh = ops.mesh();
  const int np = ops.nphi(), nq = ops.npsi();
  DualField gamma;
  if (kappa > 0.0) {
    gamma = DualField(mesh.num_edges(), 2, nq);
    edge_gradient_moments(ops, bc, c, gamma, false);
  }
  const double fac = kappa * lambda;
  parallel_for(mesh.num_elements(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      Eigen::Map<const VectorXd> ci(c.block(int(i), 0), np);
      VectorXd acc = mesh.jac_det(int(i)) * (ops.ref().mass_main_ref() * ci);
      if (kappa > 0.0) {
        for (int s = 0; s < 3; ++s) {
          const int j = mesh.edges_of(int(i))[s];
          for (int comp = 0; comp < 2; ++comp) {
            Eigen::Map<const VectorXd> gj(gamma.block(j, comp), nq);
            acc.noalias() -= fac * (ops.divergence_bc(int(i), j, comp, bc) * gj);
          }
        }
      }
      for (int k = 0; k < np; ++k) out.at(int(i), 0, k) = acc[k];
    }
  });
}

void pressure_operator_apply(const Operators& ops, const EdgeConditions& bc, const MainField& p,
                             MainField& out) {
  const auto& mesh = ops.mesh();
  const int np = ops.nphi(), nq = ops.npsi();
  DualField gamma(mesh.num_edges(), 2, nq);
  edge_gradient_moments(ops, bc, p, gamma, true);
  parallel_for(mesh.num_elements(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      VectorXd acc = VectorXd::Zero(np);
      for (int s = 0; s < 3; ++s) {
        const int j = mesh.edges_of(int(i))[s];
        for (int comp = 0; comp < 2; ++comp) {
          Eigen::Map<const VectorXd> gj(gamma.block(j, comp), nq);
          acc.noalias() += ops.divergence_bc(int(i), j, comp, bc) * gj;
        }
      }
      // normalized sign: positive semi-definite
      for (int k = 0; k < np; ++k) out.at(int(i), 0, k) = -acc[k];
    }
  });
}

} // namespace staggdg
