#include "staggdg/models.hpp"

#include <cmath>
#include <stdexcept>

#include "staggdg/parallel.hpp"

namespace staggdg {

namespace {

// mass (block-Jacobi) preconditioner: z_i = (1/A_i) Mref_inv r_i
std::function<void(std::span<const double>, std::span<double>)> mass_jacobi(const Operators& ops) {
  return [&ops](std::span<const double> r, std::span<double> z) {
    const int np = ops.nphi();
    const auto& Minv = ops.ref().mass_main_ref_inv();
    const auto& mesh = ops.mesh();
    parallel_for(mesh.num_elements(), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        Eigen::Map<const VectorXd> ri(r.data() + i * np, np);
        Eigen::Map<VectorXd> zi(z.data() + i * np, np);
        zi = (Minv * ri) / mesh.jac_det(int(i));
      }
    });
  };
}

std::vector<int> elements_on_boundary(const StaggeredMesh& mesh) {
  std::vector<int> out;
  for (int i = 0; i < mesh.num_elements(); ++i)
    for (int s = 0; s < 3; ++s)
      if (mesh.is_boundary(mesh.edges_of(i)[s])) {
        out.push_back(i);
        break;
      }
  return out;
}

} // namespace

AdvectionDiffusionModel::AdvectionDiffusionModel(const Operators& ops, const EdgeConditions& bc,
                                                 ModelParams params,
                                                 std::function<Vec2(const Vec2&)> velocity)
    : ops_(&ops), bc_(&bc), par_(params) {
  vel_ = ops.project_function(2, [&](const Vec2& x, int c) { return velocity(x)[c]; });
  boundary_elems_ = elements_on_boundary(ops.mesh());
}

void AdvectionDiffusionModel::set_dirichlet(std::function<double(const Vec2&, double)> exact) {
  dirichlet_ = std::move(exact);
}

MainField IncompressibleModel::solve_scalar_diffusion(const MainField& rhs_field, double kappa,
                                                      double lambda) {
  const auto& mesh = ops_->mesh();
  const int np = ops_->nphi();
  std::vector<double> rhs(rhs_field.a.size());
  for (int i = 0; i < mesh.num_elements(); ++i) {
    Eigen::Map<const VectorXd> ci(rhs_field.block(i, 0), np);
    Eigen::Map<VectorXd> bi(rhs.data() + std::size_t(i) * np, np);
    bi = mesh.jac_det(i) * (ops_->ref().mass_main_ref() * ci);
  }
  MainField out = rhs_field;
  auto apply = [&](std::span<const double> in, std::span<double> o) {
    MainField ci(mesh.num_elements(), 1, np);
    std::copy(in.begin(), in.end(), ci.a.begin());
    MainField co(mesh.num_elements(), 1, np);
    diffusion_operator_apply(*ops_, *bc_, kappa, lambda, ci, co);
    std::copy(co.a.begin(), co.a.end(), o.begin());
  };
  CgOptions opt;
  opt.tol = par_.cg_tol;
  opt.maxit = par_.cg_maxit;
  auto rep = cg_solve(apply, rhs, out.a, opt, mass_jacobi(*ops_));
  solve_counters().diffusion++;
  if (!rep.converged) throw std::runtime_error("diffusion solve did not converge");
  return out;
}

void AdvectionDiffusionModel::stage_solve(ImexFields& q, double lambda, double) {
  if (par_.kappa <= 0.0) return;  // pure transport: C* = rhs, flux = 0
  const auto& mesh = ops_->mesh();
  const int np = ops_->nphi();
  MainField& c = q.scalars.at(0);
  std::vector<double> rhs(c.a.size());
  for (int i = 0; i < mesh.num_elements(); ++i) {
    Eigen::Map<const VectorXd> ci(c.block(i, 0), np);
    Eigen::Map<VectorXd> bi(rhs.data() + std::size_t(i) * np, np);
    bi = mesh.jac_det(i) * (ops_->ref().mass_main_ref() * ci);
  }
  auto apply = [&](std::span<const double> in, std::span<double> out) {
    MainField ci(mesh.num_elements(), 1, np);
    std::copy(in.begin(), in.end(), ci.a.begin());
    MainField co(mesh.num_elements(), 1, np);
    diffusion_operator_apply(*ops_, *bc_, par_.kappa, lambda, ci, co);
    std::copy(co.a.begin(), co.a.end(), out.begin());
  };
  CgOptions opt;
  opt.tol = par_.cg_tol;
  opt.maxit = par_.cg_maxit;
  report_ = cg_solve(apply, rhs, c.a, opt, mass_jacobi(*ops_));
  solve_counters().diffusion++;
  if (!report_.converged) throw std::runtime_error("diffusion solve did not converge");
}

void AdvectionDiffusionModel::apply_boundary_values(ImexFields& q, double t) {
  if (!dirichlet_) return;
  const auto& mesh = ops_->mesh();
  const int np = ops_->nphi();
  const auto& rule = ops_->ref().volume_rule();
  const auto& phi = ops_->ref().phi_at_volume();
  MainField& c = q.scalars.at(0);
  for (int i : boundary_elems_) {
    VectorXd mom = VectorXd::Zero(np);
    for (std::size_t g = 0; g < rule.points.size(); ++g) {
      const Vec2 x = mesh.elem_map(i).to_physical(rule.points[g]);
      const double v = dirichlet_(x, t) * rule.weights[g];
      for (int k = 0; k < np; ++k) mom[k] += phi(g, k) * v;
    }
    const VectorXd coef = ops_->ref().mass_main_ref_inv() * mom;
    for (int k = 0; k < np; ++k) c.at(i, 0, k) = coef[k];
  }
}

IncompressibleModel::IncompressibleModel(const Operators& ops, const EdgeConditions& bc,
                                         ModelParams params, bool with_temperature)
    : ops_(&ops), bc_(&bc), par_(params), with_theta_(with_temperature) {
  pressure_ = MainField(ops.mesh().num_elements(), 1, ops.nphi());
}

void IncompressibleModel::stage_solve(ImexFields& q, double lambda, double t) {
  const auto& mesh = ops_->mesh();
  const int np = ops_->nphi(), nq = ops_->npsi();

  // temperature diffusion
  MainField* theta = nullptr;
  if (with_theta_) {
    MainField& th = q.scalars.at(0);
    if (par_.alpha > 0.0) th = solve_scalar_diffusion(th, par_.alpha, lambda);
    theta = &th;
  }

  // fractional step: velocity diffusion on the main grid
  DualField& v = *q.velocity;
  MainField vmain = ops_->project_dual_to_main(v);
  if (par_.nu > 0.0) {
    for (int c = 0; c < 2; ++c) {
      MainField comp(mesh.num_elements(), 1, np);
      for (int i = 0; i < mesh.num_elements(); ++i)
        for (int k = 0; k < np; ++k) comp.at(i, 0, k) = vmain.at(i, c, k);
      comp = solve_scalar_diffusion(comp, par_.nu, lambda);
      for (int i = 0; i < mesh.num_elements(); ++i)
        for (int k = 0; k < np; ++k) vmain.at(i, c, k) = comp.at(i, 0, k);
    }
  }
  DualField vstar = ops_->project_main_to_dual(vmain, *bc_);

  // per-edge source moments: gravity + buoyancy + optional analytic source
  DualField src(mesh.num_edges(), 2, nq);
  const bool have_gravity = par_.gravity != 0.0;
  const bool have_buoy = with_theta_ && par_.beta != 0.0 && par_.gravity != 0.0;
  if (have_gravity || source_) {
    const auto& rule = ops_->ref().volume_rule();
    const auto& psiL = ops_->ref().psi_at_volume_L();
    const auto& psiR = ops_->ref().psi_at_volume_R();
    parallel_for(mesh.num_edges(), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t j = lo; j < hi; ++j) {
        for (int side = 0; side < 2; ++side) {
          const int i = side == 0 ? mesh.left_of(int(j)) : mesh.right_of(int(j));
          if (i < 0) continue;
          const TriMap sub = mesh.dual_side_map(i, int(j));
          const auto& psi = side == 0 ? psiL : psiR;
          for (std::size_t g = 0; g < rule.points.size(); ++g) {
            const Vec2 x = sub.to_physical(rule.points[g]);
            Vec2 sv(0.0, par_.gravity);
            if (source_) sv += source_(x, t);
            const double w = rule.weights[g] * sub.det;
            for (int k = 0; k < nq; ++k) {
              src.at(int(j), 0, k) += w * psi(g, k) * sv.x();
              src.at(int(j), 1, k) += w * psi(g, k) * sv.y();
            }
          }
        }
      }
    });
  }
  if (have_buoy) {
    const double bg = par_.beta * par_.gravity;
    parallel_for(mesh.num_edges(), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t j = lo; j < hi; ++j) {
        for (int side = 0; side < 2; ++side) {
          const int i = side == 0 ? mesh.left_of(int(j)) : mesh.right_of(int(j));
          if (i < 0) continue;
          Eigen::Map<const VectorXd> thi(theta->block(i, 0), np);
          VectorXd dth = thi;
          dth.array() -= par_.theta0;  // nodal basis: constants shift coefficients
          const VectorXd m = ops_->assemble_coupling(i, int(j)) * dth;
          for (int k = 0; k < nq; ++k) src.at(int(j), 1, k) -= bg * m[k];
        }
      }
    });
  }

  // pressure system rhs (positive semi-definite normalization):
  // A p = -[ sum_j D Mhat^{-1} src + (1/lambda) sum_j D vstar ]
  std::vector<double> rhs(std::size_t(mesh.num_elements()) * np, 0.0);
  {
    DualField srcsol = src;
    parallel_for(mesh.num_edges(), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t j = lo; j < hi; ++j)
        for (int c = 0; c < 2; ++c) {
          VectorXd m(nq);
          for (int k = 0; k < nq; ++k) m[k] = src.at(int(j), c, k);
          ops_->dual_mass_solve(int(j), *bc_, c, m);
          for (int k = 0; k < nq; ++k) srcsol.at(int(j), c, k) = m[k];
        }
    });
    parallel_for(mesh.num_elements(), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        VectorXd acc = VectorXd::Zero(np);
        for (int s = 0; s < 3; ++s) {
          const int j = mesh.edges_of(int(i))[s];
          for (int c = 0; c < 2; ++c) {
            Eigen::Map<const VectorXd> sj(srcsol.block(j, c), nq);
            Eigen::Map<const VectorXd> vj(vstar.block(j, c), nq);
            acc.noalias() += ops_->divergence_bc(int(i), j, c, *bc_) * (sj + vj / lambda);
          }
        }
        for (int k = 0; k < np; ++k) rhs[i * np + k] = -acc[k];
      }
    });
  }
  auto apply = [&](std::span<const double> in, std::span<double> out) {
    MainField ci(mesh.num_elements(), 1, np);
    std::copy(in.begin(), in.end(), ci.a.begin());
    MainField co(mesh.num_elements(), 1, np);
    pressure_operator_apply(*ops_, *bc_, ci, co);
    std::copy(co.a.begin(), co.a.end(), out.begin());
  };
  CgOptions opt;
  opt.tol = par_.cg_tol;
  opt.maxit = par_.cg_maxit;
  opt.remove_mean = true;
  prep_ = cg_solve(apply, rhs, pressure_.a, opt);
  solve_counters().pressure++;
  if (!prep_.converged) throw std::runtime_error("pressure solve did not converge");

  // velocity correction: v = vstar + lambda Mhat^{-1}(src - Q_l p_l - Q_r p_r)
  parallel_for(mesh.num_edges(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t j = lo; j < hi; ++j) {
      const int l = mesh.left_of(int(j)), r = mesh.right_of(int(j));
      Eigen::Map<const VectorXd> pl(pressure_.block(l, 0), np);
      for (int c = 0; c < 2; ++c) {
        VectorXd m(nq);
        for (int k = 0; k < nq; ++k) m[k] = src.at(int(j), c, k);
        m.noalias() -= ops_->gradient_bc(l, int(j), c, *bc_) * pl;
        if (r >= 0) {
          Eigen::Map<const VectorXd> pr(pressure_.block(r, 0), np);
          m.noalias() -= ops_->gradient_bc(r, int(j), c, *bc_) * pr;
        }
        ops_->dual_mass_solve(int(j), *bc_, c, m);
        for (int k = 0; k < nq; ++k) v.at(int(j), c, k) = vstar.at(int(j), c, k) + lambda * m[k];
      }
    }
  });
}

double divergence_residual(const Operators& ops, const EdgeConditions& bc, const DualField& v) {
  MainField d = ops.discrete_divergence(v, bc);
  double s = 0.0;
  for (double e : d.a) s += e * e;
  return std::sqrt(s);
}

double ExactSolutions::nonlinear_transport(const Vec2& x, double t) {
  const double xe = x.x() * std::exp(t);
  return std::exp(-100.0 * std::sqrt(xe * xe + x.y() * x.y()));
}

double ExactSolutions::advdiff_erf(const Vec2& x, double t, double kappa) {
  const double x0 = -0.5, t0 = 0.5, u = 0.2;
  return 0.5 - 0.5 * std::erf((x.x() - x0 - u * t) / std::sqrt(4.0 * kappa * (t + t0)));
}

double ExactSolutions::advdiff_varvel(const Vec2& x, double t, double kappa) {
  const double xx = x.x();
  return std::exp(t) * (-xx - 0.5 * std::sqrt(2.0 * M_PI * kappa) * std::erf(xx / std::sqrt(2.0 * kappa)) * xx -
                        kappa * std::exp(-xx * xx / (2.0 * kappa)));
}

double ExactSolutions::taylor_green(const Vec2& x, double t, double nu, double g, int comp) {
  const double e = std::exp(-2.0 * nu * t);
  switch (comp) {
    case 0: return std::sin(x.x()) * std::cos(x.y()) * e;
    case 1: return -std::cos(x.x()) * std::sin(x.y()) * e + g * t;
    default: return 0.25 * (std::cos(2 * x.x()) + std::cos(2 * x.y())) * e * e;
  }
}

Vec2 ExactSolutions::taylor_green_source(const Vec2& x, double t, double nu, double g) {
  const double e = std::exp(-2.0 * nu * t);
  return Vec2(-g * t * std::sin(x.x()) * std::sin(x.y()) * e,
              -g * t * std::cos(x.x()) * std::cos(x.y()) * e);
}

} // namespace staggdg
