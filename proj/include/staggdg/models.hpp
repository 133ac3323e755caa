#pragma once

#include <functional>
#include <string>

#include "staggdg/imex.hpp"

namespace staggdg {

struct ModelParams {
  double nu = 0.0;       // kinematic viscosity
  double alpha = 0.0;    // thermal diffusivity
  double kappa = 0.0;    // scalar diffusivity
  double beta = 0.0;     // thermal expansion
  double gravity = 0.0;  // gravity acceleration, acts in y
  double theta0 = 0.0;   // reference temperature
  double cg_tol = 1e-10;
  int cg_maxit = 0;
};

/// Advection-diffusion of a single scalar on the main grid with a prescribed
/// autonomous velocity field. The transport is semi-Lagrangian (driver side);
/// each stage solves (M - kappa*lambda*L) C* = M C^I by matrix-free CG.
class AdvectionDiffusionModel : public PhysicsModel {
 public:
  AdvectionDiffusionModel(const Operators& ops, const EdgeConditions& bc, ModelParams params,
                          std::function<Vec2(const Vec2&)> velocity);

  const Operators& ops() const override { return *ops_; }
  const EdgeConditions& bc() const override { return *bc_; }
  const MainField* static_velocity() const override { return &vel_; }
  void stage_solve(ImexFields& q, double lambda, double t) override;
  void apply_boundary_values(ImexFields& q, double t) override;

  // Dirichlet refresh: overwrite boundary-adjacent elements from this field
  void set_dirichlet(std::function<double(const Vec2&, double)> exact);

  const LinearSolveReport& last_report() const { return report_; }

 private:
  const Operators* ops_;
  const EdgeConditions* bc_;
  ModelParams par_;
  MainField vel_;
  std::function<double(const Vec2&, double)> dirichlet_;
  std::vector<int> boundary_elems_;
  LinearSolveReport report_;
};

/// Incompressible Navier-Stokes with optional Boussinesq coupling: velocity
/// on the dual grid, pressure and temperature on the main grid. Stage solve:
/// temperature diffusion, fractional-step velocity diffusion on the main
/// grid, then the symmetric pressure system and the velocity correction.
class IncompressibleModel : public PhysicsModel {
 public:
  struct Source {
    // extra momentum source S(x,t); must be discretely divergence-compatible
    std::function<Vec2(const Vec2&, double)> momentum;
  };

  IncompressibleModel(const Operators& ops, const EdgeConditions& bc, ModelParams params,
                      bool with_temperature);

  const Operators& ops() const override { return *ops_; }
  const EdgeConditions& bc() const override { return *bc_; }
  void stage_solve(ImexFields& q, double lambda, double t) override;

  void set_momentum_source(std::function<Vec2(const Vec2&, double)> s) { source_ = std::move(s); }

  const MainField& pressure() const { return pressure_; }
  MainField& pressure() { return pressure_; }
  bool with_temperature() const { return with_theta_; }
  const LinearSolveReport& last_pressure_report() const { return prep_; }

 private:
  const Operators* ops_;
  const EdgeConditions* bc_;
  ModelParams par_;
  bool with_theta_;
  MainField pressure_;
  std::function<Vec2(const Vec2&, double)> source_;
  LinearSolveReport prep_;

  MainField solve_scalar_diffusion(const MainField& rhs_field, double kappa, double lambda);
};

/// coefficient 2-norm of the divergence moments of a dual velocity
double divergence_residual(const Operators& ops, const EdgeConditions& bc, const DualField& v);

/// Closed-form benchmark solutions.
///  nonlinear_transport: C, advecting field (-x, 0)
///  advdiff_erf:         C, velocity (0.2, 0)
///  advdiff_varvel:      C, velocity (-x, 0)
///  taylor_green:        u,v,p (components 0,1,2)
struct ExactSolutions {
  static double nonlinear_transport(const Vec2& x, double t);
  static double advdiff_erf(const Vec2& x, double t, double kappa);
  static double advdiff_varvel(const Vec2& x, double t, double kappa);
  static double taylor_green(const Vec2& x, double t, double nu, double g, int comp);
  // Taylor-Green extra momentum source balancing the gravity variant
  static Vec2 taylor_green_source(const Vec2& x, double t, double nu, double g);
};

} // namespace staggdg
