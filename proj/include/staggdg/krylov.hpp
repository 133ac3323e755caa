#pragma once

#include <functional>
#include <span>
#include <vector>

#include "staggdg/operators.hpp"

namespace staggdg {

struct LinearSolveReport {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

struct CgOptions {
  double tol = 1e-10;   // relative residual
  int maxit = 0;        // 0: 10 * n
  bool remove_mean = false;  // project the constant nullspace out of rhs/x
};

/// Matrix-free preconditioned conjugate gradient. `apply` must be symmetric
/// positive (semi-)definite in the plain coefficient inner product.
/// `precond` may be null (identity). Deterministic reductions.
LinearSolveReport cg_solve(
    const std::function<void(std::span<const double>, std::span<double>)>& apply,
    std::span<const double> rhs, std::span<double> x, const CgOptions& opts,
    const std::function<void(std::span<const double>, std::span<double>)>& precond = nullptr);

/// Implicit diffusion operator: out_i = M_i c_i - kappa*lambda *
///   sum_{j in S_i} D_{i,j} Mhat_j^{-1} (Q_{l,j} c_l + Q_{r,j} c_r).
/// Symmetric positive definite for kappa, lambda >= 0.
void diffusion_operator_apply(const Operators& ops, const EdgeConditions& bc, double kappa,
                              double lambda, const MainField& c, MainField& out);

/// Pressure operator, normalized positive semi-definite:
/// out_i = -sum_{j in S_i} D_{i,j} Mhat_j^{-1} (Q_{l,j} p_l + Q_{r,j} p_r)
/// (the wall-constraint projection is applied inside the dual mass solve).
void pressure_operator_apply(const Operators& ops, const EdgeConditions& bc, const MainField& p,
                             MainField& out);

/// Count of CG solves per system type since the last reset (test hook).
struct SolveCounters {
  long diffusion = 0;
  long pressure = 0;
};
SolveCounters& solve_counters();

} // namespace staggdg
