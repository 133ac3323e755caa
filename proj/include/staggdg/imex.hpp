#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "staggdg/krylov.hpp"
#include "staggdg/semi_lagrangian.hpp"

namespace staggdg {

/// Paired explicit/implicit Runge-Kutta tableaux sharing the weights b.
struct ButcherPair {
  int order_index = 0;  // R in {0,1,2}; formal order R+1
  int stages = 0;
  Eigen::MatrixXd Ae;  // explicit, strictly lower triangular
  Eigen::MatrixXd Ai;  // implicit, lower triangular, nonzero diagonal
  Eigen::VectorXd b;
  Eigen::VectorXd ce, ci;  // abscissae (row sums)
  bool stiffly_accurate = false;
};

ButcherPair tableau(int order_index);

/// Lagrangian alignment weights: flux j consumed at stage s (0-based) is
/// shifted upstream by (c_s - c_j)*dt; in the final combination by
/// (1 - c_j)*dt. Positive weights displace upstream.
std::vector<double> stage_weights(const ButcherPair& tab, int s);
std::vector<double> final_weights(const ButcherPair& tab);

/// State fields shuttled by the IMEX driver. Scalars live on the main grid;
/// the velocity (when the model evolves one) lives on the dual grid with a
/// main-grid mirror maintained by the driver.
struct ImexFields {
  std::vector<MainField> scalars;
  std::optional<DualField> velocity;
  std::optional<MainField> velocity_main;  // 2-comp mirror of `velocity`
};

class PhysicsModel {
 public:
  virtual ~PhysicsModel() = default;
  virtual const Operators& ops() const = 0;
  virtual const EdgeConditions& bc() const = 0;
  // non-null: a fixed advecting velocity field (prescribed-transport models)
  virtual const MainField* static_velocity() const { return nullptr; }
  // in-place implicit stage solve at weight lambda = a_ss*dt and stage time t
  virtual void stage_solve(ImexFields& q, double lambda, double t) = 0;
  // boundary-value refresh after a stage or the final combination
  virtual void apply_boundary_values(ImexFields& q, double t) {}
};

struct StepStats {
  long tables_built = 0;
  TraceStats trace;
};

/// One SL-IMEX step from t to t+dt: composite explicit/implicit trajectories,
/// transported state and shifted stage fluxes, per-stage implicit solves, and
/// the final b-weighted combination (identical to the last stage for stiffly
/// accurate tableaux).
void imex_step(PhysicsModel& model, ImexFields& q, const ButcherPair& tab, double t, double dt,
               StepStats* stats = nullptr);

} // namespace staggdg
