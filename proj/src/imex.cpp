#include "staggdg/imex.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

namespace staggdg {

ButcherPair tableau(int R) {
  ButcherPair t;
  t.order_index = R;
  if (R == 0) {
    t.stages = 1;
    t.Ae = Eigen::MatrixXd::Zero(1, 1);
    t.Ai = Eigen::MatrixXd::Constant(1, 1, 1.0);
    t.b = Eigen::VectorXd::Constant(1, 1.0);
  } else if (R == 1) {
    const double g = 1.0 - 1.0 / std::sqrt(2.0);
    const double be = 1.0 / (2.0 * g);
    t.stages = 2;
    t.Ae = Eigen::MatrixXd::Zero(2, 2);
    t.Ae(1, 0) = be;
    t.Ai = Eigen::MatrixXd::Zero(2, 2);
    t.Ai(0, 0) = g;
    t.Ai(1, 0) = 1.0 - g;
    t.Ai(1, 1) = g;
    t.b.resize(2);
    t.b << 1.0 - g, g;
  } else if (R == 2) {
    const double g = 0.435866;
    t.stages = 4;
    t.Ae = Eigen::MatrixXd::Zero(4, 4);
    t.Ae(1, 0) = g;
    t.Ae(2, 0) = 1.437745;
    t.Ae(2, 1) = -0.719812;
    t.Ae(3, 0) = 0.916993;
    t.Ae(3, 1) = 0.5;
    t.Ae(3, 2) = -0.416993;
    t.Ai = Eigen::MatrixXd::Zero(4, 4);
    t.Ai(0, 0) = g;
    t.Ai(1, 1) = g;
    t.Ai(2, 1) = 0.282066;
    t.Ai(2, 2) = g;
    t.Ai(3, 1) = 1.208496;
    t.Ai(3, 2) = -0.644363;
    t.Ai(3, 3) = g;
    t.b.resize(4);
    t.b << 0.0, 1.208496, -0.644363, g;
  } else {
    throw std::invalid_argument("tableau: order index must be 0, 1 or 2");
  }
  t.ce = t.Ae.rowwise().sum();
  t.ci = t.Ai.rowwise().sum();
  t.stiffly_accurate = (t.Ai.row(t.stages - 1).transpose() - t.b).cwiseAbs().maxCoeff() < 1e-12;
  return t;
}

std::vector<double> stage_weights(const ButcherPair& tab, int s) {
  std::vector<double> w(s);
  for (int j = 0; j < s; ++j) w[j] = tab.ci[s] - tab.ci[j];
  return w;
}

std::vector<double> final_weights(const ButcherPair& tab) {
  std::vector<double> w(tab.stages);
  const double cend = tab.b.sum();
  for (int j = 0; j < tab.stages; ++j) w[j] = cend - tab.ci[j];
  return w;
}

namespace {

// foot tables are cached per step keyed by the leg list
struct TableCache {
  struct Entry {
    std::vector<TraceLeg> legs;
    FootTable table;
  };
  std::vector<Entry> entries;

  static bool same(const std::vector<TraceLeg>& a, const std::vector<TraceLeg>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i].span != b[i].span || a[i].velocity != b[i].velocity) return false;
    return true;
  }

  const FootTable& get(const Operators& ops, std::vector<TraceLeg> legs, StepStats* stats) {
    std::erase_if(legs, [](const TraceLeg& l) { return l.span == 0.0; });
    for (const auto& e : entries)
      if (same(e.legs, legs)) return e.table;
    entries.push_back({legs, build_foot_table(ops, legs, stats ? &stats->trace : nullptr)});
    if (stats) stats->tables_built++;
    return entries.back().table;
  }
};

bool all_zero(const std::vector<TraceLeg>& legs) {
  for (const auto& l : legs)
    if (l.span != 0.0) return false;
  return true;
}

} // namespace

void imex_step(PhysicsModel& model, ImexFields& q, const ButcherPair& tab, double t, double dt,
               StepStats* stats) {
  const Operators& ops = model.ops();
  const EdgeConditions& bc = model.bc();
  const int Ns = tab.stages;
  const bool has_vel = q.velocity.has_value();
  const MainField* vstatic = model.static_velocity();

  if (has_vel) q.velocity_main = ops.project_dual_to_main(*q.velocity);

  TableCache cache;
  // per-stage: explicit advecting velocity, solved stage fluxes
  std::vector<MainField> vel_stage(Ns);           // 2-comp main velocities
  std::vector<std::vector<MainField>> flux_scalar(Ns);
  std::vector<DualField> flux_vel(Ns);
  std::vector<MainField> flux_vel_main(Ns);
  std::vector<ImexFields> stage_state(Ns);

  auto vel_of = [&](int s) -> const MainField* {
    return vstatic ? vstatic : &vel_stage[s];
  };

  // transported projection of a main field along composite legs
  auto transport_main = [&](const MainField& f, const std::vector<TraceLeg>& legs) -> MainField {
    if (all_zero(legs)) return f;
    return transported_projection(ops, f, cache.get(ops, legs, stats));
  };

  // shifted flux: single-leg alignment through the stage-j velocity
  auto shifted_scalar = [&](int j, std::size_t f, double w) -> MainField {
    if (w == 0.0) return flux_scalar[j][f];
    std::vector<TraceLeg> legs = {{w * dt, vel_of(j)}};
    return transported_projection(ops, flux_scalar[j][f], cache.get(ops, legs, stats));
  };

  for (int s = 0; s < Ns; ++s) {
    const auto w = stage_weights(tab, s);

    // explicit state velocity for the trajectory closure
    if (has_vel && !vstatic) {
      std::vector<TraceLeg> elegs;
      for (int j = 0; j < s; ++j) elegs.push_back({tab.Ae(s, j) * dt, vel_of(j)});
      MainField ve = transport_main(*q.velocity_main, elegs);
      for (int j = 0; j < s; ++j) {
        const double we = tab.ce[s] - tab.ci[j];
        if (tab.Ae(s, j) == 0.0) continue;
        MainField hj = flux_vel_main[j];
        if (we != 0.0) {
          std::vector<TraceLeg> legs = {{we * dt, vel_of(j)}};
          hj = transported_projection(ops, hj, cache.get(ops, legs, stats));
        }
        axpy(dt * tab.Ae(s, j), hj, ve);
      }
      vel_stage[s] = std::move(ve);
    } else if (has_vel && vstatic) {
      // unused
    }

    // implicit composite trajectory legs, diagonal last
    std::vector<TraceLeg> ilegs;
    for (int j = 0; j < s; ++j) ilegs.push_back({tab.Ai(s, j) * dt, vel_of(j)});
    ilegs.push_back({tab.Ai(s, s) * dt, vel_of(s)});

    // assemble q^I_s
    ImexFields qs;
    qs.scalars.reserve(q.scalars.size());
    for (std::size_t f = 0; f < q.scalars.size(); ++f) {
      MainField a = transport_main(q.scalars[f], ilegs);
      for (int j = 0; j < s; ++j) {
        if (tab.Ai(s, j) == 0.0) continue;
        axpy(dt * tab.Ai(s, j), shifted_scalar(j, f, w[j]), a);
      }
      qs.scalars.push_back(std::move(a));
    }
    if (has_vel) {
      MainField am = transport_main(*q.velocity_main, ilegs);
      DualField av = all_zero(ilegs) ? *q.velocity : ops.project_main_to_dual(am, bc);
      for (int j = 0; j < s; ++j) {
        if (tab.Ai(s, j) == 0.0) continue;
        if (w[j] == 0.0) {
          axpy(dt * tab.Ai(s, j), flux_vel[j], av);
        } else {
          std::vector<TraceLeg> legs = {{w[j] * dt, vel_of(j)}};
          MainField hj = transported_projection(ops, flux_vel_main[j],
                                                cache.get(ops, legs, stats));
          axpy(dt * tab.Ai(s, j), ops.project_main_to_dual(hj, bc), av);
        }
      }
      qs.velocity = std::move(av);
    }

    // implicit solve and difference-quotient fluxes
    const double lambda = tab.Ai(s, s) * dt;
    const double t_stage = t + tab.ci[s] * dt;
    ImexFields before = qs;
    model.stage_solve(qs, lambda, t_stage);
    flux_scalar[s].clear();
    for (std::size_t f = 0; f < q.scalars.size(); ++f) {
      MainField h = qs.scalars[f];
      axpy(-1.0, before.scalars[f], h);
      scale(h, 1.0 / lambda);
      flux_scalar[s].push_back(std::move(h));
    }
    if (has_vel) {
      DualField h = *qs.velocity;
      axpy(-1.0, *before.velocity, h);
      scale(h, 1.0 / lambda);
      flux_vel_main[s] = ops.project_dual_to_main(h);
      flux_vel[s] = std::move(h);
    }
    model.apply_boundary_values(qs, t_stage);
    stage_state[s] = std::move(qs);
  }

  if (tab.stiffly_accurate) {
    // the final combination coincides with the last stage
    q.scalars = std::move(stage_state[Ns - 1].scalars);
    if (has_vel) q.velocity = std::move(stage_state[Ns - 1].velocity);
  } else {
    const auto wf = final_weights(tab);
    std::vector<TraceLeg> flegs;
    for (int j = 0; j < Ns; ++j) flegs.push_back({tab.b[j] * dt, vel_of(j)});
    for (std::size_t f = 0; f < q.scalars.size(); ++f) {
      MainField a = transport_main(q.scalars[f], flegs);
      for (int j = 0; j < Ns; ++j) {
        if (tab.b[j] == 0.0) continue;
        axpy(dt * tab.b[j], shifted_scalar(j, f, wf[j]), a);
      }
      q.scalars[f] = std::move(a);
    }
    if (has_vel) {
      MainField am = transport_main(*q.velocity_main, flegs);
      DualField av = all_zero(flegs) ? *q.velocity : ops.project_main_to_dual(am, bc);
      for (int j = 0; j < Ns; ++j) {
        if (tab.b[j] == 0.0) continue;
        if (wf[j] == 0.0) {
          axpy(dt * tab.b[j], flux_vel[j], av);
        } else {
          std::vector<TraceLeg> legs = {{wf[j] * dt, vel_of(j)}};
          MainField hj = transported_projection(ops, flux_vel_main[j],
                                                cache.get(ops, legs, stats));
          axpy(dt * tab.b[j], ops.project_main_to_dual(hj, bc), av);
        }
      }
      q.velocity = std::move(av);
    }
    model.apply_boundary_values(q, t + dt);
  }
  if (has_vel) q.velocity_main = ops.project_dual_to_main(*q.velocity);
}

} // namespace staggdg
