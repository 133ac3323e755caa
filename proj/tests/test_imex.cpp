#include "doctest.h"

#include <cmath>
#include <random>

#include "staggdg/imex.hpp"
#include "staggdg/models.hpp"
#include "staggdg/harness.hpp"
#include "support/oracles.hpp"

using namespace staggdg;
using staggdg::testing::jiggled_square;

TEST_CASE("tableaux: appendix coefficients, row sums, stiff accuracy") {
  auto t0 = tableau(0);
  CHECK(t0.stages == 1);
  CHECK(t0.Ae(0, 0) == 0.0);
  CHECK(t0.Ai(0, 0) == 1.0);
  CHECK(t0.b[0] == 1.0);
  CHECK(t0.stiffly_accurate);

  auto t1 = tableau(1);
  const double g1 = 1.0 - 1.0 / std::sqrt(2.0);
  CHECK(t1.Ai(0, 0) == doctest::Approx(0.2928932188).epsilon(1e-9));
  CHECK(t1.Ae(1, 0) == doctest::Approx(1.7071067812).epsilon(1e-9));  // beta = 1/(2 gamma)
  CHECK(t1.Ae(1, 0) == doctest::Approx(1.0 / (2.0 * g1)).epsilon(1e-13));
  CHECK(t1.b[0] == doctest::Approx(1.0 - g1));
  CHECK(t1.b[1] == doctest::Approx(g1));
  CHECK(t1.ci[1] == doctest::Approx(1.0));
  CHECK(t1.stiffly_accurate);

  auto t2 = tableau(2);
  CHECK(t2.stages == 4);
  // printed abscissae are reproduced by the row sums to 1e-6
  CHECK(std::abs(t2.ci[2] - 0.717933) <= 1e-6 + 1e-12);
  CHECK(std::abs(t2.ce[2] - 0.717933) < 1e-6);
  CHECK(std::abs(t2.ci[3] - 1.0) <= 1e-6 + 1e-12);
  CHECK(std::abs(t2.ce[3] - 1.0) < 1e-6);
  CHECK(t2.b[0] == 0.0);
  CHECK(t2.b[1] == doctest::Approx(1.208496));
  CHECK(t2.b[2] == doctest::Approx(-0.644363));
  CHECK(t2.b[3] == doctest::Approx(0.435866));
  CHECK(t2.stiffly_accurate);
  // order conditions hold to the printed precision
  double bc = 0, bc2 = 0, bAc = 0;
  for (int i = 0; i < 4; ++i) {
    bc += t2.b[i] * t2.ci[i];
    bc2 += t2.b[i] * t2.ci[i] * t2.ci[i];
    double Ac = 0;
    for (int j = 0; j < 4; ++j) Ac += t2.Ai(i, j) * t2.ci[j];
    bAc += t2.b[i] * Ac;
  }
  CHECK(std::abs(t2.b.sum() - 1.0) < 5e-6);
  CHECK(std::abs(bc - 0.5) < 5e-6);
  CHECK(std::abs(bc2 - 1.0 / 3.0) < 5e-5);
  CHECK(std::abs(bAc - 1.0 / 6.0) < 5e-5);

  CHECK_THROWS(tableau(3));
}

TEST_CASE("alignment weights: last-stage and final shifts coincide for SA tableaux") {
  for (int R : {0, 1, 2}) {
    auto tab = tableau(R);
    auto wf = final_weights(tab);
    CHECK(wf.back() == doctest::Approx(0.0).epsilon(1e-9));  // c_Ns = 1
    auto ws = stage_weights(tab, tab.stages - 1);
    for (int j = 0; j < tab.stages - 1; ++j) CHECK(ws[j] == doctest::Approx(wf[j]).epsilon(1e-12));
  }
  auto t1 = tableau(1);
  auto w = stage_weights(t1, 1);
  CHECK(w[0] == doctest::Approx(1.0 - t1.ci[0]));  // c_2 - c_1 = 1 - gamma
}

namespace {

struct Setup {
  StaggeredMesh mesh;
  ReferenceOperatorSet ref;
  Operators ops;
  EdgeConditions bc;
  Setup(int n, int p, bool periodic, unsigned seed = 3, EdgeKind bk = EdgeKind::Ghost)
      : mesh(jiggled_square(n, seed, periodic, periodic)),
        ref(p),
        ops(mesh, ref),
        bc(mesh, bk) {}
};

} // namespace

TEST_CASE("imex step: zero velocity, zero diffusion leaves the state unchanged") {
  Setup s(3, 2, true);
  ModelParams par;
  par.kappa = 0.0;
  AdvectionDiffusionModel model(s.ops, s.bc, par, [](const Vec2&) { return Vec2(0, 0); });
  ImexFields q;
  q.scalars.push_back(s.ops.project_function(1, [](const Vec2& x, int) {
    return std::sin(3 * x.x()) * x.y() + 0.3;
  }));
  MainField before = q.scalars[0];
  for (int R : {0, 1, 2}) {
    auto tab = tableau(R);
    imex_step(model, q, tab, 0.0, 0.4);
    for (std::size_t k = 0; k < before.a.size(); ++k)
      CHECK(q.scalars[0].a[k] == doctest::Approx(before.a[k]).epsilon(1e-13));
  }
}

TEST_CASE("pure diffusion R=0 equals dense backward Euler") {
  // two-triangle mesh, kappa-diffusion only: one backward-Euler solve
  ReferenceOperatorSet ref(1);
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> tris;
  generate_rect_mesh(0, 1, 0, 1, 1, 1, nodes, tris);
  auto mesh = StaggeredMesh::build(nodes, tris);
  Operators ops(mesh, ref);
  EdgeConditions bc(mesh);
  ModelParams par;
  par.kappa = 0.05;
  par.cg_tol = 1e-13;
  AdvectionDiffusionModel model(ops, bc, par, [](const Vec2&) { return Vec2(0, 0); });
  ImexFields q;
  q.scalars.push_back(ops.project_function(1, [](const Vec2& x, int) { return x.x() * x.x() + x.y(); }));
  MainField c0 = q.scalars[0];
  const double dt = 0.3;
  imex_step(model, q, tableau(0), 0.0, dt);
  // dense oracle: (M - kappa dt L) c1 = M c0 built columnwise from the operator
  const int n = mesh.num_elements() * ref.nphi();
  Eigen::MatrixXd A(n, n);
  for (int j = 0; j < n; ++j) {
    MainField e(mesh.num_elements(), 1, ref.nphi());
    e.a[j] = 1.0;
    MainField out(mesh.num_elements(), 1, ref.nphi());
    diffusion_operator_apply(ops, bc, par.kappa, dt, e, out);
    for (int i = 0; i < n; ++i) A(i, j) = out.a[i];
  }
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < mesh.num_elements(); ++i) {
    Eigen::Map<const Eigen::VectorXd> ci(c0.block(i, 0), ref.nphi());
    rhs.segment(i * ref.nphi(), ref.nphi()) = mesh.jac_det(i) * (ref.mass_main_ref() * ci);
  }
  Eigen::VectorXd want = A.lu().solve(rhs);
  for (int i = 0; i < n; ++i) CHECK(std::abs(q.scalars[0].a[i] - want[i]) < 1e-10);
}

TEST_CASE("solver-call accounting: one diffusion solve per stage for advection-diffusion") {
  Setup s(3, 2, true);
  ModelParams par;
  par.kappa = 1e-3;
  AdvectionDiffusionModel model(s.ops, s.bc, par,
                                [](const Vec2&) { return Vec2(0.25, -0.1); });
  ImexFields q;
  q.scalars.push_back(s.ops.project_function(1, [](const Vec2& x, int) {
    return std::exp(-8 * (x - Vec2(0.5, 0.5)).squaredNorm());
  }));
  for (int R : {0, 1, 2}) {
    auto tab = tableau(R);
    const long before = solve_counters().diffusion;
    imex_step(model, q, tab, 0.0, 0.05);
    CHECK(solve_counters().diffusion - before == tab.stages);
  }
}

TEST_CASE("temporal order on joint dt/mesh refinement (variable-velocity diffusion)") {
  // reduced version of the space-dependent transport-diffusion benchmark:
  // velocity (-x, 0), kappa = 0.1, exact solution known; refining mesh and dt
  // together isolates the scheme order the same way the full studies do
  RunConfig cfg = RunConfig::case_defaults("advdiff_varvel");
  cfg.set("p", "3");
  cfg.set("nx", "44");
  cfg.set("ny", "4");
  const double want[3] = {0.8, 1.8, 2.6};
  for (int R : {0, 1, 2}) {
    cfg.set("imex_order", std::to_string(R));
    auto rows = convergence_study(cfg, 2);
    REQUIRE(rows.size() == 2);
    CHECK(rows[1].order > want[R]);
  }
}
