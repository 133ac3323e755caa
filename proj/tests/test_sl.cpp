#include "doctest.h"

#include <cmath>
#include <random>

#include "staggdg/semi_lagrangian.hpp"
#include "support/oracles.hpp"

using namespace staggdg;
using staggdg::testing::jiggled_square;

namespace {

MainField velocity_field(const Operators& ops, double (*u)(const Vec2&), double (*v)(const Vec2&)) {
  return ops.project_function(2, [&](const Vec2& x, int c) { return c == 0 ? u(x) : v(x); });
}

} // namespace

TEST_CASE("zero velocity: foot equals start") {
  ReferenceOperatorSet ref(2);
  auto mesh = jiggled_square(3, 1);
  Operators ops(mesh, ref);
  MainField v(mesh.num_elements(), 2, ref.nphi());
  int cell = 4;
  Vec2 x = mesh.centroid(4), tr = Vec2::Zero();
  trace_displacement(ops, v, 0.8, cell, x, tr);
  CHECK(cell == 4);
  CHECK((x - mesh.centroid(4)).norm() == 0.0);
}

TEST_CASE("constant velocity: exact straight feet, including periodic wrap") {
  ReferenceOperatorSet ref(2);
  auto mesh = jiggled_square(5, 3, true, true);
  Operators ops(mesh, ref);
  MainField v = ops.project_function(2, [](const Vec2&, int c) { return c == 0 ? 0.31 : -0.17; });
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> u01(0.05, 0.95);
  for (int t = 0; t < 50; ++t) {
    const Vec2 x0(u01(rng), u01(rng));
    auto loc = mesh.locate(x0, 0);
    int cell = loc.element;
    Vec2 x = x0, tr = Vec2::Zero();
    const double span = 2.3;  // long enough to wrap both axes
    trace_displacement(ops, v, span, cell, x, tr);
    const Vec2 want = x0 - span * Vec2(0.31, -0.17);
    // unwrapped foot = recorded position minus the accumulated translation
    CHECK(((x - tr) - want).norm() < 1e-10);
    // recorded cell contains the recorded position
    const Vec2 r = mesh.elem_map(cell).to_reference(x);
    CHECK(std::min({r.x(), r.y(), 1 - r.x() - r.y()}) > -1e-9);
  }
}

TEST_CASE("v=(x,0): feet match a dense ODE oracle") {
  ReferenceOperatorSet ref(2);
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> tris;
  generate_rect_mesh(0.2, 2.2, 0, 1, 10, 5, nodes, tris);
  auto mesh = StaggeredMesh::build(nodes, tris);
  Operators ops(mesh, ref);
  MainField v = ops.project_function(2, [](const Vec2& x, int c) { return c == 0 ? x.x() : 0.0; });
  // backward along dx/ds = -x from x0 over span s: x(s) = x0 * exp(-s)
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> ux(0.5, 2.0), uy(0.1, 0.9);
  const double span = 0.6;
  double coarse_max = 0.0, fine_max = 0.0;
  for (int t = 0; t < 30; ++t) {
    const Vec2 x0(ux(rng), uy(rng));
    auto loc = mesh.locate(x0, 0);
    const Vec2 want(x0.x() * std::exp(-span), x0.y());

    int cell = loc.element;
    Vec2 x = x0, tr = Vec2::Zero();
    TraceStats st;
    trace_displacement(ops, v, span, cell, x, tr, &st);
    const double err = (x - want).norm();
    coarse_max = std::max(coarse_max, err);
    // the contract bound: error at most O(span^2 / substeps)
    CHECK(err < span * span / double(std::max<long>(1, st.substeps)));

    // chaining eight legs of span/8 must shrink the error by a high-order factor
    cell = loc.element;
    x = x0;
    tr = Vec2::Zero();
    for (int m = 0; m < 8; ++m) trace_displacement(ops, v, span / 8, cell, x, tr);
    fine_max = std::max(fine_max, (x - want).norm());
  }
  CHECK(coarse_max < 1e-4);
  CHECK(fine_max < coarse_max / 50.0);
}

TEST_CASE("foot table: zero spans give quadrature points; bookkeeping counts") {
  ReferenceOperatorSet ref(3);
  auto mesh = jiggled_square(3, 9);
  Operators ops(mesh, ref);
  MainField v = velocity_field(ops, [](const Vec2&) { return 0.4; }, [](const Vec2&) { return 0.1; });
  std::vector<TraceLeg> legs = {{0.0, &v}};
  auto ft = build_foot_table(ops, legs);
  CHECK(ft.ne == mesh.num_elements());
  CHECK(ft.ng == int(ops.ref().volume_rule().points.size()));
  CHECK(ft.cell.size() == std::size_t(ft.ne) * ft.ng);
  for (int i = 0; i < ft.ne; ++i)
    for (int g = 0; g < ft.ng; ++g) {
      CHECK(ft.cell[ft.index(i, g)] == i);
      CHECK((ft.ref[ft.index(i, g)] - ops.ref().volume_rule().points[g]).norm() == 0.0);
    }
}

TEST_CASE("uniform translation by one period lands on congruent points") {
  ReferenceOperatorSet ref(2);
  auto mesh = jiggled_square(4, 12, true, false);
  Operators ops(mesh, ref);
  MainField v = velocity_field(ops, [](const Vec2&) { return 1.0; }, [](const Vec2&) { return 0.0; });
  std::vector<TraceLeg> legs = {{1.0, &v}};  // exactly one x-period upstream
  auto ft = build_foot_table(ops, legs);
  const auto& rule = ops.ref().volume_rule();
  for (int i = 0; i < ft.ne; i += 5)
    for (int g = 0; g < ft.ng; g += 3) {
      const std::size_t q = ft.index(i, g);
      const Vec2 start = mesh.elem_map(i).to_physical(rule.points[g]);
      const Vec2 foot = mesh.elem_map(ft.cell[q]).to_physical(ft.ref[q]);
      CHECK((foot - ft.translation[q] - (start - Vec2(1.0, 0.0))).norm() < 1e-9);
      CHECK(ft.translation[q].x() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("interpolation: constants, global polynomials, edge tie-break") {
  ReferenceOperatorSet ref(3);
  auto mesh = jiggled_square(4, 6, true, true);
  Operators ops(mesh, ref);
  MainField v = velocity_field(ops, [](const Vec2& x) { return 0.3 + 0.1 * x.y(); },
                               [](const Vec2& x) { return -0.2 + 0.05 * x.x(); });
  std::vector<TraceLeg> legs = {{0.37, &v}};
  auto ft = build_foot_table(ops, legs);

  MainField cf(mesh.num_elements(), 1, ref.nphi());
  for (auto& e : cf.a) e = -2.5;
  std::vector<double> vals(ft.cell.size());
  interpolate_at_feet(ops, cf, 0, ft, vals);
  for (double s : vals) CHECK(s == doctest::Approx(-2.5).epsilon(1e-13));

  // degree <= p global polynomial is sampled exactly wherever the foot is
  auto poly = [](const Vec2& x) { return 0.2 + x.x() - 0.5 * x.y() + 0.25 * x.x() * x.y(); };
  // feet may cross periodic seams; evaluate the polynomial at the local
  // (wrapped) representative which is what the DG field stores
  MainField pf = ops.project_function(1, [&](const Vec2& x, int) { return poly(x); });
  interpolate_at_feet(ops, pf, 0, ft, vals);
  for (std::size_t q = 0; q < vals.size(); ++q) {
    const Vec2 local = mesh.elem_map(ft.cell[q]).to_physical(ft.ref[q]);
    CHECK(std::abs(vals[q] - poly(local)) < 1e-11);
  }

  // a foot exactly on a shared edge samples the lower-indexed cell
  int j_int = -1;
  for (int j = 0; j < mesh.num_edges(); ++j)
    if (!mesh.is_boundary(j) && !mesh.is_periodic(j)) {
      j_int = j;
      break;
    }
  REQUIRE(j_int >= 0);
  MainField step(mesh.num_elements(), 1, ref.nphi());
  for (int i = 0; i < mesh.num_elements(); ++i)
    for (int k = 0; k < ref.nphi(); ++k) step.at(i, 0, k) = double(i);
  const Vec2 mid = 0.5 * (mesh.edge_node(j_int, 0) + mesh.edge_node(j_int, 1));
  auto loc = mesh.locate(mid, mesh.left_of(j_int));
  CHECK(loc.element == std::min(mesh.left_of(j_int), mesh.right_of(j_int)));
  const double got = ops.eval_main(step, loc.element, 0, loc.ref);
  CHECK(got == doctest::Approx(double(std::min(mesh.left_of(j_int), mesh.right_of(j_int)))));
}

TEST_CASE("transported projection: identity at zero displacement, constants always") {
  ReferenceOperatorSet ref(3);
  auto mesh = jiggled_square(4, 16, true, true);
  Operators ops(mesh, ref);

  // zero displacement reproduces any in-space field
  MainField f = ops.project_function(
      1, [](const Vec2& x, int) { return std::pow(x.x(), 3) - 2 * x.x() * x.y() + 0.3; });
  auto ft0 = identity_feet(ops);
  MainField f2 = transported_projection(ops, f, ft0);
  for (std::size_t q = 0; q < f.a.size(); ++q) CHECK(std::abs(f.a[q] - f2.a[q]) < 1e-11);

  // constants preserved under arbitrary smooth velocity and span
  MainField v = velocity_field(
      ops, [](const Vec2& x) { return std::sin(2 * x.y()) + 1.2; },
      [](const Vec2& x) { return std::cos(3 * x.x()) - 0.4; });
  std::vector<TraceLeg> legs = {{0.9, &v}, {-0.35, &v}};
  TraceStats stats;
  auto ft = build_foot_table(ops, legs, &stats);
  MainField cf(mesh.num_elements(), 1, ref.nphi());
  for (auto& e : cf.a) e = 4.2;
  MainField ct = transported_projection(ops, cf, ft);
  for (double e : ct.a) CHECK(e == doctest::Approx(4.2).epsilon(1e-12));
  // locality: each sub-step inspects at most its crossing neighbor
  CHECK(stats.neighbor_hops <= stats.substeps);
}

TEST_CASE("safety cap trips on absurd span") {
  ReferenceOperatorSet ref(1);
  auto mesh = jiggled_square(3, 2, true, true);
  Operators ops(mesh, ref);
  MainField v = velocity_field(ops, [](const Vec2&) { return 1.0; }, [](const Vec2&) { return 0.0; });
  int cell = 0;
  Vec2 x = mesh.centroid(0), tr = Vec2::Zero();
  CHECK_THROWS(trace_displacement(ops, v, 1e6, cell, x, tr));
}
