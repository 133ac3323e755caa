#include "staggdg/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>

namespace staggdg {

namespace {

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

struct EdgeKey {
  int a, b;
  bool operator<(const EdgeKey& o) const { return a != o.a ? a < o.a : b < o.b; }
};
EdgeKey key(int m, int n) { return m < n ? EdgeKey{m, n} : EdgeKey{n, m}; }

} // namespace

StaggeredMesh StaggeredMesh::build(std::vector<Vec2> nodes,
                                   std::vector<std::array<int, 3>> triangles,
                                   const BuildOptions& opts) {
  StaggeredMesh m;
  m.nodes_ = std::move(nodes);
  m.tris_ = std::move(triangles);
  m.opts_ = opts;

  const int ne = m.num_elements();
  if (ne == 0) throw std::invalid_argument("mesh: no triangles");

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& p : m.nodes_) {
    xmin = std::min(xmin, p.x());
    xmax = std::max(xmax, p.x());
    ymin = std::min(ymin, p.y());
    ymax = std::max(ymax, p.y());
  }
  m.bbox_ = {xmin, xmax, ymin, ymax};
  const double extent = std::max(xmax - xmin, ymax - ymin);

  // orient positively, reject degenerate elements
  for (int i = 0; i < ne; ++i) {
    auto& t = m.tris_[i];
    for (int v : t)
      if (v < 0 || v >= m.num_nodes()) throw std::invalid_argument("mesh: node index out of range");
    const Vec2 a = m.nodes_[t[0]], b = m.nodes_[t[1]], c = m.nodes_[t[2]];
    const double s = cross2(b - a, c - a);
    if (std::abs(s) < 1e-14 * extent * extent)
      throw std::invalid_argument("mesh: degenerate (zero-area) triangle");
    if (s < 0) std::swap(t[1], t[2]);
  }

  // collect edges; slot s of tri i connects local nodes (s, (s+1)%3)
  struct ERec {
    int t0 = -1, t1 = -1;
    int n0 = -1, n1 = -1;  // node pair of first copy
  };
  std::map<EdgeKey, int> index;
  std::vector<ERec> recs;
  std::vector<std::array<int, 3>> tri_edges(ne, {-1, -1, -1});
  for (int i = 0; i < ne; ++i) {
    const auto& t = m.tris_[i];
    for (int s = 0; s < 3; ++s) {
      const int a = t[s], b = t[(s + 1) % 3];
      auto [it, inserted] = index.try_emplace(key(a, b), static_cast<int>(recs.size()));
      if (inserted) recs.push_back(ERec{i, -1, a, b});
      else {
        ERec& r = recs[it->second];
        if (r.t1 >= 0) throw std::invalid_argument("mesh: non-conforming (edge shared by >2 triangles)");
        r.t1 = i;
      }
      tri_edges[i][s] = it->second;
    }
  }

  // periodic pairing by translated midpoints
  std::vector<int> remap(recs.size());
  for (std::size_t j = 0; j < recs.size(); ++j) remap[j] = static_cast<int>(j);
  std::vector<Vec2> pshift(recs.size(), Vec2::Zero());
  std::vector<bool> pflag(recs.size(), false);
  auto pair_axis = [&](int axis) {
    const double lo = axis == 0 ? xmin : ymin;
    const double hi = axis == 0 ? xmax : ymax;
    const double tol = 1e-9 * std::max(extent, 1.0);
    std::vector<int> side_lo, side_hi;
    for (std::size_t j = 0; j < recs.size(); ++j) {
      if (recs[j].t1 >= 0) continue;
      const Vec2 mid = 0.5 * (m.nodes_[recs[j].n0] + m.nodes_[recs[j].n1]);
      const double coord = axis == 0 ? mid.x() : mid.y();
      const Vec2 d = m.nodes_[recs[j].n1] - m.nodes_[recs[j].n0];
      const double along = axis == 0 ? d.x() : d.y();
      if (std::abs(along) > tol) continue;  // edge not on a face orthogonal to this axis... keep if on the axis planes
      if (std::abs(coord - lo) < tol) side_lo.push_back(static_cast<int>(j));
      else if (std::abs(coord - hi) < tol) side_hi.push_back(static_cast<int>(j));
    }
    if (side_lo.size() != side_hi.size())
      throw std::invalid_argument("mesh: periodic axis requested but boundary edges do not pair");
    Vec2 T = Vec2::Zero();
    T[axis] = hi - lo;
    for (int jl : side_lo) {
      const Vec2 mid_l = 0.5 * (m.nodes_[recs[jl].n0] + m.nodes_[recs[jl].n1]);
      int match = -1;
      for (int jh : side_hi) {
        if (remap[jh] != jh ? false : true) {
          const Vec2 mid_h = 0.5 * (m.nodes_[recs[jh].n0] + m.nodes_[recs[jh].n1]);
          if ((mid_h - (mid_l + T)).norm() < tol && recs[jh].t1 < 0 && remap[jh] == jh && !pflag[jh]) {
            match = jh;
            break;
          }
        }
      }
      if (match < 0)
        throw std::invalid_argument("mesh: periodic axis requested but boundary edges do not pair");
      // merge: the K copy with the LOWER triangle index keeps the geometry
      const int ta = recs[jl].t0, tb = recs[match].t0;
      int keep = jl, drop = match;
      Vec2 keep_to_drop = T;  // drop side = keep side + T when keep is the low side
      if (tb < ta) {
        std::swap(keep, drop);
        keep_to_drop = -T;
      }
      recs[keep].t1 = recs[drop].t0;
      remap[drop] = keep;
      pshift[keep] = keep_to_drop;  // l-frame -> r-frame translation
      pflag[keep] = true;
      pflag[drop] = true;
    }
  };
  if (opts.periodic_x) pair_axis(0);
  if (opts.periodic_y) pair_axis(1);

  // compact surviving edges
  std::vector<int> newid(recs.size(), -1);
  for (std::size_t j = 0; j < recs.size(); ++j) {
    if (remap[j] != static_cast<int>(j)) continue;
    newid[j] = m.num_edges();
    const ERec& r = recs[j];
    m.edge_nodes_.push_back({r.n0, r.n1});
    int l = r.t0, rr = r.t1;
    Vec2 sh = pflag[j] ? pshift[j] : Vec2::Zero();
    if (rr >= 0 && rr < l) {
      std::swap(l, rr);
      sh = -sh;
      // geometry copy belongs to the original t0; after the swap the stored
      // nodes live in the r-frame. Move them into the new l-frame.
      if (pflag[j]) {
        // nodes stored are on t0's side which is now the right triangle
        m.edge_nodes_.back() = {r.n0, r.n1};
      }
    }
    m.left_.push_back(l);
    m.right_.push_back(rr);
    m.periodic_.push_back(pflag[j]);
    m.shift_.push_back(sh);
  }
  // route dropped copies to their merged edge
  for (std::size_t j = 0; j < recs.size(); ++j)
    if (remap[j] != static_cast<int>(j)) newid[j] = newid[remap[j]];
  m.edges_of_.resize(ne);
  for (int i = 0; i < ne; ++i)
    for (int s = 0; s < 3; ++s) m.edges_of_[i][s] = newid[tri_edges[i][s]];

  // geometry
  m.centroid_.resize(ne);
  m.area_.resize(ne);
  m.map_.resize(ne);
  for (int i = 0; i < ne; ++i) {
    const auto& t = m.tris_[i];
    const Vec2 a = m.nodes_[t[0]], b = m.nodes_[t[1]], c = m.nodes_[t[2]];
    m.centroid_[i] = (a + b + c) / 3.0;
    m.map_[i] = TriMap(a, b, c);
    m.area_[i] = 0.5 * m.map_[i].det;
    m.max_diam_ = std::max({m.max_diam_, (b - a).norm(), (c - b).norm(), (a - c).norm()});
  }

  // edge orientation and normals: left centroid must lie left of e1->e2.
  // For periodic edges the left triangle's frame hosts the stored nodes when
  // l(j) was the original t0; otherwise shift them into l's frame.
  const int nd = m.num_edges();
  m.e1_.resize(nd);
  m.e2_.resize(nd);
  m.normal_.resize(nd);
  m.edge_len_.resize(nd);
  for (int j = 0; j < nd; ++j) {
    Vec2 p1 = m.nodes_[m.edge_nodes_[j][0]];
    Vec2 p2 = m.nodes_[m.edge_nodes_[j][1]];
    const int l = m.left_[j];
    // ensure stored nodes belong to l's frame: they do unless the left
    // triangle is the periodic partner; detect by checking the edge's nodes
    // against l's node set
    bool in_l = false;
    for (int s = 0; s < 3; ++s)
      if (m.edges_of_[l][s] == j) {
        const int a = m.tris_[l][s], b = m.tris_[l][(s + 1) % 3];
        in_l = (key(a, b).a == key(m.edge_nodes_[j][0], m.edge_nodes_[j][1]).a &&
                key(a, b).b == key(m.edge_nodes_[j][0], m.edge_nodes_[j][1]).b);
      }
    if (!in_l) {
      // stored copy is the r-side one; bring into l frame (r-frame - shift)
      p1 -= m.shift_[j];
      p2 -= m.shift_[j];
    }
    const Vec2 bl = m.centroid_[l];
    if (cross2(p2 - p1, bl - p1) < 0) std::swap(p1, p2);
    m.e1_[j] = p1;
    m.e2_[j] = p2;
    const Vec2 d = p2 - p1;
    m.edge_len_[j] = d.norm();
    if (m.edge_len_[j] <= 0) throw std::invalid_argument("mesh: zero-length edge");
    m.normal_[j] = Vec2(d.y(), -d.x()) / m.edge_len_[j];
  }

  // sub-triangle jacobians A_ij = 2|T_ij|
  m.sub_det_.assign(3 * ne, 0.0);
  for (int i = 0; i < ne; ++i)
    for (int s = 0; s < 3; ++s) {
      const int j = m.edges_of_[i][s];
      const TriMap dm = m.dual_side_map(i, j);
      if (dm.det <= 0) throw std::logic_error("mesh: negative sub-triangle jacobian");
      m.sub_det_[3 * i + s] = dm.det;
    }
  return m;
}

int StaggeredMesh::local_slot(int i, int j) const {
  for (int s = 0; s < 3; ++s)
    if (edges_of_[i][s] == j) return s;
  throw std::invalid_argument("local_slot: edge not incident to element");
}

int StaggeredMesh::neighbor(int i, int j) const {
  if (left_[j] == i) return right_[j];
  if (right_[j] == i) return left_[j];
  throw std::invalid_argument("neighbor: edge not incident to element");
}

int StaggeredMesh::sigma(int i, int j) const {
  if (left_[j] == i) return 1;
  if (right_[j] == i) return -1;
  throw std::invalid_argument("sigma: edge not incident to element");
}

TriMap StaggeredMesh::dual_side_map(int i, int j) const {
  // reference (0,0) -> b_i, (1,0)/(0,1) -> edge nodes as seen from side i
  Vec2 p1 = e1_[j], p2 = e2_[j];
  Vec2 b = centroid_[i];
  if (left_[j] == i) return TriMap(b, p1, p2);
  if (right_[j] != i) throw std::invalid_argument("dual_side_map: edge not incident");
  // right side: edge stored in l-frame; shift it into i's frame, swap
  // orientation so the jacobian stays positive
  p1 += shift_[j];
  p2 += shift_[j];
  return TriMap(b, p2, p1);
}

Vec2 StaggeredMesh::wrap(const Vec2& x) const {
  Vec2 y = x;
  if (opts_.periodic_x) {
    const double L = bbox_[1] - bbox_[0];
    y.x() = bbox_[0] + std::fmod(std::fmod(y.x() - bbox_[0], L) + L, L);
  }
  if (opts_.periodic_y) {
    const double L = bbox_[3] - bbox_[2];
    y.y() = bbox_[2] + std::fmod(std::fmod(y.y() - bbox_[2], L) + L, L);
  }
  return y;
}

StaggeredMesh::Location StaggeredMesh::locate(const Vec2& x_in, int hint) const {
  const Vec2 x = wrap(x_in);
  const double tol = 1e-12;
  const int ne = num_elements();
  int cur = (hint >= 0 && hint < ne) ? hint : 0;

  auto bary = [&](int i, const Vec2& pt, Vec2& ref) {
    ref = map_[i].to_reference(pt);
    return std::min({ref.x(), ref.y(), 1.0 - ref.x() - ref.y()});
  };

  auto contains = [&](int i, Vec2& ref) { return bary(i, x, ref) >= -tol; };

  Vec2 ref;
  int found = -1;
  // greedy walk toward the most violated face
  for (int step = 0; step <= ne; ++step) {
    const double b = bary(cur, x, ref);
    if (b >= -tol) {
      found = cur;
      break;
    }
    // barycentric coordinates (lam0, lam1, lam2) = (1-xi-eta, xi, eta);
    // most negative one decides the exit edge (opposite the vertex)
    const double l0 = 1.0 - ref.x() - ref.y(), l1 = ref.x(), l2 = ref.y();
    int slot;  // edge slots: 0=(v0,v1) has lam2=0, 1=(v1,v2) has lam0=0, 2=(v2,v0) has lam1=0
    if (l2 <= l0 && l2 <= l1) slot = 0;
    else if (l0 <= l1) slot = 1;
    else slot = 2;
    const int j = edges_of_[cur][slot];
    const int nb = (left_[j] == cur) ? right_[j] : left_[j];
    if (nb < 0) break;
    if (periodic_[j]) {
      // walking across a periodic edge: bring x into the neighbor frame is
      // handled by wrap(); just continue the walk, the wrapped x should be
      // reachable; restart from neighbor
    }
    cur = nb;
  }
  if (found < 0) {
    // fallback: exhaustive scan
    for (int i = 0; i < ne; ++i)
      if (contains(i, ref)) {
        found = i;
        break;
      }
  }
  if (found < 0) throw std::domain_error("locate: point outside mesh");
  // tie-break on shared edges: lowest containing element index wins
  bary(found, x, ref);
  const double l0 = 1.0 - ref.x() - ref.y(), l1 = ref.x(), l2 = ref.y();
  const double near[3] = {l2, l0, l1};  // per slot, the vanishing coordinate
  int best = found;
  Vec2 bestref = ref;
  for (int s = 0; s < 3; ++s) {
    if (std::abs(near[s]) <= tol) {
      const int j = edges_of_[found][s];
      const int nb = (left_[j] == found) ? right_[j] : left_[j];
      if (nb >= 0 && nb < best && !periodic_[j]) {
        Vec2 r2;
        if (contains(nb, r2)) {
          best = nb;
          bestref = r2;
        }
      }
    }
  }
  return Location{best, bestref};
}

double StaggeredMesh::mean_incircle_radius() const {
  double s = 0.0;
  for (int i = 0; i < num_elements(); ++i) {
    const auto& t = tris_[i];
    const double a = (nodes_[t[1]] - nodes_[t[0]]).norm();
    const double b = (nodes_[t[2]] - nodes_[t[1]]).norm();
    const double c = (nodes_[t[0]] - nodes_[t[2]]).norm();
    s += 2.0 * area_[i] / (a + b + c);
  }
  return s / num_elements();
}

void generate_rect_mesh(double xmin, double xmax, double ymin, double ymax, int nx, int ny,
                        std::vector<Vec2>& nodes, std::vector<std::array<int, 3>>& triangles) {
  if (nx < 1 || ny < 1 || xmax <= xmin || ymax <= ymin)
    throw std::invalid_argument("generate_rect_mesh: bad arguments");
  nodes.clear();
  triangles.clear();
  const double dx = (xmax - xmin) / nx, dy = (ymax - ymin) / ny;
  auto id = [&](int ix, int iy) { return iy * (nx + 1) + ix; };
  for (int iy = 0; iy <= ny; ++iy)
    for (int ix = 0; ix <= nx; ++ix)
      nodes.emplace_back(xmin + ix * dx, ymin + iy * dy);
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix) {
      const int n00 = id(ix, iy), n10 = id(ix + 1, iy), n01 = id(ix, iy + 1), n11 = id(ix + 1, iy + 1);
      if ((ix + iy) % 2 == 0) {
        triangles.push_back({n00, n10, n11});
        triangles.push_back({n00, n11, n01});
      } else {
        triangles.push_back({n00, n10, n01});
        triangles.push_back({n10, n11, n01});
      }
    }
}

void write_mesh_text(std::ostream& os, const std::vector<Vec2>& nodes,
                     const std::vector<std::array<int, 3>>& triangles) {
  os.precision(17);
  os << nodes.size() << ' ' << triangles.size() << '\n';
  for (const auto& p : nodes) os << p.x() << ' ' << p.y() << '\n';
  for (const auto& t : triangles) os << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
}

void read_mesh_text(std::istream& is, std::vector<Vec2>& nodes,
                    std::vector<std::array<int, 3>>& triangles) {
  std::size_t nn = 0, ne = 0;
  if (!(is >> nn >> ne)) throw std::runtime_error("mesh file: bad header");
  nodes.resize(nn);
  triangles.resize(ne);
  for (auto& p : nodes)
    if (!(is >> p.x() >> p.y())) throw std::runtime_error("mesh file: bad node line");
  for (auto& t : triangles) {
    if (!(is >> t[0] >> t[1] >> t[2])) throw std::runtime_error("mesh file: bad triangle line");
    for (int& v : t) --v;
  }
}

} // namespace staggdg
