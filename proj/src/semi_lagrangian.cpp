#include "staggdg/semi_lagrangian.hpp"

#include <cmath>
#include <stdexcept>

#include "staggdg/parallel.hpp"

namespace staggdg {

namespace {

constexpr double kBaryTol = 1e-12;
constexpr long kMaxSubsteps = 10000;

// velocity field reduced to raw monomial coefficients per element for fast
// in-cell evaluation
struct MonoVelocity {
  int p = 0, nm = 0, ne = 0;
  std::vector<std::array<int, 2>> expo;
  std::vector<double> cm;  // [elem][comp][mono]

  MonoVelocity(const Operators& ops, const MainField& v) {
    const auto& nb = ops.ref().main_basis();
    p = nb.degree();
    ne = v.cells;
    const int np = nb.size();
    nm = np;
    for (int t = 0; t <= p; ++t)
      for (int a = 0; a + t <= p; ++a) expo.push_back({a, t});
    // reuse the nodal->monomial transform by evaluating through the basis:
    // c_mono = C * coeffs with C the basis monomial matrix. Rebuild it here
    // from nodal values of monomials (exact for degree <= p).
    Eigen::MatrixXd V(np, np);
    for (int l = 0; l < np; ++l)
      for (int m = 0; m < np; ++m)
        V(l, m) = std::pow(nb.nodes()[l].x(), expo[m][0]) * std::pow(nb.nodes()[l].y(), expo[m][1]);
    Eigen::MatrixXd C = V.fullPivLu().solve(Eigen::MatrixXd::Identity(np, np));  // mono x nodal... see below
    // phi_k = sum_m C(m,k) mono_m, so field = sum_k c_k phi_k = sum_m (sum_k C(m,k) c_k) mono_m
    cm.assign(std::size_t(ne) * 2 * nm, 0.0);
    for (int i = 0; i < ne; ++i)
      for (int comp = 0; comp < 2; ++comp) {
        const double* ck = v.block(i, comp);
        double* out = cm.data() + (std::size_t(i) * 2 + comp) * nm;
        for (int m = 0; m < nm; ++m) {
          double s = 0.0;
          for (int k = 0; k < np; ++k) s += C(m, k) * ck[k];
          out[m] = s;
        }
      }
  }

  inline void eval(int i, const Vec2& ref, double* out2) const {
    double px[5], py[5];
    px[0] = py[0] = 1.0;
    for (int k = 1; k <= p; ++k) {
      px[k] = px[k - 1] * ref.x();
      py[k] = py[k - 1] * ref.y();
    }
    const double* c0 = cm.data() + (std::size_t(i) * 2) * nm;
    const double* c1 = c0 + nm;
    double s0 = 0.0, s1 = 0.0;
    for (int m = 0; m < nm; ++m) {
      const double mv = px[expo[m][0]] * py[expo[m][1]];
      s0 += c0[m] * mv;
      s1 += c1[m] * mv;
    }
    out2[0] = s0;
    out2[1] = s1;
  }
};

struct Tracer {
  const StaggeredMesh& mesh;
  const MonoVelocity& vel;
  double dir;  // -1: upstream (positive span), +1: downstream
  TraceStats* stats;

  inline Vec2 u(int cell, const Vec2& x) const {
    const Vec2 ref = mesh.elem_map(cell).to_reference(x);
    double v[2];
    vel.eval(cell, ref, v);
    if (!std::isfinite(v[0]) || !std::isfinite(v[1]))
      throw std::runtime_error("trace: non-finite velocity");
    return Vec2(dir * v[0], dir * v[1]);
  }

  // one RK4 step of size h from x in `cell`'s polynomial
  inline Vec2 rk4(int cell, const Vec2& x, double h) const {
    const Vec2 k1 = u(cell, x);
    const Vec2 k2 = u(cell, x + 0.5 * h * k1);
    const Vec2 k3 = u(cell, x + 0.5 * h * k2);
    const Vec2 k4 = u(cell, x + h * k3);
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

  static inline void bary(const TriMap& m, const Vec2& x, double* lam) {
    const Vec2 r = m.to_reference(x);
    lam[0] = 1.0 - r.x() - r.y();
    lam[1] = r.x();
    lam[2] = r.y();
  }
  // slot whose edge carries the vanishing coordinate: slot0 ~ lam2,
  // slot1 ~ lam0, slot2 ~ lam1
  static inline double edge_coord(const double* lam, int slot) {
    return slot == 0 ? lam[2] : (slot == 1 ? lam[0] : lam[1]);
  }

  void run(double span, int& cell, Vec2& x, Vec2& translation) {
    double remaining = std::abs(span);
    if (remaining == 0.0) return;
    long steps = 0;
    const double diam = mesh.max_diameter();
    while (remaining > 0.0) {
      if (++steps > kMaxSubsteps)
        throw std::runtime_error("trace: sub-step cap exceeded (tangled velocity field)");
      if (stats) stats->substeps++;
      const Vec2 u0 = u(cell, x);
      const double speed = u0.norm();
      if (speed * remaining < 1e-16 * diam) return;  // effectively stationary

      // cap the step near the cell-crossing scale so the in-cell RK4 stays
      // well inside its accuracy range even for long legs
      const double cell_scale = std::sqrt(2.0 * mesh.jac_det(cell));
      double h = std::min(remaining, 2.0 * cell_scale / std::max(speed, 1e-300));
      Vec2 xn = rk4(cell, x, h);
      const TriMap& M = mesh.elem_map(cell);
      double lam[3];
      bary(M, xn, lam);
      if (std::min({lam[0], lam[1], lam[2]}) >= -kBaryTol) {
        x = xn;
        remaining -= h;
        continue;  // step stayed inside the current cell
      }
      // first exit time of the RK4 flow. Fast path: chord estimate plus a few
      // Newton iterations on the crossed-edge coordinate (exact for straight
      // trajectories). Fallback: bracketed bisection on the minimum
      // barycentric coordinate, which cannot fail.
      double lam0[3];
      bary(M, x, lam0);
      int best_slot = 0;
      for (int s2 = 1; s2 < 3; ++s2)
        if (edge_coord(lam, s2) < edge_coord(lam, best_slot)) best_slot = s2;
      const double e0c = edge_coord(lam0, best_slot);
      const double e1c = edge_coord(lam, best_slot);
      double hc = h * e0c / (e0c - e1c);
      bool ok = false;
      double lx[3];
      for (int it = 0; it < 5; ++it) {
        const Vec2 xc = rk4(cell, x, hc);
        bary(M, xc, lx);
        const double g = edge_coord(lx, best_slot);
        if (std::abs(g) < 1e-14) {
          // converged on this edge; accept when no other edge was crossed first
          ok = std::min({lx[0], lx[1], lx[2]}) >= -10 * kBaryTol && hc > 0.0 && hc <= h;
          break;
        }
        const Vec2 dr = M.jac_inv * u(cell, xc);
        const double dl[3] = {-dr.x() - dr.y(), dr.x(), dr.y()};
        const double dg = edge_coord(dl, best_slot);
        if (dg == 0.0) break;
        hc -= g / dg;
        if (!(hc >= 0.0 && hc <= h)) break;
      }
      double best_h = hc;
      if (!ok) {
        // robust fallback
        auto minb = [&](double t, double lc[3]) {
          bary(M, rk4(cell, x, t), lc);
          return std::min({lc[0], lc[1], lc[2]});
        };
        double lo = 0.0, hi = h;
        double lc[3];
        for (int it = 0; it < 48; ++it) {
          const double mid = 0.5 * (lo + hi);
          if (minb(mid, lc) >= -kBaryTol) lo = mid;
          else hi = mid;
          if (hi - lo < 1e-15 * h) break;
        }
        minb(hi, lc);
        best_slot = 0;
        for (int s2 = 1; s2 < 3; ++s2)
          if (edge_coord(lc, s2) < edge_coord(lc, best_slot)) best_slot = s2;
        best_h = lo;
      }
      const Vec2 xc = rk4(cell, x, best_h);
      remaining -= best_h;
      const int j = mesh.edges_of(cell)[best_slot];
      const int nb = mesh.left_of(j) == cell ? mesh.right_of(j) : mesh.left_of(j);
      if (nb < 0) {
        // clamp at a physical wall
        x = xc;
        if (stats) stats->clamps++;
        return;
      }
      Vec2 xnew = xc;
      if (mesh.is_periodic(j)) {
        const Vec2 t = mesh.left_of(j) == cell ? mesh.shift(j) : Vec2(-mesh.shift(j));
        xnew += t;
        translation += t;
      }
      cell = nb;
      x = xnew;
      if (stats) stats->neighbor_hops++;
      // nudge past the edge so the next sub-step does not graze it again
      const Vec2 un = u(cell, x);
      const double sn = un.norm();
      if (sn > 0) {
        const double nu = 1e-11 * diam;
        x += (nu / sn) * un;
        remaining = std::max(0.0, remaining - nu / sn);
      }
    }
  }
};

void tie_break_foot(const StaggeredMesh& mesh, int& cell, Vec2& ref) {
  // a foot sitting on a shared (non-periodic) edge belongs to the
  // lower-indexed element
  const double lam[3] = {1.0 - ref.x() - ref.y(), ref.x(), ref.y()};
  const double near[3] = {lam[2], lam[0], lam[1]};  // per slot
  int best = cell;
  for (int s = 0; s < 3; ++s) {
    if (std::abs(near[s]) > kBaryTol) continue;
    const int j = mesh.edges_of(cell)[s];
    if (mesh.is_periodic(j)) continue;
    const int nb = mesh.left_of(j) == cell ? mesh.right_of(j) : mesh.left_of(j);
    if (nb >= 0 && nb < best) best = nb;
  }
  if (best != cell) {
    const Vec2 x = mesh.elem_map(cell).to_physical(ref);
    const Vec2 r2 = mesh.elem_map(best).to_reference(x);
    if (std::min({r2.x(), r2.y(), 1.0 - r2.x() - r2.y()}) >= -10 * kBaryTol) {
      cell = best;
      ref = r2;
    }
  }
}

} // namespace

void trace_displacement(const Operators& ops, const MainField& velocity, double span, int& cell,
                        Vec2& x, Vec2& translation, TraceStats* stats) {
  MonoVelocity mv(ops, velocity);
  Tracer tr{ops.mesh(), mv, span >= 0 ? -1.0 : 1.0, stats};
  tr.run(span, cell, x, translation);
}

FootTable identity_feet(const Operators& ops) {
  const auto& rule = ops.ref().volume_rule();
  FootTable ft;
  ft.ne = ops.mesh().num_elements();
  ft.ng = static_cast<int>(rule.points.size());
  ft.cell.resize(std::size_t(ft.ne) * ft.ng);
  ft.ref.resize(ft.cell.size());
  ft.translation.assign(ft.cell.size(), Vec2::Zero());
  for (int i = 0; i < ft.ne; ++i)
    for (int g = 0; g < ft.ng; ++g) {
      ft.cell[ft.index(i, g)] = i;
      ft.ref[ft.index(i, g)] = rule.points[g];
    }
  return ft;
}

FootTable build_foot_table(const Operators& ops, std::span<const TraceLeg> legs,
                           TraceStats* stats) {
  // fuse adjacent legs through the same velocity field; drop zero spans
  std::vector<TraceLeg> fused;
  for (const TraceLeg& leg : legs) {
    if (leg.span == 0.0) continue;
    if (!fused.empty() && fused.back().velocity == leg.velocity) fused.back().span += leg.span;
    else fused.push_back(leg);
  }
  std::erase_if(fused, [](const TraceLeg& l) { return l.span == 0.0; });

  FootTable ft = identity_feet(ops);
  if (fused.empty()) return ft;

  std::vector<MonoVelocity> mv;
  mv.reserve(fused.size());
  for (const auto& leg : fused) mv.emplace_back(ops, *leg.velocity);

  const auto& mesh = ops.mesh();
  const auto& rule = ops.ref().volume_rule();
  std::vector<TraceStats> tls(fused.size());
  parallel_for(ft.ne, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      for (int g = 0; g < ft.ng; ++g) {
        const std::size_t q = ft.index(int(i), g);
        int cell = int(i);
        Vec2 x = mesh.elem_map(int(i)).to_physical(rule.points[g]);
        Vec2 tr = Vec2::Zero();
        for (std::size_t L = 0; L < fused.size(); ++L) {
          Tracer t{mesh, mv[L], fused[L].span >= 0 ? -1.0 : 1.0, stats ? &tls[L] : nullptr};
          t.run(fused[L].span, cell, x, tr);
        }
        Vec2 ref = mesh.elem_map(cell).to_reference(x);
        tie_break_foot(mesh, cell, ref);
        ft.cell[q] = cell;
        ft.ref[q] = ref;
        ft.translation[q] = tr;
      }
    }
  });
  if (stats)
    for (const auto& s : tls) {
      stats->substeps += s.substeps;
      stats->neighbor_hops += s.neighbor_hops;
      stats->clamps += s.clamps;
    }
  return ft;
}

void interpolate_at_feet(const Operators& ops, const MainField& f, int comp,
                         const FootTable& feet, std::span<double> values) {
  const int np = ops.nphi();
  parallel_for(feet.cell.size(), [&](std::size_t lo, std::size_t hi) {
    double phi[15];
    for (std::size_t q = lo; q < hi; ++q) {
      ops.ref().main_basis().eval(feet.ref[q], phi);
      const double* c = f.block(feet.cell[q], comp);
      double s = 0.0;
      for (int k = 0; k < np; ++k) s += c[k] * phi[k];
      values[q] = s;
    }
  });
}

MainField transported_projection(const Operators& ops, const MainField& src,
                                 const FootTable& feet) {
  const int np = ops.nphi();
  const int nc = src.comps;
  const auto& rule = ops.ref().volume_rule();
  const auto& phi = ops.ref().phi_at_volume();
  MainField out(feet.ne, nc, np);
  parallel_for(feet.ne, [&](std::size_t lo, std::size_t hi) {
    double phif[15];
    Eigen::MatrixXd mom(np, nc);
    for (std::size_t i = lo; i < hi; ++i) {
      mom.setZero();
      for (int g = 0; g < feet.ng; ++g) {
        const std::size_t q = feet.index(int(i), g);
        ops.ref().main_basis().eval(feet.ref[q], phif);
        const int fc = feet.cell[q];
        for (int c = 0; c < nc; ++c) {
          const double* coef = src.block(fc, c);
          double s = 0.0;
          for (int k = 0; k < np; ++k) s += coef[k] * phif[k];
          s *= rule.weights[g];
          for (int k = 0; k < np; ++k) mom(k, c) += phi(g, k) * s;
        }
      }
      const Eigen::MatrixXd coefs = ops.ref().mass_main_ref_inv() * mom;
      for (int c = 0; c < nc; ++c)
        for (int k = 0; k < np; ++k) out.at(int(i), c, k) = coefs(k, c);
    }
  });
  return out;
}

} // namespace staggdg
