#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace staggdg {

/// DG coefficient storage: per-cell blocks of ncoef values for each of ncomp
/// components. Layout: a[(cell*ncomp + comp)*ncoef + k].
struct FieldStorage {
  int cells = 0, comps = 0, ncoef = 0;
  std::vector<double> a;

  FieldStorage() = default;
  FieldStorage(int cells_, int comps_, int ncoef_)
      : cells(cells_), comps(comps_), ncoef(ncoef_), a(std::size_t(cells_) * comps_ * ncoef_, 0.0) {}

  double* block(int cell, int comp = 0) { return a.data() + (std::size_t(cell) * comps + comp) * ncoef; }
  const double* block(int cell, int comp = 0) const {
    return a.data() + (std::size_t(cell) * comps + comp) * ncoef;
  }
  double& at(int cell, int comp, int k) { return block(cell, comp)[k]; }
  double at(int cell, int comp, int k) const { return block(cell, comp)[k]; }

  std::span<double> flat() { return a; }
  std::span<const double> flat() const { return a; }

  void fill(double v) { std::fill(a.begin(), a.end(), v); }
  bool same_shape(const FieldStorage& o) const {
    return cells == o.cells && comps == o.comps && ncoef == o.ncoef;
  }
};

/// Field on the main grid: one block of N_phi coefficients per triangle.
struct MainField : FieldStorage {
  using FieldStorage::FieldStorage;
};

/// Field on the dual (edge-based) grid: one block of N_psi coefficients per
/// dual cell. On boundary edges only the left-supported coefficients are
/// active; the rest stay zero.
struct DualField : FieldStorage {
  using FieldStorage::FieldStorage;
};

inline void axpy(double alpha, const FieldStorage& x, FieldStorage& y) {
  assert(x.same_shape(y));
  for (std::size_t i = 0; i < y.a.size(); ++i) y.a[i] += alpha * x.a[i];
}

inline void scale(FieldStorage& x, double alpha) {
  for (double& v : x.a) v *= alpha;
}

} // namespace staggdg
