#pragma once

#include <optional>
#include <span>
#include <vector>

#include "staggdg/operators.hpp"

namespace staggdg {

/// Characteristic feet for every (element, volume quadrature point):
/// containing cell, local reference coordinates, and the accumulated
/// periodic translation picked up along the trajectory.
struct FootTable {
  int ne = 0, ng = 0;
  std::vector<int> cell;
  std::vector<Vec2> ref;
  std::vector<Vec2> translation;

  std::size_t index(int i, int g) const { return std::size_t(i) * ng + g; }
};

/// One leg of a composite backward trajectory: trace `span` time units
/// upstream (downstream when negative) through the given main-grid velocity.
struct TraceLeg {
  double span = 0.0;
  const MainField* velocity = nullptr;  // 2-component main field
};

struct TraceStats {
  long substeps = 0;
  long neighbor_hops = 0;
  long clamps = 0;
};

/// Integrates dx/dsigma = -v(x) over `span` (signed; positive moves upstream)
/// with element-by-element crossings: RK4 inside the current cell, the cell
/// boundary intersection solved on the RK4 flow, the entered cell supplying
/// the velocity polynomial from there on. Periodic seams are crossed
/// transparently; at a physical boundary the trajectory clamps at the wall.
void trace_displacement(const Operators& ops, const MainField& velocity, double span, int& cell,
                        Vec2& x, Vec2& translation, TraceStats* stats = nullptr);

/// Feet of the composite trajectory started at every volume quadrature point.
/// Adjacent legs sharing a velocity field are fused into one trace.
FootTable build_foot_table(const Operators& ops, std::span<const TraceLeg> legs,
                           TraceStats* stats = nullptr);

FootTable identity_feet(const Operators& ops);

/// Sample a main field at the feet: values(i,g) = f at foot of point g of
/// element i, using the containing cell's polynomial.
void interpolate_at_feet(const Operators& ops, const MainField& f, int comp,
                         const FootTable& feet, std::span<double> values);

/// L2 moment re-integration of the foot-sampled field: the transported
/// projection used for the advected state and for flux shifting.
MainField transported_projection(const Operators& ops, const MainField& src,
                                 const FootTable& feet);

} // namespace staggdg
