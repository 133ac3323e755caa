#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "staggdg/basis.hpp"

namespace staggdg {

/// Staggered unstructured triangular mesh: main triangles T_i, edge-based
/// dual cells R_j (union of the two sub-triangles adjacent to edge j), and
/// all derived connectivity/geometry. Immutable after construction.
///
/// Interior edges have a left triangle l(j) and a right triangle r(j); the
/// lower triangle index is always assigned as left. Edge normals point from
/// left to right. Periodic boundary pairs are merged into single interior
/// edges carrying a translation: coordinates in the right triangle's frame
/// equal edge-frame coordinates plus shift(j).
class StaggeredMesh {
 public:
  struct BuildOptions {
    bool periodic_x = false;
    bool periodic_y = false;
  };

  static StaggeredMesh build(std::vector<Vec2> nodes,
                             std::vector<std::array<int, 3>> triangles,
                             const BuildOptions& opts);
  static StaggeredMesh build(std::vector<Vec2> nodes,
                             std::vector<std::array<int, 3>> triangles) {
    return build(std::move(nodes), std::move(triangles), BuildOptions());
  }

  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int num_elements() const { return static_cast<int>(tris_.size()); }
  int num_edges() const { return static_cast<int>(edge_nodes_.size()); }

  const std::vector<Vec2>& nodes() const { return nodes_; }
  const std::array<int, 3>& tri(int i) const { return tris_[i]; }

  int left_of(int j) const { return left_[j]; }
  int right_of(int j) const { return right_[j]; }           // -1 on boundary
  bool is_boundary(int j) const { return right_[j] < 0; }
  bool is_periodic(int j) const { return periodic_[j]; }
  const Vec2& shift(int j) const { return shift_[j]; }      // l-frame -> r-frame

  const std::array<int, 3>& edges_of(int i) const { return edges_of_[i]; }
  // local edge slot of j within element i (0: v0v1, 1: v1v2, 2: v2v0)
  int local_slot(int i, int j) const;
  int neighbor(int i, int j) const;                          // other element across j, -1 if none

  // sign function: +1 if i == l(j), -1 if i == r(j)
  int sigma(int i, int j) const;

  const Vec2& edge_normal(int j) const { return normal_[j]; }      // unit, l -> r
  double edge_length(int j) const { return edge_len_[j]; }
  // edge endpoints in the LEFT frame, oriented so l(j) lies to the left of e1->e2
  const Vec2& edge_node(int j, int which) const { return which == 0 ? e1_[j] : e2_[j]; }

  const Vec2& centroid(int i) const { return centroid_[i]; }
  double area(int i) const { return area_[i]; }
  double jac_det(int i) const { return map_[i].det; }              // A_i = 2|T_i|
  const TriMap& elem_map(int i) const { return map_[i]; }

  // A_{ij} = 2|T_{i,j}| for edge slot s of element i
  double subtri_jac_det(int i, int slot) const { return sub_det_[3 * i + slot]; }

  // affine map reference triangle -> physical sub-triangle T_{i,j}, with the
  // convention (0,0) -> centroid shifted into i's frame, (1,0)/(0,1) -> edge
  // nodes in the orientation seen from side i (left: e1,e2; right: e2,e1)
  TriMap dual_side_map(int i, int j) const;

  // locate a point (after periodic wrapping); returns element and reference
  // coordinates; tie on shared edges resolved to the lowest element index
  struct Location {
    int element = -1;
    Vec2 ref;
  };
  Location locate(const Vec2& x, int hint = 0) const;

  Vec2 wrap(const Vec2& x) const;
  bool periodic_x() const { return opts_.periodic_x; }
  bool periodic_y() const { return opts_.periodic_y; }
  const std::array<double, 4>& bbox() const { return bbox_; }  // xmin xmax ymin ymax

  double mean_incircle_radius() const;
  double max_diameter() const { return max_diam_; }

 private:
  std::vector<Vec2> nodes_;
  std::vector<std::array<int, 3>> tris_;
  std::vector<std::array<int, 2>> edge_nodes_;   // node ids (l-frame copy)
  std::vector<int> left_, right_;
  std::vector<bool> periodic_;
  std::vector<Vec2> shift_;
  std::vector<std::array<int, 3>> edges_of_;
  std::vector<Vec2> normal_, e1_, e2_;
  std::vector<double> edge_len_;
  std::vector<Vec2> centroid_;
  std::vector<double> area_;
  std::vector<TriMap> map_;
  std::vector<double> sub_det_;
  BuildOptions opts_;
  std::array<double, 4> bbox_{};
  double max_diam_ = 0.0;
};

// structured rectangle triangulation, diagonals alternating by (ix+iy) parity
void generate_rect_mesh(double xmin, double xmax, double ymin, double ymax, int nx, int ny,
                        std::vector<Vec2>& nodes, std::vector<std::array<int, 3>>& triangles);

// Mesh text format: header "N_nodes N_e", node lines "x y",
// triangle lines "n1 n2 n3" (1-based).
void write_mesh_text(std::ostream& os, const std::vector<Vec2>& nodes,
                     const std::vector<std::array<int, 3>>& triangles);
void read_mesh_text(std::istream& is, std::vector<Vec2>& nodes,
                    std::vector<std::array<int, 3>>& triangles);

} // namespace staggdg
