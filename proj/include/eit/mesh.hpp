#pragma once

#include <array>
#include <vector>

#include "eit/geometry.hpp"

namespace eit {

enum class Side : int { Bottom = 0, Right = 1, Top = 2, Left = 3 };

struct BoundaryEdge {
  int a, b;  // vertex ids, consecutive counterclockwise
  Side side;
  double length;
};

// Structured triangulation of [0,1]^2: every cell of an n x n grid is split
// into four triangles meeting at the cell center. Vertices are the (n+1)^2
// lattice nodes in row-major order followed by the n^2 cell centers.
struct CrossedMesh {
  int n = 0;
  double h = 0.0;
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;  // counterclockwise
  std::vector<double> tri_area;
  std::vector<std::array<Vec2, 3>> tri_grad;  // P1 basis gradients per triangle
  std::vector<int> boundary_nodes;            // CCW loop from (0,0), size 4n
  std::vector<BoundaryEdge> boundary_edges;   // loop edges, size 4n
  std::vector<int> boundary_index_of;         // vertex id -> loop position, -1 if interior

  int grid_node(int i, int j) const { return j * (n + 1) + i; }
  int center_node(int ci, int cj) const { return (n + 1) * (n + 1) + cj * n + ci; }
  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }
  Vec2 centroid(int t) const;

  // Same connectivity with vertices moved by `disp`; boundary vertices must
  // not move. Used for finite-difference checks of shape derivatives.
  CrossedMesh displaced(const std::vector<Vec2>& disp) const;
};

CrossedMesh build_crossed_grid(int n);

}  // namespace eit
