#include "eit/mesh.hpp"

#include <cmath>

#include "eit/errors.hpp"

namespace eit {

namespace {

void compute_geometry(CrossedMesh& mesh) {
  const int ntri = mesh.num_triangles();
  mesh.tri_area.resize(ntri);
  mesh.tri_grad.resize(ntri);
  for (int t = 0; t < ntri; ++t) {
    const auto& tri = mesh.triangles[t];
    const Vec2& p0 = mesh.vertices[tri[0]];
    const Vec2& p1 = mesh.vertices[tri[1]];
    const Vec2& p2 = mesh.vertices[tri[2]];
    const double twice_area =
        (p1.x() - p0.x()) * (p2.y() - p0.y()) - (p2.x() - p0.x()) * (p1.y() - p0.y());
    if (twice_area <= 0.0) throw Error("degenerate or inverted triangle");
    mesh.tri_area[t] = 0.5 * twice_area;
    // grad of the P1 basis at vertex i: rotated opposite edge over 2|T|
    mesh.tri_grad[t][0] = Vec2(p1.y() - p2.y(), p2.x() - p1.x()) / twice_area;
    mesh.tri_grad[t][1] = Vec2(p2.y() - p0.y(), p0.x() - p2.x()) / twice_area;
    mesh.tri_grad[t][2] = Vec2(p0.y() - p1.y(), p1.x() - p0.x()) / twice_area;
  }
}

Side side_of_edge(const CrossedMesh& mesh, int a, int b) {
  const Vec2& pa = mesh.vertices[a];
  const Vec2& pb = mesh.vertices[b];
  if (pa.y() == 0.0 && pb.y() == 0.0) return Side::Bottom;
  if (pa.x() == 1.0 && pb.x() == 1.0) return Side::Right;
  if (pa.y() == 1.0 && pb.y() == 1.0) return Side::Top;
  if (pa.x() == 0.0 && pb.x() == 0.0) return Side::Left;
  throw Error("boundary edge off the boundary");
}

}  // namespace

Vec2 CrossedMesh::centroid(int t) const {
  const auto& tri = triangles[t];
  return (vertices[tri[0]] + vertices[tri[1]] + vertices[tri[2]]) / 3.0;
}

CrossedMesh CrossedMesh::displaced(const std::vector<Vec2>& disp) const {
  if (static_cast<int>(disp.size()) != num_vertices())
    throw Error("displacement size does not match the mesh");
  for (int b : boundary_nodes)
    if (disp[b].norm() != 0.0) throw Error("boundary vertices must not move");
  CrossedMesh out = *this;
  for (int i = 0; i < num_vertices(); ++i) out.vertices[i] += disp[i];
  compute_geometry(out);
  return out;
}

CrossedMesh build_crossed_grid(int n) {
  if (n < 1) throw Error("grid resolution must be at least 1");
  CrossedMesh mesh;
  mesh.n = n;
  mesh.h = 1.0 / n;

  const int np1 = n + 1;
  mesh.vertices.resize(np1 * np1 + n * n);
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      mesh.vertices[mesh.grid_node(i, j)] =
          Vec2(static_cast<double>(i) / n, static_cast<double>(j) / n);
  for (int cj = 0; cj < n; ++cj)
    for (int ci = 0; ci < n; ++ci)
      mesh.vertices[mesh.center_node(ci, cj)] =
          Vec2((ci + 0.5) / n, (cj + 0.5) / n);

  mesh.triangles.reserve(4 * n * n);
  for (int cj = 0; cj < n; ++cj)
    for (int ci = 0; ci < n; ++ci) {
      const int v00 = mesh.grid_node(ci, cj);
      const int v10 = mesh.grid_node(ci + 1, cj);
      const int v11 = mesh.grid_node(ci + 1, cj + 1);
      const int v01 = mesh.grid_node(ci, cj + 1);
      const int c = mesh.center_node(ci, cj);
      mesh.triangles.push_back({v00, v10, c});
      mesh.triangles.push_back({v10, v11, c});
      mesh.triangles.push_back({v11, v01, c});
      mesh.triangles.push_back({v01, v00, c});
    }

  // boundary loop, counterclockwise from the origin
  mesh.boundary_nodes.reserve(4 * n);
  for (int i = 0; i < n; ++i) mesh.boundary_nodes.push_back(mesh.grid_node(i, 0));
  for (int j = 0; j < n; ++j) mesh.boundary_nodes.push_back(mesh.grid_node(n, j));
  for (int i = n; i > 0; --i) mesh.boundary_nodes.push_back(mesh.grid_node(i, n));
  for (int j = n; j > 0; --j) mesh.boundary_nodes.push_back(mesh.grid_node(0, j));

  mesh.boundary_index_of.assign(mesh.vertices.size(), -1);
  for (std::size_t k = 0; k < mesh.boundary_nodes.size(); ++k)
    mesh.boundary_index_of[mesh.boundary_nodes[k]] = static_cast<int>(k);

  compute_geometry(mesh);

  const int nb = static_cast<int>(mesh.boundary_nodes.size());
  mesh.boundary_edges.reserve(nb);
  for (int k = 0; k < nb; ++k) {
    const int a = mesh.boundary_nodes[k];
    const int b = mesh.boundary_nodes[(k + 1) % nb];
    mesh.boundary_edges.push_back(
        {a, b, side_of_edge(mesh, a, b), (mesh.vertices[a] - mesh.vertices[b]).norm()});
  }
  return mesh;
}

}  // namespace eit
