#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

namespace evi {

// Whether the point 1/2 lies on the mesh: in 1D, "aligned" meshes have an
// even element count so that 1/2 is a node; "offset" meshes have an odd
// count so that 1/2 falls in the interior of an element. In 2D the same
// parity rule applies to the gridline x = 1/2.
enum class Alignment { Aligned, Offset };

// Uniform P1 mesh of the unit interval (dim 1) or the unit square (dim 2,
// structured triangulation: every grid cell split into two triangles).
// Boundary nodes carry homogeneous Dirichlet data and are excluded from
// the interior numbering used by all assembled operators.
struct Mesh {
  int dim = 1;
  int n_elements = 0;  // per side in 2D
  double h = 0.0;      // element edge length, 1/n_elements

  Eigen::MatrixXd vertices;  // num_nodes x dim, 1D sorted strictly increasing
  Eigen::MatrixXi elements;  // num_elems x (dim+1) vertex indices

  std::vector<int> interior_nodes;  // interior index -> node index
  std::vector<int> interior_index;  // node index -> interior index, -1 on boundary

  bool aligned = false;  // 1/2 is a node (1D) / on a gridline (2D)

  int num_nodes() const { return static_cast<int>(vertices.rows()); }
  int num_elems() const { return static_cast<int>(elements.rows()); }
  int num_interior() const { return static_cast<int>(interior_nodes.size()); }
  bool is_boundary(int node) const { return interior_index[node] < 0; }
  double domain_measure() const { return 1.0; }
};

// Builds a uniform mesh. In 1D the alignment, when given, must match the
// parity of n_elements (aligned <=> even); a mismatch throws. In 2D the
// flag is likewise validated against parity when present.
Mesh build_mesh(int dim, int n_elements,
                std::optional<Alignment> alignment = std::nullopt);

// Node closest to the given point; 1D ignores py.
int nearest_node(const Mesh& mesh, double px, double py = 0.0);

// All mesh nodes with coordinate in [a, b] (1D only).
std::vector<int> nodes_in_interval(const Mesh& mesh, double a, double b);

}  // namespace evi
