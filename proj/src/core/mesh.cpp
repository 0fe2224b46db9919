#include "core/mesh.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace evi {

namespace {

void check_alignment(int n_elements, std::optional<Alignment> alignment) {
  if (!alignment) return;
  const bool even = n_elements % 2 == 0;
  if (*alignment == Alignment::Aligned && !even)
    throw std::invalid_argument(
        "aligned meshes need an even element count, got " +
        std::to_string(n_elements));
  if (*alignment == Alignment::Offset && even)
    throw std::invalid_argument(
        "offset meshes need an odd element count, got " +
        std::to_string(n_elements));
}

Mesh build_mesh_1d(int n, std::optional<Alignment> alignment) {
  check_alignment(n, alignment);
  Mesh mesh;
  mesh.dim = 1;
  mesh.n_elements = n;
  mesh.h = 1.0 / n;
  mesh.vertices.resize(n + 1, 1);
  for (int i = 0; i <= n; ++i) mesh.vertices(i, 0) = static_cast<double>(i) / n;
  mesh.elements.resize(n, 2);
  for (int e = 0; e < n; ++e) {
    mesh.elements(e, 0) = e;
    mesh.elements(e, 1) = e + 1;
  }
  mesh.interior_index.assign(n + 1, -1);
  for (int i = 1; i < n; ++i) {
    mesh.interior_index[i] = static_cast<int>(mesh.interior_nodes.size());
    mesh.interior_nodes.push_back(i);
  }
  mesh.aligned = n % 2 == 0;
  return mesh;
}

Mesh build_mesh_2d(int n, std::optional<Alignment> alignment) {
  check_alignment(n, alignment);
  Mesh mesh;
  mesh.dim = 2;
  mesh.n_elements = n;
  mesh.h = 1.0 / n;
  const int nn = n + 1;
  mesh.vertices.resize(nn * nn, 2);
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      const int id = j * nn + i;
      mesh.vertices(id, 0) = static_cast<double>(i) / n;
      mesh.vertices(id, 1) = static_cast<double>(j) / n;
    }
  mesh.elements.resize(2 * n * n, 3);
  int e = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const int v00 = j * nn + i;
      const int v10 = v00 + 1;
      const int v01 = v00 + nn;
      const int v11 = v01 + 1;
      mesh.elements.row(e++) << v00, v10, v11;
      mesh.elements.row(e++) << v00, v11, v01;
    }
  mesh.interior_index.assign(nn * nn, -1);
  for (int j = 1; j < n; ++j)
    for (int i = 1; i < n; ++i) {
      const int id = j * nn + i;
      mesh.interior_index[id] = static_cast<int>(mesh.interior_nodes.size());
      mesh.interior_nodes.push_back(id);
    }
  mesh.aligned = n % 2 == 0;
  return mesh;
}

}  // namespace

Mesh build_mesh(int dim, int n_elements, std::optional<Alignment> alignment) {
  if (n_elements < 2)
    throw std::invalid_argument("need at least 2 elements, got " +
                                std::to_string(n_elements));
  if (dim == 1) return build_mesh_1d(n_elements, alignment);
  if (dim == 2) return build_mesh_2d(n_elements, alignment);
  throw std::invalid_argument("dim must be 1 or 2, got " + std::to_string(dim));
}

int nearest_node(const Mesh& mesh, double px, double py) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    const double dx = mesh.vertices(i, 0) - px;
    const double dy = mesh.dim == 2 ? mesh.vertices(i, 1) - py : 0.0;
    const double d = dx * dx + dy * dy;
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

std::vector<int> nodes_in_interval(const Mesh& mesh, double a, double b) {
  if (mesh.dim != 1)
    throw std::invalid_argument("nodes_in_interval is 1D only");
  std::vector<int> out;
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    const double x = mesh.vertices(i, 0);
    if (x >= a - 1e-14 && x <= b + 1e-14) out.push_back(i);
  }
  return out;
}

}  // namespace evi
