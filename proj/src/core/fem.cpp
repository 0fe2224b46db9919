#include "core/fem.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "core/errors.hpp"

namespace evi {

namespace {

struct Triplets {
  std::vector<Eigen::Triplet<double>> t;
  void add(int i, int j, double v) { t.emplace_back(i, j, v); }
};

// P1 local matrices on a triangle with vertices p0, p1, p2.
void local_matrices_2d(const Eigen::Vector2d& p0, const Eigen::Vector2d& p1,
                       const Eigen::Vector2d& p2, Eigen::Matrix3d& k_loc,
                       Eigen::Matrix3d& m_loc, double& area) {
  const double bx[3] = {p1.y() - p2.y(), p2.y() - p0.y(), p0.y() - p1.y()};
  const double cx[3] = {p2.x() - p1.x(), p0.x() - p2.x(), p1.x() - p0.x()};
  const double det = (p1.x() - p0.x()) * (p2.y() - p0.y()) -
                     (p2.x() - p0.x()) * (p1.y() - p0.y());
  area = 0.5 * std::abs(det);
  if (area <= 0.0) throw NumericalError("degenerate triangle in assembly");
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      k_loc(a, b) = (bx[a] * bx[b] + cx[a] * cx[b]) / (4.0 * area);
  m_loc.setConstant(area / 12.0);
  m_loc.diagonal().setConstant(area / 6.0);
}

// Integral of sin(w*x) over [a,b].
double int_sin(double w, double a, double b) {
  return (std::cos(w * a) - std::cos(w * b)) / w;
}

// Integral of x*sin(w*x) over [a,b].
double int_x_sin(double w, double a, double b) {
  return (std::sin(w * b) - w * b * std::cos(w * b) - std::sin(w * a) +
          w * a * std::cos(w * a)) /
         (w * w);
}

struct DensitySpec {
  enum class Kind { Const, Sin, Box, File } kind;
  double c = 0.0;       // Const value, Box height
  int k = 0;            // Sin frequency
  double a = 0.0, b = 0.0;  // Box bounds
  std::string path;     // File path
};

DensitySpec parse_density_spec(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos)
    throw std::invalid_argument("density spec '" + spec +
                                "' is missing ':' (expected kind:args)");
  const std::string kind = spec.substr(0, colon);
  const std::string args = spec.substr(colon + 1);
  DensitySpec out;
  try {
    if (kind == "const") {
      out.kind = DensitySpec::Kind::Const;
      size_t used = 0;
      out.c = std::stod(args, &used);
      if (used != args.size()) throw std::invalid_argument(args);
    } else if (kind == "sin") {
      out.kind = DensitySpec::Kind::Sin;
      size_t used = 0;
      out.k = std::stoi(args, &used);
      if (used != args.size() || out.k == 0) throw std::invalid_argument(args);
    } else if (kind == "box") {
      out.kind = DensitySpec::Kind::Box;
      std::istringstream ss(args);
      std::string tok;
      double vals[3];
      for (double& val : vals) {
        if (!std::getline(ss, tok, ','))
          throw std::invalid_argument("box needs a,b,height");
        val = std::stod(tok);
      }
      if (std::getline(ss, tok, ','))
        throw std::invalid_argument("box takes exactly a,b,height");
      out.a = vals[0];
      out.b = vals[1];
      out.c = vals[2];
      if (!(out.a < out.b))
        throw std::invalid_argument("box needs a < b");
    } else if (kind == "file") {
      out.kind = DensitySpec::Kind::File;
      out.path = args;
      if (out.path.empty()) throw std::invalid_argument("empty path");
    } else {
      throw std::invalid_argument("unknown density kind '" + kind + "'");
    }
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("malformed density spec '" + spec + "'");
  }
  return out;
}

std::vector<double> read_nodal_file(const std::string& path, int num_nodes) {
  std::ifstream in(path);
  if (!in)
    throw std::invalid_argument("cannot open nodal value file '" + path + "'");
  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (tok.find_first_not_of(" \t\r") == std::string::npos) continue;
      values.push_back(std::stod(tok));
    }
  }
  if (static_cast<int>(values.size()) != num_nodes)
    throw std::invalid_argument("nodal file '" + path + "' holds " +
                                std::to_string(values.size()) +
                                " values, mesh has " +
                                std::to_string(num_nodes) + " nodes");
  return values;
}

// Exact integral of height*chi_(a,b) against both hats of a 1D element.
void box_load_element(double x0, double x1, double a, double b, double height,
                      double& into_left, double& into_right) {
  const double s = std::max(a, x0);
  const double t = std::min(b, x1);
  into_left = into_right = 0.0;
  if (s >= t) return;
  const double h = x1 - x0;
  into_left = height * ((x1 - s) * (x1 - s) - (x1 - t) * (x1 - t)) / (2.0 * h);
  into_right = height * ((t - x0) * (t - x0) - (s - x0) * (s - x0)) / (2.0 * h);
}

// Clips a convex polygon against the half plane keep_left ? x <= c : x >= c.
std::vector<Eigen::Vector2d> clip_half_plane(
    const std::vector<Eigen::Vector2d>& poly, double c, bool keep_left) {
  std::vector<Eigen::Vector2d> out;
  const auto inside = [&](const Eigen::Vector2d& p) {
    return keep_left ? p.x() <= c : p.x() >= c;
  };
  const int n = static_cast<int>(poly.size());
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d& p = poly[i];
    const Eigen::Vector2d& q = poly[(i + 1) % n];
    const bool pin = inside(p), qin = inside(q);
    if (pin) out.push_back(p);
    if (pin != qin) {
      const double t = (c - p.x()) / (q.x() - p.x());
      out.push_back(p + t * (q - p));
    }
  }
  return out;
}

// Integral of the linear function with the given vertex values over the
// triangle (p0,p1,p2), restricted to the strip a < x < b.
double strip_integral_linear(const Eigen::Vector2d& p0,
                             const Eigen::Vector2d& p1,
                             const Eigen::Vector2d& p2,
                             const Eigen::Vector3d& vertex_values, double a,
                             double b) {
  std::vector<Eigen::Vector2d> poly = {p0, p1, p2};
  poly = clip_half_plane(poly, a, /*keep_left=*/false);
  if (poly.size() < 3) return 0.0;
  poly = clip_half_plane(poly, b, /*keep_left=*/true);
  if (poly.size() < 3) return 0.0;

  // Barycentric evaluation of the linear function at a point.
  const double det = (p1.x() - p0.x()) * (p2.y() - p0.y()) -
                     (p2.x() - p0.x()) * (p1.y() - p0.y());
  const auto eval = [&](const Eigen::Vector2d& p) {
    const double l1 = ((p.x() - p0.x()) * (p2.y() - p0.y()) -
                       (p2.x() - p0.x()) * (p.y() - p0.y())) /
                      det;
    const double l2 = ((p1.x() - p0.x()) * (p.y() - p0.y()) -
                       (p.x() - p0.x()) * (p1.y() - p0.y())) /
                      det;
    return vertex_values(0) * (1.0 - l1 - l2) + vertex_values(1) * l1 +
           vertex_values(2) * l2;
  };

  double total = 0.0;
  for (size_t i = 1; i + 1 < poly.size(); ++i) {
    const Eigen::Vector2d& q0 = poly[0];
    const Eigen::Vector2d& q1 = poly[i];
    const Eigen::Vector2d& q2 = poly[i + 1];
    const double area = 0.5 * std::abs((q1.x() - q0.x()) * (q2.y() - q0.y()) -
                                       (q2.x() - q0.x()) * (q1.y() - q0.y()));
    total += area * (eval(q0) + eval(q1) + eval(q2)) / 3.0;
  }
  return total;
}

}  // namespace

FemSystem::FemSystem(Mesh mesh) : mesh_(std::move(mesh)) {
  const int n = mesh_.num_interior();
  Triplets tk, tm;
  Eigen::VectorXd lumped_all = Eigen::VectorXd::Zero(mesh_.num_nodes());

  if (mesh_.dim == 1) {
    const double h = mesh_.h;
    const double k_loc[2][2] = {{1.0 / h, -1.0 / h}, {-1.0 / h, 1.0 / h}};
    const double m_loc[2][2] = {{h / 3.0, h / 6.0}, {h / 6.0, h / 3.0}};
    for (int e = 0; e < mesh_.num_elems(); ++e) {
      const int v[2] = {mesh_.elements(e, 0), mesh_.elements(e, 1)};
      for (int a = 0; a < 2; ++a) {
        lumped_all[v[a]] += h / 2.0;
        const int ia = mesh_.interior_index[v[a]];
        if (ia < 0) continue;
        for (int b = 0; b < 2; ++b) {
          const int ib = mesh_.interior_index[v[b]];
          if (ib < 0) continue;
          tk.add(ia, ib, k_loc[a][b]);
          tm.add(ia, ib, m_loc[a][b]);
        }
      }
    }
  } else {
    Eigen::Matrix3d k_loc, m_loc;
    double area = 0.0;
    for (int e = 0; e < mesh_.num_elems(); ++e) {
      const int v[3] = {mesh_.elements(e, 0), mesh_.elements(e, 1),
                        mesh_.elements(e, 2)};
      local_matrices_2d(mesh_.vertices.row(v[0]), mesh_.vertices.row(v[1]),
                        mesh_.vertices.row(v[2]), k_loc, m_loc, area);
      for (int a = 0; a < 3; ++a) {
        lumped_all[v[a]] += area / 3.0;
        const int ia = mesh_.interior_index[v[a]];
        if (ia < 0) continue;
        for (int b = 0; b < 3; ++b) {
          const int ib = mesh_.interior_index[v[b]];
          if (ib < 0) continue;
          tk.add(ia, ib, k_loc(a, b));
          tm.add(ia, ib, m_loc(a, b));
        }
      }
    }
  }

  K_.resize(n, n);
  K_.setFromTriplets(tk.t.begin(), tk.t.end());
  Mcons_.resize(n, n);
  Mcons_.setFromTriplets(tm.t.begin(), tm.t.end());
  E1_ = K_ + Mcons_;

  m_.resize(n);
  boundary_mass_ = 0.0;
  for (int node = 0; node < mesh_.num_nodes(); ++node) {
    const int i = mesh_.interior_index[node];
    if (i >= 0)
      m_[i] = lumped_all[node];
    else
      boundary_mass_ += lumped_all[node];
  }

  K_fact_ = std::make_unique<Eigen::SimplicialLLT<SparseMat>>();
  K_fact_->compute(K_);
  if (K_fact_->info() != Eigen::Success)
    throw NumericalError("stiffness factorization failed (broken mesh?)");
  E1_fact_ = std::make_unique<Eigen::SimplicialLLT<SparseMat>>();
  E1_fact_->compute(E1_);
  if (E1_fact_->info() != Eigen::Success)
    throw NumericalError("Dirichlet form factorization failed");
  kinv_cache_ = std::make_unique<ColumnCache>();
  kinv_cache_->columns.resize(n);
}

PrimalVec FemSystem::apply_inverse(const DualVec& r) const {
  if (r.size() != n()) throw std::invalid_argument("dual vector size mismatch");
  return PrimalVec(K_fact_->solve(r.v));
}

PrimalVec FemSystem::apply_e1_inverse(const DualVec& r) const {
  if (r.size() != n()) throw std::invalid_argument("dual vector size mismatch");
  return PrimalVec(E1_fact_->solve(r.v));
}

DualVec FemSystem::apply_stiffness(const PrimalVec& u) const {
  if (u.size() != n()) throw std::invalid_argument("primal vector size mismatch");
  return DualVec(K_ * u.v);
}

double FemSystem::dual_norm(const DualVec& r) const {
  const PrimalVec u = apply_inverse(r);
  const double radicand = r.v.dot(u.v);
  if (radicand < -1e-12)
    throw NumericalError("negative dual norm radicand " +
                         std::to_string(radicand));
  return std::sqrt(std::max(radicand, 0.0));
}

double FemSystem::energy_norm(const PrimalVec& u) const {
  return std::sqrt(std::max(u.v.dot(K_ * u.v), 0.0));
}

DualVec FemSystem::weigh(const Eigen::VectorXd& nodal) const {
  if (nodal.size() != n()) throw std::invalid_argument("nodal size mismatch");
  return DualVec(m_.cwiseProduct(nodal));
}

const Eigen::VectorXd& FemSystem::stiffness_inverse_column(int j) const {
  std::lock_guard<std::mutex> lock(kinv_cache_->mutex);
  if (!kinv_cache_->columns[j]) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n());
    e[j] = 1.0;
    kinv_cache_->columns[j] =
        std::make_unique<Eigen::VectorXd>(K_fact_->solve(e));
  }
  return *kinv_cache_->columns[j];
}

DualVec load_vector(const Mesh& mesh, const std::string& density_spec) {
  const DensitySpec spec = parse_density_spec(density_spec);
  const int n = mesh.num_interior();
  Eigen::VectorXd r = Eigen::VectorXd::Zero(n);

  switch (spec.kind) {
    case DensitySpec::Kind::Const: {
      if (mesh.dim == 1) {
        for (int e = 0; e < mesh.num_elems(); ++e)
          for (int a = 0; a < 2; ++a) {
            const int i = mesh.interior_index[mesh.elements(e, a)];
            if (i >= 0) r[i] += spec.c * mesh.h / 2.0;
          }
      } else {
        Eigen::Matrix3d k_loc, m_loc;
        double area = 0.0;
        for (int e = 0; e < mesh.num_elems(); ++e) {
          const int* v = mesh.elements.row(e).data();
          local_matrices_2d(mesh.vertices.row(v[0]), mesh.vertices.row(v[1]),
                            mesh.vertices.row(v[2]), k_loc, m_loc, area);
          for (int a = 0; a < 3; ++a) {
            const int i = mesh.interior_index[v[a]];
            if (i >= 0) r[i] += spec.c * area / 3.0;
          }
        }
      }
      break;
    }
    case DensitySpec::Kind::Sin: {
      if (mesh.dim != 1)
        throw std::invalid_argument("sin loads are 1D only");
      const double w = spec.k * M_PI;
      for (int e = 0; e < mesh.num_elems(); ++e) {
        const double x0 = mesh.vertices(mesh.elements(e, 0), 0);
        const double x1 = mesh.vertices(mesh.elements(e, 1), 0);
        const double h = x1 - x0;
        const double i0 = int_sin(w, x0, x1);
        const double i1 = int_x_sin(w, x0, x1);
        const int left = mesh.interior_index[mesh.elements(e, 0)];
        const int right = mesh.interior_index[mesh.elements(e, 1)];
        if (left >= 0) r[left] += (x1 * i0 - i1) / h;
        if (right >= 0) r[right] += (i1 - x0 * i0) / h;
      }
      break;
    }
    case DensitySpec::Kind::Box: {
      if (mesh.dim == 1) {
        for (int e = 0; e < mesh.num_elems(); ++e) {
          const double x0 = mesh.vertices(mesh.elements(e, 0), 0);
          const double x1 = mesh.vertices(mesh.elements(e, 1), 0);
          double into_left = 0.0, into_right = 0.0;
          box_load_element(x0, x1, spec.a, spec.b, spec.c, into_left,
                           into_right);
          const int left = mesh.interior_index[mesh.elements(e, 0)];
          const int right = mesh.interior_index[mesh.elements(e, 1)];
          if (left >= 0) r[left] += into_left;
          if (right >= 0) r[right] += into_right;
        }
      } else {
        // vertical strip a < x < b, exact by polygon clipping
        for (int e = 0; e < mesh.num_elems(); ++e) {
          const int v[3] = {mesh.elements(e, 0), mesh.elements(e, 1),
                            mesh.elements(e, 2)};
          for (int a = 0; a < 3; ++a) {
            const int i = mesh.interior_index[v[a]];
            if (i < 0) continue;
            Eigen::Vector3d vv = Eigen::Vector3d::Zero();
            vv[a] = 1.0;
            r[i] += spec.c * strip_integral_linear(
                                 mesh.vertices.row(v[0]),
                                 mesh.vertices.row(v[1]),
                                 mesh.vertices.row(v[2]), vv, spec.a, spec.b);
          }
        }
      }
      break;
    }
    case DensitySpec::Kind::File: {
      const std::vector<double> vals =
          read_nodal_file(spec.path, mesh.num_nodes());
      if (mesh.dim == 1) {
        const double h = mesh.h;
        const double m_loc[2][2] = {{h / 3.0, h / 6.0}, {h / 6.0, h / 3.0}};
        for (int e = 0; e < mesh.num_elems(); ++e)
          for (int a = 0; a < 2; ++a) {
            const int i = mesh.interior_index[mesh.elements(e, a)];
            if (i < 0) continue;
            for (int b = 0; b < 2; ++b)
              r[i] += m_loc[a][b] * vals[mesh.elements(e, b)];
          }
      } else {
        Eigen::Matrix3d k_loc, m_loc;
        double area = 0.0;
        for (int e = 0; e < mesh.num_elems(); ++e) {
          const int* v = mesh.elements.row(e).data();
          local_matrices_2d(mesh.vertices.row(v[0]), mesh.vertices.row(v[1]),
                            mesh.vertices.row(v[2]), k_loc, m_loc, area);
          for (int a = 0; a < 3; ++a) {
            const int i = mesh.interior_index[v[a]];
            if (i < 0) continue;
            for (int b = 0; b < 3; ++b) r[i] += m_loc(a, b) * vals[v[b]];
          }
        }
      }
      break;
    }
  }
  return DualVec(std::move(r));
}

DualVec point_load(const Mesh& mesh, double x, double weight) {
  if (mesh.dim != 1) throw std::invalid_argument("point_load is 1D only");
  if (x <= 0.0 || x >= 1.0)
    throw std::invalid_argument("point load position must be interior");
  Eigen::VectorXd r = Eigen::VectorXd::Zero(mesh.num_interior());
  for (int node = 1; node < mesh.num_nodes() - 1; ++node) {
    const double d = std::abs(mesh.vertices(node, 0) - x);
    if (d < mesh.h) r[mesh.interior_index[node]] = weight * (1.0 - d / mesh.h);
  }
  return DualVec(std::move(r));
}

DualVec line_load(const Mesh& mesh, double x, double weight) {
  if (mesh.dim != 2) throw std::invalid_argument("line_load is 2D only");
  if (x <= 0.0 || x >= 1.0)
    throw std::invalid_argument("line position must be interior");
  Eigen::VectorXd r = Eigen::VectorXd::Zero(mesh.num_interior());
  // For each triangle, the restriction of a P1 basis function to the
  // segment {x} x triangle is linear; the trapezoid rule is exact.
  for (int e = 0; e < mesh.num_elems(); ++e) {
    const int v[3] = {mesh.elements(e, 0), mesh.elements(e, 1),
                      mesh.elements(e, 2)};
    std::vector<Eigen::Vector2d> pts;
    for (int a = 0; a < 3; ++a) {
      const Eigen::Vector2d p = mesh.vertices.row(v[a]);
      const Eigen::Vector2d q = mesh.vertices.row(v[(a + 1) % 3]);
      if ((p.x() - x) * (q.x() - x) < 0.0) {
        const double t = (x - p.x()) / (q.x() - p.x());
        pts.push_back(p + t * (q - p));
      } else if (p.x() == x) {
        pts.push_back(p);
      }
    }
    if (pts.size() < 2) continue;
    // dedupe (vertex-on-line cases)
    std::vector<Eigen::Vector2d> seg;
    for (const auto& p : pts) {
      bool dup = false;
      for (const auto& q : seg) dup = dup || (p - q).norm() < 1e-14;
      if (!dup) seg.push_back(p);
    }
    if (seg.size() != 2) continue;
    const double len = (seg[1] - seg[0]).norm();
    if (len < 1e-15) continue;

    const Eigen::Vector2d p0 = mesh.vertices.row(v[0]);
    const Eigen::Vector2d p1 = mesh.vertices.row(v[1]);
    const Eigen::Vector2d p2 = mesh.vertices.row(v[2]);
    const double det = (p1.x() - p0.x()) * (p2.y() - p0.y()) -
                       (p2.x() - p0.x()) * (p1.y() - p0.y());
    const auto bary = [&](const Eigen::Vector2d& p) {
      Eigen::Vector3d l;
      l[1] = ((p.x() - p0.x()) * (p2.y() - p0.y()) -
              (p2.x() - p0.x()) * (p.y() - p0.y())) /
             det;
      l[2] = ((p1.x() - p0.x()) * (p.y() - p0.y()) -
              (p.x() - p0.x()) * (p1.y() - p0.y())) /
             det;
      l[0] = 1.0 - l[1] - l[2];
      return l;
    };
    const Eigen::Vector3d l0 = bary(seg[0]), l1 = bary(seg[1]);
    for (int a = 0; a < 3; ++a) {
      const int i = mesh.interior_index[v[a]];
      // Shared edges on the line are visited by both adjacent triangles;
      // halve so each physical segment contributes once.
      const bool on_edge = std::abs(mesh.vertices(v[0], 0) - x) < 1e-14 ||
                           std::abs(mesh.vertices(v[1], 0) - x) < 1e-14 ||
                           std::abs(mesh.vertices(v[2], 0) - x) < 1e-14;
      const double share = on_edge ? 0.5 : 1.0;
      if (i >= 0) r[i] += share * weight * len * (l0[a] + l1[a]) / 2.0;
    }
  }
  return DualVec(std::move(r));
}

}  // namespace evi
