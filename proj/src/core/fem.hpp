#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <memory>
#include <mutex>
#include <string>

#include "core/mesh.hpp"

namespace evi {

// Coefficient vectors indexed by interior nodes, tagged by role.
// A PrimalVec holds nodal function values; a DualVec holds functional
// coefficients r_i = <r, phi_i> against the P1 basis. The dual pairing of
// the two is the plain coefficient dot product.
struct PrimalVec {
  Eigen::VectorXd v;
  PrimalVec() = default;
  explicit PrimalVec(Eigen::VectorXd values) : v(std::move(values)) {}
  int size() const { return static_cast<int>(v.size()); }
};

struct DualVec {
  Eigen::VectorXd v;
  DualVec() = default;
  explicit DualVec(Eigen::VectorXd coeffs) : v(std::move(coeffs)) {}
  int size() const { return static_cast<int>(v.size()); }
};

inline double pairing(const DualVec& r, const PrimalVec& u) {
  return r.v.dot(u.v);
}

using SparseMat = Eigen::SparseMatrix<double>;

// Discretized operator data on the interior nodes of a mesh: stiffness K
// (the discrete Laplacian), consistent mass, lumped mass weights (the
// discrete measure), and the Dirichlet form matrix E1 = K + Mcons, with
// Cholesky factorizations of K and E1. Immutable after construction and
// safe for concurrent read access.
class FemSystem {
public:
  explicit FemSystem(Mesh mesh);
  FemSystem(FemSystem&&) = default;
  FemSystem& operator=(FemSystem&&) = default;
  FemSystem(const FemSystem&) = delete;
  FemSystem& operator=(const FemSystem&) = delete;

  const Mesh& mesh() const { return mesh_; }
  int n() const { return mesh_.num_interior(); }

  const SparseMat& K() const { return K_; }
  const SparseMat& Mcons() const { return Mcons_; }
  const SparseMat& E1() const { return E1_; }
  const Eigen::VectorXd& lumped_mass() const { return m_; }
  double boundary_lumped_mass() const { return boundary_mass_; }

  // u = K^{-1} r (solution with the Dirichlet-eliminated stiffness).
  PrimalVec apply_inverse(const DualVec& r) const;
  PrimalVec apply_e1_inverse(const DualVec& r) const;
  DualVec apply_stiffness(const PrimalVec& u) const;

  // sqrt(r' K^{-1} r), the discrete dual norm. Throws NumericalError when
  // the radicand drops below -1e-12.
  double dual_norm(const DualVec& r) const;
  // sqrt(u' K u).
  double energy_norm(const PrimalVec& u) const;

  // D z with D = diag(m): the DualVec induced by nodal box values.
  DualVec weigh(const Eigen::VectorXd& nodal) const;

  // Column j of the dense K^{-1}, memoized; used by inverse-metric QPs.
  const Eigen::VectorXd& stiffness_inverse_column(int j) const;

private:
  struct ColumnCache {
    std::mutex mutex;
    std::vector<std::unique_ptr<Eigen::VectorXd>> columns;
  };

  Mesh mesh_;
  SparseMat K_, Mcons_, E1_;
  Eigen::VectorXd m_;
  double boundary_mass_ = 0.0;
  std::unique_ptr<Eigen::SimplicialLLT<SparseMat>> K_fact_, E1_fact_;
  std::unique_ptr<ColumnCache> kinv_cache_;
};

inline FemSystem assemble(Mesh mesh) { return FemSystem(std::move(mesh)); }

// Assembles the load functional <f, phi_i> for a density given by a spec
// string: `const:<c>` | `sin:<k>` (sin(k*pi*x), 1D) | `box:<a>,<b>,<height>`
// (scaled indicator of (a,b); in 2D the vertical strip a < x < b) |
// `file:<path>` (CSV of nodal values over all mesh nodes, consistent-mass
// load of the P1 interpolant). Integration is exact per element.
DualVec load_vector(const Mesh& mesh, const std::string& density_spec);

// Point functional w * delta_x as a DualVec: coefficients w * phi_i(x). 1D.
DualVec point_load(const Mesh& mesh, double x, double weight);

// Line functional along the vertical segment {x} x (0,1) with constant
// density w per unit length. 2D.
DualVec line_load(const Mesh& mesh, double x, double weight);

}  // namespace evi
