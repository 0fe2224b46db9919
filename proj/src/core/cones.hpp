#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "core/fem.hpp"

namespace evi {

// Nodal values in [-1,1]: an element of the discrete box M, the
// subdifferential of the weighted l1 functional at zero.
struct BoxElem {
  Eigen::VectorXd q;
  BoxElem() = default;
  explicit BoxElem(Eigen::VectorXd values);  // validates |q_i| <= 1 + 1e-9
  int size() const { return static_cast<int>(q.size()); }
};

enum class ConeTag : std::uint8_t { Free, NonNeg, NonPos, Zero };

// Per-node sign constraints plus an optional homogeneous linear equality
// sum_i w_i z_i = 0; describes tangent, radial, critical and polar cones.
struct ConeSpec {
  std::vector<ConeTag> tags;
  std::optional<Eigen::VectorXd> equality_weights;

  int size() const { return static_cast<int>(tags.size()); }
  bool contains(const Eigen::VectorXd& z, double tol = 1e-12) const;
  // Bound representation of the tags: lo/hi with +-inf for free directions.
  void bounds(Eigen::VectorXd& lo, Eigen::VectorXd& hi) const;
};

struct ActiveSets {
  std::vector<int> plus, minus, inactive;
};

// Partition of the nodes by activity of the box constraint:
// plus = {q_i >= 1 - tol}, minus = {q_i <= -1 + tol}, inactive otherwise.
ActiveSets active_sets(const BoxElem& q, double tol_active = 1e-9);

// Tangent cone of the box at q: nonpos on the upper-active set, nonneg on
// the lower-active set, free elsewhere. For the finite-dimensional box the
// radial cone is already closed, so this serves both radial and tangent.
ConeSpec tangent_cone(const BoxElem& q, double tol_active = 1e-9);

// Whether y lies in the normal cone of the box at q under the lumped-mass
// pairing, i.e. sum_i m_i (p_i - q_i) y_i <= tol for the maximizing p.
bool normal_cone_contains(const FemSystem& sys, const BoxElem& q,
                          const PrimalVec& y, double tol = 1e-10);

// Critical cone T_M(q) intersect y-perp in reduced form: zero wherever
// |y_i| > tol_y, activity tags from q elsewhere. The orthogonality
// constraint is implied termwise and eliminated symbolically. Throws when
// complementarity q_i = sign(y_i) fails on {|y_i| > tol_y}.
ConeSpec critical_cone(const BoxElem& q, const PrimalVec& y,
                       double tol_active = 1e-9, double tol_y = 0.0);

// Coordinatewise polar under a positively weighted pairing:
// nonpos <-> nonneg, free <-> zero. Rejects cones carrying an equality.
ConeSpec polar_cone(const ConeSpec& cone);

struct PolyhedricityCertificate {
  bool pass = false;
  bool symbolic_identical = false;
  int samples_tested = 0;
  double max_violation = 0.0;
};

// Finite-dimensional polyhedricity check for the box [-1,1]^d at w w.r.t.
// a normal direction eta: verifies T(w) ^ eta-perp = cl(R(w) ^ eta-perp)
// symbolically and by randomized membership sampling. Always passes for a
// box; the observable failure of the continuum analogue lives in mesh
// refinement, not here.
PolyhedricityCertificate polyhedricity_check_fd(const Eigen::VectorXd& w,
                                                const Eigen::VectorXd& eta,
                                                int n_samples,
                                                std::uint64_t seed);

}  // namespace evi
