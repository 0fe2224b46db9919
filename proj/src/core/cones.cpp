#include "core/cones.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "core/proj.hpp"

namespace evi {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }
}  // namespace

BoxElem::BoxElem(Eigen::VectorXd values) : q(std::move(values)) {
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    if (std::abs(q[i]) > 1.0 + 1e-9)
      throw std::invalid_argument("box element violates |q_i| <= 1 at index " +
                                  std::to_string(i));
    q[i] = std::clamp(q[i], -1.0, 1.0);
  }
}

bool ConeSpec::contains(const Eigen::VectorXd& z, double tol) const {
  if (z.size() != size()) return false;
  for (int i = 0; i < size(); ++i) {
    switch (tags[i]) {
      case ConeTag::Free:
        break;
      case ConeTag::NonNeg:
        if (z[i] < -tol) return false;
        break;
      case ConeTag::NonPos:
        if (z[i] > tol) return false;
        break;
      case ConeTag::Zero:
        if (std::abs(z[i]) > tol) return false;
        break;
    }
  }
  if (equality_weights && std::abs(equality_weights->dot(z)) > tol)
    return false;
  return true;
}

void ConeSpec::bounds(Eigen::VectorXd& lo, Eigen::VectorXd& hi) const {
  lo.setConstant(size(), -kInf);
  hi.setConstant(size(), kInf);
  for (int i = 0; i < size(); ++i) {
    switch (tags[i]) {
      case ConeTag::Free:
        break;
      case ConeTag::NonNeg:
        lo[i] = 0.0;
        break;
      case ConeTag::NonPos:
        hi[i] = 0.0;
        break;
      case ConeTag::Zero:
        lo[i] = hi[i] = 0.0;
        break;
    }
  }
}

ActiveSets active_sets(const BoxElem& q, double tol_active) {
  ActiveSets sets;
  for (int i = 0; i < q.size(); ++i) {
    if (q.q[i] >= 1.0 - tol_active)
      sets.plus.push_back(i);
    else if (q.q[i] <= -1.0 + tol_active)
      sets.minus.push_back(i);
    else
      sets.inactive.push_back(i);
  }
  return sets;
}

ConeSpec tangent_cone(const BoxElem& q, double tol_active) {
  ConeSpec cone;
  cone.tags.assign(q.size(), ConeTag::Free);
  for (int i = 0; i < q.size(); ++i) {
    if (q.q[i] >= 1.0 - tol_active)
      cone.tags[i] = ConeTag::NonPos;
    else if (q.q[i] <= -1.0 + tol_active)
      cone.tags[i] = ConeTag::NonNeg;
  }
  return cone;
}

bool normal_cone_contains(const FemSystem& sys, const BoxElem& q,
                          const PrimalVec& y, double tol) {
  if (q.size() != sys.n() || y.size() != sys.n())
    throw std::invalid_argument("size mismatch");
  // gap = <p - q, y>_h for the maximizer p_i = sign(y_i); nonnegative by
  // construction, zero exactly when y is normal at q.
  double gap = 0.0;
  const Eigen::VectorXd& m = sys.lumped_mass();
  for (int i = 0; i < q.size(); ++i)
    gap += m[i] * (std::abs(y.v[i]) - q.q[i] * y.v[i]);
  return gap <= tol;
}

ConeSpec critical_cone(const BoxElem& q, const PrimalVec& y, double tol_active,
                       double tol_y) {
  if (q.size() != y.size()) throw std::invalid_argument("size mismatch");
  ConeSpec cone = tangent_cone(q, tol_active);
  for (int i = 0; i < q.size(); ++i) {
    if (std::abs(y.v[i]) > tol_y) {
      if (std::abs(q.q[i] - sign_of(y.v[i])) > tol_active)
        throw std::invalid_argument(
            "y is not in the normal cone at q: complementarity fails at "
            "index " +
            std::to_string(i));
      // <z, y>_h = 0 with every term one-signed forces z_i = 0 termwise.
      cone.tags[i] = ConeTag::Zero;
    }
  }
  return cone;
}

ConeSpec polar_cone(const ConeSpec& cone) {
  if (cone.equality_weights)
    throw std::invalid_argument(
        "polar_cone expects a cone without equality constraint");
  ConeSpec polar;
  polar.tags.resize(cone.size());
  for (int i = 0; i < cone.size(); ++i) {
    switch (cone.tags[i]) {
      case ConeTag::Free:
        polar.tags[i] = ConeTag::Zero;
        break;
      case ConeTag::Zero:
        polar.tags[i] = ConeTag::Free;
        break;
      case ConeTag::NonNeg:
        polar.tags[i] = ConeTag::NonPos;
        break;
      case ConeTag::NonPos:
        polar.tags[i] = ConeTag::NonNeg;
        break;
    }
  }
  return polar;
}

PolyhedricityCertificate polyhedricity_check_fd(const Eigen::VectorXd& w,
                                                const Eigen::VectorXd& eta,
                                                int n_samples,
                                                std::uint64_t seed) {
  const int d = static_cast<int>(w.size());
  if (eta.size() != d) throw std::invalid_argument("size mismatch");
  for (int i = 0; i < d; ++i)
    if (std::abs(w[i]) > 1.0 + 1e-12)
      throw std::invalid_argument("w is not in the box");
  const double tol = 1e-9;
  for (int i = 0; i < d; ++i) {
    const bool up = w[i] >= 1.0 - tol;
    const bool down = w[i] <= -1.0 + tol;
    if ((!up && !down && std::abs(eta[i]) > tol) || (up && eta[i] < -tol) ||
        (down && eta[i] > tol))
      throw std::invalid_argument("eta is not in the normal cone at w");
  }

  PolyhedricityCertificate cert;
  const BoxElem q(w);
  // Radial and tangent cones of a finite-dimensional box coincide (the
  // radial cone is closed), so the two with-equality descriptions are one
  // and the same ConeSpec.
  ConeSpec tangent_cap = tangent_cone(q, tol);
  tangent_cap.equality_weights = eta;
  ConeSpec radial_cap = tangent_cone(q, tol);
  radial_cap.equality_weights = eta;
  cert.symbolic_identical =
      tangent_cap.tags == radial_cap.tags &&
      (*tangent_cap.equality_weights - *radial_cap.equality_weights)
              .lpNorm<Eigen::Infinity>() == 0.0;

  // Reduced description: the termwise sign argument pins z_i = 0 wherever
  // eta_i != 0.
  ConeSpec reduced = tangent_cone(q, tol);
  for (int i = 0; i < d; ++i)
    if (std::abs(eta[i]) > tol) reduced.tags[i] = ConeTag::Zero;

  Eigen::VectorXd lo, hi;
  tangent_cap.bounds(lo, hi);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double max_violation = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    // draw from the reduced cone, check membership in both descriptions
    Eigen::VectorXd z(d);
    for (int i = 0; i < d; ++i) {
      const double g = normal(rng);
      switch (reduced.tags[i]) {
        case ConeTag::Free:
          z[i] = g;
          break;
        case ConeTag::NonNeg:
          z[i] = std::abs(g);
          break;
        case ConeTag::NonPos:
          z[i] = -std::abs(g);
          break;
        case ConeTag::Zero:
          z[i] = 0.0;
          break;
      }
    }
    max_violation = std::max(max_violation, std::abs(eta.dot(z)));
    if (!tangent_cap.contains(z, 1e-12) || !radial_cap.contains(z, 1e-12)) {
      cert.samples_tested = s + 1;
      cert.max_violation = max_violation;
      return cert;
    }
    // draw a tangent member, project onto the equality within the cone,
    // check it lands in the reduced description
    Eigen::VectorXd t(d);
    for (int i = 0; i < d; ++i) {
      const double g = normal(rng);
      switch (tangent_cap.tags[i]) {
        case ConeTag::Free:
          t[i] = g;
          break;
        case ConeTag::NonNeg:
          t[i] = std::abs(g);
          break;
        case ConeTag::NonPos:
          t[i] = -std::abs(g);
          break;
        case ConeTag::Zero:
          t[i] = 0.0;
          break;
      }
    }
    const Eigen::VectorXd p = detail::project_box_equality(t, lo, hi, eta);
    max_violation = std::max(max_violation, std::abs(eta.dot(p)));
    if (!reduced.contains(p, 1e-9)) {
      cert.samples_tested = s + 1;
      cert.max_violation = max_violation;
      return cert;
    }
  }
  cert.pass = cert.symbolic_identical;
  cert.samples_tested = n_samples;
  cert.max_violation = max_violation;
  return cert;
}

}  // namespace evi
