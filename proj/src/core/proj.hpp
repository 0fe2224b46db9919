#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace evi::detail {

inline Eigen::VectorXd clamp_box(const Eigen::VectorXd& v,
                                 const Eigen::VectorXd& lo,
                                 const Eigen::VectorXd& hi) {
  return v.cwiseMax(lo).cwiseMin(hi);
}

// Euclidean projection onto {lo <= x <= hi, w.x = 0}. The scalar dual
// mapping lambda -> w . clamp(v - lambda w) is continuous, piecewise linear
// and nonincreasing; bisection plus a final unclamped-set polish gives the
// root to machine accuracy. A zero weight vector degenerates to the plain
// box clamp. The feasible set must contain a point (0 does, for every cone
// handled here).
inline Eigen::VectorXd project_box_equality(const Eigen::VectorXd& v,
                                            const Eigen::VectorXd& lo,
                                            const Eigen::VectorXd& hi,
                                            const Eigen::VectorXd& w) {
  if (w.size() == 0 || w.lpNorm<Eigen::Infinity>() == 0.0)
    return clamp_box(v, lo, hi);
  const auto g = [&](double lambda) {
    return w.dot(clamp_box(v - lambda * w, lo, hi));
  };
  double a = -1.0, b = 1.0;
  for (int i = 0; i < 200 && g(a) < 0.0; ++i) a *= 2.0;
  for (int i = 0; i < 200 && g(b) > 0.0; ++i) b *= 2.0;
  for (int i = 0; i < 128; ++i) {
    const double mid = 0.5 * (a + b);
    if (g(mid) > 0.0)
      a = mid;
    else
      b = mid;
  }
  double lambda = 0.5 * (a + b);

  // polish: with the clamp pattern fixed at the located lambda, the root
  // of the linear piece is exact
  const Eigen::VectorXd x = v - lambda * w;
  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (x[i] > lo[i] && x[i] < hi[i]) {
      num += w[i] * v[i];
      den += w[i] * w[i];
    } else {
      num += w[i] * std::clamp(x[i], lo[i], hi[i]);
    }
  }
  if (den > 0.0) {
    const double polished = num / den;
    if (std::abs(g(polished)) <= std::abs(g(lambda))) lambda = polished;
  }
  return clamp_box(v - lambda * w, lo, hi);
}

}  // namespace evi::detail
