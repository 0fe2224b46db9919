#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "core/cones.hpp"
#include "core/fem.hpp"

namespace evi {

// Quadratic model metric: which SPD operator plays the Hessian.
//   Identity          H = I                  (plain Euclidean projection)
//   Stiffness         H = K
//   DirichletForm     H = E1 = K + Mcons
//   StiffnessInverse  H = D K^{-1} D, D = diag(m)
enum class QpMetric { Identity, Stiffness, DirichletForm, StiffnessInverse };

// min (1/2) x' H x - c' x  subject to  lo <= x <= hi  and optionally
// w . x = 0. Bounds may be infinite; fixed coordinates have lo == hi.
struct QpProblem {
  QpMetric metric = QpMetric::Identity;
  const FemSystem* sys = nullptr;  // required unless metric is Identity
  Eigen::VectorXd linear;          // c
  Eigen::VectorXd lo, hi;
  std::optional<Eigen::VectorXd> equality_weights;
  std::optional<Eigen::VectorXd> start;

  int size() const { return static_cast<int>(linear.size()); }

  static QpProblem euclidean(Eigen::VectorXd c, Eigen::VectorXd lo,
                             Eigen::VectorXd hi);
  // min (1/2) x' A x - r' x over a cone, A = K or E1.
  static QpProblem energy(const FemSystem& sys, QpMetric metric,
                          const DualVec& r, const ConeSpec& cone);
  // Projection of a dual target onto {D z : z admissible} in the K^{-1}
  // metric: min (1/2) (D z - target)' K^{-1} (D z - target).
  static QpProblem dual_projection(const FemSystem& sys, const DualVec& target,
                                   const ConeSpec& cone);
  // Same with z ranging over the box [-1,1]^n.
  static QpProblem dual_projection_box(const FemSystem& sys,
                                       const DualVec& target);
};

struct QpReport {
  int iterations = 0;
  bool converged = false;
  double kkt_residual = 0.0;
  std::vector<double> residual_history;
};

struct QpSolution {
  Eigen::VectorXd x;
  // lambda = c - H x - mu w: zero on free coordinates, <= 0 at lower
  // bounds, >= 0 at upper bounds.
  Eigen::VectorXd multipliers;
  double equality_multiplier = 0.0;
  QpReport report;
};

// Per-metric default KKT tolerance (1e-10, 1e-9 for the inverse metric).
double qp_default_tol(QpMetric metric);

// Primal-dual active set method (semismooth Newton on the projection
// equation); inner solves are direct. Throws SolverFailure when the active
// sets fail to settle within max_iter; callers fall back to solve_qp_pg.
QpSolution solve_qp(const QpProblem& prob, double tol = 0.0,
                    int max_iter = 100);

// Accelerated projected gradient with function-value restarts; objective
// is non-increasing across iterations. Convergence-guaranteed fallback.
QpSolution solve_qp_pg(const QpProblem& prob, double tol = 0.0,
                       int max_iter = 200000);

struct ConeDistanceResult {
  double distance = 0.0;
  Eigen::VectorXd minimizer;
  double sup_norm = 0.0;
};

// Distance in the dual norm from target to {D z : z in cone}, together
// with the minimizer and its sup norm (the blow-up diagnostic).
ConeDistanceResult cone_distance(const FemSystem& sys, const DualVec& target,
                                 const ConeSpec& cone);

}  // namespace evi
