#pragma once

#include <vector>

#include "core/cones.hpp"
#include "core/fem.hpp"
#include "core/qp.hpp"

namespace evi {

// Solution of the variational inequality of the second kind
//   <K y - f, v - y> + j_h(v) - j_h(y) >= 0
// together with the dual element q: K y + D q = f, q in M, and
// <q, y>_h = j_h(y).
struct ViSolution {
  PrimalVec y;
  BoxElem q;
  double duality_residual = 0.0;     // ||K y + D q - f||_2
  double complementarity_gap = 0.0;  // <q,y>_h - j_h(y)
  QpReport report;
};

// j_h(y) = sum_i m_i |y_i|, the lumped l1 functional.
double j_h(const FemSystem& sys, const PrimalVec& y);

// <q, y>_h = sum_i m_i q_i y_i.
double box_pairing(const FemSystem& sys, const BoxElem& q, const PrimalVec& y);

// Primal-dual active set iteration on the projection equation
// q = proj_[-1,1](q + c y), c = 1; falls back to a proximal-gradient
// descent on the primal energy when the active sets cycle.
ViSolution solve_primal(const FemSystem& sys, const DualVec& f,
                        double tol = 1e-10, int max_iter = 100);

// Dual route: q = argmin over the box of (1/2)(Dq - f)' K^{-1} (Dq - f),
// then y = K^{-1}(f - D q). Independent of solve_primal by construction.
ViSolution solve_dual(const FemSystem& sys, const DualVec& f, double tol = 0.0,
                      int max_iter = 200);

// Runs both routes and reports the energy-norm gap ||y_primal - y_dual||_K.
struct ViCrossCheck {
  ViSolution primal;
  ViSolution dual;
  double gap = 0.0;
};
ViCrossCheck solve_cross(const FemSystem& sys, const DualVec& f,
                         double tol = 1e-10);

// Minimizes the E1 form subject to w >= lower_value on the given mesh
// nodes (which must be interior). Returns the minimizer and w' E1 w.
struct ObstacleResult {
  PrimalVec w;
  double energy = 0.0;
};
ObstacleResult solve_obstacle(const FemSystem& sys,
                              const std::vector<int>& constraint_nodes,
                              double lower_value);

// capa(node_set) = E1(w,w) for the equilibrium potential w with w >= 1 on
// the set. Empty sets have capacity zero; monotone under inclusion.
double capacity(const FemSystem& sys, const std::vector<int>& node_set);

}  // namespace evi
