#pragma once

#include <vector>

#include "core/cones.hpp"
#include "core/fem.hpp"
#include "core/qp.hpp"
#include "core/vi.hpp"

namespace evi {

// Directional derivative of the solution maps at (f, y, q) in direction g:
// delta for the primal map, eta (nodal) for the dual map, linked by
// delta = K^{-1}(g - D eta) and <eta, delta>_h = 0.
struct DerivativeResult {
  PrimalVec delta;
  Eigen::VectorXd eta;  // nodal values; the DualVec is D eta
  ConeSpec cone;        // critical cone used
  double orthogonality_gap = 0.0;  // <eta, delta>_h
  double cone_violation = 0.0;     // infeasibility of eta w.r.t. the cone
  QpReport report;
};

// Nodes with |y_i| below this fraction of ||y||_inf count as y_i = 0 when
// the critical cone is built from a numerically solved pair.
inline constexpr double kStrongActivityRel = 1e-7;

// delta = argmin (1/2) d'Kd - g'd over the polar of the critical cone;
// eta recovered nodally as (g_i - (K delta)_i)/m_i.
DerivativeResult derivative_S(const FemSystem& sys, const ViSolution& vi,
                              const DualVec& g, double tol = 0.0);

// eta solves the K^{-1}-metric projection of g over the critical cone
// directly; delta = K^{-1}(g - D eta).
DerivativeResult derivative_T(const FemSystem& sys, const ViSolution& vi,
                              const DualVec& g, double tol = 0.0);

struct DerivativePair {
  DerivativeResult primal;  // from derivative_S
  DerivativeResult dual;    // from derivative_T
  double formulation_gap = 0.0;  // ||delta_S - delta_T||_K
};
DerivativePair derivative_both(const FemSystem& sys, const ViSolution& vi,
                               const DualVec& g, double tol = 0.0);

struct FdRow {
  double t = 0.0;
  double error = 0.0;  // relative in the K norm, absolute when delta = 0
};

// One-sided difference quotients (S(f + t g_t) - S(f))/t against the
// computed derivative, re-solving at full tolerance. When perturbation is
// given, g_t = g + t * perturbation (the Hadamard mode); otherwise g_t = g.
std::vector<FdRow> fd_oracle(const FemSystem& sys, const DualVec& f,
                             const DualVec& g,
                             const std::vector<double>& t_list,
                             const DualVec* perturbation = nullptr);

}  // namespace evi
