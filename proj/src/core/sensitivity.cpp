#include "core/sensitivity.hpp"

#include <cmath>
#include <stdexcept>

#include "core/errors.hpp"

namespace evi {

namespace {

ConeSpec critical_cone_of(const ViSolution& vi) {
  const double tol_y =
      kStrongActivityRel * vi.y.v.lpNorm<Eigen::Infinity>();
  return critical_cone(vi.q, vi.y, 1e-9, tol_y);
}

double cone_violation_of(const ConeSpec& cone, const Eigen::VectorXd& z) {
  double viol = 0.0;
  for (int i = 0; i < cone.size(); ++i) {
    switch (cone.tags[i]) {
      case ConeTag::Free:
        break;
      case ConeTag::NonNeg:
        viol = std::max(viol, -z[i]);
        break;
      case ConeTag::NonPos:
        viol = std::max(viol, z[i]);
        break;
      case ConeTag::Zero:
        viol = std::max(viol, std::abs(z[i]));
        break;
    }
  }
  return viol;
}

}  // namespace

DerivativeResult derivative_S(const FemSystem& sys, const ViSolution& vi,
                              const DualVec& g, double tol) {
  if (g.size() != sys.n()) throw std::invalid_argument("size mismatch");
  DerivativeResult out;
  out.cone = critical_cone_of(vi);
  const ConeSpec polar = polar_cone(out.cone);

  const QpProblem prob =
      QpProblem::energy(sys, QpMetric::Stiffness, g, polar);
  QpSolution qp;
  try {
    qp = solve_qp(prob, tol);
  } catch (const SolverFailure&) {
    qp = solve_qp_pg(prob, tol > 0.0 ? tol : 1e-11);
  }
  out.delta = PrimalVec(std::move(qp.x));
  out.eta = (g.v - sys.K() * out.delta.v)
                .cwiseQuotient(sys.lumped_mass());
  out.orthogonality_gap =
      sys.lumped_mass().dot(out.eta.cwiseProduct(out.delta.v));
  out.cone_violation = cone_violation_of(out.cone, out.eta);
  out.report = std::move(qp.report);
  return out;
}

DerivativeResult derivative_T(const FemSystem& sys, const ViSolution& vi,
                              const DualVec& g, double tol) {
  if (g.size() != sys.n()) throw std::invalid_argument("size mismatch");
  DerivativeResult out;
  out.cone = critical_cone_of(vi);

  const QpProblem prob = QpProblem::dual_projection(sys, g, out.cone);
  QpSolution qp;
  try {
    qp = solve_qp(prob, tol);
  } catch (const SolverFailure&) {
    qp = solve_qp_pg(prob, tol > 0.0 ? tol : 1e-12);
  }
  out.eta = std::move(qp.x);
  out.delta =
      sys.apply_inverse(DualVec(g.v - sys.weigh(out.eta).v));
  out.orthogonality_gap =
      sys.lumped_mass().dot(out.eta.cwiseProduct(out.delta.v));
  out.cone_violation = cone_violation_of(out.cone, out.eta);
  out.report = std::move(qp.report);
  return out;
}

DerivativePair derivative_both(const FemSystem& sys, const ViSolution& vi,
                               const DualVec& g, double tol) {
  DerivativePair pair;
  pair.primal = derivative_S(sys, vi, g, tol);
  pair.dual = derivative_T(sys, vi, g, tol);
  pair.formulation_gap =
      sys.energy_norm(PrimalVec(pair.primal.delta.v - pair.dual.delta.v));
  return pair;
}

std::vector<FdRow> fd_oracle(const FemSystem& sys, const DualVec& f,
                             const DualVec& g,
                             const std::vector<double>& t_list,
                             const DualVec* perturbation) {
  for (size_t i = 0; i < t_list.size(); ++i) {
    if (t_list[i] <= 0.0)
      throw std::invalid_argument("t_list entries must be positive");
    if (i > 0 && t_list[i] >= t_list[i - 1])
      throw std::invalid_argument("t_list must be decreasing");
  }

  // re-solves at full tolerance to keep the noise floor below the band
  const double solve_tol = 1e-11;
  const ViSolution base = solve_primal(sys, f, solve_tol);
  const DerivativeResult der = derivative_S(sys, base, g);
  const double delta_norm = sys.energy_norm(der.delta);
  const bool relative = delta_norm > 1e-12;

  std::vector<FdRow> rows;
  rows.reserve(t_list.size());
  for (double t : t_list) {
    Eigen::VectorXd dir = g.v;
    if (perturbation) dir += t * perturbation->v;
    const ViSolution bumped =
        solve_primal(sys, DualVec(f.v + t * dir), solve_tol);
    const Eigen::VectorXd fd = (bumped.y.v - base.y.v) / t;
    const double err = sys.energy_norm(PrimalVec(fd - der.delta.v));
    rows.push_back({t, relative ? err / delta_norm : err});
  }
  return rows;
}

}  // namespace evi
