#include "core/vi.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "core/errors.hpp"

namespace evi {

namespace {

ViSolution finish_solution(const FemSystem& sys, const DualVec& f,
                           Eigen::VectorXd y, Eigen::VectorXd q,
                           QpReport report) {
  ViSolution sol;
  sol.y = PrimalVec(std::move(y));
  sol.q = BoxElem(std::move(q));
  const Eigen::VectorXd residual =
      sys.K() * sol.y.v + sys.lumped_mass().cwiseProduct(sol.q.q) - f.v;
  sol.duality_residual = residual.norm();
  sol.complementarity_gap = box_pairing(sys, sol.q, sol.y) - j_h(sys, sol.y);
  sol.report = std::move(report);
  return sol;
}

// Proximal gradient (soft thresholding) on the primal energy
//   (1/2) y'Ky - f'y + sum m_i |y_i|,
// with function-value restarts; the convergence-guaranteed fallback.
ViSolution solve_primal_pg(const FemSystem& sys, const DualVec& f, double tol,
                           int max_iter) {
  const int n = sys.n();
  const Eigen::VectorXd& m = sys.lumped_mass();
  double lip = 0.0;
  for (int j = 0; j < sys.K().outerSize(); ++j) {
    double row = 0.0;
    for (SparseMat::InnerIterator it(sys.K(), j); it; ++it)
      row += std::abs(it.value());
    lip = std::max(lip, row);
  }

  const auto shrink = [&](const Eigen::VectorXd& v, double step) {
    Eigen::VectorXd out(n);
    for (int i = 0; i < n; ++i) {
      const double thr = step * m[i];
      out[i] = v[i] > thr ? v[i] - thr : (v[i] < -thr ? v[i] + thr : 0.0);
    }
    return out;
  };
  const auto energy = [&](const Eigen::VectorXd& y) {
    return 0.5 * y.dot(sys.K() * y) - f.v.dot(y) + m.dot(y.cwiseAbs());
  };

  const double lip0 = lip;
  const auto slack = [](double f) { return 1e-14 * (std::abs(f) + 1e-300); };

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  double fx = energy(x);
  Eigen::VectorXd yv = x;
  double t = 1.0;
  QpReport report;
  double res = std::numeric_limits<double>::infinity();
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    const Eigen::VectorXd gy = sys.K() * yv - f.v;
    Eigen::VectorXd z = shrink(yv - gy / lip, 1.0 / lip);
    double fz = energy(z);
    if (fz > fx + slack(fx)) {
      const Eigen::VectorXd gx = sys.K() * x - f.v;
      z = shrink(x - gx / lip, 1.0 / lip);
      fz = energy(z);
      yv = z;
      t = 1.0;
      if (fz <= fx + slack(fx)) {
        x = z;
        fx = fz;
      } else {
        lip *= 2.0;
        yv = x;
      }
    } else {
      const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      yv = z + ((t - 1.0) / tn) * (z - x);
      t = tn;
      x = z;
      fx = fz;
    }
    const Eigen::VectorXd gx = sys.K() * x - f.v;
    res = lip0 *
          (x - shrink(x - gx / lip0, 1.0 / lip0)).lpNorm<Eigen::Infinity>();
    report.residual_history.push_back(res);
    if (res <= tol) break;
  }
  report.iterations = iter + 1;
  report.converged = res <= tol;
  report.kkt_residual = res;
  if (!report.converged)
    throw SolverFailure("primal proximal gradient stalled at residual " +
                        std::to_string(res));

  // dual recovery: q_i = (f_i - (Ky)_i)/m_i, clamped against residual noise
  Eigen::VectorXd q = (f.v - sys.K() * x).cwiseQuotient(m);
  q = q.cwiseMax(-1.0).cwiseMin(1.0);
  return finish_solution(sys, f, std::move(x), std::move(q),
                         std::move(report));
}

}  // namespace

double j_h(const FemSystem& sys, const PrimalVec& y) {
  if (y.size() != sys.n()) throw std::invalid_argument("size mismatch");
  return sys.lumped_mass().dot(y.v.cwiseAbs());
}

double box_pairing(const FemSystem& sys, const BoxElem& q, const PrimalVec& y) {
  if (q.size() != sys.n() || y.size() != sys.n())
    throw std::invalid_argument("size mismatch");
  return sys.lumped_mass().dot(q.q.cwiseProduct(y.v));
}

ViSolution solve_primal(const FemSystem& sys, const DualVec& f, double tol,
                        int max_iter) {
  if (f.size() != sys.n()) throw std::invalid_argument("size mismatch");
  const int n = sys.n();
  const Eigen::VectorXd& m = sys.lumped_mass();

  // q0 = clamp(f_i/m_i), y0 from one linear solve
  Eigen::VectorXd q = f.v.cwiseQuotient(m).cwiseMax(-1.0).cwiseMin(1.0);
  Eigen::VectorXd y =
      sys.apply_inverse(DualVec(f.v - m.cwiseProduct(q))).v;

  // residual scale for the machine-accuracy convergence test
  double k_norm = 0.0;
  for (int j = 0; j < sys.K().outerSize(); ++j) {
    double row = 0.0;
    for (SparseMat::InnerIterator it(sys.K(), j); it; ++it)
      row += std::abs(it.value());
    k_norm = std::max(k_norm, row);
  }

  QpReport report;
  std::vector<char> prev_state;
  for (int iter = 1; iter <= max_iter; ++iter) {
    // active sets of the projection equation q = proj(q + y), c = 1
    std::vector<char> state(n, 'I');
    std::vector<int> active;
    for (int i = 0; i < n; ++i) {
      const double v = q[i] + y[i];
      if (v > 1.0) {
        state[i] = 'U';
        active.push_back(i);
      } else if (v < -1.0) {
        state[i] = 'L';
        active.push_back(i);
      }
    }

    // y = 0 on inactive nodes; solve K_AA y_A = f_A -+ m_A
    y.setZero();
    if (!active.empty()) {
      const int na = static_cast<int>(active.size());
      std::vector<int> local(n, -1);
      for (int j = 0; j < na; ++j) local[active[j]] = j;
      std::vector<Eigen::Triplet<double>> trips;
      for (int j = 0; j < na; ++j)
        for (SparseMat::InnerIterator it(sys.K(), active[j]); it; ++it)
          if (local[it.row()] >= 0)
            trips.emplace_back(local[it.row()], j, it.value());
      SparseMat k_aa(na, na);
      k_aa.setFromTriplets(trips.begin(), trips.end());
      Eigen::VectorXd rhs(na);
      for (int j = 0; j < na; ++j) {
        const int i = active[j];
        rhs[j] = f.v[i] - (state[i] == 'U' ? m[i] : -m[i]);
      }
      Eigen::SimplicialLLT<SparseMat> llt(k_aa);
      if (llt.info() != Eigen::Success)
        throw NumericalError("active-block factorization failed");
      const Eigen::VectorXd ya = llt.solve(rhs);
      for (int j = 0; j < na; ++j) y[active[j]] = ya[j];
    }

    // q = +-1 on active nodes, dual recovery on inactive ones
    const Eigen::VectorXd ky = sys.K() * y;
    for (int i = 0; i < n; ++i) {
      if (state[i] == 'U')
        q[i] = 1.0;
      else if (state[i] == 'L')
        q[i] = -1.0;
      else
        q[i] = (f.v[i] - ky[i]) / m[i];
    }

    const double res =
        (ky + m.cwiseProduct(q.cwiseMax(-1.0).cwiseMin(1.0)) - f.v).norm();
    report.residual_history.push_back(res);
    report.iterations = iter;

    // fixed point of the projection equation q = proj(q + y): set repeat,
    // or both residuals at solver accuracy (exactly degenerate nodes with
    // q_i + y_i = +-1 can flap between labels while the iterate is final)
    const double r_proj =
        (q - (q + y).cwiseMax(-1.0).cwiseMin(1.0)).lpNorm<Eigen::Infinity>();
    const double r_dual =
        (ky + m.cwiseProduct(q.cwiseMax(-1.0).cwiseMin(1.0)) - f.v)
            .lpNorm<Eigen::Infinity>();
    const double machine_band =
        1e-12 * (1.0 + k_norm * y.lpNorm<Eigen::Infinity>());
    if (state == prev_state || (r_proj <= machine_band && r_dual <= machine_band)) {
      report.converged = true;
      report.kkt_residual = res;
      return finish_solution(sys, f, std::move(y),
                             q.cwiseMax(-1.0).cwiseMin(1.0),
                             std::move(report));
    }
    prev_state = state;
  }
  return solve_primal_pg(sys, f, tol, 500000);
}

ViSolution solve_dual(const FemSystem& sys, const DualVec& f, double tol,
                      int max_iter) {
  if (f.size() != sys.n()) throw std::invalid_argument("size mismatch");
  QpProblem prob = QpProblem::dual_projection_box(sys, f);
  prob.start = f.v.cwiseQuotient(sys.lumped_mass()).cwiseMax(-1.0).cwiseMin(1.0);
  QpSolution qp;
  try {
    qp = solve_qp(prob, tol, max_iter);
  } catch (const SolverFailure&) {
    qp = solve_qp_pg(prob, tol > 0.0 ? tol : 1e-11);
  }
  Eigen::VectorXd y =
      sys.apply_inverse(DualVec(f.v - sys.weigh(qp.x).v)).v;
  return finish_solution(sys, f, std::move(y), std::move(qp.x),
                         std::move(qp.report));
}

ViCrossCheck solve_cross(const FemSystem& sys, const DualVec& f, double tol) {
  ViCrossCheck out;
  out.primal = solve_primal(sys, f, tol);
  out.dual = solve_dual(sys, f);
  out.gap = sys.energy_norm(PrimalVec(out.primal.y.v - out.dual.y.v));
  return out;
}

ObstacleResult solve_obstacle(const FemSystem& sys,
                              const std::vector<int>& constraint_nodes,
                              double lower_value) {
  const int n = sys.n();
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(
      n, -std::numeric_limits<double>::infinity());
  for (int node : constraint_nodes) {
    if (node < 0 || node >= sys.mesh().num_nodes())
      throw std::invalid_argument("constraint node out of range");
    const int i = sys.mesh().interior_index[node];
    if (i < 0)
      throw std::invalid_argument(
          "constraint node " + std::to_string(node) +
          " lies on the Dirichlet boundary; the obstacle is infeasible");
    lo[i] = lower_value;
  }
  QpProblem prob;
  prob.metric = QpMetric::DirichletForm;
  prob.sys = &sys;
  prob.linear = Eigen::VectorXd::Zero(n);
  prob.lo = std::move(lo);
  prob.hi = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  QpSolution qp;
  try {
    qp = solve_qp(prob);
  } catch (const SolverFailure&) {
    qp = solve_qp_pg(prob);
  }
  ObstacleResult out;
  out.energy = qp.x.dot(sys.E1() * qp.x);
  out.w = PrimalVec(std::move(qp.x));
  return out;
}

double capacity(const FemSystem& sys, const std::vector<int>& node_set) {
  if (node_set.empty()) return 0.0;
  return solve_obstacle(sys, node_set, 1.0).energy;
}

}  // namespace evi
