#include "core/qp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "core/errors.hpp"
#include "core/proj.hpp"

namespace evi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void validate(const QpProblem& prob) {
  const int n = prob.size();
  if (prob.metric != QpMetric::Identity && prob.sys == nullptr)
    throw std::invalid_argument("metric requires a FemSystem");
  if (prob.metric != QpMetric::Identity && prob.sys->n() != n)
    throw std::invalid_argument("problem size does not match system");
  if (prob.lo.size() != n || prob.hi.size() != n)
    throw std::invalid_argument("bounds size mismatch");
  for (int i = 0; i < n; ++i)
    if (!(prob.lo[i] <= prob.hi[i]))
      throw std::invalid_argument("bounds need lo <= hi at index " +
                                  std::to_string(i));
  if (prob.equality_weights && prob.equality_weights->size() != n)
    throw std::invalid_argument("equality weights size mismatch");
}

// Hessian access for the four metrics.
struct Operator {
  const QpProblem& prob;

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    switch (prob.metric) {
      case QpMetric::Identity:
        return x;
      case QpMetric::Stiffness:
        return prob.sys->K() * x;
      case QpMetric::DirichletForm:
        return prob.sys->E1() * x;
      case QpMetric::StiffnessInverse: {
        const Eigen::VectorXd dz = prob.sys->lumped_mass().cwiseProduct(x);
        const PrimalVec u = prob.sys->apply_inverse(DualVec(dz));
        return prob.sys->lumped_mass().cwiseProduct(u.v);
      }
    }
    return x;
  }

  double diag(int i) const {
    switch (prob.metric) {
      case QpMetric::Identity:
        return 1.0;
      case QpMetric::Stiffness:
        return prob.sys->K().coeff(i, i);
      case QpMetric::DirichletForm:
        return prob.sys->E1().coeff(i, i);
      case QpMetric::StiffnessInverse: {
        const double m = prob.sys->lumped_mass()[i];
        return m * m * prob.sys->stiffness_inverse_column(i)[i];
      }
    }
    return 1.0;
  }

  Eigen::MatrixXd dense_block(const std::vector<int>& idx) const {
    const int k = static_cast<int>(idx.size());
    Eigen::MatrixXd block(k, k);
    switch (prob.metric) {
      case QpMetric::Identity:
        block.setIdentity();
        break;
      case QpMetric::Stiffness:
      case QpMetric::DirichletForm: {
        const SparseMat& a = prob.metric == QpMetric::Stiffness
                                 ? prob.sys->K()
                                 : prob.sys->E1();
        std::vector<int> local(a.rows(), -1);
        for (int j = 0; j < k; ++j) local[idx[j]] = j;
        block.setZero();
        for (int j = 0; j < k; ++j)
          for (SparseMat::InnerIterator it(a, idx[j]); it; ++it)
            if (local[it.row()] >= 0) block(local[it.row()], j) = it.value();
        break;
      }
      case QpMetric::StiffnessInverse: {
        const Eigen::VectorXd& m = prob.sys->lumped_mass();
        for (int j = 0; j < k; ++j) {
          const Eigen::VectorXd& col =
              prob.sys->stiffness_inverse_column(idx[j]);
          for (int i = 0; i < k; ++i)
            block(i, j) = m[idx[i]] * col[idx[i]] * m[idx[j]];
        }
        break;
      }
    }
    return block;
  }

  // Upper bound on the largest eigenvalue: Gershgorin for assembled
  // matrices, safeguarded power iteration for the inverse metric.
  double lipschitz() const {
    switch (prob.metric) {
      case QpMetric::Identity:
        return 1.0;
      case QpMetric::Stiffness:
      case QpMetric::DirichletForm: {
        const SparseMat& a = prob.metric == QpMetric::Stiffness
                                 ? prob.sys->K()
                                 : prob.sys->E1();
        double bound = 0.0;
        for (int j = 0; j < a.outerSize(); ++j) {
          double row = 0.0;
          for (SparseMat::InnerIterator it(a, j); it; ++it)
            row += std::abs(it.value());
          bound = std::max(bound, row);
        }
        return bound;
      }
      case QpMetric::StiffnessInverse: {
        Eigen::VectorXd v = Eigen::VectorXd::Ones(prob.size());
        v.normalize();
        double lambda = 0.0;
        for (int it = 0; it < 60; ++it) {
          Eigen::VectorXd av = apply(v);
          lambda = v.dot(av);
          const double norm = av.norm();
          if (norm == 0.0) break;
          v = av / norm;
        }
        return 1.1 * lambda;
      }
    }
    return 1.0;
  }
};

Eigen::VectorXd initial_point(const QpProblem& prob) {
  Eigen::VectorXd x =
      prob.start ? *prob.start : Eigen::VectorXd::Zero(prob.size());
  return detail::clamp_box(x, prob.lo, prob.hi);
}

double kkt_residual(const QpProblem& prob, const Operator& op,
                    const Eigen::VectorXd& x, const Eigen::VectorXd& lambda,
                    double mu) {
  Eigen::VectorXd r = op.apply(x) - prob.linear + lambda;
  if (prob.equality_weights) r += mu * *prob.equality_weights;
  double res = r.lpNorm<Eigen::Infinity>();
  const double active_tol = 1e-12;
  for (int i = 0; i < prob.size(); ++i) {
    // primal feasibility
    if (prob.lo[i] > -kInf) res = std::max(res, prob.lo[i] - x[i]);
    if (prob.hi[i] < kInf) res = std::max(res, x[i] - prob.hi[i]);
    // multiplier signs and slackness
    const bool at_lo = prob.lo[i] > -kInf && x[i] <= prob.lo[i] + active_tol;
    const bool at_hi = prob.hi[i] < kInf && x[i] >= prob.hi[i] - active_tol;
    if (at_lo && at_hi) continue;  // fixed coordinate, multiplier free
    if (at_hi)
      res = std::max(res, std::max(0.0, -lambda[i]));
    else if (at_lo)
      res = std::max(res, std::max(0.0, lambda[i]));
    else
      res = std::max(res, std::abs(lambda[i]));
  }
  if (prob.equality_weights)
    res = std::max(res, std::abs(prob.equality_weights->dot(x)));
  return res;
}

}  // namespace

QpProblem QpProblem::euclidean(Eigen::VectorXd c, Eigen::VectorXd lo,
                               Eigen::VectorXd hi) {
  QpProblem prob;
  prob.metric = QpMetric::Identity;
  prob.linear = std::move(c);
  prob.lo = std::move(lo);
  prob.hi = std::move(hi);
  return prob;
}

QpProblem QpProblem::energy(const FemSystem& sys, QpMetric metric,
                            const DualVec& r, const ConeSpec& cone) {
  if (metric != QpMetric::Stiffness && metric != QpMetric::DirichletForm)
    throw std::invalid_argument("energy problems use K or E1");
  QpProblem prob;
  prob.metric = metric;
  prob.sys = &sys;
  prob.linear = r.v;
  cone.bounds(prob.lo, prob.hi);
  prob.equality_weights = cone.equality_weights;
  return prob;
}

QpProblem QpProblem::dual_projection(const FemSystem& sys,
                                     const DualVec& target,
                                     const ConeSpec& cone) {
  QpProblem prob;
  prob.metric = QpMetric::StiffnessInverse;
  prob.sys = &sys;
  // (1/2)(Dz - f)' K^{-1} (Dz - f) expands to the model with c = D K^{-1} f.
  prob.linear =
      sys.lumped_mass().cwiseProduct(sys.apply_inverse(target).v);
  cone.bounds(prob.lo, prob.hi);
  prob.equality_weights = cone.equality_weights;
  return prob;
}

QpProblem QpProblem::dual_projection_box(const FemSystem& sys,
                                         const DualVec& target) {
  ConeSpec full;
  full.tags.assign(sys.n(), ConeTag::Free);
  QpProblem prob = dual_projection(sys, target, full);
  prob.lo.setConstant(sys.n(), -1.0);
  prob.hi.setConstant(sys.n(), 1.0);
  return prob;
}

double qp_default_tol(QpMetric metric) {
  return metric == QpMetric::StiffnessInverse ? 1e-9 : 1e-10;
}

QpSolution solve_qp(const QpProblem& prob, double tol, int max_iter) {
  validate(prob);
  if (tol <= 0.0) tol = qp_default_tol(prob.metric);
  const int n = prob.size();
  const Operator op{prob};
  const Eigen::VectorXd w = prob.equality_weights
                                ? *prob.equality_weights
                                : Eigen::VectorXd::Zero(n);
  const bool has_eq =
      prob.equality_weights && w.lpNorm<Eigen::Infinity>() > 0.0;

  Eigen::VectorXd sigma = Eigen::VectorXd::Ones(n);
  for (int i = 0; i < n; ++i)
    if (prob.lo[i] != prob.hi[i]) sigma[i] = std::max(op.diag(i), 1e-300);

  Eigen::VectorXd x = initial_point(prob);
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(n);
  double mu = 0.0;

  QpSolution sol;
  std::vector<char> prev_state;
  for (int iter = 1; iter <= max_iter; ++iter) {
    // active set estimate; fixed coordinates stay pinned
    std::vector<char> state(n, 'F');
    std::vector<int> free_idx;
    for (int i = 0; i < n; ++i) {
      if (prob.lo[i] == prob.hi[i]) {
        state[i] = 'U';
      } else if (prob.hi[i] < kInf &&
                 lambda[i] + sigma[i] * (x[i] - prob.hi[i]) > 0.0) {
        state[i] = 'U';
      } else if (prob.lo[i] > -kInf &&
                 lambda[i] + sigma[i] * (x[i] - prob.lo[i]) < 0.0) {
        state[i] = 'L';
      } else {
        free_idx.push_back(i);
      }
    }

    for (int i = 0; i < n; ++i) {
      if (state[i] == 'U') x[i] = prob.hi[i];
      if (state[i] == 'L') x[i] = prob.lo[i];
    }

    // free subsystem H_FF x_F = c_F - H_FA x_A (- mu w_F)
    const int nf = static_cast<int>(free_idx.size());
    mu = 0.0;
    if (nf > 0) {
      Eigen::VectorXd x_active = x;
      for (int i : free_idx) x_active[i] = 0.0;
      const Eigen::VectorXd h_xa = op.apply(x_active);
      Eigen::VectorXd rhs(nf), wf(nf);
      for (int j = 0; j < nf; ++j) {
        rhs[j] = prob.linear[free_idx[j]] - h_xa[free_idx[j]];
        wf[j] = w[free_idx[j]];
      }

      // sparse factorization for assembled metrics, dense otherwise
      std::function<Eigen::VectorXd(const Eigen::VectorXd&)> free_solve;
      Eigen::SimplicialLLT<SparseMat> sparse_llt;
      Eigen::LLT<Eigen::MatrixXd> dense_llt;
      if (prob.metric == QpMetric::Stiffness ||
          prob.metric == QpMetric::DirichletForm) {
        const SparseMat& a = prob.metric == QpMetric::Stiffness
                                 ? prob.sys->K()
                                 : prob.sys->E1();
        std::vector<int> local(n, -1);
        for (int j = 0; j < nf; ++j) local[free_idx[j]] = j;
        std::vector<Eigen::Triplet<double>> trips;
        for (int j = 0; j < nf; ++j)
          for (SparseMat::InnerIterator it(a, free_idx[j]); it; ++it)
            if (local[it.row()] >= 0)
              trips.emplace_back(local[it.row()], j, it.value());
        SparseMat block(nf, nf);
        block.setFromTriplets(trips.begin(), trips.end());
        sparse_llt.compute(block);
        if (sparse_llt.info() != Eigen::Success)
          throw NumericalError("free-block factorization failed");
        free_solve = [&sparse_llt](const Eigen::VectorXd& b) {
          return Eigen::VectorXd(sparse_llt.solve(b));
        };
      } else if (prob.metric == QpMetric::Identity) {
        free_solve = [](const Eigen::VectorXd& b) { return b; };
      } else {
        dense_llt.compute(op.dense_block(free_idx));
        if (dense_llt.info() != Eigen::Success)
          throw NumericalError("free-block factorization failed");
        free_solve = [&dense_llt](const Eigen::VectorXd& b) {
          return Eigen::VectorXd(dense_llt.solve(b));
        };
      }

      Eigen::VectorXd xf = free_solve(rhs);
      if (has_eq) {
        const Eigen::VectorXd t2 = free_solve(wf);
        const double denom = wf.dot(t2);
        double b_active = 0.0;
        for (int i = 0; i < n; ++i)
          if (state[i] != 'F') b_active += w[i] * x[i];
        if (denom > 1e-300) {
          mu = (wf.dot(xf) + b_active) / denom;
          xf -= mu * t2;
        }
      }
      for (int j = 0; j < nf; ++j) x[free_idx[j]] = xf[j];
    }

    // multipliers: lambda = c - H x - mu w, zero on the free set
    lambda = prob.linear - op.apply(x);
    if (has_eq) lambda -= mu * w;
    for (int i : free_idx) lambda[i] = 0.0;

    const double res = kkt_residual(prob, op, x, lambda, mu);
    sol.report.residual_history.push_back(res);
    sol.report.iterations = iter;
    // accept only settled active sets (inner solves are direct, so the
    // settled iterate is exact) or a residual at machine scale: stopping
    // at a merely small gradient residual is far too loose in x for the
    // ill-conditioned inverse metric
    const double machine_band =
        1e-13 * (1.0 + prob.linear.lpNorm<Eigen::Infinity>());
    if (state == prev_state || res <= machine_band) {
      if (res > tol)
        throw SolverFailure("active sets settled with KKT residual " +
                            std::to_string(res) + " above tolerance");
      sol.report.converged = true;
      sol.report.kkt_residual = res;
      sol.x = x;
      sol.multipliers = lambda;
      sol.equality_multiplier = mu;
      return sol;
    }
    prev_state = state;
  }
  throw SolverFailure("active set method did not settle in " +
                      std::to_string(max_iter) + " iterations");
}

QpSolution solve_qp_pg(const QpProblem& prob, double tol, int max_iter) {
  validate(prob);
  if (tol <= 0.0) tol = qp_default_tol(prob.metric);
  const int n = prob.size();
  const Operator op{prob};
  const Eigen::VectorXd w = prob.equality_weights
                                ? *prob.equality_weights
                                : Eigen::VectorXd::Zero(0);

  const auto project = [&](const Eigen::VectorXd& v) {
    return detail::project_box_equality(v, prob.lo, prob.hi, w);
  };
  const double lip0 = std::max(op.lipschitz(), 1e-300);
  double lip = lip0;
  // rounding slack for objective comparisons near the optimum
  const auto slack = [](double f) { return 1e-14 * (std::abs(f) + 1e-300); };

  Eigen::VectorXd x = project(initial_point(prob));
  Eigen::VectorXd hx = op.apply(x);
  double fx = 0.5 * x.dot(hx) - prob.linear.dot(x);
  Eigen::VectorXd y = x;
  double t = 1.0;

  QpSolution sol;
  double res = kInf;
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    const Eigen::VectorXd gy = op.apply(y) - prob.linear;
    Eigen::VectorXd z = project(y - gy / lip);
    Eigen::VectorXd hz = op.apply(z);
    const double fz = 0.5 * z.dot(hz) - prob.linear.dot(z);

    if (fz > fx + slack(fx)) {
      // restart from the best iterate with a plain descent step
      const Eigen::VectorXd gx = hx - prob.linear;
      z = project(x - gx / lip);
      hz = op.apply(z);
      const double fz2 = 0.5 * z.dot(hz) - prob.linear.dot(z);
      y = z;
      t = 1.0;
      if (fz2 <= fx + slack(fx)) {
        x = z;
        hx = hz;
        fx = fz2;
      } else {
        // a genuine descent failure: the Lipschitz estimate was low
        lip *= 2.0;
        y = x;
      }
    } else {
      const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = z + ((t - 1.0) / tn) * (z - x);
      t = tn;
      x = z;
      hx = hz;
      fx = fz;
    }

    // optimality measure: gradient mapping at the fixed reference step
    const Eigen::VectorXd gx = hx - prob.linear;
    res = lip0 * (x - project(x - gx / lip0)).lpNorm<Eigen::Infinity>();
    sol.report.residual_history.push_back(res);
    if (res <= tol) break;
  }

  sol.report.iterations = iter + 1;
  sol.report.converged = res <= tol;
  sol.report.kkt_residual = res;
  if (!sol.report.converged)
    throw SolverFailure("projected gradient stalled at residual " +
                        std::to_string(res));
  sol.x = x;
  // multipliers from the gradient: lambda = c - H x - mu w with mu the
  // least-squares equality multiplier
  Eigen::VectorXd lambda = prob.linear - hx;
  double mu = 0.0;
  if (w.size() > 0 && w.squaredNorm() > 0.0) {
    mu = w.dot(lambda) / w.squaredNorm();
    lambda -= mu * w;
  }
  for (int i = 0; i < n; ++i) {
    const bool at_lo = prob.lo[i] > -kInf && x[i] <= prob.lo[i] + 1e-12;
    const bool at_hi = prob.hi[i] < kInf && x[i] >= prob.hi[i] - 1e-12;
    if (!at_lo && !at_hi) lambda[i] = 0.0;
  }
  sol.multipliers = lambda;
  sol.equality_multiplier = mu;
  return sol;
}

ConeDistanceResult cone_distance(const FemSystem& sys, const DualVec& target,
                                 const ConeSpec& cone) {
  if (cone.size() != sys.n())
    throw std::invalid_argument("cone size does not match system");
  const QpProblem prob = QpProblem::dual_projection(sys, target, cone);
  QpSolution sol;
  try {
    sol = solve_qp(prob);
  } catch (const SolverFailure&) {
    sol = solve_qp_pg(prob);
  }
  const DualVec residual(target.v - sys.weigh(sol.x).v);
  ConeDistanceResult out;
  out.distance = sys.dual_norm(residual);
  out.minimizer = sol.x;
  out.sup_norm = sol.x.size() == 0 ? 0.0 : sol.x.lpNorm<Eigen::Infinity>();
  return out;
}

}  // namespace evi
