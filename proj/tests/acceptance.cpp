// Acceptance suite: runs every criterion at its stated tolerance and
// prints one pass/fail line each. Exits nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "core/cones.hpp"
#include "core/fem.hpp"
#include "core/mesh.hpp"
#include "core/qp.hpp"
#include "core/sensitivity.hpp"
#include "core/vi.hpp"
#include "core/witness.hpp"

using namespace evi;

namespace {

struct Criterion {
  std::string name;
  std::function<bool(std::string&)> run;
};

bool check(bool ok, std::string& detail, const std::string& msg) {
  if (!ok && detail.empty()) detail = msg;
  return ok;
}

DualVec random_load(const FemSystem& sys, std::mt19937_64& rng, double amp) {
  std::uniform_real_distribution<double> unif(-amp, amp);
  Eigen::VectorXd f(sys.n());
  for (int i = 0; i < sys.n(); ++i) f[i] = unif(rng) * sys.lumped_mass()[i];
  return DualVec(std::move(f));
}

// ---------------------------------------------------------------- 1
bool criterion_duality(std::string& detail) {
  std::mt19937_64 rng(8311);
  bool ok = true;
  std::vector<FemSystem> systems;
  for (int n : {31, 63, 255}) systems.push_back(assemble(build_mesh(1, n)));
  systems.push_back(assemble(build_mesh(2, 16)));  // 17 x 17 grid
  for (FemSystem& sys : systems) {
    for (int rep = 0; rep < 25; ++rep) {
      const DualVec f = random_load(sys, rng, 2.5);
      const ViCrossCheck cross = solve_cross(sys, f);
      ok &= check(cross.gap <= 1e-8, detail,
                  "route gap " + std::to_string(cross.gap));
      ok &= check(cross.primal.duality_residual <= 1e-9, detail,
                  "primal residual " +
                      std::to_string(cross.primal.duality_residual));
      ok &= check(cross.dual.duality_residual <= 1e-9, detail,
                  "dual residual " +
                      std::to_string(cross.dual.duality_residual));
    }
  }
  return ok;
}

// ---------------------------------------------------------------- 2
bool criterion_analytic(std::string& detail) {
  bool ok = true;
  const FemSystem sys = assemble(build_mesh(1, 64));
  const ViSolution active = solve_primal(sys, load_vector(sys.mesh(), "const:2"));
  for (int i = 0; i < sys.n(); ++i) {
    const double x = sys.mesh().vertices(sys.mesh().interior_nodes[i], 0);
    ok &= check(std::abs(active.y.v[i] - 0.5 * x * (1.0 - x)) <= 1e-12,
                detail, "y mismatch at node " + std::to_string(i));
    ok &= check(active.q.q[i] == 1.0, detail, "q != 1");
  }
  const ViSolution zero =
      solve_primal(sys, load_vector(sys.mesh(), "const:0.5"));
  ok &= check(zero.y.v.lpNorm<Eigen::Infinity>() == 0.0, detail,
              "y not exactly zero for f = 0.5");
  return ok;
}

// ---------------------------------------------------------------- 3
bool criterion_capacity(std::string& detail) {
  bool ok = true;
  const FemSystem sys = assemble(build_mesh(1, 512));
  const double point_exact = 2.0 / std::tanh(0.5);
  const double point = capacity(sys, {nearest_node(sys.mesh(), 0.5)});
  ok &= check(std::abs(point - point_exact) / point_exact <= 0.01, detail,
              "point capacity " + std::to_string(point));
  const double plateau_exact = 2.0 / std::tanh(0.25) + 0.5;
  const double plateau =
      capacity(sys, nodes_in_interval(sys.mesh(), 0.25, 0.75));
  ok &= check(std::abs(plateau - plateau_exact) / plateau_exact <= 0.01,
              detail, "plateau capacity " + std::to_string(plateau));
  return ok;
}

// ---------------------------------------------------------------- 4
bool criterion_derivative(std::string& detail) {
  bool ok = true;
  const FemSystem sys = assemble(build_mesh(1, 64));
  const std::vector<double> ts = {1e-2, 1e-3, 1e-4, 1e-5};
  const DualVec g_up = load_vector(sys.mesh(), "const:1");
  const DualVec g_down = load_vector(sys.mesh(), "const:-1");
  for (const char* f_spec : {"const:2", "const:0.5", "const:1"}) {
    const DualVec f = load_vector(sys.mesh(), f_spec);
    for (const DualVec* g : {&g_up, &g_down}) {
      const std::vector<FdRow> rows = fd_oracle(sys, f, *g, ts);
      double best = rows.front().error;
      for (const FdRow& row : rows) best = std::min(best, row.error);
      ok &= check(best <= 1e-3, detail,
                  std::string(f_spec) + ": fd error " + std::to_string(best));
      const ViSolution vi = solve_primal(sys, f, 1e-11);
      const DerivativePair pair = derivative_both(sys, vi, *g);
      ok &= check(pair.formulation_gap <= 1e-7, detail,
                  std::string(f_spec) + ": formulation gap " +
                      std::to_string(pair.formulation_gap));
    }
  }
  // the nonsmooth obstacle case has the advertised one-sided derivatives
  const ViSolution kink = solve_primal(sys, load_vector(sys.mesh(), "const:1"));
  const DerivativeResult up = derivative_S(sys, kink, g_up);
  for (int i = 0; i < sys.n(); ++i) {
    const double x = sys.mesh().vertices(sys.mesh().interior_nodes[i], 0);
    ok &= check(std::abs(up.delta.v[i] - 0.5 * x * (1.0 - x)) <= 1e-10,
                detail, "one-sided delta(g=1) mismatch");
  }
  const DerivativeResult down = derivative_S(sys, kink, g_down);
  ok &= check(down.delta.v.lpNorm<Eigen::Infinity>() <= 1e-12, detail,
              "delta(g=-1) not zero");
  return ok;
}

// ---------------------------------------------------------------- 5
bool criterion_witness(std::string& detail) {
  bool ok = true;
  const std::vector<int> ns = {8, 16, 32, 64};
  const std::vector<WitnessRecord> offset =
      witness_sweep(Alignment::Offset, ns, "decade");
  double prev_d1 = std::numeric_limits<double>::infinity();
  for (const WitnessRecord& rec : offset) {
    ok &= check(rec.d1 < prev_d1, detail, "offset d1 not decreasing");
    prev_d1 = rec.d1;
    ok &= check(rec.d2 >= 0.24 && rec.d2 <= 0.26, detail,
                "offset d2 " + std::to_string(rec.d2));
    ok &= check(rec.pairing < 0.0, detail, "pairing not negative");
    const double target = -M_PI / (2.0 * rec.n);
    ok &= check(std::abs(rec.pairing - target) <= 0.2 * std::abs(target),
                detail, "pairing outside 20% of -pi/(2n)");
    ok &= check(rec.cap_node >= 4.0, detail,
                "capacity column " + std::to_string(rec.cap_node));
  }
  ok &= check(offset.back().d1 <= 0.05, detail,
              "final offset d1 " + std::to_string(offset.back().d1));

  const std::vector<WitnessRecord> aligned =
      witness_sweep(Alignment::Aligned, ns, "decade");
  for (size_t i = 0; i < aligned.size(); ++i) {
    const WitnessRecord& rec = aligned[i];
    ok &= check(rec.h == 1.0 / (128 << i), detail, "aligned h rule");
    ok &= check(rec.d2 <= 1e-9, detail,
                "aligned d2 " + std::to_string(rec.d2));
    ok &= check(rec.pairing < 0.0, detail, "aligned pairing not negative");
    ok &= check(rec.cap_node >= 4.0, detail, "aligned capacity column");
  }
  const double blowup = aligned.back().z_supnorm * aligned.back().h;
  ok &= check(std::abs(blowup - 0.5) <= 0.01, detail,
              "blow-up law " + std::to_string(blowup));
  return ok;
}

// ---------------------------------------------------------------- 6
bool criterion_properties(std::string& detail) {
  bool ok = true;
  std::mt19937_64 rng(90210);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);

  // QP cross-solver agreement on 100 random problems
  {
    std::vector<FemSystem> systems;
    for (int n : {24, 51, 96}) systems.push_back(assemble(build_mesh(1, n)));
    for (int rep = 0; rep < 100; ++rep) {
      FemSystem& sys = systems[rep % systems.size()];
      const int n = sys.n();
      QpProblem prob;
      if (rep % 2 == 0) {
        prob = QpProblem::dual_projection_box(sys, random_load(sys, rng, 2.0));
      } else {
        ConeSpec cone;
        cone.tags.resize(n);
        for (int i = 0; i < n; ++i) {
          const double mode = unif(rng);
          cone.tags[i] = mode < -0.5   ? ConeTag::NonPos
                         : mode < 0.0  ? ConeTag::NonNeg
                         : mode < 0.5  ? ConeTag::Free
                                       : ConeTag::Zero;
        }
        prob = QpProblem::energy(sys, QpMetric::Stiffness,
                                 random_load(sys, rng, 1.0), cone);
      }
      const QpSolution a = solve_qp(prob);
      const QpSolution b = solve_qp_pg(prob, 1e-13);
      const Eigen::VectorXd d = a.x - b.x;
      const double gap =
          prob.metric == QpMetric::Stiffness
              ? std::sqrt(d.dot(prob.sys->K() * d))
              : prob.sys->dual_norm(DualVec(prob.sys->weigh(d).v));
      ok &= check(gap <= 1e-8, detail,
                  "solver gap " + std::to_string(gap) + " at rep " +
                      std::to_string(rep));
      if (!ok) break;
    }
  }

  // cone bipolarity and Moreau-type coordinatewise decomposition
  {
    const FemSystem sys = assemble(build_mesh(1, 33));
    const int n = sys.n();
    for (int rep = 0; rep < 25; ++rep) {
      ConeSpec cone;
      cone.tags.resize(n);
      for (int i = 0; i < n; ++i) {
        const double mode = unif(rng);
        cone.tags[i] = mode < -0.5   ? ConeTag::NonPos
                       : mode < 0.0  ? ConeTag::NonNeg
                       : mode < 0.5  ? ConeTag::Free
                                     : ConeTag::Zero;
      }
      ok &= check(polar_cone(polar_cone(cone)).tags == cone.tags, detail,
                  "bipolar mismatch");
      Eigen::VectorXd v(n);
      for (int i = 0; i < n; ++i) v[i] = 2.0 * unif(rng);
      Eigen::VectorXd lo, hi, lo_p, hi_p;
      cone.bounds(lo, hi);
      const ConeSpec polar = polar_cone(cone);
      polar.bounds(lo_p, hi_p);
      QpProblem onto_cone = QpProblem::euclidean(v, lo, hi);
      QpProblem onto_polar = QpProblem::euclidean(v, lo_p, hi_p);
      const Eigen::VectorXd z1 = solve_qp(onto_cone).x;
      const Eigen::VectorXd z2 = solve_qp(onto_polar).x;
      ok &= check((v - z1 - z2).lpNorm<Eigen::Infinity>() <= 1e-12, detail,
                  "Moreau decomposition fails");
      ok &= check(std::abs(z1.dot(z2)) <= 1e-12, detail,
                  "Moreau parts not orthogonal");
    }
  }

  // Lipschitz estimate on 100 random pairs
  {
    const FemSystem sys = assemble(build_mesh(1, 48));
    for (int rep = 0; rep < 100; ++rep) {
      const DualVec f1 = random_load(sys, rng, 3.0);
      const DualVec f2 = random_load(sys, rng, 3.0);
      const double lhs = sys.energy_norm(
          PrimalVec(solve_primal(sys, f1).y.v - solve_primal(sys, f2).y.v));
      const double rhs = sys.dual_norm(DualVec(f1.v - f2.v));
      ok &= check(lhs <= rhs + 1e-10, detail, "Lipschitz bound violated");
    }
  }

  // positive homogeneity of derivative_S
  {
    const FemSystem sys = assemble(build_mesh(1, 32));
    const ViSolution vi =
        solve_primal(sys, load_vector(sys.mesh(), "const:1"), 1e-11);
    const DualVec g = load_vector(sys.mesh(), "sin:1");
    const DerivativeResult base = derivative_S(sys, vi, g);
    for (double alpha : {0.25, 2.0, 17.0}) {
      const DerivativeResult scaled =
          derivative_S(sys, vi, DualVec(alpha * g.v));
      ok &= check((scaled.delta.v - alpha * base.delta.v)
                          .lpNorm<Eigen::Infinity>() <=
                      1e-10 * std::max(1.0, alpha),
                  detail, "homogeneity violated");
    }
  }

  // polyhedricity certificates on 50 random triples
  {
    std::uniform_real_distribution<double> mag(0.5, 2.0);
    std::uniform_int_distribution<int> dims(1, 10);
    for (int rep = 0; rep < 50; ++rep) {
      const int d = dims(rng);
      Eigen::VectorXd w(d), eta = Eigen::VectorXd::Zero(d);
      for (int i = 0; i < d; ++i) {
        const double mode = unif(rng);
        if (mode > 0.4) {
          w[i] = 1.0;
          if (unif(rng) > 0.0) eta[i] = mag(rng);
        } else if (mode < -0.4) {
          w[i] = -1.0;
          if (unif(rng) > 0.0) eta[i] = -mag(rng);
        } else {
          w[i] = 0.9 * unif(rng);
        }
      }
      const PolyhedricityCertificate cert =
          polyhedricity_check_fd(w, eta, 200, 5000 + rep);
      ok &= check(cert.pass, detail,
                  "polyhedricity certificate failed at rep " +
                      std::to_string(rep));
    }
  }
  return ok;
}

// ---------------------------------------------------------------- 7
bool criterion_determinism(std::string& detail) {
#ifndef EVI_CLI_BIN
  detail = "CLI binary path not configured";
  return false;
#else
  const std::string bin = EVI_CLI_BIN;
  const std::string dir = "acceptance_determinism_work";
  std::system(("rm -rf " + dir + " && mkdir -p " + dir).c_str());

  {
    std::ofstream cfg(dir + "/solve.json");
    cfg << R"({"mesh": {"dim": 1, "n": 63, "alignment": "offset"},)"
        << R"( "problem": {"f": "sin:2"}})" << "\n";
  }
  {
    std::ofstream cfg(dir + "/witness.json");
    cfg << R"({"witness": {"alignment": "offset", "n_list": [4, 8],)"
        << R"( "h_rule": "decade"}})" << "\n";
  }

  const auto run = [&](const std::string& args) {
    return std::system((bin + " " + args + " >/dev/null 2>&1").c_str());
  };
  const auto same = [&](const std::string& a, const std::string& b) {
    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    return fa.good() == fb.good() && sa.str() == sb.str() &&
           !sa.str().empty();
  };

  bool ok = true;
  ok &= check(run("solve --config " + dir + "/solve.json --out " + dir +
                  "/a.json --quiet") == 0,
              detail, "solve run failed");
  ok &= check(run("solve --config " + dir + "/solve.json --out " + dir +
                  "/b.json --quiet") == 0,
              detail, "solve rerun failed");
  ok &= check(same(dir + "/a.json", dir + "/b.json"), detail,
              "solve artifacts differ between runs");
  ok &= check(run("witness --config " + dir + "/witness.json --out " + dir +
                  "/a.csv --quiet") == 0,
              detail, "witness run failed");
  ok &= check(run("witness --config " + dir + "/witness.json --out " + dir +
                  "/b.csv --quiet") == 0,
              detail, "witness rerun failed");
  ok &= check(same(dir + "/a.csv", dir + "/b.csv"), detail,
              "witness artifacts differ between runs");
  std::system(("rm -rf " + dir).c_str());
  return ok;
#endif
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"duality: primal/dual agreement on random loads", criterion_duality},
      {"analytic VI solutions are nodally exact", criterion_analytic},
      {"capacity values within 1% of closed forms", criterion_capacity},
      {"derivative VI: FD oracle and dual formulation", criterion_derivative},
      {"non-polyhedricity witness sweeps", criterion_witness},
      {"property suites (QP, cones, Lipschitz, homogeneity)",
       criterion_properties},
      {"determinism: byte-identical CLI artifacts", criterion_determinism},
  };

  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
      ok = criteria[i].run(detail);
    } catch (const std::exception& e) {
      detail = e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    std::printf("criterion %zu/%zu: %-55s %s (%.1f s)%s%s\n", i + 1,
                criteria.size(), criteria[i].name.c_str(),
                ok ? "PASS" : "FAIL", seconds, detail.empty() ? "" : " -- ",
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failed;
  }
  if (failed > 0) {
    std::printf("%d criterion(s) failed\n", failed);
    return 1;
  }
  std::printf("all %zu acceptance criteria passed\n", criteria.size());
  return 0;
}
