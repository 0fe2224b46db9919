#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "core/fem.hpp"
#include "core/mesh.hpp"
#include "core/vi.hpp"
#include "doctest.h"

using namespace evi;

namespace {

// random dual load with nodal ratios f_i/m_i in [-amp, amp]
DualVec random_load(const FemSystem& sys, std::mt19937_64& rng, double amp) {
  std::uniform_real_distribution<double> unif(-amp, amp);
  Eigen::VectorXd f(sys.n());
  for (int i = 0; i < sys.n(); ++i) f[i] = unif(rng) * sys.lumped_mass()[i];
  return DualVec(std::move(f));
}

double parabola(double x) { return 0.5 * x * (1.0 - x); }

}  // namespace

TEST_CASE("j_h: zero, homogeneity, support function identity") {
  const FemSystem sys = assemble(build_mesh(1, 12));
  CHECK(j_h(sys, PrimalVec(Eigen::VectorXd::Zero(sys.n()))) == 0.0);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  Eigen::VectorXd y(sys.n());
  for (int i = 0; i < sys.n(); ++i) y[i] = normal(rng);
  const PrimalVec yv(y);
  CHECK(j_h(sys, PrimalVec(2.0 * y)) ==
        doctest::Approx(2.0 * j_h(sys, yv)).epsilon(1e-14));

  // maximizer q = sign(y) attains j_h; every box element stays below
  Eigen::VectorXd sign_y(sys.n());
  for (int i = 0; i < sys.n(); ++i)
    sign_y[i] = y[i] > 0 ? 1.0 : (y[i] < 0 ? -1.0 : 0.0);
  CHECK(box_pairing(sys, BoxElem(sign_y), yv) ==
        doctest::Approx(j_h(sys, yv)).epsilon(1e-14));
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd p(sys.n());
    for (int i = 0; i < sys.n(); ++i) p[i] = unif(rng);
    CHECK(box_pairing(sys, BoxElem(p), yv) <= j_h(sys, yv) + 1e-13);
  }
}

TEST_CASE("solve_primal: f inside the dual box gives y = 0") {
  const FemSystem sys = assemble(build_mesh(1, 16));
  const ViSolution sol = solve_primal(sys, load_vector(sys.mesh(), "const:0.5"));
  CHECK(sol.y.v.lpNorm<Eigen::Infinity>() == 0.0);
  for (int i = 0; i < sys.n(); ++i)
    CHECK(sol.q.q[i] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(sol.duality_residual <= 1e-12);
}

TEST_CASE("solve_primal: f = 2 is nodally exact with q = 1") {
  for (int n : {8, 33, 64}) {
    const FemSystem sys = assemble(build_mesh(1, n));
    const ViSolution sol = solve_primal(sys, load_vector(sys.mesh(), "const:2"));
    for (int i = 0; i < sys.n(); ++i) {
      const double x = sys.mesh().vertices(sys.mesh().interior_nodes[i], 0);
      CHECK(sol.y.v[i] == doctest::Approx(parabola(x)).epsilon(1e-12));
      CHECK(sol.q.q[i] == 1.0);
    }
  }
}

TEST_CASE("solve_primal: odd symmetry for f = -2") {
  const FemSystem sys = assemble(build_mesh(1, 20));
  const ViSolution plus = solve_primal(sys, load_vector(sys.mesh(), "const:2"));
  const ViSolution minus =
      solve_primal(sys, load_vector(sys.mesh(), "const:-2"));
  CHECK((plus.y.v + minus.y.v).lpNorm<Eigen::Infinity>() <= 1e-13);
  CHECK((plus.q.q + minus.q.q).lpNorm<Eigen::Infinity>() <= 1e-13);
}

TEST_CASE("solve_dual matches the analytic cases") {
  const FemSystem sys = assemble(build_mesh(1, 16));
  const ViSolution interior =
      solve_dual(sys, load_vector(sys.mesh(), "const:0.5"));
  CHECK(interior.y.v.lpNorm<Eigen::Infinity>() <= 1e-11);
  for (int i = 0; i < sys.n(); ++i)
    CHECK(interior.q.q[i] == doctest::Approx(0.5).epsilon(1e-10));

  const ViSolution active = solve_dual(sys, load_vector(sys.mesh(), "const:2"));
  for (int i = 0; i < sys.n(); ++i) {
    const double x = sys.mesh().vertices(sys.mesh().interior_nodes[i], 0);
    CHECK(active.q.q[i] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(active.y.v[i] == doctest::Approx(parabola(x)).epsilon(1e-11));
  }
}

TEST_CASE("primal and dual routes agree on random loads, N = 63") {
  std::mt19937_64 rng(17);
  const FemSystem sys = assemble(build_mesh(1, 63));
  for (int rep = 0; rep < 10; ++rep) {
    const DualVec f = random_load(sys, rng, 2.5);
    const ViCrossCheck cross = solve_cross(sys, f);
    CHECK(cross.gap <= 1e-8);
    for (const ViSolution* sol : {&cross.primal, &cross.dual}) {
      CHECK(sol->duality_residual <= 1e-9);
      CHECK(std::abs(sol->complementarity_gap) <= 1e-9);
    }
  }
}

TEST_CASE("zero-solution characterization") {
  std::mt19937_64 rng(29);
  const FemSystem sys = assemble(build_mesh(1, 31));
  for (int rep = 0; rep < 20; ++rep) {
    const DualVec f = random_load(sys, rng, 1.6);
    const ViSolution sol = solve_primal(sys, f);
    const double ratio =
        f.v.cwiseQuotient(sys.lumped_mass()).lpNorm<Eigen::Infinity>();
    const bool zero = sol.y.v.lpNorm<Eigen::Infinity>() == 0.0;
    CHECK(zero == (ratio <= 1.0 + 1e-9));
  }
}

TEST_CASE("solution map is 1-Lipschitz from the dual norm to the energy norm") {
  std::mt19937_64 rng(31);
  for (const auto& [dim, n] : {std::pair{1, 40}, {2, 8}}) {
    const FemSystem sys = assemble(build_mesh(dim, n));
    for (int rep = 0; rep < 10; ++rep) {
      const DualVec f1 = random_load(sys, rng, 3.0);
      const DualVec f2 = random_load(sys, rng, 3.0);
      const ViSolution s1 = solve_primal(sys, f1);
      const ViSolution s2 = solve_primal(sys, f2);
      const double lhs = sys.energy_norm(PrimalVec(s1.y.v - s2.y.v));
      const double rhs = sys.dual_norm(DualVec(f1.v - f2.v));
      CHECK(lhs <= rhs + 1e-10);
    }
  }
}

TEST_CASE("obstacle: empty constraint set gives the zero minimizer") {
  const FemSystem sys = assemble(build_mesh(1, 8));
  const ObstacleResult res = solve_obstacle(sys, {}, 1.0);
  CHECK(res.energy == 0.0);
  CHECK(res.w.v.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("obstacle rejects boundary nodes") {
  const FemSystem sys = assemble(build_mesh(1, 8));
  CHECK_THROWS_AS(solve_obstacle(sys, {0}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(solve_obstacle(sys, {99}, 1.0), std::invalid_argument);
}

TEST_CASE("point capacity converges to 2 coth(1/2)") {
  // -u'' + u = 0 off the contact point, u(1/2) = 1: energy 2 coth(1/2)
  const double exact = 2.0 / std::tanh(0.5);
  const FemSystem sys = assemble(build_mesh(1, 512));
  const int node = nearest_node(sys.mesh(), 0.5);
  const double cap = capacity(sys, {node});
  CHECK(std::abs(cap - exact) / exact <= 0.01);
  // refinement from above: the P1 space only shrinks the feasible set
  const FemSystem coarse = assemble(build_mesh(1, 64));
  const double cap_coarse =
      capacity(coarse, {nearest_node(coarse.mesh(), 0.5)});
  CHECK(cap_coarse >= exact - 1e-12);
  CHECK(cap >= exact - 1e-12);
  CHECK(cap <= cap_coarse + 1e-12);
}

TEST_CASE("plateau capacity converges to 2 coth(1/4) + 1/2") {
  const double exact = 2.0 / std::tanh(0.25) + 0.5;
  const FemSystem sys = assemble(build_mesh(1, 512));
  const std::vector<int> nodes = nodes_in_interval(sys.mesh(), 0.25, 0.75);
  const double cap = capacity(sys, nodes);
  CHECK(std::abs(cap - exact) / exact <= 0.01);
}

TEST_CASE("capacity is monotone and positive on shrinking-mass nodes") {
  const FemSystem sys = assemble(build_mesh(1, 128));
  CHECK(capacity(sys, {}) == 0.0);
  const std::vector<int> small = nodes_in_interval(sys.mesh(), 0.4, 0.6);
  const std::vector<int> large = nodes_in_interval(sys.mesh(), 0.25, 0.75);
  CHECK(capacity(sys, small) <= capacity(sys, large) + 1e-12);
  // one node: mass weight h -> 0 under refinement, capacity stays >= 4
  for (int n : {64, 256, 1024}) {
    const FemSystem fine = assemble(build_mesh(1, n));
    const int node = nearest_node(fine.mesh(), 0.5);
    const int i = fine.mesh().interior_index[node];
    CHECK(fine.lumped_mass()[i] == doctest::Approx(1.0 / n));
    CHECK(capacity(fine, {node}) >= 4.0);
  }
}
