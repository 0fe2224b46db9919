#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "core/cones.hpp"
#include "core/fem.hpp"
#include "core/vi.hpp"

namespace evi {

// The refinement-study scenario: y is the P1 interpolant of sin(2 pi x)
// (zero set {1/2}), q = sign(y) with sign(0) = 0, and nu is the load of
// -(1/2) times the Dirac at 1/2 (a vertical line functional in 2D). On
// offset meshes no node carries y_i = 0; aligned meshes have exactly one.
struct WitnessScenario {
  FemSystem sys;
  PrimalVec y;
  BoxElem q;
  DualVec nu;
  double x0 = 0.5;
  int zero_interior_index = -1;  // -1 when no interior node has y_i = 0

  explicit WitnessScenario(FemSystem s) : sys(std::move(s)) {}
  const Mesh& mesh() const { return sys.mesh(); }
};

WitnessScenario build_scenario(int n_elements, Alignment alignment,
                               int dim = 1);

// Load of -(n/2) times the indicator of (1/2 - 1/n, 1/2), the side where
// y > 0; total mass -1/2 for every n. Requires 1/n >= 4h so the indicator
// is resolved by the mesh.
DualVec nu_sequence(const WitnessScenario& scenario, int n);

// One row of the refinement study.
struct WitnessRecord {
  std::string alignment;
  double h = 0.0;
  int n = 0;
  double d1 = 0.0;        // dual_norm(nu_n - nu)
  double pairing = 0.0;   // <nu_n, y>, strictly negative
  double d2 = 0.0;        // distance from nu to {D z : z in R_M(q) ^ y-perp}
  double z_supnorm = 0.0; // sup norm of the distance minimizer
  double cap_node = 0.0;  // capacity of the node nearest 1/2
};

WitnessRecord witness_record(const WitnessScenario& scenario, int n);

// Mesh-size rules coupling h to n:
//   "decade"     offset: N = 10n+1 (odd), aligned: N = 16n (even)
//   "fixed:<N>"  every n on the one mesh with N elements
std::vector<WitnessRecord> witness_sweep(Alignment alignment,
                                         const std::vector<int>& n_list,
                                         const std::string& h_rule = "decade");

// CSV columns: alignment,h,n,d1,pairing,d2,z_supnorm,cap_node with 12
// significant digits.
void write_witness_csv(std::ostream& out,
                       const std::vector<WitnessRecord>& records);

}  // namespace evi
