#include "core/witness.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "core/errors.hpp"
#include "core/qp.hpp"

namespace evi {

namespace {

// Nodal sin(2 pi x) with exact zeros: |sin| below 1e-12 only happens at
// the zero set on the meshes handled here (min nonzero value ~ pi*h).
double snapped_sin(double x) {
  const double v = std::sin(2.0 * M_PI * x);
  return std::abs(v) < 1e-12 ? 0.0 : v;
}

std::string alignment_name(bool aligned) {
  return aligned ? "aligned" : "offset";
}

void check_resolution(const WitnessScenario& scenario, int n) {
  if (n < 2) throw std::invalid_argument("sequence index n must be >= 2");
  const double h = scenario.mesh().h;
  if (1.0 / n < 4.0 * h)
    throw std::invalid_argument(
        "resolution violated: need 1/n >= 4h, got n = " + std::to_string(n) +
        " at h = 1/" + std::to_string(scenario.mesh().n_elements));
}

}  // namespace

WitnessScenario build_scenario(int n_elements, Alignment alignment, int dim) {
  WitnessScenario scenario(assemble(build_mesh(dim, n_elements, alignment)));
  const Mesh& mesh = scenario.mesh();
  const int n = scenario.sys.n();

  Eigen::VectorXd y(n), q(n);
  scenario.zero_interior_index = -1;
  for (int i = 0; i < n; ++i) {
    const double x = mesh.vertices(mesh.interior_nodes[i], 0);
    y[i] = snapped_sin(x);
    q[i] = y[i] > 0.0 ? 1.0 : (y[i] < 0.0 ? -1.0 : 0.0);
    if (y[i] == 0.0 && std::abs(x - 0.5) < 0.25)
      scenario.zero_interior_index = i;
  }
  scenario.y = PrimalVec(std::move(y));
  scenario.q = BoxElem(std::move(q));
  scenario.nu = dim == 1 ? point_load(mesh, 0.5, -0.5)
                         : line_load(mesh, 0.5, -0.5);

  if (!normal_cone_contains(scenario.sys, scenario.q, scenario.y, 1e-12))
    throw NumericalError("scenario invariant failed: y not normal at q");
  return scenario;
}

DualVec nu_sequence(const WitnessScenario& scenario, int n) {
  check_resolution(scenario, n);
  char spec[96];
  std::snprintf(spec, sizeof spec, "box:%.17g,%.17g,%.17g", 0.5 - 1.0 / n, 0.5,
                -0.5 * n);
  return load_vector(scenario.mesh(), spec);
}

WitnessRecord witness_record(const WitnessScenario& scenario, int n) {
  const DualVec nu_n = nu_sequence(scenario, n);

  WitnessRecord rec;
  rec.alignment = alignment_name(scenario.mesh().aligned);
  rec.h = scenario.mesh().h;
  rec.n = n;
  rec.d1 = scenario.sys.dual_norm(DualVec(nu_n.v - scenario.nu.v));
  rec.pairing = pairing(nu_n, scenario.y);

  // R_M(q) ^ y-perp in reduced form; exact nodal y makes tol_y = 0 valid
  const ConeSpec cone = critical_cone(scenario.q, scenario.y, 1e-9, 0.0);
  const ConeDistanceResult dist = cone_distance(scenario.sys, scenario.nu, cone);
  rec.d2 = dist.distance;
  rec.z_supnorm = dist.sup_norm;

  const int node = nearest_node(scenario.mesh(), 0.5, 0.5);
  rec.cap_node = capacity(scenario.sys, {node});
  return rec;
}

std::vector<WitnessRecord> witness_sweep(Alignment alignment,
                                         const std::vector<int>& n_list,
                                         const std::string& h_rule) {
  std::vector<WitnessRecord> records;
  records.reserve(n_list.size());

  int fixed_elements = 0;
  if (h_rule.rfind("fixed:", 0) == 0) {
    fixed_elements = std::stoi(h_rule.substr(6));
  } else if (h_rule != "decade") {
    throw std::invalid_argument("unknown h_rule '" + h_rule + "'");
  }

  for (int n : n_list) {
    int elements = fixed_elements;
    if (elements == 0)
      elements = alignment == Alignment::Offset ? 10 * n + 1 : 16 * n;
    const WitnessScenario scenario = build_scenario(elements, alignment);
    records.push_back(witness_record(scenario, n));
  }
  return records;
}

void write_witness_csv(std::ostream& out,
                       const std::vector<WitnessRecord>& records) {
  out << "alignment,h,n,d1,pairing,d2,z_supnorm,cap_node\n";
  char buf[64];
  const auto fmt = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::string(buf);
  };
  for (const WitnessRecord& rec : records) {
    out << rec.alignment << ',' << fmt(rec.h) << ',' << rec.n << ','
        << fmt(rec.d1) << ',' << fmt(rec.pairing) << ',' << fmt(rec.d2) << ','
        << fmt(rec.z_supnorm) << ',' << fmt(rec.cap_node) << '\n';
  }
}

}  // namespace evi
