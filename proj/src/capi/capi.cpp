#include "evi/evi.h"

#include <cmath>
#include <cstring>
#include <string>

#include "core/errors.hpp"
#include "core/fem.hpp"
#include "core/mesh.hpp"
#include "core/qp.hpp"
#include "core/sensitivity.hpp"
#include "core/vi.hpp"
#include "core/witness.hpp"

namespace {

thread_local std::string g_last_error;

evi_status fail(evi_status code, const char* what) {
  g_last_error = what;
  return code;
}

// Runs fn, translating exceptions into status codes.
template <typename Fn>
evi_status guarded(Fn&& fn) {
  try {
    fn();
    return EVI_OK;
  } catch (const std::invalid_argument& e) {
    return fail(EVI_ERR_ARGUMENT, e.what());
  } catch (const evi::SolverFailure& e) {
    return fail(EVI_ERR_SOLVER, e.what());
  } catch (const evi::NumericalError& e) {
    return fail(EVI_ERR_NUMERIC, e.what());
  } catch (const std::exception& e) {
    return fail(EVI_ERR_NUMERIC, e.what());
  }
}

std::optional<evi::Alignment> parse_alignment(const char* alignment) {
  if (alignment == nullptr || *alignment == '\0') return std::nullopt;
  const std::string s(alignment);
  if (s == "aligned") return evi::Alignment::Aligned;
  if (s == "offset") return evi::Alignment::Offset;
  throw std::invalid_argument("alignment must be 'aligned' or 'offset', got '" +
                              s + "'");
}

}  // namespace

struct evi_system {
  evi::FemSystem sys;
};

struct evi_vec {
  evi::DualVec vec;
};

struct evi_vi_solution {
  evi::ViCrossCheck cross;
  bool zero = false;
};

struct evi_derivative {
  evi::DerivativePair pair;
};

struct evi_witness_table {
  std::vector<evi::WitnessRecord> records;
};

extern "C" {

const char* evi_version(void) { return "0.1.0"; }

const char* evi_last_error(void) { return g_last_error.c_str(); }

evi_status evi_system_create(int dim, int n_elements, const char* alignment,
                             evi_system** out) {
  if (out == nullptr) return fail(EVI_ERR_ARGUMENT, "out is NULL");
  *out = nullptr;
  return guarded([&] {
    *out = new evi_system{
        evi::assemble(evi::build_mesh(dim, n_elements,
                                      parse_alignment(alignment)))};
  });
}

void evi_system_destroy(evi_system* sys) { delete sys; }

int evi_system_interior_count(const evi_system* sys) {
  return sys ? sys->sys.n() : 0;
}

int evi_system_dim(const evi_system* sys) {
  return sys ? sys->sys.mesh().dim : 0;
}

double evi_system_mesh_size(const evi_system* sys) {
  return sys ? sys->sys.mesh().h : 0.0;
}

evi_status evi_system_coords(const evi_system* sys, double* xs, double* ys) {
  if (sys == nullptr || xs == nullptr)
    return fail(EVI_ERR_ARGUMENT, "NULL argument");
  const evi::Mesh& mesh = sys->sys.mesh();
  if (mesh.dim == 2 && ys == nullptr)
    return fail(EVI_ERR_ARGUMENT, "2D coords need ys");
  for (int i = 0; i < sys->sys.n(); ++i) {
    xs[i] = mesh.vertices(mesh.interior_nodes[i], 0);
    if (mesh.dim == 2) ys[i] = mesh.vertices(mesh.interior_nodes[i], 1);
  }
  return EVI_OK;
}

evi_status evi_system_lumped_mass(const evi_system* sys, double* m) {
  if (sys == nullptr || m == nullptr)
    return fail(EVI_ERR_ARGUMENT, "NULL argument");
  Eigen::Map<Eigen::VectorXd>(m, sys->sys.n()) = sys->sys.lumped_mass();
  return EVI_OK;
}

evi_status evi_system_nearest_node(const evi_system* sys, double x, double y,
                                   int* node) {
  if (sys == nullptr || node == nullptr)
    return fail(EVI_ERR_ARGUMENT, "NULL argument");
  return guarded([&] { *node = evi::nearest_node(sys->sys.mesh(), x, y); });
}

evi_status evi_system_nodes_in_interval(const evi_system* sys, double a,
                                        double b, int* nodes, int* count) {
  if (sys == nullptr || count == nullptr)
    return fail(EVI_ERR_ARGUMENT, "NULL argument");
  return guarded([&] {
    const std::vector<int> found =
        evi::nodes_in_interval(sys->sys.mesh(), a, b);
    if (nodes != nullptr) {
      if (*count < static_cast<int>(found.size()))
        throw std::invalid_argument("node buffer too small");
      std::memcpy(nodes, found.data(), found.size() * sizeof(int));
    }
    *count = static_cast<int>(found.size());
  });
}

evi_status evi_load_create(const evi_system* sys, const char* density_spec,
                           evi_vec** out) {
  if (sys == nullptr || density_spec == nullptr || out == nullptr)
    return fail(EVI_ERR_ARGUMENT, "NULL argument");
  *out = nullptr;
  return guarded([&] {
    *out = new evi_vec{evi::load_vector(sys->sys.mesh(), density_spec)};
  });
}

evi_status evi_point_load_create(const evi_system* sys, double x,
                                 double weight, evi_vec** out) {
  if (sys == nullptr || out == nullptr)
    return fail(EVI_ERR_ARGUMENT, "NULL argument");
  *out = nullptr;
  return guarded([&] {
    *out = new evi_vec{evi::point_load(sys->sys.mesh(), x, weight)};
  });
}

void evi_vec_destroy(evi_vec* vec) { delete vec; }

int evi_vec_size(const evi_vec* vec) { return vec ? vec->vec.size() : 0; }

evi_status evi_vec_values(const evi_vec* vec, double* buf) {
  if (vec == nullptr || buf == nullptr)
    return fail(EVI_ERR_ARGUMENT, "NULL argument");
  Eigen::Map<Eigen::VectorXd>(buf, vec->vec.size()) = vec->vec.v;
  return EVI_OK;
}

evi_status evi_dual_norm(const evi_system* sys, const evi_vec* r,
                         double* out) {
  if (sys == nullptr || r == nullptr || out == nullptr)
    return fail(EVI_ERR_ARGUMENT, "NULL argument");
  return guarded([&] { *out = sys->sys.dual_norm(r->vec); });
}

evi_status evi_vi_solve(const evi_system* sys, const evi_vec* f, double tol,
                        evi_vi_solution** out) {
  if (sys == nullptr || f == nullptr || out == nullptr)
    return fail(EVI_ERR_ARGUMENT, "NULL argument");
  *out = nullptr;
  return guarded([&] {
    auto* sol = new evi_vi_solution{
        evi::solve_cross(sys->sys, f->vec, tol > 0.0 ? tol : 1e-10)};
    sol->zero = sol->cross.primal.y.v.lpNorm<Eigen::Infinity>() == 0.0;
    *out = sol;
  });
}

void evi_vi_solution_destroy(evi_vi_solution* sol) { delete sol; }

evi_status evi_vi_solution_y(const evi_vi_solution* sol, double* buf) {
  if (sol == nullptr || buf == nullptr)
    return fail(EVI_ERR_ARGUMENT, "NULL argument");
  Eigen::Map<Eigen::VectorXd>(buf, sol->cross.primal.y.size()) =
      sol->cross.primal.y.v;
  return EVI_OK;
}

evi_status evi_vi_solution_q(const evi_vi_solution* sol, double* buf) {
  if (sol == nullptr || buf == nullptr)
    return fail(EVI_ERR_ARGUMENT, "NULL argument");
  Eigen::Map<Eigen::VectorXd>(buf, sol->cross.primal.q.size()) =
      sol->cross.primal.q.q;
  return EVI_OK;
}

double evi_vi_solution_duality_residual(const evi_vi_solution* sol) {
  return sol ? sol->cross.primal.duality_residual : 0.0;
}

double evi_vi_solution_complementarity_gap(const evi_vi_solution* sol) {
  return sol ? sol->cross.primal.complementarity_gap : 0.0;
}

double evi_vi_solution_cross_gap(const evi_vi_solution* sol) {
  return sol ? sol->cross.gap : 0.0;
}

int evi_vi_solution_iterations(const evi_vi_solution* sol) {
  return sol ? sol->cross.primal.report.iterations : 0;
}

int evi_vi_solution_zero(const evi_vi_solution* sol) {
  return sol && sol->zero ? 1 : 0;
}

evi_status evi_derivative_solve(const evi_system* sys, const evi_vec* f,
                                const evi_vec* g, evi_derivative** out) {
  if (sys == nullptr || f == nullptr || g == nullptr || out == nullptr)
    return fail(EVI_ERR_ARGUMENT, "NULL argument");
  *out = nullptr;
  return guarded([&] {
    const evi::ViSolution vi = evi::solve_primal(sys->sys, f->vec, 1e-11);
    *out = new evi_derivative{evi::derivative_both(sys->sys, vi, g->vec)};
  });
}

void evi_derivative_destroy(evi_derivative* der) { delete der; }

evi_status evi_derivative_delta(const evi_derivative* der, double* buf) {
  if (der == nullptr || buf == nullptr)
    return fail(EVI_ERR_ARGUMENT, "NULL argument");
  Eigen::Map<Eigen::VectorXd>(buf, der->pair.primal.delta.size()) =
      der->pair.primal.delta.v;
  return EVI_OK;
}

evi_status evi_derivative_eta(const evi_derivative* der, double* buf) {
  if (der == nullptr || buf == nullptr)
    return fail(EVI_ERR_ARGUMENT, "NULL argument");
  Eigen::Map<Eigen::VectorXd>(buf, der->pair.primal.eta.size()) =
      der->pair.primal.eta;
  return EVI_OK;
}

double evi_derivative_orthogonality_gap(const evi_derivative* der) {
  return der ? der->pair.primal.orthogonality_gap : 0.0;
}

double evi_derivative_formulation_gap(const evi_derivative* der) {
  return der ? der->pair.formulation_gap : 0.0;
}

evi_status evi_derivative_cone_tags(const evi_derivative* der, char* buf) {
  if (der == nullptr || buf == nullptr)
    return fail(EVI_ERR_ARGUMENT, "NULL argument");
  const evi::ConeSpec& cone = der->pair.primal.cone;
  for (int i = 0; i < cone.size(); ++i) {
    switch (cone.tags[i]) {
      case evi::ConeTag::Zero:
        buf[i] = 'z';
        break;
      case evi::ConeTag::Free:
        buf[i] = 'f';
        break;
      case evi::ConeTag::NonNeg:
        buf[i] = '+';
        break;
      case evi::ConeTag::NonPos:
        buf[i] = '-';
        break;
    }
  }
  return EVI_OK;
}

evi_status evi_fd_table(const evi_system* sys, const evi_vec* f,
                        const evi_vec* g, const double* ts, int nt,
                        int hadamard, double* errs) {
  if (sys == nullptr || f == nullptr || g == nullptr ||
      (nt > 0 && (ts == nullptr || errs == nullptr)))
    return fail(EVI_ERR_ARGUMENT, "NULL argument");
  return guarded([&] {
    const std::vector<double> t_list(ts, ts + nt);
    std::optional<evi::DualVec> perturbation;
    if (hadamard != 0)
      perturbation = evi::load_vector(sys->sys.mesh(), "sin:1");
    const std::vector<evi::FdRow> rows = evi::fd_oracle(
        sys->sys, f->vec, g->vec, t_list,
        perturbation ? &*perturbation : nullptr);
    for (int i = 0; i < nt; ++i) errs[i] = rows[i].error;
  });
}

evi_status evi_capacity(const evi_system* sys, const int* nodes, int n_nodes,
                        double* value, double* potential) {
  if (sys == nullptr || value == nullptr || (n_nodes > 0 && nodes == nullptr))
    return fail(EVI_ERR_ARGUMENT, "NULL argument");
  return guarded([&] {
    const std::vector<int> node_set(nodes, nodes + n_nodes);
    if (node_set.empty()) {
      *value = 0.0;
      if (potential != nullptr)
        Eigen::Map<Eigen::VectorXd>(potential, sys->sys.n()).setZero();
      return;
    }
    const evi::ObstacleResult obstacle =
        evi::solve_obstacle(sys->sys, node_set, 1.0);
    *value = obstacle.energy;
    if (potential != nullptr)
      Eigen::Map<Eigen::VectorXd>(potential, sys->sys.n()) = obstacle.w.v;
  });
}

evi_status evi_witness_sweep(const char* alignment, const int* n_list,
                             int count, const char* h_rule,
                             evi_witness_table** out) {
  if (alignment == nullptr || n_list == nullptr || count <= 0 ||
      out == nullptr)
    return fail(EVI_ERR_ARGUMENT, "NULL argument");
  *out = nullptr;
  return guarded([&] {
    const auto parsed = parse_alignment(alignment);
    if (!parsed) throw std::invalid_argument("alignment is required");
    const std::vector<int> ns(n_list, n_list + count);
    *out = new evi_witness_table{
        evi::witness_sweep(*parsed, ns, h_rule ? h_rule : "decade")};
  });
}

void evi_witness_table_destroy(evi_witness_table* table) { delete table; }

int evi_witness_table_rows(const evi_witness_table* table) {
  return table ? static_cast<int>(table->records.size()) : 0;
}

evi_status evi_witness_table_row(const evi_witness_table* table, int row,
                                 double* h, int* n, double* d1,
                                 double* pairing, double* d2,
                                 double* z_supnorm, double* cap_node) {
  if (table == nullptr || row < 0 ||
      row >= static_cast<int>(table->records.size()))
    return fail(EVI_ERR_ARGUMENT, "row out of range");
  const evi::WitnessRecord& rec = table->records[row];
  if (h) *h = rec.h;
  if (n) *n = rec.n;
  if (d1) *d1 = rec.d1;
  if (pairing) *pairing = rec.pairing;
  if (d2) *d2 = rec.d2;
  if (z_supnorm) *z_supnorm = rec.z_supnorm;
  if (cap_node) *cap_node = rec.cap_node;
  return EVI_OK;
}

}  // extern "C"
