/* evi -- elliptic variational inequalities of the second kind: dual
 * solvers, solution-map derivatives, capacities and the dual-norm
 * refinement study. C interface of the shared library.
 *
 * All functions returning evi_status set a thread-local message
 * retrievable through evi_last_error() on failure. Handles are created by
 * *_create functions and released by the matching *_destroy; destroying
 * NULL is a no-op. Output buffers are caller-allocated with the sizes
 * reported by the corresponding count functions.
 */
#ifndef EVI_H
#define EVI_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum evi_status {
  EVI_OK = 0,
  EVI_ERR_ARGUMENT = 1, /* invalid input, spec or precondition */
  EVI_ERR_SOLVER = 2,   /* iteration failed to converge */
  EVI_ERR_NUMERIC = 3   /* inconsistent numbers (NaN, broken factorization) */
} evi_status;

typedef struct evi_system evi_system;
typedef struct evi_vec evi_vec;
typedef struct evi_vi_solution evi_vi_solution;
typedef struct evi_derivative evi_derivative;
typedef struct evi_witness_table evi_witness_table;

const char* evi_version(void);
const char* evi_last_error(void);

/* -- discretization ----------------------------------------------------- */

/* dim 1 or 2, n_elements >= 2 (per side in 2D); alignment "aligned",
 * "offset" or NULL (inferred from parity). */
evi_status evi_system_create(int dim, int n_elements, const char* alignment,
                             evi_system** out);
void evi_system_destroy(evi_system* sys);
int evi_system_interior_count(const evi_system* sys);
int evi_system_dim(const evi_system* sys);
double evi_system_mesh_size(const evi_system* sys);
/* xs (and ys in 2D, else NULL) hold one coordinate per interior node. */
evi_status evi_system_coords(const evi_system* sys, double* xs, double* ys);
evi_status evi_system_lumped_mass(const evi_system* sys, double* m);
/* node index of the mesh node closest to (x, y); y ignored in 1D */
evi_status evi_system_nearest_node(const evi_system* sys, double x, double y,
                                   int* node);
/* all mesh nodes with coordinate in [a,b] (1D); count in/out: capacity in,
 * written count out; nodes may be NULL to query the count */
evi_status evi_system_nodes_in_interval(const evi_system* sys, double a,
                                        double b, int* nodes, int* count);

/* -- load functionals --------------------------------------------------- */

/* density specs: const:<c> | sin:<k> | box:<a>,<b>,<height> | file:<path> */
evi_status evi_load_create(const evi_system* sys, const char* density_spec,
                           evi_vec** out);
evi_status evi_point_load_create(const evi_system* sys, double x,
                                 double weight, evi_vec** out);
void evi_vec_destroy(evi_vec* vec);
int evi_vec_size(const evi_vec* vec);
evi_status evi_vec_values(const evi_vec* vec, double* buf);
evi_status evi_dual_norm(const evi_system* sys, const evi_vec* r, double* out);

/* -- variational inequality --------------------------------------------- */

/* Solves by both the primal active-set route and the dual projection
 * route; the handle carries (y, q), residuals and the cross-check gap. */
evi_status evi_vi_solve(const evi_system* sys, const evi_vec* f, double tol,
                        evi_vi_solution** out);
void evi_vi_solution_destroy(evi_vi_solution* sol);
evi_status evi_vi_solution_y(const evi_vi_solution* sol, double* buf);
evi_status evi_vi_solution_q(const evi_vi_solution* sol, double* buf);
double evi_vi_solution_duality_residual(const evi_vi_solution* sol);
double evi_vi_solution_complementarity_gap(const evi_vi_solution* sol);
double evi_vi_solution_cross_gap(const evi_vi_solution* sol);
int evi_vi_solution_iterations(const evi_vi_solution* sol);
/* 1 when y = 0 (f lies inside the dual box), else 0 */
int evi_vi_solution_zero(const evi_vi_solution* sol);

/* -- sensitivity --------------------------------------------------------- */

evi_status evi_derivative_solve(const evi_system* sys, const evi_vec* f,
                                const evi_vec* g, evi_derivative** out);
void evi_derivative_destroy(evi_derivative* der);
evi_status evi_derivative_delta(const evi_derivative* der, double* buf);
evi_status evi_derivative_eta(const evi_derivative* der, double* buf);
double evi_derivative_orthogonality_gap(const evi_derivative* der);
double evi_derivative_formulation_gap(const evi_derivative* der);
/* one of "zero" | "free" | "nonneg" | "nonpos" per interior node, written
 * as single characters 'z' 'f' '+' '-' */
evi_status evi_derivative_cone_tags(const evi_derivative* der, char* buf);

/* finite-difference table: errs[i] for step ts[i]; hadamard != 0 perturbs
 * the direction with t * p where p is the sin:1 load */
evi_status evi_fd_table(const evi_system* sys, const evi_vec* f,
                        const evi_vec* g, const double* ts, int nt,
                        int hadamard, double* errs);

/* -- capacity ------------------------------------------------------------ */

/* capa of the node set; potential (interior values) may be NULL */
evi_status evi_capacity(const evi_system* sys, const int* nodes, int n_nodes,
                        double* value, double* potential);

/* -- refinement study ---------------------------------------------------- */

evi_status evi_witness_sweep(const char* alignment, const int* n_list,
                             int count, const char* h_rule,
                             evi_witness_table** out);
void evi_witness_table_destroy(evi_witness_table* table);
int evi_witness_table_rows(const evi_witness_table* table);
evi_status evi_witness_table_row(const evi_witness_table* table, int row,
                                 double* h, int* n, double* d1,
                                 double* pairing, double* d2,
                                 double* z_supnorm, double* cap_node);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* EVI_H */
