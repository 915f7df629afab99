#ifndef MAGENTA_H
#define MAGENTA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MagentaStatus {
  MAGENTA_STATUS_OK = 0,
  MAGENTA_STATUS_NULL_POINTER = 1,
  MAGENTA_STATUS_INVALID_ARGUMENT = 2,
  MAGENTA_STATUS_GRAPH = 3,
  MAGENTA_STATUS_PROBLEM = 4,
  MAGENTA_STATUS_ALGORITHM = 5,
  MAGENTA_STATUS_CONFIG = 6,
  MAGENTA_STATUS_IO = 7,
  MAGENTA_STATUS_PANIC = 8,
} MagentaStatus;

typedef enum MagentaMixingRule {
  MAGENTA_MIXING_RULE_METROPOLIS_HASTINGS = 0,
  // `I − δL` with `δ = delta_factor / λ_max(L)`.
  MAGENTA_MIXING_RULE_LAPLACIAN_SHIFT = 1,
} MagentaMixingRule;

typedef enum MagentaStepRule {
  MAGENTA_STEP_RULE_THEORY = 0,
  // `min(1, step_param / L̂²)`.
  MAGENTA_STEP_RULE_INVERSE_SQUARE = 1,
  // `step_param / √t`.
  MAGENTA_STEP_RULE_DIMINISHING_SQRT = 2,
} MagentaStepRule;

typedef enum MagentaTermination {
  MAGENTA_TERMINATION_MAX_ITERS = 0,
  MAGENTA_TERMINATION_DIVERGED = 1,
  MAGENTA_TERMINATION_CONVERGED = 2,
  MAGENTA_TERMINATION_BUDGET = 3,
} MagentaTermination;

typedef enum MagentaRunClass {
  MAGENTA_RUN_CLASS_CONVERGED = 0,
  MAGENTA_RUN_CLASS_DIVERGED = 1,
  MAGENTA_RUN_CLASS_UNDECIDED = 2,
} MagentaRunClass;

typedef struct MagentaExperiment MagentaExperiment;

typedef struct MagentaGraph MagentaGraph;

typedef struct MagentaMixing MagentaMixing;

typedef struct MagentaProblem MagentaProblem;

typedef struct MagentaRun MagentaRun;

// Parameters of the multi-stage method. Fill with `magenta_options_default`.
typedef struct MagentaOptions {
  double epsilon;
  double d;
  double beta;
  uint32_t max_stages;
  enum MagentaStepRule step_rule;
  double step_param;
  // Zero means no cap.
  uint64_t max_total_iters;
  bool early_success;
} MagentaOptions;

// Scalar results of a finished run.
typedef struct MagentaRunInfo {
  enum MagentaTermination termination;
  enum MagentaRunClass run_class;
  double min_gap;
  double final_gap;
  uint64_t iterations;
  // Stages entered; zero for single-stage algorithms.
  uint32_t stages;
  size_t n_agents;
  size_t dim;
} MagentaRunInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the most recent failed call on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *magenta_last_error(void);

// Crate version as a static NUL-terminated string.
const char *magenta_version(void);

// Releases a string returned by this library.
//
// # Safety
// `s` must be null or a string obtained from this library, not yet freed.
void magenta_string_free(char *s);

// # Safety
// `out` must be valid for writes.
enum MagentaStatus magenta_graph_path(size_t n, struct MagentaGraph **out);

// # Safety
// `out` must be valid for writes.
enum MagentaStatus magenta_graph_complete(size_t n, struct MagentaGraph **out);

// Connected random geometric graph in the unit square.
//
// # Safety
// `out` must be valid for writes.
enum MagentaStatus magenta_graph_random_geometric(size_t n,
                                                  double radius,
                                                  uint64_t seed,
                                                  struct MagentaGraph **out);

// `edges` holds `n_edges` pairs `(u, v)` flattened.
//
// # Safety
// `edges` must point to `2 * n_edges` readable values; `out` must be valid for writes.
enum MagentaStatus magenta_graph_from_edges(size_t n,
                                            const size_t *edges,
                                            size_t n_edges,
                                            struct MagentaGraph **out);

// # Safety
// `g` must be a live graph handle; `n_agents` and `n_edges` must be valid for writes or null.
enum MagentaStatus magenta_graph_size(const struct MagentaGraph *g,
                                      size_t *n_agents,
                                      size_t *n_edges);

// # Safety
// `g` must be null or a graph handle not yet freed.
void magenta_graph_free(struct MagentaGraph *g);

// `delta_factor` is ignored for Metropolis-Hastings weights.
//
// # Safety
// `g` must be a live graph handle; `out` must be valid for writes.
enum MagentaStatus magenta_mixing_new(const struct MagentaGraph *g,
                                      enum MagentaMixingRule rule,
                                      double delta_factor,
                                      struct MagentaMixing **out);

// Second-largest eigenvalue and `‖W − 11ᵀ/N‖`.
//
// # Safety
// `w` must be a live handle; `eta` and `deviation_norm` must be valid for writes or null.
enum MagentaStatus magenta_mixing_spectrum(const struct MagentaMixing *w,
                                           double *eta,
                                           double *deviation_norm);

// Copies `W` row-major into `buf`, which must hold exactly `N²` values.
//
// # Safety
// `w` must be a live handle; `buf` must point to `len` writable values.
enum MagentaStatus magenta_mixing_entries(const struct MagentaMixing *w, double *buf, size_t len);

// # Safety
// `w` must be null or a mixing handle not yet freed.
void magenta_mixing_free(struct MagentaMixing *w);

// `f₁ = x³/3`, `f₂ = −x³/3`.
//
// # Safety
// `out` must be valid for writes.
enum MagentaStatus magenta_problem_cubic_pair(struct MagentaProblem **out);

// `f₁ = f₂ = ½(x − 20)⁴`.
//
// # Safety
// `out` must be valid for writes.
enum MagentaStatus magenta_problem_quartic_pair(struct MagentaProblem **out);

// Regularized logistic regression on synthetic data split across `agents`.
//
// # Safety
// `out` must be valid for writes.
enum MagentaStatus magenta_problem_logistic(size_t agents,
                                            size_t samples,
                                            size_t dim,
                                            double lambda,
                                            double rho,
                                            double flip_prob,
                                            uint64_t seed,
                                            struct MagentaProblem **out);

// # Safety
// `p` must be a live handle; `n_agents` and `dim` must be valid for writes or null.
enum MagentaStatus magenta_problem_shape(const struct MagentaProblem *p,
                                         size_t *n_agents,
                                         size_t *dim);

// `f(u)` and `∇f(u)` of the average objective. `grad` may be null.
//
// # Safety
// `u` must point to `dim` values, `grad` to `dim` writable values or be null,
// `value` must be valid for writes or null.
enum MagentaStatus magenta_problem_eval(const struct MagentaProblem *p,
                                        const double *u,
                                        size_t dim,
                                        double *value,
                                        double *grad);

// # Safety
// `p` must be null or a problem handle not yet freed.
void magenta_problem_free(struct MagentaProblem *p);

// Decentralized gradient descent, constant or `alpha/(1+r)` stepsize.
//
// # Safety
// Handles must be live; `x0` must point to `len` values; `out` must be valid for writes.
enum MagentaStatus magenta_run_dgd(const struct MagentaProblem *p,
                                   const struct MagentaMixing *w,
                                   const double *x0,
                                   size_t len,
                                   double alpha,
                                   bool diminishing,
                                   uint64_t max_iters,
                                   struct MagentaRun **out);

// Gradient tracking started from a single point.
//
// # Safety
// Handles must be live; `x0` must point to `len` values; `out` must be valid for writes.
enum MagentaStatus magenta_run_gradient_tracking(const struct MagentaProblem *p,
                                                 const struct MagentaMixing *w,
                                                 const double *x0,
                                                 size_t len,
                                                 double alpha,
                                                 uint64_t max_iters,
                                                 struct MagentaRun **out);

// Proximal primal-dual method with penalty `rho` on the graph's incidence matrix.
//
// # Safety
// Handles must be live; `x0` must point to `len` values; `out` must be valid for writes.
enum MagentaStatus magenta_run_prox_pda(const struct MagentaProblem *p,
                                        const struct MagentaGraph *g,
                                        const double *x0,
                                        size_t len,
                                        double rho,
                                        double beta,
                                        uint64_t max_iters,
                                        struct MagentaRun **out);

// Defaults for tolerance `epsilon` and radius increment `d`.
struct MagentaOptions magenta_options_default(double epsilon, double d);

// The multi-stage projected gradient-tracking method.
//
// # Safety
// Handles must be live; `x0` must point to `len` values; `opts` must be
// readable; `out` must be valid for writes.
enum MagentaStatus magenta_run_magenta(const struct MagentaProblem *p,
                                       const struct MagentaMixing *w,
                                       const double *x0,
                                       size_t len,
                                       const struct MagentaOptions *opts,
                                       struct MagentaRun **out);

// # Safety
// `r` must be a live run handle; `info` must be valid for writes.
enum MagentaStatus magenta_run_info(const struct MagentaRun *r, struct MagentaRunInfo *info);

// Copies the final iterate row-major into `buf` (`n_agents * dim` values).
//
// # Safety
// `r` must be a live run handle; `buf` must point to `len` writable values.
enum MagentaStatus magenta_run_final_iterate(const struct MagentaRun *r, double *buf, size_t len);

// # Safety
// `r` must be null or a run handle not yet freed.
void magenta_run_free(struct MagentaRun *r);

// Runs the experiment described by a TOML config. When the config sets
// `output`, the trace and summary files are written as well.
//
// # Safety
// `config_toml` must be a NUL-terminated string; `out` must be valid for writes.
enum MagentaStatus magenta_experiment_run(const char *config_toml, struct MagentaExperiment **out);

// The run summary as TOML. Free the string with `magenta_string_free`.
//
// # Safety
// `e` must be a live handle; `out` must be valid for writes.
enum MagentaStatus magenta_experiment_summary_toml(const struct MagentaExperiment *e, char **out);

// Share of Converged runs, in percent, for the variant `label`.
//
// # Safety
// `e` must be a live handle; `label` a NUL-terminated string; `pct` valid for writes.
enum MagentaStatus magenta_experiment_convergence_pct(const struct MagentaExperiment *e,
                                                      const char *label,
                                                      double *pct);

// Number of trace rows recorded.
//
// # Safety
// `e` must be a live handle; `n` must be valid for writes.
enum MagentaStatus magenta_experiment_n_records(const struct MagentaExperiment *e, size_t *n);

// Writes the trace CSV to `path`.
//
// # Safety
// `e` must be a live handle; `path` a NUL-terminated string.
enum MagentaStatus magenta_experiment_write_csv(const struct MagentaExperiment *e,
                                                const char *path);

// # Safety
// `e` must be null or an experiment handle not yet freed.
void magenta_experiment_free(struct MagentaExperiment *e);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MAGENTA_H */
