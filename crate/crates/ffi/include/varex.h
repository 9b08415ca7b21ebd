#ifndef VAREX_H
#define VAREX_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes of every fallible call.
typedef enum VarexStatus {
  VAREX_STATUS_OK = 0,
  VAREX_STATUS_NULL_POINTER = 1,
  VAREX_STATUS_INVALID_UTF8 = 2,
  VAREX_STATUS_CONFIG = 3,
  VAREX_STATUS_PRECONDITION = 4,
  VAREX_STATUS_SOLVER = 5,
  VAREX_STATUS_LENGTH_MISMATCH = 6,
  VAREX_STATUS_PANIC = 7,
} VarexStatus;

// Parsed config plus the assembled problem.
typedef struct VarexProblem VarexProblem;

// Outcome of [`varex_solve`].
typedef struct VarexReport VarexReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *varex_version(void);

// Message of the last failed call on this thread, or NULL. The pointer stays
// valid until the next failing call on the same thread.
const char *varex_last_error(void);

// Parses a TOML run config and assembles its problem.
//
// # Safety
// `config` must be a NUL-terminated string and `out` a valid pointer slot.
enum VarexStatus varex_problem_new(const char *config, struct VarexProblem **out);

// Releases a problem handle; NULL is ignored.
//
// # Safety
// `p` must come from [`varex_problem_new`] and not be used afterwards.
void varex_problem_free(struct VarexProblem *p);

// Number of mesh nodes, i.e. the length of every field.
//
// # Safety
// `p` must be a live handle and `out` a valid slot.
enum VarexStatus varex_problem_num_nodes(const struct VarexProblem *p, size_t *out);

// Node coordinates as interleaved (x, y) pairs; `len` counts doubles and
// must be at least twice the node count.
//
// # Safety
// `out` must hold `len` writable doubles.
enum VarexStatus varex_problem_nodes(const struct VarexProblem *p, double *out, size_t len);

// phi(u).
//
// # Safety
// `u` must hold `len` doubles; `out` must be a valid slot.
enum VarexStatus varex_energy(const struct VarexProblem *p,
                              const double *u,
                              size_t len,
                              double *out);

// Nodal coefficients of phi'(u) into `out` (`out_len` >= node count).
//
// # Safety
// `u` must hold `len` doubles and `out` `out_len` writable doubles.
enum VarexStatus varex_gradient(const struct VarexProblem *p,
                                const double *u,
                                size_t len,
                                double *out,
                                size_t out_len);

// Dual H1 norm of phi'(u).
//
// # Safety
// `u` must hold `len` doubles; `out` must be a valid slot.
enum VarexStatus varex_residual(const struct VarexProblem *p,
                                const double *u,
                                size_t len,
                                double *out);

// X norm |u|_{1,p1} + |u|_{1,p2}.
//
// # Safety
// `u` must hold `len` doubles; `out` must be a valid slot.
enum VarexStatus varex_x_norm(const struct VarexProblem *p,
                              const double *u,
                              size_t len,
                              double *out);

// Runs the config's mode without writing files. A non-zero report exit code
// (non-convergence) is still `VAREX_STATUS_OK`; inspect it with
// [`varex_report_exit_code`].
//
// # Safety
// `p` must be a live handle and `out` a valid pointer slot.
enum VarexStatus varex_solve(const struct VarexProblem *p, struct VarexReport **out);

// Releases a report handle; NULL is ignored.
//
// # Safety
// `r` must come from [`varex_solve`] and not be used afterwards.
void varex_report_free(struct VarexReport *r);

// CLI-style exit code: 0 ok, 2 not converged or suite failure. -1 for NULL.
//
// # Safety
// `r` must be NULL or a live report handle.
int32_t varex_report_exit_code(const struct VarexReport *r);

// report.json contents, owned by the handle. NULL for a NULL handle.
//
// # Safety
// `r` must be NULL or a live report handle.
const char *varex_report_json(const struct VarexReport *r);

// One-line summary, owned by the handle. NULL for a NULL handle.
//
// # Safety
// `r` must be NULL or a live report handle.
const char *varex_report_summary(const struct VarexReport *r);

// Length of the primary solution field (0 for modes without one).
//
// # Safety
// `r` must be a live handle and `out` a valid slot.
enum VarexStatus varex_report_solution_len(const struct VarexReport *r, size_t *out);

// Copies the primary solution field into `out`.
//
// # Safety
// `out` must hold `len` writable doubles.
enum VarexStatus varex_report_solution(const struct VarexReport *r, double *out, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VAREX_H */
