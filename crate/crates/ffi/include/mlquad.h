#ifndef MLQUAD_H
#define MLQUAD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MlqDomain {
  MLQ_DOMAIN_UNIT_DISK = 0,
  MLQ_DOMAIN_UNIT_SQUARE = 1,
} MlqDomain;

typedef enum MlqFamily {
  MLQ_FAMILY_MONTE_CARLO = 0,
  MLQ_FAMILY_QMC_HALTON = 1,
  MLQ_FAMILY_CC_SPARSE = 2,
} MlqFamily;

typedef enum MlqProblem {
  MLQ_PROBLEM_ANALYTIC_DISK = 0,
  MLQ_PROBLEM_SINUSOIDAL_SQUARE = 1,
} MlqProblem;

typedef enum MlqRepresentation {
  MLQ_REPRESENTATION_NESTED_Q = 0,
  MLQ_REPRESENTATION_NESTED_V = 1,
} MlqRepresentation;

/**
 * Result codes.
 */
typedef enum MlqStatus {
  MLQ_STATUS_OK = 0,
  MLQ_STATUS_NULL_POINTER = 1,
  MLQ_STATUS_INVALID_ARGUMENT = 2,
  MLQ_STATUS_NUMERICAL = 3,
  MLQ_STATUS_IO = 4,
  /**
   * Buffer passed by the caller is too small.
   */
  MLQ_STATUS_BUFFER_TOO_SMALL = 5,
  /**
   * A Rust panic was caught at the boundary.
   */
  MLQ_STATUS_PANIC = 6,
} MlqStatus;

/**
 * Triangulation handle.
 */
typedef struct MlqMesh MlqMesh;

/**
 * Result of a multilevel estimate.
 */
typedef struct MlqReport MlqReport;

/**
 * Quadrature rule handle (plain or difference rule).
 */
typedef struct MlqRule MlqRule;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length without the NUL.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
uintptr_t mlq_last_error(char *buf, uintptr_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *mlq_version(void);

/**
 * Generates a mesh with target size `h`.
 *
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
enum MlqStatus mlq_mesh_generate(enum MlqDomain domain,
                                 double h,
                                 uint64_t seed,
                                 struct MlqMesh **out);

/**
 * # Safety
 * `mesh` must be a live handle; `out` must be valid.
 */
enum MlqStatus mlq_mesh_counts(const struct MlqMesh *mesh,
                               uintptr_t *vertices,
                               uintptr_t *triangles);

/**
 * Copies vertex coordinates as `x0, y0, x1, y1, ...` (`2 * vertices` values).
 *
 * # Safety
 * `out` must be valid for `len` doubles.
 */
enum MlqStatus mlq_mesh_vertices(const struct MlqMesh *mesh, double *out, uintptr_t len);

/**
 * Copies 0-based triangle corner indices (`3 * triangles` values).
 *
 * # Safety
 * `out` must be valid for `len` values.
 */
enum MlqStatus mlq_mesh_triangles(const struct MlqMesh *mesh, uintptr_t *out, uintptr_t len);

/**
 * # Safety
 * `mesh` must be null or a handle not yet freed.
 */
void mlq_mesh_free(struct MlqMesh *mesh);

/**
 * Builds the level-`level` rule in `dim` dimensions, or the difference
 * rule `Q_level - Q_{level-1}` when `difference` is true.
 *
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
enum MlqStatus mlq_rule_new(enum MlqFamily family,
                            uintptr_t level,
                            uintptr_t dim,
                            uint64_t seed,
                            bool difference,
                            struct MlqRule **out);

/**
 * # Safety
 * `rule` must be a live handle; `len` and `dim` must be valid.
 */
enum MlqStatus mlq_rule_size(const struct MlqRule *rule, uintptr_t *len, uintptr_t *dim);

/**
 * Copies nodes row-major (`len * dim` values).
 *
 * # Safety
 * `out` must be valid for `len` doubles.
 */
enum MlqStatus mlq_rule_nodes(const struct MlqRule *rule, double *out, uintptr_t len);

/**
 * # Safety
 * `out` must be valid for `len` doubles.
 */
enum MlqStatus mlq_rule_weights(const struct MlqRule *rule, double *out, uintptr_t len);

/**
 * # Safety
 * `rule` must be null or a handle not yet freed.
 */
void mlq_rule_free(struct MlqRule *rule);

/**
 * Runs one multilevel estimate of `E[u^p]` (`p` = 1 or 2) for a built-in
 * problem, with meshes up to level `j` and a reference mesh at `j + 2`.
 *
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
enum MlqStatus mlq_estimate(enum MlqProblem problem,
                            uintptr_t j,
                            enum MlqFamily family,
                            enum MlqRepresentation representation,
                            uint32_t p,
                            uint64_t seed,
                            struct MlqReport **out);

/**
 * Solve count, cost units and number of reference vertices.
 *
 * # Safety
 * All pointers must be valid.
 */
enum MlqStatus mlq_report_summary(const struct MlqReport *report,
                                  uintptr_t *solves,
                                  uintptr_t *cost_units,
                                  uintptr_t *values);

/**
 * Copies the estimated statistic at the reference vertices.
 *
 * # Safety
 * `out` must be valid for `len` doubles.
 */
enum MlqStatus mlq_report_values(const struct MlqReport *report, double *out, uintptr_t len);

/**
 * H1 error against the closed-form statistic (analytic problem only).
 *
 * # Safety
 * `out` must be valid.
 */
enum MlqStatus mlq_report_error_h1(const struct MlqReport *report, double *out);

/**
 * # Safety
 * `report` must be null or a handle not yet freed.
 */
void mlq_report_free(struct MlqReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MLQUAD_H */
