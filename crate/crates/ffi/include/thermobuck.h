#ifndef THERMOBUCK_H
#define THERMOBUCK_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum TbStatus {
  TB_STATUS_OK = 0,
  TB_STATUS_NULL_POINTER = 1,
  TB_STATUS_INVALID_ARGUMENT = 2,
  TB_STATUS_CONFIG = 3,
  TB_STATUS_IO = 4,
  TB_STATUS_SOLVER = 5,
  TB_STATUS_EIGEN = 6,
  TB_STATUS_OPTIMIZER = 7,
  TB_STATUS_OUT_OF_RANGE = 8,
  TB_STATUS_PANIC = 99,
} TbStatus;

// Full-domain static and buckling state.
typedef struct TbAnalysis TbAnalysis;

// A parsed problem with its model built.
typedef struct TbProblem TbProblem;

// Outcome of an optimization run.
typedef struct TbResult TbResult;

// One row of the iteration history.
typedef struct TbHistoryRow {
  size_t iter;
  double v;
  double j_over_j0;
  double p_over_p0;
  double lambda;
  double g1;
  double g2;
  double mu1;
  double mu2;
  double gamma1;
  double gamma2;
  size_t inner_steps;
  double wall_s;
} TbHistoryRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the
// next call on the same thread.
const char *tb_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *tb_version(void);

// Load a problem file from `path`.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum TbStatus tb_problem_from_file(const char *path, struct TbProblem **out);

// Parse a problem from its text.
//
// # Safety
// `config` must be a NUL-terminated string and `out` a valid pointer.
enum TbStatus tb_problem_from_str(const char *config, struct TbProblem **out);

// Load a shipped fixture by name (a path is accepted as well).
//
// # Safety
// `name` must be a NUL-terminated string and `out` a valid pointer.
enum TbStatus tb_problem_from_fixture(const char *name, struct TbProblem **out);

// Element and DOF counts.
//
// # Safety
// `problem` must come from a `tb_problem_*` constructor; outputs may be null.
enum TbStatus tb_problem_size(const struct TbProblem *problem, size_t *n_elements, size_t *n_dofs);

// Override the uniform temperature rise.
//
// # Safety
// `problem` must come from a `tb_problem_*` constructor.
enum TbStatus tb_problem_set_delta_t(struct TbProblem *problem, double delta_t);

// # Safety
// `problem` must be null or come from a `tb_problem_*` constructor, and not
// be used afterwards.
void tb_problem_free(struct TbProblem *problem);

// Static and buckling analysis of the full domain.
//
// # Safety
// `problem` must be valid and `out` a valid pointer.
enum TbStatus tb_analyze(const struct TbProblem *problem, struct TbAnalysis **out);

// Compliance and load factor of an analysis; outputs may be null.
//
// # Safety
// `analysis` must come from [`tb_analyze`].
enum TbStatus tb_analysis_values(const struct TbAnalysis *analysis,
                                 double *compliance,
                                 double *load_factor);

// Copy the nodal displacements (one entry per DOF) into `buf`.
//
// # Safety
// `analysis` must be valid and `buf` must hold `len` doubles.
enum TbStatus tb_analysis_displacement(const struct TbAnalysis *analysis, double *buf, size_t len);

// Copy the critical buckling mode (one entry per DOF) into `buf`.
//
// # Safety
// `analysis` must be valid and `buf` must hold `len` doubles.
enum TbStatus tb_analysis_mode(const struct TbAnalysis *analysis, double *buf, size_t len);

// # Safety
// `analysis` must be null or come from [`tb_analyze`], and not be used afterwards.
void tb_analysis_free(struct TbAnalysis *analysis);

// Run the volume-minimizing optimization.
//
// # Safety
// `problem` must be valid and `out` a valid pointer.
enum TbStatus tb_optimize(const struct TbProblem *problem, struct TbResult **out);

// Number of history rows (the full-domain row included) and whether the
// run reached its target volume (1) or stopped on a vanishing step (0).
//
// # Safety
// `result` must come from [`tb_optimize`]; outputs may be null.
enum TbStatus tb_result_summary(const struct TbResult *result,
                                size_t *n_rows,
                                int32_t *target_reached);

// History row `index`.
//
// # Safety
// `result` must be valid and `row` a valid pointer.
enum TbStatus tb_result_row(const struct TbResult *result, size_t index, struct TbHistoryRow *row);

// Write the final topology (1 present, 0 void) into `buf`.
//
// # Safety
// `result` must be valid and `buf` must hold `len` bytes.
enum TbStatus tb_result_presence(const struct TbResult *result, uint8_t *buf, size_t len);

// # Safety
// `result` must be null or come from [`tb_optimize`], and not be used afterwards.
void tb_result_free(struct TbResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* THERMOBUCK_H */
