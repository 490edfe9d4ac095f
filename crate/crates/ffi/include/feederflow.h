#ifndef FEEDERFLOW_H
#define FEEDERFLOW_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define FF_COLUMN_X 0

#define FF_COLUMN_THETA 1

#define FF_COLUMN_V 2

#define FF_COLUMN_S 3

#define FF_COLUMN_W 4

#define FF_COLUMN_P 5

#define FF_COLUMN_Q 6

#define FF_COLUMN_PSI_B 7

#define FF_COLUMN_PSI_G 8

#define FF_COLUMN_DELTA 9

#define FF_PHENOMENON_VOLTAGE_DROP 1

#define FF_PHENOMENON_REVERSE_FLOW 2

#define FF_PHENOMENON_PHASE_DELAY 4

#define FF_PHENOMENON_PHASE_ADVANCE 8

// Status codes. Values 1 to 6 match the command-line exit codes.
typedef enum FfStatus {
  FF_STATUS_OK = 0,
  // Parse, validation, domain or unknown-preset error.
  FF_STATUS_INVALID = 1,
  FF_STATUS_NOT_CONVERGED = 2,
  FF_STATUS_VOLTAGE_COLLAPSE = 3,
  FF_STATUS_IO = 6,
  FF_STATUS_NULL_POINTER = 10,
  // Text argument is not valid UTF-8.
  FF_STATUS_INVALID_UTF8 = 11,
  // Unknown column or too small a buffer.
  FF_STATUS_OUT_OF_RANGE = 12,
  // A Rust panic was caught.
  FF_STATUS_PANIC = 13,
} FfStatus;

// Opaque scenario handle.
typedef struct FfScenario FfScenario;

// Opaque handle to a converged solution and its dissipation analysis.
typedef struct FfSolution FfSolution;

// Headline numbers of a solution.
typedef struct FfSummary {
  size_t grid_intervals;
  size_t iterations;
  double final_residual_norm;
  double v_terminal;
  double theta_terminal;
  double v_gradient_0;
  double theta_gradient_0;
  double total_loss;
  double loss_active;
  double loss_reactive;
  double residual_d09;
  double residual_d10;
  double residual_e05;
  double residual_e06;
  double j02_gap;
  double j04_gap;
  // Bitwise OR of `FF_PHENOMENON_*`.
  uint32_t phenomena;
} FfSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Parses a scenario document.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a writable pointer.
enum FfStatus ff_scenario_from_str(const char *text, struct FfScenario **out);

// Loads a preset (`no_load`, `conventional`, `pv_ev`, `manufactured`),
// honouring `FEEDERFLOW_PRESET_DIR`.
//
// # Safety
// `name` must be a NUL-terminated string and `out` a writable pointer.
enum FfStatus ff_scenario_preset(const char *name, struct FfScenario **out);

// Releases a scenario. Null is ignored.
//
// # Safety
// `scenario` must come from this library and not be used afterwards.
void ff_scenario_free(struct FfScenario *scenario);

// Solves a scenario. `grid_intervals = 0` keeps the scenario's setting.
//
// # Safety
// `scenario` must be a live handle and `out` a writable pointer.
enum FfStatus ff_solve(const struct FfScenario *scenario,
                       size_t grid_intervals,
                       struct FfSolution **out);

// Releases a solution. Null is ignored.
//
// # Safety
// `solution` must come from this library and not be used afterwards.
void ff_solution_free(struct FfSolution *solution);

// Number of grid nodes (`N + 1`), or 0 for a null handle.
//
// # Safety
// `solution` must be null or a live handle.
size_t ff_solution_len(const struct FfSolution *solution);

// Copies one column (`FF_COLUMN_*`) into `buf`, which must hold at least
// `ff_solution_len` values.
//
// # Safety
// `solution` must be a live handle and `buf` must be writable for `len`
// doubles.
enum FfStatus ff_solution_column(const struct FfSolution *solution,
                                 uint32_t column,
                                 double *buf,
                                 size_t len);

// Fills `out` with the solution's headline numbers.
//
// # Safety
// `solution` must be a live handle and `out` writable.
enum FfStatus ff_solution_summary(const struct FfSolution *solution, struct FfSummary *out);

// Copies the last error message of this thread into `buf` (NUL-terminated,
// truncated to fit) and returns the full message length in bytes
// excluding the terminator. Pass a null `buf` to query the length.
//
// # Safety
// `buf` must be null or writable for `len` bytes.
size_t ff_last_error(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *ff_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FEEDERFLOW_H */
