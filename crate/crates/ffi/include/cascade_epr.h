#ifndef CASCADE_EPR_H
#define CASCADE_EPR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CepStatus {
  CEP_STATUS_OK = 0,
  CEP_STATUS_NULL_POINTER = 1,
  // Parameter outside its domain or inconsistent configuration.
  CEP_STATUS_INVALID_ARGUMENT = 2,
  CEP_STATUS_PARSE = 3,
  // Overflow, non-finite integration state or Fock truncation.
  CEP_STATUS_NUMERICAL = 4,
  CEP_STATUS_IO = 5,
  // Index out of range or buffer too small.
  CEP_STATUS_OUT_OF_RANGE = 6,
  CEP_STATUS_PANIC = 7,
} CepStatus;

typedef enum CepEngine {
  // Use the engine named in the scenario.
  CEP_ENGINE_FROM_SCENARIO = 0,
  CEP_ENGINE_ANALYTIC = 1,
  CEP_ENGINE_ADIABATIC = 2,
  CEP_ENGINE_FULL = 3,
  CEP_ENGINE_FOCK = 4,
} CepEngine;

typedef enum CepColumn {
  CEP_COLUMN_VAR_MINUS = 0,
  CEP_COLUMN_VAR_PLUS = 1,
  CEP_COLUMN_VAR_P_SUM = 2,
  CEP_COLUMN_VAR_P_DIFF = 3,
  CEP_COLUMN_N1 = 4,
  CEP_COLUMN_N2 = 5,
  CEP_COLUMN_NA1 = 6,
  CEP_COLUMN_NA2 = 7,
} CepColumn;

// Result of one scenario run.
typedef struct CepRun CepRun;

// Minimum of ⟨(X₁−X₂)²⟩ over time.
typedef struct CepMinimum {
  // 0 when the variance never drops below 2.
  int32_t below_vacuum;
  double variance;
  // Γ₁·t at the minimum; +∞ when the infimum is approached as t → ∞.
  double gamma1_t_min;
} CepMinimum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message into `buf` (NUL
// terminated, truncated to `len`). Returns the full message length in bytes
// excluding the terminator; 0 after a successful call.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
uintptr_t cep_last_error_message(char *buf, uintptr_t len);

// Library version as a static NUL-terminated string.
const char *cep_version(void);

// Closed-form ⟨(X₁∓X₂)²⟩ of the reduced model from the motional ground
// state. `sign` is −1 for X₁−X₂ and +1 for X₁+X₂.
//
// # Safety
// `out` must point to a writable double.
enum CepStatus cep_epr_variance(double gamma1,
                                double gamma2,
                                double epsilon,
                                double t,
                                int32_t sign,
                                double *out);

// Closed-form phonon numbers ⟨b₁†b₁⟩ and ⟨b₂†b₂⟩ at time `t`.
//
// # Safety
// `n1` and `n2` must point to writable doubles.
enum CepStatus cep_occupations(double gamma1,
                               double gamma2,
                               double epsilon,
                               double t,
                               double *n1,
                               double *n2);

// Minimum over time of ⟨(X₁−X₂)²⟩ for λ = Γ₂/Γ₁ and efficiency ε.
//
// # Safety
// `out` must point to a writable [`CepMinimum`].
enum CepStatus cep_min_variance(double lambda, double epsilon, struct CepMinimum *out);

// Parses a TOML scenario and runs it with `engine` (a [`CepEngine`] code).
// On success `*out` owns a new handle.
//
// # Safety
// `toml` must be a NUL-terminated string and `out` a writable pointer.
enum CepStatus cep_run_toml(const char *toml, int32_t engine, struct CepRun **out);

// Reads a TOML scenario file and runs it with `engine` (a [`CepEngine`]
// code). On success `*out` owns a new handle.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a writable pointer.
enum CepStatus cep_run_file(const char *path, int32_t engine, struct CepRun **out);

// Releases a run handle. Null is ignored.
//
// # Safety
// `run` must be null or a handle from this library not yet freed.
void cep_run_free(struct CepRun *run);

// Number of curves (one per parameter set) in a run; 0 for null.
//
// # Safety
// `run` must be null or a live handle.
uintptr_t cep_run_curve_count(const struct CepRun *run);

// Number of time points per curve; 0 for null.
//
// # Safety
// `run` must be null or a live handle.
uintptr_t cep_run_len(const struct CepRun *run);

// Copies the time grid into `buf`, which must hold [`cep_run_len`] values.
//
// # Safety
// `run` must be a live handle and `buf` point to `len` writable doubles.
enum CepStatus cep_run_times(const struct CepRun *run, double *buf, uintptr_t len);

// Copies one series (a [`CepColumn`] code) of curve `curve` into `buf`.
//
// # Safety
// `run` must be a live handle and `buf` point to `len` writable doubles.
enum CepStatus cep_run_series(const struct CepRun *run,
                              uintptr_t curve,
                              int32_t column,
                              double *buf,
                              uintptr_t len);

// Minimum of ⟨(X₁−X₂)²⟩ along curve `curve`, with Γ₁·t when Γ₁ is
// constant (NaN otherwise). The analytic engine reports the exact minimum.
//
// # Safety
// `run` must be a live handle and `out` a writable [`CepMinimum`].
enum CepStatus cep_run_minimum(const struct CepRun *run, uintptr_t curve, struct CepMinimum *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CASCADE_EPR_H */
