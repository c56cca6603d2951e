#ifndef LOOPFORGE_H
#define LOOPFORGE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Algebra selectors: the real dimension of the algebra.
 */
#define LF_ALGEBRA_C 2

#define LF_ALGEBRA_H 4

#define LF_ALGEBRA_O 8

/**
 * Status codes.
 */
typedef enum LfStatus {
  LfStatus_Ok = 0,
  LfStatus_NullPointer = 1,
  LfStatus_InvalidArgument = 2,
  LfStatus_Dimension = 3,
  /**
   * Division by zero or a singular system.
   */
  LfStatus_Singular = 4,
  /**
   * A consistency check failed inside the library.
   */
  LfStatus_Numerical = 5,
  /**
   * Output buffer too small; the required size is reported.
   */
  LfStatus_BufferTooSmall = 6,
  LfStatus_Panic = 7,
} LfStatus;

/**
 * Energy-flow state on a flat torus.
 */
typedef struct LfFlow LfFlow;

/**
 * Loop arithmetic on the unit sphere of one algebra.
 */
typedef struct LfLoop LfLoop;

/**
 * Identity-check report.
 */
typedef struct LfReport LfReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf`.
 *
 * # Safety
 * `buf` must point to `cap` writable bytes or be null; `needed` must be null or writable.
 */
enum LfStatus lf_last_error(char *buf, size_t cap, size_t *needed);

/**
 * Number of real coordinates of the algebra (2, 4 or 8); 0 for an unknown selector.
 */
size_t lf_algebra_dim(uint32_t algebra);

/**
 * Creates a loop handle.
 *
 * # Safety
 * `out` must be writable.
 */
enum LfStatus lf_loop_new(uint32_t algebra, struct LfLoop **out);

/**
 * # Safety
 * `h` must come from `lf_loop_new` and not be used afterwards; null is ignored.
 */
void lf_loop_free(struct LfLoop *h);

/**
 * `out = p q`. Arrays hold `lf_algebra_dim` doubles.
 *
 * # Safety
 * Pointers must reference arrays of the algebra's dimension.
 */
enum LfStatus lf_loop_mul(const struct LfLoop *h, const double *p, const double *q, double *out);

/**
 * `out = p / q`, the solution of `out q = p`.
 *
 * # Safety
 * As for `lf_loop_mul`.
 */
enum LfStatus lf_loop_rdiv(const struct LfLoop *h, const double *p, const double *q, double *out);

/**
 * `out = q \ p`, the solution of `q out = p`.
 *
 * # Safety
 * As for `lf_loop_mul`.
 */
enum LfStatus lf_loop_ldiv(const struct LfLoop *h, const double *q, const double *p, double *out);

/**
 * Tangent bracket `[ξ, η]^{(s)}` at the base point `s`; `ξ`, `η` and `out` are full-length arrays.
 *
 * # Safety
 * As for `lf_loop_mul`.
 */
enum LfStatus lf_bracket(const struct LfLoop *h,
                         const double *s,
                         const double *xi,
                         const double *eta,
                         double *out);

/**
 * Runs the identity suites. `exact` selects rational arithmetic; `samples` is per identity.
 *
 * # Safety
 * `out` must be writable.
 */
enum LfStatus lf_verify(uint32_t algebra,
                        bool exact,
                        uint64_t seed,
                        size_t samples,
                        bool fields,
                        struct LfReport **out);

/**
 * # Safety
 * `r` must come from `lf_verify`; null is ignored.
 */
void lf_report_free(struct LfReport *r);

/**
 * Whether every check passed, and the number of checks.
 *
 * # Safety
 * `r` must be a live report; out-pointers must be writable or null.
 */
enum LfStatus lf_report_summary(const struct LfReport *r, bool *passed, size_t *checks);

/**
 * The report as JSON.
 *
 * # Safety
 * `buf` must hold `cap` bytes or be null (to query `needed`).
 */
enum LfStatus lf_report_json(const struct LfReport *r, char *buf, size_t cap, size_t *needed);

/**
 * Seeded random start on `T^dim` with an `n^dim` grid.
 *
 * # Safety
 * `out` must be writable.
 */
enum LfStatus lf_flow_new(uint32_t algebra,
                          size_t dim,
                          size_t n,
                          uint64_t seed,
                          struct LfFlow **out);

/**
 * # Safety
 * `h` must come from `lf_flow_new`; null is ignored.
 */
void lf_flow_free(struct LfFlow *h);

/**
 * Current energy.
 *
 * # Safety
 * `h` must be live, `energy` writable.
 */
enum LfStatus lf_flow_energy(const struct LfFlow *h, double *energy);

/**
 * Runs the energy flow from the current state; `converged` reports `‖(d^H)^*T‖_∞ < tol`.
 * The JSON report is kept on the handle for `lf_flow_report_json`.
 *
 * # Safety
 * `h` must be live; `converged` and `iterations` writable or null.
 */
enum LfStatus lf_flow_run(struct LfFlow *h,
                          size_t max_iterations,
                          double tol,
                          bool *converged,
                          size_t *iterations);

/**
 * JSON of the last `lf_flow_run`.
 *
 * # Safety
 * As for `lf_report_json`.
 */
enum LfStatus lf_flow_report_json(const struct LfFlow *h, char *buf, size_t cap, size_t *needed);

/**
 * Parses a `key = value` config and reports whether it is valid.
 *
 * # Safety
 * `text` must be a NUL-terminated string.
 */
enum LfStatus lf_config_check(const char *text);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LOOPFORGE_H */
