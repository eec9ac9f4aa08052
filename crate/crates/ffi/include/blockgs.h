#ifndef BLOCKGS_H
#define BLOCKGS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes for every entry point.
 */
typedef enum BgsStatus {
  BgsOk = 0,
  /**
   * A pointer argument was null or a name failed to parse.
   */
  BgsErrInvalidArgument = 1,
  BgsErrDimension = 2,
  /**
   * The skeleton rejects the requested muscle or option set.
   */
  BgsErrIncompatible = 3,
  /**
   * A Cholesky factorization met a nonpositive pivot mid-run.
   */
  BgsErrBreakdown = 4,
  BgsErrNan = 5,
  BgsErrInternal = 6,
} BgsStatus;

/**
 * Opaque handle holding the factors of one run.
 */
typedef struct BgsResult BgsResult;

/**
 * Options mirrored from the Rust side; zero-initialize for defaults and set
 * `rpltol` to a positive value to override the replacement tolerance.
 */
typedef struct BgsOptions {
  bool t_fix;
  bool reorth_first_block;
  bool auto_shift;
  /**
   * Replacement tolerance; values <= 0 select the default of 100.
   */
  double rpltol;
} BgsOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the most recent error message for this thread into `buf` (always
 * NUL-terminated, truncated to `len`).  Returns the full message length.
 */
uintptr_t bgs_last_error(char *buf, uintptr_t len);

/**
 * Factorize the m x (p*s) column-major matrix `x` with the named skeleton
 * and muscle.  On success `*out` owns the factors and must be released with
 * `bgs_result_free`.  `opts` may be null for defaults.
 *
 * # Safety
 * `x` must point to `m * p * s` doubles and `out` must be a valid pointer.
 */
enum BgsStatus bgs_block_qr(const double *x,
                            uintptr_t m,
                            uintptr_t p,
                            uintptr_t s,
                            const char *skeleton,
                            const char *muscle,
                            const struct BgsOptions *opts,
                            uint64_t seed,
                            struct BgsResult **out);

/**
 * Row count of the stored factor Q.
 */
uintptr_t bgs_result_rows(const struct BgsResult *res);

/**
 * Column count of the stored factor Q (equals p*s).
 */
uintptr_t bgs_result_cols(const struct BgsResult *res);

/**
 * Copy Q (rows x cols, column-major) into `dst`.
 *
 * # Safety
 * `dst` must hold `bgs_result_rows * bgs_result_cols` doubles.
 */
enum BgsStatus bgs_result_q(const struct BgsResult *res, double *dst);

/**
 * Copy R (cols x cols, column-major) into `dst`.
 *
 * # Safety
 * `dst` must hold `cols * cols` doubles.
 */
enum BgsStatus bgs_result_r(const struct BgsResult *res, double *dst);

/**
 * Copy the correction factor T (cols x cols, column-major) into `dst`.
 *
 * # Safety
 * `dst` must hold `cols * cols` doubles.
 */
enum BgsStatus bgs_result_t(const struct BgsResult *res, double *dst);

/**
 * Global-reduction counts attributed to the skeleton and muscle layers.
 *
 * # Safety
 * Non-null output pointers must be valid for a single write.
 */
enum BgsStatus bgs_result_sync_counts(const struct BgsResult *res,
                                      uintptr_t *skeleton,
                                      uintptr_t *muscle);

/**
 * Stability metrics of the stored factors against the original input.
 * Any output pointer may be null to skip that metric.
 *
 * # Safety
 * Non-null output pointers must be valid for a single write.
 */
enum BgsStatus bgs_result_metrics(const struct BgsResult *res,
                                  double *loss_of_orthogonality,
                                  double *relative_residual,
                                  double *relative_cholesky_residual);

/**
 * Release a result handle.  Passing null is a no-op.
 *
 * # Safety
 * `res` must come from `bgs_block_qr` and not be freed twice.
 */
void bgs_result_free(struct BgsResult *res);

/**
 * Generate one of the named test-matrix families into `dst`
 * (m x (p*s), column-major).  Names match the command-line tool, e.g.
 * "rand_normal", "laeuchli", "glued".
 *
 * # Safety
 * `dst` must hold `m * p * s` doubles.
 */
enum BgsStatus bgs_generate_matrix(const char *kind,
                                   uintptr_t m,
                                   uintptr_t p,
                                   uintptr_t s,
                                   uint64_t seed,
                                   double *dst);

/**
 * Validate skeleton, muscle, and matrix-kind names without running anything.
 * Returns BgsOk when the pairing is accepted.
 */
enum BgsStatus bgs_check_pairing(const char *skeleton, const char *muscle);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* BLOCKGS_H */
