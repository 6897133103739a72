/* C interface to the Clerical interpreter. Generated by cbindgen; do not edit. */

#ifndef CLERICAL_H
#define CLERICAL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Values 0 to 6 match the exit codes of the command-line
 * interpreter.
 */
typedef enum ClericalStatus {
  CLERICAL_STATUS_OK = 0,
  CLERICAL_STATUS_INTERNAL = 1,
  CLERICAL_STATUS_STATIC_ERROR = 2,
  CLERICAL_STATUS_FRAGMENT_VIOLATION = 3,
  CLERICAL_STATUS_DEADLOCK = 4,
  CLERICAL_STATUS_FUEL_EXHAUSTED = 5,
  CLERICAL_STATUS_PRECISION_CAP = 6,
  CLERICAL_STATUS_INVALID_ARGUMENT = 8,
} ClericalStatus;

/**
 * A parsed and typechecked program.
 */
typedef struct ClericalProgram ClericalProgram;

/**
 * Options for [`clerical_program_run`]. Obtain defaults from
 * [`clerical_run_options_default`].
 */
typedef struct ClericalRunOptions {
  /**
   * Decimal digits printed for real results; at least 1.
   */
  uint32_t digits;
  /**
   * Initial working precision in bits; at least 2.
   */
  uint64_t precision;
  /**
   * Working precision at which to give up.
   */
  uint64_t max_precision;
  /**
   * Condition evaluations allowed per loop instance; 0 for unlimited.
   */
  uint64_t fuel;
  /**
   * Steps a guard may take before the next one is scheduled; at least 1.
   */
  uint64_t guard_budget;
  /**
   * When true, guard polling order is shuffled using `seed`.
   */
  bool use_seed;
  uint64_t seed;
} ClericalRunOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Default run options: 20 digits, 60 to 1000000 bits, no fuel limit,
 * guard budget 256, unshuffled guards.
 */
struct ClericalRunOptions clerical_run_options_default(void);

/**
 * Parses and typechecks a NUL-terminated UTF-8 program.
 *
 * On success stores a new handle in `*out`; release it with
 * [`clerical_program_free`].
 *
 * # Safety
 * `source` must be a valid NUL-terminated string and `out` valid for writes.
 */
enum ClericalStatus clerical_program_parse(const char *source, struct ClericalProgram **out);

/**
 * Releases a program handle. Null is ignored.
 *
 * # Safety
 * `program` must be null or a handle from [`clerical_program_parse`] that
 * has not been freed.
 */
void clerical_program_free(struct ClericalProgram *program);

/**
 * Stores the type of the main expression (`unit`, `bool`, `int` or
 * `real`) in `*out`.
 *
 * # Safety
 * `program` must be a live handle and `out` valid for writes.
 */
enum ClericalStatus clerical_program_type(const struct ClericalProgram *program, char **out);

/**
 * Evaluates the program, raising the working precision until the result
 * is known to `options.digits` decimals, and stores the one-line result in
 * `*out`. Passing null `options` uses the defaults.
 *
 * # Safety
 * `program` must be a live handle, `options` null or valid, and `out` valid
 * for writes.
 */
enum ClericalStatus clerical_program_run(const struct ClericalProgram *program,
                                         const struct ClericalRunOptions *options,
                                         char **out);

/**
 * Computes the exact denotation of a program without limits, unrolling
 * each loop `fuel` times, and stores it in `*out` in set notation such as
 * `{0, 1, ⊥}`.
 *
 * # Safety
 * `program` must be a live handle and `out` valid for writes.
 */
enum ClericalStatus clerical_program_denote(const struct ClericalProgram *program,
                                            uint64_t fuel,
                                            char **out);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string from this library that has not been freed.
 */
void clerical_string_free(char *s);

/**
 * Message describing the most recent failure on this thread, or null.
 * The pointer stays valid until the next call into this library on the
 * same thread.
 */
const char *clerical_last_error(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CLERICAL_H */
