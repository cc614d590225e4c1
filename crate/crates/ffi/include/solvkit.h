#ifndef SOLVKIT_H
#define SOLVKIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define SOLVKIT_OK 0

/**
 * A verification ran and at least one check failed.
 */
#define SOLVKIT_CHECK_FAILED 1

/**
 * Malformed JSON, bad parameters or a model violating its constraints.
 */
#define SOLVKIT_INVALID_INPUT 2

/**
 * The request is outside what the model supports (wrong degree, non-QES, ...).
 */
#define SOLVKIT_UNSUPPORTED 3

/**
 * A numerical failure inside the library.
 */
#define SOLVKIT_NUMERIC 4

#define SOLVKIT_NULL_ARGUMENT 5

/**
 * The output buffer is too short; the needed length was still written.
 */
#define SOLVKIT_BUFFER_TOO_SMALL 6

#define SOLVKIT_PANIC 7

/**
 * Parsed model. Opaque to C.
 */
typedef struct SolvkitModel SolvkitModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *solvkit_version(void);

/**
 * Message for the last failed call on this thread, or NULL. Owned by the library.
 */
const char *solvkit_last_error(void);

/**
 * Parses and validates a model from JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
int32_t solvkit_model_from_json(const char *json, struct SolvkitModel **out);

/**
 * Releases a model. NULL is ignored.
 *
 * # Safety
 * `model` must come from `solvkit_model_from_json` and not be freed twice.
 */
void solvkit_model_free(struct SolvkitModel *model);

/**
 * Degree L of the model's potential.
 *
 * # Safety
 * `model` and `out` must be valid pointers.
 */
int32_t solvkit_model_degree(const struct SolvkitModel *model, size_t *out);

/**
 * Writes E(0), ..., E(n_max) of an L = 2 model into `out` (length `len`).
 * `written` receives n_max + 1 even when the buffer is too small.
 *
 * # Safety
 * `out` must hold `len` doubles; `written` may be NULL.
 */
int32_t solvkit_energies(const struct SolvkitModel *model,
                         size_t n_max,
                         double *out,
                         size_t len,
                         size_t *written);

/**
 * Runs identity checks and returns the JSON report through `report_json`.
 * `checks` is a comma-separated list or NULL for the default set.
 * Returns `SOLVKIT_CHECK_FAILED` (with the report still written) when a check fails.
 *
 * # Safety
 * `checks` must be NULL or NUL-terminated; `report_json` must be valid.
 * The returned string must be released with `solvkit_string_free`.
 */
int32_t solvkit_verify(const struct SolvkitModel *model,
                       const char *checks,
                       uint64_t seed,
                       char **report_json);

/**
 * Eigenvalues of the invariant block of an L = 3 or 4 model, ascending by real part.
 * A negative `m` takes the subspace degree from the model's qes block.
 * `written` receives M + 1 even when the buffers are too small.
 *
 * # Safety
 * `re` and `im` must each hold `len` doubles; `written` may be NULL.
 */
int32_t solvkit_qes_eigenvalues(const struct SolvkitModel *model,
                                int64_t m,
                                double *re,
                                double *im,
                                size_t len,
                                size_t *written);

/**
 * Releases a string returned by the library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void solvkit_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SOLVKIT_H */
