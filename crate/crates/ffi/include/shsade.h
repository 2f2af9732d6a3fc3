#ifndef SHSADE_FFI_H
#define SHSADE_FFI_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum ShsadeStatus {
  SHSADE_STATUS_OK = 0,
  SHSADE_STATUS_NULL_POINTER = 1,
  SHSADE_STATUS_INVALID_ARGUMENT = 2,
  SHSADE_STATUS_INVALID_CONFIG = 3,
  SHSADE_STATUS_EVALUATION = 4,
  SHSADE_STATUS_BUFFER_TOO_SMALL = 5,
  SHSADE_STATUS_PANIC = 6,
} ShsadeStatus;

/**
 * Optimizer configuration.
 */
typedef struct ShsadeConfigHandle ShsadeConfigHandle;

/**
 * Discrete search space.
 */
typedef struct ShsadeSpaceHandle ShsadeSpaceHandle;

/**
 * Outcome of a continuous optimization run.
 */
typedef struct ShsadeRunSummary {
  double best_fitness;
  uint64_t evaluations;
  uint64_t generations;
} ShsadeRunSummary;

/**
 * Objective callback: write `f(x)` to `*out` and return 0, or return
 * non-zero to abort the run with [`ShsadeStatus::Evaluation`].
 */
typedef int (*ShsadeObjectiveFn)(const double *x, size_t dim, void *user_data, double *out);

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *shsade_last_error(void);

/**
 * New configuration with default settings.
 */
struct ShsadeConfigHandle *shsade_config_new(void);

/**
 * Parses a configuration from JSON; omitted fields keep their defaults.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ShsadeStatus shsade_config_from_json(const char *json, struct ShsadeConfigHandle **out);

/**
 * # Safety
 * `config` must come from this library and not have been freed.
 */
enum ShsadeStatus shsade_config_set_population_size(struct ShsadeConfigHandle *config,
                                                    size_t value);

/**
 * # Safety
 * `config` must come from this library and not have been freed.
 */
enum ShsadeStatus shsade_config_set_memory_size(struct ShsadeConfigHandle *config, size_t value);

/**
 * # Safety
 * `config` must come from this library and not have been freed.
 */
enum ShsadeStatus shsade_config_set_max_generations(struct ShsadeConfigHandle *config,
                                                    size_t value);

/**
 * # Safety
 * `config` must come from this library and not have been freed.
 */
enum ShsadeStatus shsade_config_set_pbest_fraction(struct ShsadeConfigHandle *config, double value);

/**
 * # Safety
 * `config` must come from this library and not have been freed.
 */
enum ShsadeStatus shsade_config_set_learning_rate(struct ShsadeConfigHandle *config, double value);

/**
 * # Safety
 * `config` must come from this library and not have been freed.
 */
enum ShsadeStatus shsade_config_set_sinusoidal(struct ShsadeConfigHandle *config, bool value);

/**
 * # Safety
 * `config` must come from this library (or be null) and not be used afterwards.
 */
void shsade_config_free(struct ShsadeConfigHandle *config);

/**
 * Minimizes a built-in benchmark (`"sphere"`, `"rosenbrock"`,
 * `"rastrigin"`, `"ackley"`). `max_evaluations = 0` means no evaluation
 * limit. `best_x` (may be null) receives the best point.
 *
 * # Safety
 * Pointers must be valid; `best_x` must hold `best_x_len` doubles.
 */
enum ShsadeStatus shsade_run_benchmark(const struct ShsadeConfigHandle *config,
                                       const char *name,
                                       size_t dimension,
                                       uint64_t max_evaluations,
                                       uint64_t seed,
                                       double *best_x,
                                       size_t best_x_len,
                                       struct ShsadeRunSummary *summary);

/**
 * Minimizes a caller-supplied objective over the box `[lower, upper]`.
 *
 * # Safety
 * `lower` and `upper` must hold `dimension` doubles; `objective` must be
 * safe to call with `user_data` from the calling thread.
 */
enum ShsadeStatus shsade_minimize(const struct ShsadeConfigHandle *config,
                                  const double *lower,
                                  const double *upper,
                                  size_t dimension,
                                  ShsadeObjectiveFn objective,
                                  void *user_data,
                                  uint64_t max_evaluations,
                                  uint64_t seed,
                                  double *best_x,
                                  size_t best_x_len,
                                  struct ShsadeRunSummary *summary);

/**
 * Parses a search space from `{"axes": [{"name": ..., "values": [...]}, ...]}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ShsadeStatus shsade_space_from_json(const char *json, struct ShsadeSpaceHandle **out);

/**
 * Number of axes, or 0 for a null handle.
 *
 * # Safety
 * `space` must come from this library (or be null).
 */
size_t shsade_space_dim(const struct ShsadeSpaceHandle *space);

/**
 * Writes the `[0, 1]` encoding of the value indices to `out`.
 *
 * # Safety
 * `indices` and `out` must hold `len` elements.
 */
enum ShsadeStatus shsade_space_encode(const struct ShsadeSpaceHandle *space,
                                      const size_t *indices,
                                      size_t len,
                                      double *out);

/**
 * Decodes a continuous vector (clamped to `[0, 1]`) to value indices.
 *
 * # Safety
 * `u` and `out` must hold `len` elements.
 */
enum ShsadeStatus shsade_space_decode(const struct ShsadeSpaceHandle *space,
                                      const double *u,
                                      size_t len,
                                      size_t *out);

/**
 * # Safety
 * `space` must come from this library (or be null) and not be used afterwards.
 */
void shsade_space_free(struct ShsadeSpaceHandle *space);

/**
 * Architecture search on the seeded tabular surrogate of `space`, with the
 * default search settings. `*out_json` receives the result document; free
 * it with [`shsade_string_free`].
 *
 * # Safety
 * `space` must be a live handle and `out_json` a valid pointer.
 */
enum ShsadeStatus shsade_nas_run(const struct ShsadeSpaceHandle *space,
                                 uint64_t surrogate_seed,
                                 double cost_budget,
                                 double omega,
                                 size_t budget,
                                 uint64_t seed,
                                 char **out_json);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must come from this library (or be null) and not be used afterwards.
 */
void shsade_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SHSADE_FFI_H */
