#ifndef OVERLAPQ_H
#define OVERLAPQ_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum OverlapqStatus {
  OVERLAPQ_STATUS_OK = 0,
  OVERLAPQ_STATUS_INVALID_ARGUMENT = 1,
  OVERLAPQ_STATUS_NULL_POINTER = 2,
  OVERLAPQ_STATUS_RUNTIME_ERROR = 3,
  OVERLAPQ_STATUS_PANIC = 4,
} OverlapqStatus;

// Per-customer arrays exposed by [`overlapq_trajectory_copy`].
typedef enum OverlapqField {
  // A_k, length n
  OVERLAPQ_FIELD_INTERARRIVAL = 0,
  // S_k, length n
  OVERLAPQ_FIELD_SERVICE = 1,
  // W_k, length n
  OVERLAPQ_FIELD_WAIT = 2,
  // T_k, length n
  OVERLAPQ_FIELD_ARRIVAL = 3,
  // D_k, length n
  OVERLAPQ_FIELD_DEPARTURE = 4,
  // O_{k,k+1}, length n - 1
  OVERLAPQ_FIELD_ADJACENT_OVERLAP = 5,
  // M_k for interior customers, length n - 2
  OVERLAPQ_FIELD_MAX_OVERLAP = 6,
  // M*_k for interior customers, length n - 2
  OVERLAPQ_FIELD_MIN_OVERLAP = 7,
} OverlapqField;

// Opaque M/M/1 parameters.
typedef struct OverlapqParams OverlapqParams;

// Opaque simulated trajectory with its overlap series.
typedef struct OverlapqTrajectory OverlapqTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. The pointer
// stays valid until the next call into this library on the same thread.
const char *overlapq_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *overlapq_version(void);

// Creates M/M/1 parameters; fails with `InvalidArgument` unless 0 < lambda < mu.
//
// # Safety
// `out` must be a valid pointer to writable storage for a handle.
enum OverlapqStatus overlapq_params_new(double lambda, double mu, struct OverlapqParams **out);

// # Safety
// `params` must come from [`overlapq_params_new`] and not be used afterwards. NULL is ignored.
void overlapq_params_free(struct OverlapqParams *params);

// P(W > t).
//
// # Safety
// `params` must be a live handle and `out` a valid pointer.
enum OverlapqStatus overlapq_wait_tail(const struct OverlapqParams *params, double t, double *out);

// P(M > t) for the maximum adjacent overlap.
//
// # Safety
// `params` must be a live handle and `out` a valid pointer.
enum OverlapqStatus overlapq_max_tail(const struct OverlapqParams *params, double t, double *out);

// P(M* > t) for the minimum adjacent overlap.
//
// # Safety
// `params` must be a live handle and `out` a valid pointer.
enum OverlapqStatus overlapq_min_tail(const struct OverlapqParams *params, double t, double *out);

// E[exp(-theta M)].
//
// # Safety
// `params` must be a live handle and `out` a valid pointer.
enum OverlapqStatus overlapq_max_transform(const struct OverlapqParams *params,
                                           double theta,
                                           double *out);

// E[exp(-theta M*)].
//
// # Safety
// `params` must be a live handle and `out` a valid pointer.
enum OverlapqStatus overlapq_min_transform(const struct OverlapqParams *params,
                                           double theta,
                                           double *out);

// P(M = 0).
//
// # Safety
// `params` must be a live handle and `out` a valid pointer.
enum OverlapqStatus overlapq_max_atom_zero(const struct OverlapqParams *params, double *out);

// P(M* = 0).
//
// # Safety
// `params` must be a live handle and `out` a valid pointer.
enum OverlapqStatus overlapq_min_atom_zero(const struct OverlapqParams *params, double *out);

// Var[M].
//
// # Safety
// `params` must be a live handle and `out` a valid pointer.
enum OverlapqStatus overlapq_max_variance(const struct OverlapqParams *params, double *out);

// Var[M*].
//
// # Safety
// `params` must be a live handle and `out` a valid pointer.
enum OverlapqStatus overlapq_min_variance(const struct OverlapqParams *params, double *out);

// E[M^p] for 1 <= p <= 20.
//
// # Safety
// `params` must be a live handle and `out` a valid pointer.
enum OverlapqStatus overlapq_max_moment(const struct OverlapqParams *params,
                                        uint32_t p,
                                        double *out);

// E[(M*)^p] for 1 <= p <= 20.
//
// # Safety
// `params` must be a live handle and `out` a valid pointer.
enum OverlapqStatus overlapq_min_moment(const struct OverlapqParams *params,
                                        uint32_t p,
                                        double *out);

// Density of service minus interarrival time at `z`.
//
// # Safety
// `params` must be a live handle and `out` a valid pointer.
enum OverlapqStatus overlapq_diff_density(const struct OverlapqParams *params,
                                          double z,
                                          double *out);

// Simulates `n` customers of a G/G/1 queue. Distributions use the
// `exp:rate`, `det:value`, `erlang:k:rate`, `unif:a:b` syntax; the same
// `(seed, replication)` always gives the same trajectory.
//
// # Safety
// `arrival` and `service` must be NUL-terminated strings; `out` a valid pointer.
enum OverlapqStatus overlapq_simulate(const char *arrival,
                                      const char *service,
                                      uint64_t n,
                                      uint64_t seed,
                                      uint64_t replication,
                                      struct OverlapqTrajectory **out);

// Number of customers, or 0 for NULL.
//
// # Safety
// `traj` must be NULL or a live handle.
size_t overlapq_trajectory_len(const struct OverlapqTrajectory *traj);

// Copies one per-customer array into `buf`. Fails with `InvalidArgument`
// if `capacity` is smaller than the array; `written` receives its length
// either way.
//
// # Safety
// `traj` must be a live handle, `buf` must hold `capacity` doubles and
// `written` must be a valid pointer.
enum OverlapqStatus overlapq_trajectory_copy(const struct OverlapqTrajectory *traj,
                                             enum OverlapqField field,
                                             double *buf,
                                             size_t capacity,
                                             size_t *written);

// # Safety
// `traj` must come from [`overlapq_simulate`] and not be used afterwards. NULL is ignored.
void overlapq_trajectory_free(struct OverlapqTrajectory *traj);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OVERLAPQ_H */
