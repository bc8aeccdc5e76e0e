#ifndef SUBORBIT_H
#define SUBORBIT_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SuborbitStatus {
  SUBORBIT_STATUS_OK = 0,
  SUBORBIT_STATUS_NULL_POINTER = 1,
  SUBORBIT_STATUS_INVALID_ARGUMENT = 2,
  SUBORBIT_STATUS_UNBOUNDED = 3,
  SUBORBIT_STATUS_PRECONDITION = 4,
  SUBORBIT_STATUS_OVERFLOW = 5,
  SUBORBIT_STATUS_OUT_OF_RANGE = 6,
  SUBORBIT_STATUS_PANIC = 7,
} SuborbitStatus;

typedef enum SuborbitWeightKind {
  // `w_k = param`
  SUBORBIT_WEIGHT_KIND_CONSTANT = 0,
  // `w_k = param^k`
  SUBORBIT_WEIGHT_KIND_GEOMETRIC = 1,
  // `w_k = k^param`
  SUBORBIT_WEIGHT_KIND_POWER = 2,
} SuborbitWeightKind;

typedef struct SuborbitOrbit SuborbitOrbit;

typedef struct SuborbitReport SuborbitReport;

typedef struct SuborbitSchedule SuborbitSchedule;

typedef struct SuborbitSpace SuborbitSpace;

typedef struct SuborbitVector SuborbitVector;

// Message of the last failed call on this thread, or NULL. The pointer is
// valid until the next failing call on the same thread.
const char *suborbit_last_error(void);

// Creates the weighted space `l^p_w`; `scaled_basis` selects the basis
// `w_k^{-1/p} delta_k` instead of `delta_k`.
//
// # Safety
// `out` must be a valid pointer to writable storage.
enum SuborbitStatus suborbit_space_new(double p,
                                       enum SuborbitWeightKind kind,
                                       double param,
                                       bool scaled_basis,
                                       struct SuborbitSpace **out);

// # Safety
// `space` must come from `suborbit_space_new` and not be used afterwards.
void suborbit_space_free(struct SuborbitSpace *space);

// Operator norms of the left and right shifts.
//
// # Safety
// `space` must be a live handle; `norm_l` and `norm_r` must be writable.
enum SuborbitStatus suborbit_space_shift_norms(const struct SuborbitSpace *space,
                                               double *norm_l,
                                               double *norm_r);

// Finitely supported vector from `len` (index, value) pairs; indices start
// at 1 and repeats are summed.
//
// # Safety
// `indices` and `values` must point to `len` readable elements.
enum SuborbitStatus suborbit_vector_new(const size_t *indices,
                                        const double *values,
                                        size_t len,
                                        struct SuborbitVector **out);

// # Safety
// `v` must come from this library and not be used afterwards.
void suborbit_vector_free(struct SuborbitVector *v);

// Number of stored nonzero coefficients; 0 for NULL.
//
// # Safety
// `v` must be NULL or a live handle.
size_t suborbit_vector_nnz(const struct SuborbitVector *v);

// Coefficient at index `j`; 0 for NULL.
//
// # Safety
// `v` must be NULL or a live handle.
double suborbit_vector_get(const struct SuborbitVector *v, size_t j);

// Copies up to `capacity` stored entries in increasing index order and
// writes how many were copied to `written`.
//
// # Safety
// `indices` and `values` must have room for `capacity` elements.
enum SuborbitStatus suborbit_vector_entries(const struct SuborbitVector *v,
                                            size_t *indices,
                                            double *values,
                                            size_t capacity,
                                            size_t *written);

// # Safety
// Handles must be live; `out` must be writable.
enum SuborbitStatus suborbit_vector_norm(const struct SuborbitSpace *space,
                                         const struct SuborbitVector *v,
                                         double *out);

// Minimal power schedule for a finitely supported family with tolerances
// `epsilon 2^{-k}`.
//
// # Safety
// `family` must point to `len` live vector handles.
enum SuborbitStatus suborbit_schedule_finite(const struct SuborbitSpace *space,
                                             double lambda,
                                             const struct SuborbitVector *const *family_ptr,
                                             size_t len,
                                             double epsilon,
                                             struct SuborbitSchedule **out);

// # Safety
// `s` must come from this library and not be used afterwards.
void suborbit_schedule_free(struct SuborbitSchedule *s);

// # Safety
// `s` must be NULL or a live handle.
size_t suborbit_schedule_len(const struct SuborbitSchedule *s);

// `alpha(k)` for `1 <= k <= len`.
//
// # Safety
// `s` must be a live handle; `out` must be writable.
enum SuborbitStatus suborbit_schedule_alpha(const struct SuborbitSchedule *s,
                                            size_t k,
                                            uint64_t *out);

// Generating vector built from the first `trunc` members.
//
// # Safety
// All handles must be live and `family` must hold `len` of them.
enum SuborbitStatus suborbit_orbit_new(const struct SuborbitSpace *space,
                                       double lambda,
                                       const struct SuborbitSchedule *schedule,
                                       const struct SuborbitVector *const *family_ptr,
                                       size_t len,
                                       size_t trunc,
                                       struct SuborbitOrbit **out);

// # Safety
// `o` must come from this library and not be used afterwards.
void suborbit_orbit_free(struct SuborbitOrbit *o);

// Bound on the part of the generating vector left out by truncation.
//
// # Safety
// `o` must be a live handle; `out` must be writable.
enum SuborbitStatus suborbit_orbit_tail_bound(const struct SuborbitOrbit *o, double *out);

// `T^{alpha(k)} phi` as a new vector handle.
//
// # Safety
// `o` must be a live handle; `out` must be writable.
enum SuborbitStatus suborbit_orbit_evaluate(const struct SuborbitOrbit *o,
                                            size_t k,
                                            struct SuborbitVector **out);

// Per-k error report; `jobs` threads, 0 for all cores.
//
// # Safety
// `o` must be a live handle; `out` must be writable.
enum SuborbitStatus suborbit_orbit_verify(const struct SuborbitOrbit *o,
                                          size_t jobs,
                                          struct SuborbitReport **out);

// # Safety
// `r` must come from this library and not be used afterwards.
void suborbit_report_free(struct SuborbitReport *r);

// # Safety
// `r` must be NULL or a live handle.
size_t suborbit_report_len(const struct SuborbitReport *r);

// Largest `actual / bound` over the report; NaN for NULL.
//
// # Safety
// `r` must be NULL or a live handle.
double suborbit_report_max_ratio(const struct SuborbitReport *r);

// Row `k` (1-based) of the report.
//
// # Safety
// `r` must be a live handle; the output pointers must be writable.
enum SuborbitStatus suborbit_report_row(const struct SuborbitReport *r,
                                        size_t k,
                                        double *actual,
                                        double *bound,
                                        double *allowance,
                                        bool *pass);

// `(A / (1 + eps B), B / (1 - eps B))` for `0 < eps < 1/B`.
//
// # Safety
// `a_new` and `b_new` must be writable.
enum SuborbitStatus suborbit_perturbed_bounds(double a,
                                              double b,
                                              double epsilon,
                                              double *a_new,
                                              double *b_new);

#endif  /* SUBORBIT_H */
