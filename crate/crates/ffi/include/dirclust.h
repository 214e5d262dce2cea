#ifndef DIRCLUST_H
#define DIRCLUST_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes shared by every fallible function.
 */
typedef enum DcStatus {
  DC_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  DC_STATUS_NULL_POINTER = 1,
  /**
   * An argument was out of range or could not be parsed.
   */
  DC_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The input data cannot be processed (dimension mismatch, zero rows, ...).
   */
  DC_STATUS_DATA_ERROR = 3,
  /**
   * A numerical procedure failed.
   */
  DC_STATUS_NUMERIC_ERROR = 4,
  /**
   * An internal error; the library state is unchanged.
   */
  DC_STATUS_PANIC = 5,
} DcStatus;

/**
 * Result of a full clustering run.
 */
typedef struct DcClustering DcClustering;

/**
 * A density that can be evaluated at arbitrary points.
 */
typedef struct DcModel DcModel;

/**
 * Points on the unit sphere.
 */
typedef struct DcSample DcSample;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failed call on this thread, or null. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *dc_last_error_message(void);

/**
 * Builds a sample from `n` row-major rows of `d` coordinates. Rows are
 * scaled to unit length; a zero row is an error.
 *
 * # Safety
 * `coords` must point to `n * d` doubles and `out_sample` to writable storage.
 */
enum DcStatus dc_sample_new(const double *coords, size_t n, size_t d, struct DcSample **out_sample);

/**
 * # Safety
 * `sample` must be null or a handle from [`dc_sample_new`] not yet freed.
 */
void dc_sample_free(struct DcSample *sample);

/**
 * Number of points, or 0 for a null handle.
 *
 * # Safety
 * `sample` must be null or a live handle.
 */
size_t dc_sample_len(const struct DcSample *sample);

/**
 * Ambient dimension d, or 0 for a null handle.
 *
 * # Safety
 * `sample` must be null or a live handle.
 */
size_t dc_sample_dim(const struct DcSample *sample);

/**
 * Kernel density estimate of `sample` with bandwidth `h` (concentration 1/h^2).
 * The model keeps its own copy of the sample.
 *
 * # Safety
 * `sample` must be a live handle and `out_model` writable.
 */
enum DcStatus dc_kde_new(const struct DcSample *sample, double h, struct DcModel **out_model);

/**
 * # Safety
 * `model` must be null or a handle from [`dc_kde_new`] not yet freed.
 */
void dc_model_free(struct DcModel *model);

/**
 * Density at the point `x` of length `d`, which is scaled to unit length first.
 *
 * # Safety
 * `model` must be a live handle, `x` must point to `d` doubles and `out_density` be writable.
 */
enum DcStatus dc_model_density(const struct DcModel *model,
                               const double *x,
                               size_t d,
                               double *out_density);

/**
 * Bandwidth chosen by `selector` ("rot-circ", "rot-hyper", "lcv" or "lscv")
 * over the default search interval. A numeric string is returned as is.
 *
 * # Safety
 * `sample` must be a live handle, `selector` a nul-terminated string and `out_h` writable.
 */
enum DcStatus dc_select_bandwidth(const struct DcSample *sample,
                                  const char *selector,
                                  double *out_h);

/**
 * Full clustering with default settings and the given bandwidth (a selector
 * id or a number).
 *
 * # Safety
 * `sample` must be a live handle, `bandwidth` a nul-terminated string and `out_clustering` writable.
 */
enum DcStatus dc_cluster(const struct DcSample *sample,
                         const char *bandwidth,
                         struct DcClustering **out_clustering);

/**
 * # Safety
 * `clustering` must be null or a handle from [`dc_cluster`] not yet freed.
 */
void dc_clustering_free(struct DcClustering *clustering);

/**
 * Number of groups found, or 0 for a null handle.
 *
 * # Safety
 * `clustering` must be null or a live handle.
 */
size_t dc_clustering_groups(const struct DcClustering *clustering);

/**
 * Bandwidth used, or NaN for a null handle.
 *
 * # Safety
 * `clustering` must be null or a live handle.
 */
double dc_clustering_bandwidth(const struct DcClustering *clustering);

/**
 * Copies the 1-based group labels into `out_labels`, which must hold exactly
 * as many entries as the sample has points.
 *
 * # Safety
 * `clustering` must be a live handle and `out_labels` point to `len` writable entries.
 */
enum DcStatus dc_clustering_labels(const struct DcClustering *clustering,
                                   size_t *out_labels,
                                   size_t len);

/**
 * Adjusted Rand index between two labelings of length `n`.
 *
 * # Safety
 * `a` and `b` must point to `n` entries each and `out_ari` be writable.
 */
enum DcStatus dc_ari(const size_t *a, const size_t *b, size_t n, double *out_ari);

/**
 * Cluster tree at bandwidth `h` as a JSON document (see `schemas/tree.json`).
 * Release the string with [`dc_string_free`].
 *
 * # Safety
 * `sample` must be a live handle and `out_json` writable.
 */
enum DcStatus dc_tree_json(const struct DcSample *sample, double h, char **out_json);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void dc_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DIRCLUST_H */
