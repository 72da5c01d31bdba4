#ifndef WAVEPHASE_H
#define WAVEPHASE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum WpStatus {
  WP_STATUS_OK = 0,
  WP_STATUS_NULL_POINTER = 1,
  WP_STATUS_INVALID_PARAMETER = 2,
  WP_STATUS_DIMENSION_MISMATCH = 3,
  WP_STATUS_NOT_INVERTIBLE = 4,
  WP_STATUS_NO_CONVERGENCE = 5,
  WP_STATUS_IO = 6,
  WP_STATUS_CORRUPT = 7,
  WP_STATUS_PANIC = 8,
} WpStatus;

/**
 * Phase reconstruction method.
 */
typedef enum WpMethod {
  WP_METHOD_WPGHI = 0,
  WP_METHOD_R_FGLIM = 1,
  WP_METHOD_W_FGLIM = 2,
} WpMethod;

/**
 * Opaque analysis/synthesis frame.
 */
typedef struct WpFrame WpFrame;

/**
 * Opaque coefficient grid.
 */
typedef struct WpGrid WpGrid;

/**
 * Filter bank with `channels` centers spaced geometrically in
 * [`fmin`, `fmax`] Hz.
 */
typedef struct WpBank {
  size_t length;
  double sample_rate;
  size_t channels;
  double fmin;
  double fmax;
  size_t decimation;
} WpBank;

/**
 * Cauchy wavelet parameters.
 */
typedef struct WpWavelet {
  double alpha;
  double beta;
  double gamma_re;
  double gamma_im;
} WpWavelet;

/**
 * Reconstruction settings; zero `max_iter` selects the default.
 */
typedef struct WpReconstructOptions {
  enum WpMethod method;
  uint64_t seed;
  size_t max_iter;
  double momentum;
  double tol;
} WpReconstructOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *wp_last_error(void);

/**
 * Builds a frame. On success `*out` owns a handle to release with
 * [`wp_frame_free`].
 *
 * # Safety
 * `bank`, `wavelet` and `out` must be valid pointers.
 */
enum WpStatus wp_frame_new(const struct WpBank *bank,
                           const struct WpWavelet *wavelet,
                           struct WpFrame **out);

/**
 * Releases a frame; null is ignored.
 *
 * # Safety
 * `frame` must be null or a handle from [`wp_frame_new`] not yet freed.
 */
void wp_frame_free(struct WpFrame *frame);

/**
 * Writes the signal length L, channel count K and hop count N.
 *
 * # Safety
 * `frame` must be a live handle; each output pointer may be null.
 */
enum WpStatus wp_frame_dims(const struct WpFrame *frame,
                            size_t *length,
                            size_t *channels,
                            size_t *hops);

/**
 * Analyzes `len` samples into a new grid owned by `*out`.
 *
 * # Safety
 * `frame` must be a live handle, `signal` must point to `len` readable
 * doubles and `out` must be valid.
 */
enum WpStatus wp_frame_analyze(const struct WpFrame *frame,
                               const double *signal,
                               size_t len,
                               struct WpGrid **out);

/**
 * Synthesizes a grid into `len` = L samples at `out`.
 *
 * # Safety
 * `frame` and `grid` must be live handles and `out` must point to `len`
 * writable doubles.
 */
enum WpStatus wp_frame_synthesize(const struct WpFrame *frame,
                                  const struct WpGrid *grid,
                                  double *out,
                                  size_t len);

/**
 * Recovers a signal from the magnitudes of `target` and writes it to
 * `out` (L samples). The spectral convergence of the result is stored in
 * `*sc_db` when that pointer is not null.
 *
 * # Safety
 * `frame`, `target` and `options` must be valid, `out` must point to
 * `len` writable doubles.
 */
enum WpStatus wp_reconstruct(const struct WpFrame *frame,
                             const struct WpGrid *target,
                             const struct WpReconstructOptions *options,
                             double *out,
                             size_t len,
                             double *sc_db);

/**
 * Default reconstruction options for a method.
 */
struct WpReconstructOptions wp_reconstruct_options_default(enum WpMethod method);

/**
 * Spectral convergence in dB between the magnitudes of two grids.
 *
 * # Safety
 * `proposed` and `target` must be live handles and `sc_db` valid.
 */
enum WpStatus wp_spectral_convergence(const struct WpGrid *proposed,
                                      const struct WpGrid *target,
                                      double *sc_db);

/**
 * Writes K and N of a grid.
 *
 * # Safety
 * `grid` must be a live handle; each output pointer may be null.
 */
enum WpStatus wp_grid_dims(const struct WpGrid *grid, size_t *channels, size_t *hops);

/**
 * Copies the coefficient moduli as a row-major (K + 1) × N matrix: the K
 * wavelet rows followed by the lowpass row.
 *
 * # Safety
 * `grid` must be a live handle and `out` must point to `len` writable
 * doubles.
 */
enum WpStatus wp_grid_magnitude(const struct WpGrid *grid, double *out, size_t len);

/**
 * Saves a grid in the binary DCWT format.
 *
 * # Safety
 * `grid` must be a live handle and `path` a NUL-terminated UTF-8 string.
 */
enum WpStatus wp_grid_save(const struct WpGrid *grid, const char *path);

/**
 * Loads a grid saved by [`wp_grid_save`] into a new handle at `*out`.
 *
 * # Safety
 * `path` must be a NUL-terminated UTF-8 string and `out` valid.
 */
enum WpStatus wp_grid_load(const char *path, struct WpGrid **out);

/**
 * Releases a grid; null is ignored.
 *
 * # Safety
 * `grid` must be null or a live handle not yet freed.
 */
void wp_grid_free(struct WpGrid *grid);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WAVEPHASE_H */
