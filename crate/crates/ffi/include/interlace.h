#ifndef INTERLACE_H
#define INTERLACE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  INTERLACE_BOUNDARY_NEUMANN = 0,
  INTERLACE_BOUNDARY_DIRICHLET = 1,
} InterlaceBoundary;

typedef enum {
  INTERLACE_DOMAIN_SQUARE = 0,
  INTERLACE_DOMAIN_LSHAPE = 1,
  INTERLACE_DOMAIN_DISK_POLYGON = 2,
} InterlaceDomain;

typedef enum {
  INTERLACE_KIND_LAPLACIAN = 0,
  INTERLACE_KIND_STOKES = 1,
} InterlaceKind;

/**
 * Result code of every fallible call.
 */
typedef enum {
  INTERLACE_STATUS_OK = 0,
  INTERLACE_STATUS_NULL_POINTER = 1,
  INTERLACE_STATUS_INVALID_ARGUMENT = 2,
  INTERLACE_STATUS_INVALID_MESH = 3,
  INTERLACE_STATUS_PARSE = 4,
  INTERLACE_STATUS_RESONANCE = 5,
  INTERLACE_STATUS_SOLVER = 6,
  INTERLACE_STATUS_IO = 7,
  INTERLACE_STATUS_PANIC = 8,
} InterlaceStatus;

/**
 * Opaque triangulation.
 */
typedef struct InterlaceMesh InterlaceMesh;

/**
 * Opaque assembled problem.
 */
typedef struct InterlaceProblem InterlaceProblem;

/**
 * Opaque list of eigenvalues with their relative residuals.
 */
typedef struct InterlaceSpectrum InterlaceSpectrum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *interlace_version(void);

/**
 * Message of the last failed call on this thread (empty after a success).
 * Valid until the next call into the library on the same thread.
 */
const char *interlace_last_error(void);

/**
 * Generates a mesh of `domain` with size `h`. `sides` is the polygon side
 * count for the disk and must be 0 (default) for other domains.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for a handle.
 */
InterlaceStatus interlace_mesh_generate(InterlaceDomain domain,
                                        double h,
                                        uint32_t sides,
                                        InterlaceMesh **out);

/**
 * Parses a mesh from its JSON text and validates it.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` as in
 * [`interlace_mesh_generate`].
 */
InterlaceStatus interlace_mesh_from_json(const char *json, InterlaceMesh **out);

/**
 * # Safety
 * `mesh` must be null or a live handle.
 */
size_t interlace_mesh_num_vertices(const InterlaceMesh *mesh);

/**
 * # Safety
 * `mesh` must be null or a live handle.
 */
size_t interlace_mesh_num_triangles(const InterlaceMesh *mesh);

/**
 * # Safety
 * `mesh` must be null or a handle not yet freed.
 */
void interlace_mesh_free(InterlaceMesh *mesh);

/**
 * Assembles a problem on `mesh`. `alpha` is ignored for the Laplacian.
 * The mesh handle may be freed afterwards.
 *
 * # Safety
 * `mesh` must be a live handle and `out` writable.
 */
InterlaceStatus interlace_problem_new(const InterlaceMesh *mesh,
                                      InterlaceKind kind,
                                      double alpha,
                                      InterlaceProblem **out);

/**
 * Number of finite-element velocity (or scalar) dofs.
 *
 * # Safety
 * `problem` must be null or a live handle.
 */
size_t interlace_problem_num_dofs(const InterlaceProblem *problem);

/**
 * # Safety
 * `problem` must be null or a handle not yet freed.
 */
void interlace_problem_free(InterlaceProblem *problem);

/**
 * Smallest `count` eigenvalues of the Neumann or Dirichlet operator.
 *
 * # Safety
 * `problem` must be a live handle and `out` writable.
 */
InterlaceStatus interlace_spectrum_compute(const InterlaceProblem *problem,
                                           InterlaceBoundary bc,
                                           size_t count,
                                           InterlaceSpectrum **out);

/**
 * # Safety
 * `spectrum` must be null or a live handle.
 */
size_t interlace_spectrum_len(const InterlaceSpectrum *spectrum);

/**
 * Copies up to `len` eigenvalues into `values` and, if `residuals` is not
 * null, the matching residuals. Returns the number copied through
 * `written` (which may be null).
 *
 * # Safety
 * `spectrum` must be a live handle; `values` (and `residuals` if non-null)
 * must have room for `len` doubles.
 */
InterlaceStatus interlace_spectrum_copy(const InterlaceSpectrum *spectrum,
                                        double *values,
                                        double *residuals,
                                        size_t len,
                                        size_t *written);

/**
 * # Safety
 * `spectrum` must be null or a handle not yet freed.
 */
void interlace_spectrum_free(InterlaceSpectrum *spectrum);

/**
 * Interlacing verdict for `λ_{n+1}^N < λ_n^D`, `n ≤ n_max`, at mesh size
 * `h` with the default margin. Writes 1 (pass) or 0 to `pass`.
 *
 * # Safety
 * `pass` must be a valid pointer.
 */
InterlaceStatus interlace_verify(InterlaceDomain domain,
                                 InterlaceKind kind,
                                 double alpha,
                                 double h,
                                 size_t n_max,
                                 int32_t *pass);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INTERLACE_H */
