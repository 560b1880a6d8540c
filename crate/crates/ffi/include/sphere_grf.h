/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef SPHERE_GRF_H
#define SPHERE_GRF_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SgNoiseMode {
  SG_NOISE_MODE_INTERPOLATE = 0,
  SG_NOISE_MODE_PROJECT = 1,
} SgNoiseMode;

/*
 Result codes of all fallible calls.
 */
typedef enum SgStatus {
  SG_STATUS_OK = 0,
  SG_STATUS_NULL_POINTER = 1,
  SG_STATUS_INVALID_ARGUMENT = 2,
  SG_STATUS_BUFFER_TOO_SMALL = 3,
  SG_STATUS_NON_CONVERGENCE = 4,
  SG_STATUS_IO = 5,
  SG_STATUS_PANIC = 6,
} SgStatus;

/*
 Opaque mesh handle.
 */
typedef struct SgMesh SgMesh;

/*
 Opaque sampler handle bound to one mesh and parameter set.
 */
typedef struct SgSampler SgSampler;

/*
 Model and solver parameters of a sampler.
 */
typedef struct SgParams {
  /*
   Smoothness exponent, must exceed 1/2.
   */
  double beta;
  double kappa;
  /*
   Noise truncation degree `L`.
   */
  uint32_t degree;
  /*
   Sinc quadrature step.
   */
  double k;
  enum SgNoiseMode noise_mode;
  /*
   Lifted quadrature order for noise projection (2 or 5).
   */
  uint32_t quad_order;
  /*
   Relative residual tolerance of the conjugate gradient solves.
   */
  double cg_tol;
  /*
   Iteration cap per solve; 0 selects ten times the system size.
   */
  uint64_t cg_max_iter;
} SgParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Copies the calling thread's last error message, NUL terminated and
 truncated to `capacity` bytes, into `buffer`. Returns the full message
 length plus one, so a return value above `capacity` signals truncation.
 `buffer` may be null when `capacity` is 0.

 # Safety
 `buffer` must be valid for `capacity` bytes of writes.
 */
size_t sg_last_error_message(char *buffer, size_t capacity);

/*
 Library version as a static NUL terminated string.
 */
const char *sg_version(void);

/*
 Default parameters: beta 0.75, kappa 1, L 1, k 0.5, projected noise with
 order 5, tolerance 1e-10 and the default iteration cap.
 */
struct SgParams sg_params_default(void);

/*
 Builds the icosphere of the given refinement level.

 # Safety
 `out` must be valid for a pointer write.
 */
enum SgStatus sg_icosphere(uint32_t level, struct SgMesh **out);

/*
 # Safety
 `mesh` must be null or a handle from [`sg_icosphere`] not yet freed.
 */
void sg_mesh_free(struct SgMesh *mesh);

/*
 # Safety
 `mesh` must be a live handle; the outputs must be valid for writes.
 */
enum SgStatus sg_mesh_counts(const struct SgMesh *mesh, size_t *n_vertices, size_t *n_triangles);

/*
 Copies vertex coordinates as `x0 y0 z0 x1 ...`; `len` must be at least
 three times the vertex count.

 # Safety
 `mesh` must be a live handle and `out` valid for `len` writes.
 */
enum SgStatus sg_mesh_vertices(const struct SgMesh *mesh, double *out, size_t len);

/*
 Copies zero-based, counter-clockwise triangle vertex indices; `len`
 must be at least three times the triangle count.

 # Safety
 `mesh` must be a live handle and `out` valid for `len` writes.
 */
enum SgStatus sg_mesh_triangles(const struct SgMesh *mesh, uint32_t *out, size_t len);

/*
 Largest in-circle radius and largest edge length over all triangles.

 # Safety
 `mesh` must be a live handle; the outputs must be valid for writes.
 */
enum SgStatus sg_mesh_size(const struct SgMesh *mesh, double *h_inball, double *h_diam);

/*
 Sinc node counts `K+` and `K-` for fractional part `beta_frac` in (0, 1).

 # Safety
 The outputs must be valid for writes.
 */
enum SgStatus sg_sinc_node_counts(double beta_frac, double k, uint64_t *k_plus, uint64_t *k_minus);

/*
 Creates a sampler on `mesh`. The sampler keeps its own reference to the
 mesh, so the mesh handle may be freed afterwards.

 # Safety
 `mesh` must be a live handle, `params` readable and `out` writable.
 */
enum SgStatus sg_sampler_new(const struct SgMesh *mesh,
                             const struct SgParams *params,
                             struct SgSampler **out);

/*
 # Safety
 `sampler` must be null or a handle from [`sg_sampler_new`] not yet freed.
 */
void sg_sampler_free(struct SgSampler *sampler);

/*
 Draws sample `sample_index` of the stream `seed` and writes the nodal
 field values to `field`. If `noise` is not null, the discrete noise is
 written there too. Both buffers need `len` ≥ vertex count.

 # Safety
 `sampler` must be a live handle; `field` (and `noise` if not null) must
 be valid for `len` writes.
 */
enum SgStatus sg_sampler_sample(const struct SgSampler *sampler,
                                uint64_t sample_index,
                                uint64_t seed,
                                double *field,
                                double *noise,
                                size_t len);

/*
 Draws a sample and writes it as a legacy VTK file with `field` and
 `noise` point scalars.

 # Safety
 `sampler` must be a live handle and `path` a NUL terminated UTF-8 string.
 */
enum SgStatus sg_sampler_write_vtk(const struct SgSampler *sampler,
                                   uint64_t sample_index,
                                   uint64_t seed,
                                   const char *path);

/*
 Monte Carlo strong error per level with common noise across levels.
 `levels` must be strictly ascending; `errors` receives one value per
 level.

 # Safety
 `params` must be readable, `levels` valid for `n_levels` reads and
 `errors` for `n_levels` writes.
 */
enum SgStatus sg_strong_error(const struct SgParams *params,
                              const uint32_t *levels,
                              size_t n_levels,
                              size_t n_samples,
                              uint64_t seed,
                              double *errors);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPHERE_GRF_H */
