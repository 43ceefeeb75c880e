#ifndef ZETAFLOW_H
#define ZETAFLOW_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result of every fallible call.
 */
typedef enum ZfStatus {
  ZF_STATUS_OK = 0,
  ZF_STATUS_NULL_POINTER = 1,
  ZF_STATUS_INVALID_INPUT = 2,
  ZF_STATUS_PARSE = 3,
  ZF_STATUS_VALIDATION = 4,
  ZF_STATUS_NUMERICAL = 5,
  ZF_STATUS_IO = 6,
  ZF_STATUS_PANIC = 7,
} ZfStatus;

/**
 * Triangle mesh handle.
 */
typedef struct ZfMesh ZfMesh;

/**
 * Conformal metric handle.
 */
typedef struct ZfMetric ZfMetric;

/**
 * Finite-dimensional Gaussian model handle.
 */
typedef struct ZfModel ZfModel;

/**
 * Ascending eigenvalue list handle.
 */
typedef struct ZfSpectrum ZfSpectrum;

typedef struct ZfTopology {
  size_t vertices;
  size_t edges;
  size_t faces;
  int64_t chi;
  int64_t genus;
} ZfTopology;

typedef struct ZfZeta {
  double zeta0;
  double zeta0_empirical;
  double zeta_prime0;
  double log_det;
  double t0;
  double tail_bound;
  double quad_error;
} ZfZeta;

typedef struct ZfClassic {
  double lhs;
  double rhs;
  double closed_form;
  double rel_diff;
  bool equal;
} ZfClassic;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call into the library on this
 * thread.
 */
const char *zf_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *zf_version(void);

/**
 * Icosahedron subdivided `subdivisions` times and projected to the unit
 * sphere.
 *
 * # Safety
 * `mesh` must be writable.
 */
enum ZfStatus zf_mesh_icosphere(uint32_t subdivisions, struct ZfMesh **mesh);

/**
 * Flat torus on an `m × n` grid of unit area.
 *
 * # Safety
 * `mesh` must be writable.
 */
enum ZfStatus zf_mesh_flat_torus(size_t m, size_t n, double aspect, struct ZfMesh **mesh);

/**
 * Reads an OFF file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `mesh` writable.
 */
enum ZfStatus zf_mesh_load_off(const char *path, struct ZfMesh **mesh);

/**
 * # Safety
 * `mesh` must be a live handle; `topology` writable.
 */
enum ZfStatus zf_mesh_topology(const struct ZfMesh *mesh, struct ZfTopology *topology);

/**
 * # Safety
 * `mesh` must be null or a handle not yet freed.
 */
void zf_mesh_free(struct ZfMesh *mesh);

/**
 * Base metric of a mesh. The metric keeps its own reference to the mesh.
 *
 * # Safety
 * `mesh` must be a live handle; `metric` writable.
 */
enum ZfStatus zf_metric_new(const struct ZfMesh *mesh, struct ZfMetric **metric);

/**
 * New metric `e^{2u}` times the base metric of `metric`.
 *
 * # Safety
 * `metric` must be a live handle, `u` must hold `len` doubles and `result`
 * must be writable.
 */
enum ZfStatus zf_metric_with_u(const struct ZfMetric *metric,
                               const double *u,
                               size_t len,
                               struct ZfMetric **result);

/**
 * # Safety
 * `metric` must be a live handle; `area` writable.
 */
enum ZfStatus zf_metric_area(const struct ZfMetric *metric, double *area);

/**
 * Returns 0 for a null handle.
 *
 * # Safety
 * `metric` must be null or a live handle.
 */
size_t zf_metric_num_vertices(const struct ZfMetric *metric);

/**
 * Right side of the conformal anomaly formula for `g = e^ψ h`.
 *
 * # Safety
 * `metric` must be a live handle, `psi` must hold `len` doubles and `value`
 * must be writable.
 */
enum ZfStatus zf_polyakov_rhs(const struct ZfMetric *metric,
                              const double *psi,
                              size_t len,
                              double *value);

/**
 * # Safety
 * `metric` must be null or a handle not yet freed.
 */
void zf_metric_free(struct ZfMetric *metric);

/**
 * Lowest `count` eigenvalues of the Laplacian of `metric`; 0 for all.
 *
 * # Safety
 * `metric` must be a live handle; `spectrum` writable.
 */
enum ZfStatus zf_spectrum_laplacian(const struct ZfMetric *metric,
                                    size_t count,
                                    struct ZfSpectrum **spectrum);

/**
 * Round sphere spectrum `l(l+1)/r²` up to `l_max`.
 *
 * # Safety
 * `spectrum` must be writable.
 */
enum ZfStatus zf_spectrum_sphere(size_t l_max, double radius, struct ZfSpectrum **spectrum);

/**
 * Square flat torus spectrum for `|p|, |q| ≤ k_max`.
 *
 * # Safety
 * `spectrum` must be writable.
 */
enum ZfStatus zf_spectrum_torus(size_t k_max, double area, struct ZfSpectrum **spectrum);

/**
 * Returns 0 for a null handle.
 *
 * # Safety
 * `spectrum` must be null or a live handle.
 */
size_t zf_spectrum_len(const struct ZfSpectrum *spectrum);

/**
 * Copies up to `capacity` eigenvalues into `values` and stores the number
 * copied in `written`.
 *
 * # Safety
 * `spectrum` must be a live handle, `values` must have room for `capacity`
 * doubles and `written` must be writable.
 */
enum ZfStatus zf_spectrum_copy(const struct ZfSpectrum *spectrum,
                               double *values,
                               size_t capacity,
                               size_t *written);

/**
 * Spectrum multiplied by `beta`.
 *
 * # Safety
 * `spectrum` must be a live handle; `result` writable.
 */
enum ZfStatus zf_spectrum_scaled(const struct ZfSpectrum *spectrum,
                                 double beta,
                                 struct ZfSpectrum **result);

/**
 * Zeta-regularized log determinant with split point `t0`.
 *
 * # Safety
 * `spectrum` must be a live handle; `zeta` writable.
 */
enum ZfStatus zf_log_det_zeta(const struct ZfSpectrum *spectrum, double t0, struct ZfZeta *zeta);

/**
 * # Safety
 * `spectrum` must be null or a handle not yet freed.
 */
void zf_spectrum_free(struct ZfSpectrum *spectrum);

/**
 * `(1/2 − χ/12) ln β`.
 *
 * # Safety
 * `value` must be writable.
 */
enum ZfStatus zf_log_partition_conformal(double beta, int64_t chi, double *value);

/**
 * `(1/2 − χ/12)(ln β − 1)`.
 *
 * # Safety
 * `value` must be writable.
 */
enum ZfStatus zf_entropy_conformal(double beta, int64_t chi, double *value);

/**
 * Model from row-major `dim × dim` matrices `G` (symmetric positive
 * definite) and `A` (with `GA` symmetric positive definite).
 *
 * # Safety
 * `g` and `a` must each hold `dim * dim` doubles; `model` must be writable.
 */
enum ZfStatus zf_model_new(size_t dim, const double *g, const double *a, struct ZfModel **model);

/**
 * Both sides of the temperature-scaling identity of the Gaussian integral.
 *
 * # Safety
 * `model` must be a live handle; `result` writable.
 */
enum ZfStatus zf_verify_classic(const struct ZfModel *model, double beta, struct ZfClassic *result);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void zf_model_free(struct ZfModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ZETAFLOW_H */
