#ifndef GEODSIG_H
#define GEODSIG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Outcome of a call. Values are stable across releases.
typedef enum GeodsigStatus {
  GEODSIG_STATUS_OK = 0,
  GEODSIG_STATUS_NULL_POINTER = 1,
  GEODSIG_STATUS_INVALID_ARGUMENT = 2,
  GEODSIG_STATUS_IO = 3,
  // Manifest, CSV or invariant problems in the input files.
  GEODSIG_STATUS_MALFORMED_INPUT = 4,
  // The dump lacks a head, labels or a requested column.
  GEODSIG_STATUS_MISSING_DATA = 5,
  GEODSIG_STATUS_SHAPE_MISMATCH = 6,
  // Degenerate data, non-finite values or solver failure.
  GEODSIG_STATUS_NUMERICAL = 7,
  // The library panicked; the handle arguments should not be reused.
  GEODSIG_STATUS_PANIC = 8,
} GeodsigStatus;

typedef enum GeodsigNoiseKind {
  GEODSIG_NOISE_KIND_GAUSSIAN = 0,
  GEODSIG_NOISE_KIND_UNIFORM = 1,
  GEODSIG_NOISE_KIND_DROPOUT = 2,
  GEODSIG_NOISE_KIND_SALT_PEPPER = 3,
} GeodsigNoiseKind;

// An opened activation dump.
typedef struct GeodsigDump GeodsigDump;

// Dense matrix of f64 values.
typedef struct GeodsigMatrix GeodsigMatrix;

// A computed signature, with model metadata when it came from a dump.
typedef struct GeodsigSignature GeodsigSignature;

// Scalar summary of a signature.
typedef struct GeodsigSummary {
  double total_compression;
  double input_effdim;
  double output_effdim;
  double bottleneck_effdim;
  double max_effdim;
  size_t depth;
  size_t sample_count;
} GeodsigSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *geodsig_version(void);

// Kind of the last error on this thread (for example "TooFewLayers"), or
// NULL after a successful call. Valid until the next call on this thread.
const char *geodsig_last_error_kind(void);

// Message of the last error on this thread, or NULL.
const char *geodsig_last_error_message(void);

// Release a string returned by the library. NULL is ignored.
void geodsig_string_free(char *s);

// Copy a row-major `rows x cols` buffer into a new matrix.
enum GeodsigStatus geodsig_matrix_new(size_t rows,
                                      size_t cols,
                                      const double *row_major,
                                      struct GeodsigMatrix **out);

void geodsig_matrix_free(struct GeodsigMatrix *matrix);

enum GeodsigStatus geodsig_matrix_shape(const struct GeodsigMatrix *matrix,
                                        size_t *rows,
                                        size_t *cols);

// Copy the matrix into `out` in row-major order. `len` must equal rows * cols.
enum GeodsigStatus geodsig_matrix_read(const struct GeodsigMatrix *matrix, double *out, size_t len);

// Effective dimension of the matrix's rows. `degenerate` may be NULL.
enum GeodsigStatus geodsig_effdim(const struct GeodsigMatrix *matrix,
                                  double *out,
                                  bool *degenerate);

// `ln(d_last / d_first)`.
enum GeodsigStatus geodsig_total_compression(double d_first, double d_last, double *out);

enum GeodsigStatus geodsig_pearson(const double *x, const double *y, size_t n, double *out);

// Two-sided p-value of a Pearson correlation `r` over `n` pairs.
enum GeodsigStatus geodsig_pearson_pvalue(double r, size_t n, double *out);

// Correlation of `g` and `a` controlling for `p`.
enum GeodsigStatus geodsig_partial_correlation(const double *g,
                                               const double *a,
                                               const double *p,
                                               size_t n,
                                               double *out);

// Perturbed copy of `matrix`. `kind` is a `GeodsigNoiseKind` value.
// Deterministic in `seed`.
enum GeodsigStatus geodsig_perturb(const struct GeodsigMatrix *matrix,
                                   int32_t kind,
                                   double level,
                                   uint64_t seed,
                                   struct GeodsigMatrix **out);

// Reconstruction of `matrix` from the fewest principal components reaching
// `threshold` of the variance. `components_kept` may be NULL.
enum GeodsigStatus geodsig_pca_project(const struct GeodsigMatrix *matrix,
                                       double threshold,
                                       struct GeodsigMatrix **out,
                                       size_t *components_kept);

// Open a dump directory and validate its manifest.
enum GeodsigStatus geodsig_dump_open(const char *dir, struct GeodsigDump **out);

void geodsig_dump_free(struct GeodsigDump *dump);

enum GeodsigStatus geodsig_dump_shape(const struct GeodsigDump *dump,
                                      size_t *depth,
                                      size_t *sample_count);

// Load layer `index`. A `sample_limit` of 0 loads every row.
enum GeodsigStatus geodsig_dump_load_layer(const struct GeodsigDump *dump,
                                           size_t index,
                                           size_t sample_limit,
                                           uint64_t seed,
                                           struct GeodsigMatrix **out);

// Signature of a dump. A `sample_limit` of 0 uses every row.
enum GeodsigStatus geodsig_dump_signature(const struct GeodsigDump *dump,
                                          size_t sample_limit,
                                          uint64_t seed,
                                          struct GeodsigSignature **out);

// Signature of `count` layers given input first.
enum GeodsigStatus geodsig_signature_from_layers(const struct GeodsigMatrix *const *layers,
                                                 size_t count,
                                                 struct GeodsigSignature **out);

void geodsig_signature_free(struct GeodsigSignature *signature);

enum GeodsigStatus geodsig_signature_summary(const struct GeodsigSignature *signature,
                                             struct GeodsigSummary *out);

// Copy the per-layer effective dimensions into `out`, which must hold
// exactly `depth` values.
enum GeodsigStatus geodsig_signature_layer_effdims(const struct GeodsigSignature *signature,
                                                   double *out,
                                                   size_t len);

// JSON rendering, the same document the command-line tool writes. Release
// with [`geodsig_string_free`].
enum GeodsigStatus geodsig_signature_to_json(const struct GeodsigSignature *signature, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GEODSIG_H */
