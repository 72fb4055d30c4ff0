#ifndef PPDE_H
#define PPDE_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum PpdeDirection {
  // sup-convolution, approximates from above
  PPDE_DIRECTION_SUB = 0,
  // inf-convolution, approximates from below
  PPDE_DIRECTION_SUPER = 1,
} PpdeDirection;

typedef enum PpdeEngine {
  PPDE_ENGINE_LATTICE = 0,
  PPDE_ENGINE_MONTE_CARLO = 1,
} PpdeEngine;

typedef enum PpdeMode {
  PPDE_MODE_SUP = 0,
  PPDE_MODE_INF = 1,
} PpdeMode;

typedef enum PpdePathKind {
  // continuous, linear between knots
  PPDE_PATH_KIND_LINEAR = 0,
  // right-continuous, constant between knots
  PPDE_PATH_KIND_STEP = 1,
} PpdePathKind;

typedef enum PpdeStatus {
  PPDE_STATUS_OK = 0,
  PPDE_STATUS_NULL_POINTER = 1,
  PPDE_STATUS_INVALID_ARGUMENT = 2,
  PPDE_STATUS_DOMAIN = 3,
  PPDE_STATUS_PRECISION = 4,
  PPDE_STATUS_CONFIGURATION = 5,
  PPDE_STATUS_IO = 6,
  PPDE_STATUS_PARSE = 7,
  PPDE_STATUS_PANIC = 8,
} PpdeStatus;

// Experiment configuration.
typedef struct PpdeConfig PpdeConfig;

// Path functional from the built-in catalog.
typedef struct PpdeFunctional PpdeFunctional;

// Controlled lattice for sublinear expectations.
typedef struct PpdeLattice PpdeLattice;

// Piecewise path.
typedef struct PpdePath PpdePath;

// Outcome of one regularization search.
typedef struct PpdeRegularization {
  double value;
  // certified bound on the distance to the true optimum
  double gap;
  double t_hat;
  bool certified;
  size_t evaluations;
} PpdeRegularization;

typedef struct PpdeValue {
  double value;
  // 0 for the lattice engine
  double std_error;
  // true when the estimate only bounds the supremum from below
  bool lower_bound;
} PpdeValue;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version, a static NUL-terminated string.
const char *ppde_version(void);

// Message of the last failed call on this thread, or NULL. Valid until the
// next `ppde_*` call on the same thread.
const char *ppde_last_error(void);

// Frees a string returned by the library.
//
// # Safety
// `s` must come from this library or be NULL.
void ppde_string_free(char *s);

// Builds a path in `R^dim` from `n_knots` increasing times and
// `n_knots * dim` values, row-major by knot.
//
// # Safety
// Pointers must be valid for the given lengths; `out` must be writable.
enum PpdeStatus ppde_path_new(enum PpdePathKind kind,
                              size_t dim,
                              const double *knots,
                              size_t n_knots,
                              const double *values,
                              struct PpdePath **out_path);

// # Safety
// `path` must come from `ppde_path_new` or be NULL.
void ppde_path_free(struct PpdePath *path);

// # Safety
// `path` must be a valid handle or NULL.
size_t ppde_path_dim(const struct PpdePath *path);

// Writes `ω(t)` into `out`, which holds `len >= dim` doubles.
//
// # Safety
// `out` must be writable for `len` doubles.
enum PpdeStatus ppde_path_eval(const struct PpdePath *path,
                               double t,
                               double *out_values,
                               size_t len);

// `d_p((t, a), (s, b))` on `[0, horizon]`.
//
// # Safety
// Handles must be valid; `out` must be writable.
enum PpdeStatus ppde_distance(double t,
                              const struct PpdePath *a,
                              double s,
                              const struct PpdePath *b,
                              double p,
                              double horizon,
                              double *out_distance);

// Looks up `name` in the functional catalog.
//
// # Safety
// `name` must be a NUL-terminated string; `out` must be writable.
enum PpdeStatus ppde_functional_new(const char *name,
                                    double horizon,
                                    size_t dim,
                                    struct PpdeFunctional **out_functional);

// # Safety
// `f` must come from `ppde_functional_new` or be NULL.
void ppde_functional_free(struct PpdeFunctional *f);

// `u(t, ω)`.
//
// # Safety
// Handles must be valid; `out` must be writable.
enum PpdeStatus ppde_functional_eval(const struct PpdeFunctional *f,
                                     double t,
                                     const struct PpdePath *path,
                                     double *out_value);

// Sup- or inf-convolution of `f` with weight `n` at `(s, eta)`, using the
// default search settings.
//
// # Safety
// Handles must be valid; `out` must be writable.
enum PpdeStatus ppde_regularize(const struct PpdeFunctional *f,
                                double n,
                                double s,
                                const struct PpdePath *eta,
                                enum PpdeDirection direction,
                                double p,
                                double horizon,
                                struct PpdeRegularization *out_result);

// Lattice with drifts in `[-bound, bound]` and volatilities in `[0, bound]`.
//
// # Safety
// `out` must be writable.
enum PpdeStatus ppde_lattice_new(double bound,
                                 double horizon,
                                 size_t steps,
                                 size_t dim,
                                 size_t drift_points,
                                 size_t vol_points,
                                 struct PpdeLattice **out_lattice);

// # Safety
// `l` must come from `ppde_lattice_new` or be NULL.
void ppde_lattice_free(struct PpdeLattice *l);

// `sup_P E^P[u(T, B)]` (or the infimum) over the lattice strategies.
//
// # Safety
// Handles must be valid; `out` must be writable.
enum PpdeStatus ppde_sup_expectation(const struct PpdeLattice *lattice,
                                     const struct PpdeFunctional *f,
                                     enum PpdeMode mode,
                                     double *out_value);

// Value of a benchmark control problem started at `(t, x0)`, with default
// resolution.
//
// # Safety
// `name` must be a NUL-terminated string; `out` must be writable.
enum PpdeStatus ppde_control_value(const char *name,
                                   double horizon,
                                   double t,
                                   double x0,
                                   enum PpdeEngine engine,
                                   uint64_t seed,
                                   struct PpdeValue *out_value);

// Default experiment configuration.
//
// # Safety
// `out` must be writable.
enum PpdeStatus ppde_config_default(struct PpdeConfig **out_config);

// Parses and validates a TOML configuration. Diagnostics (with line numbers
// when known) go to `ppde_last_error`, one per line.
//
// # Safety
// `toml` must be a NUL-terminated string; `out` must be writable.
enum PpdeStatus ppde_config_parse(const char *toml, struct PpdeConfig **out_config);

// # Safety
// `c` must come from this library or be NULL.
void ppde_config_free(struct PpdeConfig *c);

// Runs `suite` (NULL keeps the configured one; `"all"` runs every suite) on
// `jobs` threads (0 for all cores). The JSON summary is returned through
// `out_json` and must be released with `ppde_string_free`; `out_passed` may
// be NULL. A suite that fails its checks still returns `PPDE_STATUS_OK`.
//
// # Safety
// `config` must be valid; `suite` NULL or NUL-terminated; `out_json` writable.
enum PpdeStatus ppde_run(const struct PpdeConfig *config,
                         const char *suite,
                         size_t jobs,
                         char **out_json,
                         bool *out_passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PPDE_H */
