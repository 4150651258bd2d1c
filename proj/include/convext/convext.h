#ifndef CONVEXT_CONVEXT_H
#define CONVEXT_CONVEXT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define CONVEXT_API __declspec(dllexport)
#else
#define CONVEXT_API __attribute__((visibility("default")))
#endif

typedef enum convext_status {
  CONVEXT_OK = 0,
  CONVEXT_ERR_DOMAIN = 1,
  CONVEXT_ERR_SHAPE = 2,
  CONVEXT_ERR_CONFIGURATION = 3,
  CONVEXT_ERR_PARAMETER = 4,
  CONVEXT_ERR_CONTRACT = 5,
  CONVEXT_ERR_INPUT = 6,
  CONVEXT_ERR_IO = 7,
  CONVEXT_ERR_INTERNAL = 8
} convext_status;

/* Opaque tensor-grid function. Values may be +INFINITY, never NaN. */
typedef struct convext_grid_function convext_grid_function;

/* One grid axis: count nodes from lo to hi inclusive. */
typedef struct convext_axis {
  double lo;
  double hi;
  size_t count;
} convext_axis;

/* Values overriding a problem file. has_* flags select which apply. */
typedef struct convext_overrides {
  int has_lambda;
  double lambda;
  int has_tol;
  double tol;
  int has_max_iter;
  size_t max_iter;
  int has_seed;
  uint64_t seed;
  const convext_axis* dual_axes; /* NULL or dual_dim entries */
  size_t dual_dim;
  size_t oracle_iterations; /* extremal only; 0 skips the oracle */
} convext_overrides;

CONVEXT_API const char* convext_version(void);

/* Message of the last failure on the calling thread; "" when none. */
CONVEXT_API const char* convext_last_error(void);

CONVEXT_API convext_status convext_grid_function_create(const convext_axis* axes, size_t dim,
                                                        const double* values, size_t count,
                                                        convext_grid_function** out);
CONVEXT_API convext_status convext_grid_function_from_json(const char* text,
                                                           convext_grid_function** out);
CONVEXT_API convext_status convext_grid_function_load(const char* path,
                                                      convext_grid_function** out);
/* *out is allocated by the library; release with convext_string_free. */
CONVEXT_API convext_status convext_grid_function_to_json(const convext_grid_function* f, char** out);
CONVEXT_API void convext_grid_function_free(convext_grid_function* f);
CONVEXT_API void convext_string_free(char* s);

CONVEXT_API size_t convext_grid_function_dim(const convext_grid_function* f);
CONVEXT_API size_t convext_grid_function_size(const convext_grid_function* f);
CONVEXT_API convext_status convext_grid_function_values(const convext_grid_function* f, double* out,
                                                        size_t count);
CONVEXT_API convext_status convext_grid_function_eval(const convext_grid_function* f,
                                                      const double* point, size_t dim, double* out);

CONVEXT_API convext_status convext_log_integral(const convext_grid_function* g, double* value,
                                                double* underflow_fraction);
/* dual_axes NULL: the padded slope-range lattice of f. */
CONVEXT_API convext_status convext_legendre(const convext_grid_function* f,
                                            const convext_axis* dual_axes, size_t dual_dim,
                                            convext_grid_function** out);
CONVEXT_API convext_status convext_biconjugate(const convext_grid_function* f,
                                               convext_grid_function** out);
CONVEXT_API convext_status convext_convexity(const convext_grid_function* f, size_t samples,
                                             uint64_t seed, double* worst_violation);
CONVEXT_API convext_status convext_extremal(const convext_grid_function* phi,
                                            const convext_axis* dual_axes, size_t dual_dim,
                                            convext_grid_function** E,
                                            double* feasibility_residual);
CONVEXT_API convext_status convext_extremal_oracle(const convext_grid_function* phi, size_t x0_index,
                                                   size_t iterations, double* value);

/* Commands return process exit codes: 0 success, 1 input error,
 * 2 constraint failure. overrides may be NULL. */
CONVEXT_API int convext_cmd_extend(const char* problem_path, const char* out_dir,
                                   const convext_overrides* overrides);
CONVEXT_API int convext_cmd_prekopa(const char* problem_path, const char* out_dir,
                                    const convext_overrides* overrides);
CONVEXT_API int convext_cmd_legendre(const char* function_path, const char* out_dir,
                                     const convext_overrides* overrides);
CONVEXT_API int convext_cmd_extremal(const char* function_path, const char* out_dir,
                                     const convext_overrides* overrides);
/* out_dir NULL or "": <report dir>/verify. */
CONVEXT_API int convext_cmd_verify(const char* report_path, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif
