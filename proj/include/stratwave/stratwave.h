#ifndef STRATWAVE_H
#define STRATWAVE_H

/* C interface to the stratwave library. All functions are thread-safe; the
 * error text returned by sw_last_error() is per thread. */

#include <stddef.h>
#include <stdint.h>

#if defined(STRATWAVE_BUILDING_LIBRARY)
#define SW_API __attribute__((visibility("default")))
#else
#define SW_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes (0 = success). Values match the library's internal error categories. */
typedef enum sw_status {
  SW_OK = 0,
  SW_ERR_DOMAIN = 1,
  SW_ERR_NON_MONOTONE = 2,
  SW_ERR_BRACKET = 3,
  SW_ERR_COLLAPSE = 4,
  SW_ERR_SIZE = 5,
  SW_ERR_TRACE = 6,
  SW_ERR_WINDOW = 7,
  SW_ERR_ADMISSIBILITY = 8,
  SW_ERR_CONFIG = 9,
  SW_ERR_SOLVER = 10,
  SW_ERR_WRONG_BOUNDARY = 11,
  SW_ERR_IO = 12,
  SW_ERR_NULL_ARGUMENT = 98,
  SW_ERR_INTERNAL = 99
} sw_status;

/* A loaded flow state with its profiles, Bernoulli maps and gravity references. */
typedef struct sw_session sw_session;

SW_API const char* sw_version(void);

/* Message of the last failed call on this thread ("" when none). */
SW_API const char* sw_last_error(void);

/* Runs a CLI command. seed < 0 keeps the config's seeds. Returns the process exit
 * code: 0 success, 2 config validation, 3 numerical failure. */
SW_API int sw_run_command(const char* command, const char* config_path, const char* out_dir, int64_t seed,
                          int threads);

/* Builds a session from a JSON config text (same schema as the CLI). */
SW_API sw_status sw_session_create(const char* config_json, sw_session** out);
SW_API void sw_session_free(sw_session* session);

SW_API sw_status sw_session_dims(const sw_session* session, int* nx, int* ns1, int* ns2);
/* The energy functional H at the session state. */
SW_API sw_status sw_session_energy(const sw_session* session, double* out);
/* Largest max-norm over the PDE residual report. */
SW_API sw_status sw_session_residual(const sw_session* session, double* out);
/* Max over n_trials random unit admissible perturbations of |dH|. */
SW_API sw_status sw_session_audit(const sw_session* session, uint64_t seed, int n_trials, int include_surfaces,
                                  double* max_normalized);
/* Smallest eigenvalue of the restricted stability Hessian; verdict receives
 * 0 stable, 1 indefinite, 2 inconclusive. */
SW_API sw_status sw_session_stability(const sw_session* session, int threads, double* lambda_min, int* verdict);
/* Copies the stream function of layer 1 or 2 (nx*ns values, row-major) into buffer. */
SW_API sw_status sw_session_field(const sw_session* session, int layer, double* buffer, size_t capacity,
                                  size_t* written);

#ifdef __cplusplus
}
#endif

#endif
