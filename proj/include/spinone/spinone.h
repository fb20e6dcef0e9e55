#ifndef SPINONE_SPINONE_H
#define SPINONE_SPINONE_H

/* C interface of libspinone. Every call returns an s1_status; on failure the
 * message is available from s1_last_error() on the same thread until the next
 * failing call. Strings returned through char** are owned by the caller and
 * released with s1_string_free. */

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define S1_API __declspec(dllexport)
#else
#define S1_API __attribute__((visibility("default")))
#endif

typedef enum s1_status {
  S1_OK = 0,
  S1_USAGE = 1,
  S1_SIZE = 2,
  S1_DOMAIN = 3,
  S1_CONVERGENCE = 4,
  S1_IO = 5,
  S1_NOT_FOUND = 6,
  S1_BOUNDARY_PEAK = 7,
  S1_INSUFFICIENT_DATA = 8,
  S1_TOLERANCE = 9,
  S1_INTERNAL = 10
} s1_status;

/* Ground state: a dense ED vector or an MPS. Immutable once created. */
typedef struct s1_state s1_state;

/* Receives one progress line per computed point. */
typedef void (*s1_log_fn)(const char* line, void* user);

S1_API const char* s1_version(void);
S1_API const char* s1_last_error(void);
S1_API const char* s1_status_name(s1_status status);
S1_API void s1_string_free(char* text);

/* Lowest state in the total-Sz sector `sector`. energy may be NULL. */
S1_API s1_status s1_ground_state_ed(int L, double lambda, double D, int sector, s1_state** out, double* energy);

/* config_json holds DMRG settings (chi_max, n_sweeps, energy_tol, seed,
 * target_sz, ...); NULL or "" keeps the defaults. warm may be NULL or an MPS of
 * the same length. energy and max_discarded_weight may be NULL. */
S1_API s1_status s1_ground_state_dmrg(int L, double lambda, double D, const char* config_json, const s1_state* warm,
                                      s1_state** out, double* energy, double* max_discarded_weight);

S1_API void s1_state_free(s1_state* state);
S1_API s1_status s1_state_length(const s1_state* state, int* L);
/* 1 for an MPS, 0 for a dense vector. */
S1_API s1_status s1_state_is_mps(const s1_state* state, int* is_mps);

S1_API s1_status s1_fidelity(const s1_state* a, const s1_state* b, double* out);
S1_API s1_status s1_susceptibility(double fidelity, int L, double delta, double* out);
/* Entanglement entropy in bits across bond `cut` (1 <= cut < L); cut <= 0
 * selects the half-chain bond L/2. */
S1_API s1_status s1_entropy(const s1_state* state, int cut, double* bits);

/* MPS checkpoints; saving a dense state is a usage error. */
S1_API s1_status s1_checkpoint_save(const s1_state* state, const char* path, const char* config_json,
                                    unsigned long long seed);
S1_API s1_status s1_checkpoint_load(const char* path, s1_state** out);

/* Runs a sweep. config_path may be NULL; overrides_json (may be NULL) is a
 * JSON object applied on top of the file. summary_json may be NULL. Returns
 * S1_CONVERGENCE if any point became an error row. */
S1_API s1_status s1_sweep(const char* config_path, const char* overrides_json, s1_log_fn log, void* user,
                          char** summary_json);
/* Continues the last run recorded in the manifest of store_dir. */
S1_API s1_status s1_sweep_resume(const char* store_dir, const char* overrides_json, s1_log_fn log, void* user,
                                 char** summary_json);

/* Fit report (JSON) of a store. options_json keys: transition, observable,
 * min_L, window_lo, window_hi, lambda, delta, solver. */
S1_API s1_status s1_fit(const char* store_dir, const char* options_json, char** report_json);

/* ED vs DMRG and closed-form checks. options_json keys: L_max, lambda, D,
 * chi_max, delta, energy_tol, observable_tol, closed_form_tol. The table is
 * filled even when a check fails, in which case S1_TOLERANCE is returned. */
S1_API s1_status s1_oracle_check(const char* options_json, char** table, int* failures);

/* Store export as "csv" or "json" text. */
S1_API s1_status s1_export(const char* store_dir, const char* format, char** text);

#ifdef __cplusplus
}
#endif

#endif
