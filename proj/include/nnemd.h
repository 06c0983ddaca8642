/* nn-emd C API: train multi-layer perceptrons where the first-layer products
 * over contributed datasets are computed under inner-product functional
 * encryption. The library runs three roles (key authority, client pool,
 * training server) either in one process or over TCP.
 *
 * All functions return NNEMD_OK (0) on success; on failure they return a
 * negative status and nnemd_last_error() describes the problem for the
 * calling thread. Out-parameters are untouched on failure. Every handle is
 * opaque and must be released with its matching _free function.
 */

#ifndef NNEMD_H
#define NNEMD_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define NNEMD_API __declspec(dllexport)
#else
#define NNEMD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nnemd_status {
    NNEMD_OK = 0,
    NNEMD_ERR_INVALID_ARGUMENT = -1,
    NNEMD_ERR_CONFIG = -2,
    NNEMD_ERR_IO = -3,
    NNEMD_ERR_CRYPTO = -4,
    NNEMD_ERR_NET = -5,
    NNEMD_ERR_REFUSED = -6, /* privacy guard or weights filter refused */
    NNEMD_ERR_INTERNAL = -7
} nnemd_status;

typedef struct nnemd_config nnemd_config;
typedef struct nnemd_run_report nnemd_run_report;

NNEMD_API const char* nnemd_version(void);

/* Thread-local message for the most recent failure. Never NULL. */
NNEMD_API const char* nnemd_last_error(void);

/* --- configuration ------------------------------------------------------ */

/* Parses a flat `key = value` config file. */
NNEMD_API nnemd_status nnemd_config_load(const char* path, nnemd_config** out);
NNEMD_API nnemd_status nnemd_config_new(nnemd_config** out);
/* Applies one key = value override (same keys as the config file). */
NNEMD_API nnemd_status nnemd_config_set(nnemd_config* cfg, const char* key, const char* value);
/* Copies the raw value of a key into buf (NUL-terminated, truncating). */
NNEMD_API nnemd_status nnemd_config_get(const nnemd_config* cfg, const char* key, char* buf,
                                        size_t buf_len);
NNEMD_API void nnemd_config_free(nnemd_config* cfg);

/* --- runs ---------------------------------------------------------------- */

/* Runs authority, client pool, and training server in-process; writes the
 * checkpoint/metrics files named by the config. The report is optional. */
NNEMD_API nnemd_status nnemd_run(const nnemd_config* cfg, nnemd_run_report** out_report);

/* Runs one networked role (config key `role` = tpa | server | client) to
 * completion. Returns the role's exit code through out_exit_code. */
NNEMD_API nnemd_status nnemd_run_role(const nnemd_config* cfg, int* out_exit_code);

/* Per-mini-batch timing across the configured hidden-layer depth sweep.
 * Returns the formatted report; free with nnemd_string_free. */
NNEMD_API nnemd_status nnemd_bench(const nnemd_config* cfg, char** out_report_text);

NNEMD_API void nnemd_string_free(char* s);

/* --- run report ---------------------------------------------------------- */

NNEMD_API double nnemd_report_final_loss(const nnemd_run_report* r);
/* Test-set accuracy in [0,1]; negative when no test set was configured. */
NNEMD_API double nnemd_report_accuracy(const nnemd_run_report* r);
NNEMD_API uint64_t nnemd_report_steps(const nnemd_run_report* r);
NNEMD_API double nnemd_report_total_ms(const nnemd_run_report* r);
NNEMD_API void nnemd_run_report_free(nnemd_run_report* r);

#ifdef __cplusplus
}
#endif

#endif /* NNEMD_H */
