#ifndef CRL_H
#define CRL_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define CRL_API __declspec(dllexport)
#else
#define CRL_API __attribute__((visibility("default")))
#endif

typedef enum crl_status {
    CRL_OK = 0,
    CRL_ERR_CONFIG = 2,
    CRL_ERR_NUMERIC = 3,
    CRL_ERR_DOMAIN = 4,
    CRL_ERR_UNSUPPORTED = 5,
    CRL_ERR_MISMATCH = 6,
    CRL_ERR_INTERNAL = 7,
    CRL_ERR_ARG = 8
} crl_status;

typedef struct crl_config crl_config;

/* Load a JSON or TOML (by .toml extension) config file. */
CRL_API crl_status crl_config_load(const char* path, crl_config** out);
/* Parse config text; is_toml selects the TOML reader. */
CRL_API crl_status crl_config_parse(const char* text, int is_toml, crl_config** out);
CRL_API void crl_config_free(crl_config* cfg);

/* Override a numeric knob: eps_mech, eq_tol, stability_eps, grid_step, g_max_factor,
   continuum_classes, or the probe seed ("seed"). */
CRL_API crl_status crl_set_knob(crl_config* cfg, const char* name, double value);

/* Each producer returns a heap string owned by the caller; release with crl_string_free. */
CRL_API crl_status crl_solve(const crl_config* cfg, char** json_out);
/* designer: none | side | restriction | combined | all (NULL means the config's list). */
CRL_API crl_status crl_design(const crl_config* cfg, const char* designer, int debug_cases, char** json_out);
CRL_API crl_status crl_dynamics(const crl_config* cfg, const char* designer, char** json_out, char** csv_out);
CRL_API crl_status crl_sweep(const crl_config* cfg, int threads, char** csv_out);
CRL_API crl_status crl_poa_probe(const crl_config* cfg, const char* designer, int threads, char** json_out);
CRL_API crl_status crl_dynamic_model(const crl_config* cfg, char** json_out, char** csv_out);

/* Sweep output path named in the config, or empty. */
CRL_API crl_status crl_sweep_output(const crl_config* cfg, char** path_out);

/* Worker count from CRL_THREADS or the hardware. */
CRL_API int crl_default_threads(void);

/* JSON description of the last failure on the calling thread:
   {"error": {"kind", "message", "key", "line"}}. Valid until the next call on this thread. */
CRL_API const char* crl_last_error(void);

CRL_API void crl_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
