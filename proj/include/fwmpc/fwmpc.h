#ifndef FWMPC_FWMPC_H
#define FWMPC_FWMPC_H

/*
 * C interface to the guidance library. Every handle is opaque and owned by
 * the caller once returned; free it with the matching *_free function.
 * Functions return FWMPC_OK or a negative status; fwmpc_last_error() holds
 * the message of the most recent failure on the calling thread.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(FWMPC_BUILDING_LIBRARY)
#    define FWMPC_API __declspec(dllexport)
#  else
#    define FWMPC_API __declspec(dllimport)
#  endif
#else
#  define FWMPC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fwmpc_status {
    FWMPC_OK = 0,
    FWMPC_ERR_ARGUMENT = -1,      /* null handle, bad list, out-of-range value */
    FWMPC_ERR_CONFIG = -2,        /* configuration unreadable or invalid */
    FWMPC_ERR_IO = -3,            /* artifact or file access failed */
    FWMPC_ERR_DOMAIN = -4,        /* value outside the model domain */
    FWMPC_ERR_INVALID_STATE = -5, /* aircraft state where the dynamics are undefined */
    FWMPC_ERR_SOLVER = -6,        /* numerical routine failed */
    FWMPC_ERR_EXCITATION = -7,    /* identification data carry no information */
    FWMPC_ERR_RUN_INCOMPLETE = -8,/* simulation timed out or diverged; artifacts written */
    FWMPC_ERR_INTERNAL = -99
} fwmpc_status;

typedef struct fwmpc_config fwmpc_config;
typedef struct fwmpc_report fwmpc_report;
typedef struct fwmpc_controller fwmpc_controller;
typedef struct fwmpc_path fwmpc_path;

FWMPC_API const char* fwmpc_version(void);
FWMPC_API const char* fwmpc_last_error(void);
FWMPC_API const char* fwmpc_status_name(int status);

/* configuration */
FWMPC_API int fwmpc_config_default(fwmpc_config** out);
FWMPC_API int fwmpc_config_load(const char* path, fwmpc_config** out);
FWMPC_API int fwmpc_config_parse(const char* yaml_text, fwmpc_config** out);
FWMPC_API void fwmpc_config_free(fwmpc_config* cfg);

/* Overrides. Scenario and maneuver seed together. */
FWMPC_API int fwmpc_config_set_seed(fwmpc_config* cfg, uint64_t seed);
FWMPC_API int fwmpc_config_set_laps(fwmpc_config* cfg, int laps);
/* Comma-separated lists. The first entry also becomes the simulate target. */
FWMPC_API int fwmpc_config_set_paths(fwmpc_config* cfg, const char* list);
FWMPC_API int fwmpc_config_set_controllers(fwmpc_config* cfg, const char* list);
FWMPC_API int fwmpc_config_set_horizons(fwmpc_config* cfg, const int* horizons, size_t count);
/* Measurement-noise preset on the identification maneuvers. */
FWMPC_API int fwmpc_config_set_sysid_noise(fwmpc_config* cfg, int enabled);

FWMPC_API int fwmpc_config_validate(const fwmpc_config* cfg);
/* 16 hex digits plus terminator; buffer must hold 17 bytes. */
FWMPC_API int fwmpc_config_hash(const fwmpc_config* cfg, char* buffer, size_t size);
/* Canonical YAML; free with fwmpc_string_free. */
FWMPC_API int fwmpc_config_dump(const fwmpc_config* cfg, char** out);
FWMPC_API void fwmpc_string_free(char* s);

/* batch commands; the report is returned whenever artifacts were written */
FWMPC_API int fwmpc_run_simulate(const fwmpc_config* cfg, const char* out_dir, fwmpc_report** out);
FWMPC_API int fwmpc_run_compare(const fwmpc_config* cfg, const char* out_dir, fwmpc_report** out);
FWMPC_API int fwmpc_run_sysid(const fwmpc_config* cfg, const char* out_dir, fwmpc_report** out);
FWMPC_API int fwmpc_run_horizon_sweep(const fwmpc_config* cfg, const char* out_dir, fwmpc_report** out);

FWMPC_API const char* fwmpc_report_summary(const fwmpc_report* report);
FWMPC_API size_t fwmpc_report_artifact_count(const fwmpc_report* report);
FWMPC_API const char* fwmpc_report_artifact(const fwmpc_report* report, size_t index);
FWMPC_API void fwmpc_report_free(fwmpc_report* report);

/* path presets */
FWMPC_API int fwmpc_path_create(const char* name, fwmpc_path** out);
FWMPC_API void fwmpc_path_free(fwmpc_path* path);
FWMPC_API double fwmpc_path_length(const fwmpc_path* path);
/* position[3] NED at arc length psi */
FWMPC_API int fwmpc_path_position(const fwmpc_path* path, double psi, double* position);
FWMPC_API int fwmpc_path_closest(const fwmpc_path* path, const double* position, double* psi);

/*
 * Guidance controller built from the configuration's controller section on
 * the named path. state[9] = n, e, d, phi, theta, chi_a, V_a, gamma_a,
 * delta_T; wind[3] NED; command[3] = phi_c, theta_c, delta_Tc.
 */
FWMPC_API int fwmpc_controller_create(const fwmpc_config* cfg, const char* path_name, const char* mode,
                                      fwmpc_controller** out);
FWMPC_API void fwmpc_controller_free(fwmpc_controller* ctrl);
FWMPC_API int fwmpc_controller_query(fwmpc_controller* ctrl, const double* state, const double* wind,
                                     double* command, int* degraded);
FWMPC_API int fwmpc_controller_reset(fwmpc_controller* ctrl);

/* one RK4 step of the configured model */
FWMPC_API int fwmpc_model_step(const fwmpc_config* cfg, const double* state, const double* command,
                               const double* wind, double dt, double* next_state);

#ifdef __cplusplus
}
#endif

#endif
