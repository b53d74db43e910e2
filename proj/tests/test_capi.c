/* Exercises the shared library through its C header only. */

#include "fwmpc/fwmpc.h"

#include <math.h>
#include <stdio.h>
#include <string.h>

static int failures = 0;

#define EXPECT(cond)                                                   \
    do {                                                               \
        if (!(cond)) {                                                 \
            fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
            ++failures;                                                \
        }                                                              \
    } while (0)

static void test_config(void)
{
    fwmpc_config* cfg = NULL;
    char hash[17];
    char other[17];
    char* text = NULL;
    fwmpc_config* parsed = NULL;

    EXPECT(fwmpc_config_default(&cfg) == FWMPC_OK);
    EXPECT(fwmpc_config_validate(cfg) == FWMPC_OK);
    EXPECT(fwmpc_config_hash(cfg, hash, sizeof hash) == FWMPC_OK);
    EXPECT(strlen(hash) == 16);
    EXPECT(fwmpc_config_hash(cfg, hash, 8) == FWMPC_ERR_ARGUMENT);

    EXPECT(fwmpc_config_dump(cfg, &text) == FWMPC_OK);
    EXPECT(fwmpc_config_parse(text, &parsed) == FWMPC_OK);
    EXPECT(fwmpc_config_hash(parsed, other, sizeof other) == FWMPC_OK);
    EXPECT(strcmp(hash, other) == 0);
    fwmpc_string_free(text);
    fwmpc_config_free(parsed);

    EXPECT(fwmpc_config_set_seed(cfg, 7) == FWMPC_OK);
    EXPECT(fwmpc_config_hash(cfg, other, sizeof other) == FWMPC_OK);
    EXPECT(strcmp(hash, other) != 0);

    EXPECT(fwmpc_config_set_paths(cfg, "path2, path4") == FWMPC_OK);
    EXPECT(fwmpc_config_set_paths(cfg, "path2,nowhere") == FWMPC_ERR_CONFIG);
    EXPECT(strstr(fwmpc_last_error(), "path1, path2, path3, path4") != NULL);
    EXPECT(fwmpc_config_set_controllers(cfg, "mpcc,lookahead") == FWMPC_OK);
    EXPECT(fwmpc_config_set_controllers(cfg, "pid") == FWMPC_ERR_CONFIG);
    EXPECT(fwmpc_config_set_laps(cfg, 0) == FWMPC_ERR_CONFIG);
    {
        const int horizons[] = {10, 20};
        EXPECT(fwmpc_config_set_horizons(cfg, horizons, 2) == FWMPC_OK);
        EXPECT(fwmpc_config_set_horizons(cfg, horizons, 0) == FWMPC_ERR_CONFIG);
    }
    EXPECT(fwmpc_config_set_sysid_noise(cfg, 1) == FWMPC_OK);
    EXPECT(fwmpc_config_validate(cfg) == FWMPC_OK);
    fwmpc_config_free(cfg);

    EXPECT(fwmpc_config_parse("controller:\n  N: 40\n", &cfg) == FWMPC_OK);
    EXPECT(fwmpc_config_validate(cfg) == FWMPC_ERR_CONFIG);
    EXPECT(strstr(fwmpc_last_error(), "controller.horizon") != NULL);
    fwmpc_config_free(cfg);

    cfg = NULL;
    EXPECT(fwmpc_config_load("/nonexistent/config.yaml", &cfg) == FWMPC_ERR_CONFIG);
    EXPECT(cfg == NULL);
    EXPECT(fwmpc_config_default(NULL) == FWMPC_ERR_ARGUMENT);
}

static void test_model_and_path(void)
{
    fwmpc_config* cfg = NULL;
    fwmpc_path* path = NULL;
    double state[9] = {0, 0, -100, 0, 0.05, 0, 22, 0, 0.3};
    double command[3] = {0.2, 0.05, 0.4};
    double next[9];
    double bad[9] = {0, 0, -100, 0, 0, 0, 0, 0, 0};
    double pos[3];
    double psi = -1.0;

    EXPECT(fwmpc_config_default(&cfg) == FWMPC_OK);
    EXPECT(fwmpc_model_step(cfg, state, command, NULL, 0.01, next) == FWMPC_OK);
    EXPECT(next[0] > 0.2 && next[0] < 0.25);
    EXPECT(next[3] > 0.0);
    EXPECT(fwmpc_model_step(cfg, bad, command, NULL, 0.01, next) == FWMPC_ERR_INVALID_STATE);
    EXPECT(fwmpc_model_step(cfg, state, command, NULL, -1.0, next) == FWMPC_ERR_ARGUMENT);

    EXPECT(fwmpc_path_create("path1", &path) == FWMPC_OK);
    EXPECT(fwmpc_path_length(path) > 1000.0);
    EXPECT(fwmpc_path_position(path, 300.0, pos) == FWMPC_OK);
    EXPECT(fwmpc_path_closest(path, pos, &psi) == FWMPC_OK);
    EXPECT(fabs(psi - 300.0) < 0.01);
    fwmpc_path_free(path);
    path = NULL;
    EXPECT(fwmpc_path_create("nowhere", &path) == FWMPC_ERR_ARGUMENT);
    EXPECT(path == NULL);
    fwmpc_config_free(cfg);
}

static void test_controller(void)
{
    fwmpc_config* cfg = NULL;
    fwmpc_controller* ctrl = NULL;
    fwmpc_path* path = NULL;
    double start[3];
    double state[9] = {0, 0, 0, 0, 0.05, 0, 22, 0, 0.3};
    double command[3] = {0, 0, 0};
    int degraded = -1;
    int mode;
    const char* modes[] = {"cr-mpc", "mpcc", "lookahead"};

    EXPECT(fwmpc_config_default(&cfg) == FWMPC_OK);
    EXPECT(fwmpc_path_create("path1", &path) == FWMPC_OK);
    EXPECT(fwmpc_path_position(path, 0.0, start) == FWMPC_OK);
    state[0] = start[0];
    state[1] = start[1];
    state[2] = start[2];
    for (mode = 0; mode < 3; ++mode) {
        EXPECT(fwmpc_controller_create(cfg, "path1", modes[mode], &ctrl) == FWMPC_OK);
        EXPECT(fwmpc_controller_query(ctrl, state, NULL, command, &degraded) == FWMPC_OK);
        EXPECT(degraded == 0);
        EXPECT(command[2] >= 0.0 && command[2] <= 1.0);
        EXPECT(fabs(command[0]) <= 0.7854);
        EXPECT(fwmpc_controller_reset(ctrl) == FWMPC_OK);
        fwmpc_controller_free(ctrl);
        ctrl = NULL;
    }
    EXPECT(fwmpc_controller_create(cfg, "path1", "pid", &ctrl) == FWMPC_ERR_ARGUMENT);
    EXPECT(ctrl == NULL);
    fwmpc_path_free(path);
    fwmpc_config_free(cfg);
}

static void test_runs(const char* out_dir)
{
    fwmpc_config* cfg = NULL;
    fwmpc_report* report = NULL;

    EXPECT(fwmpc_config_parse("controller:\n  N: 40\n", &cfg) == FWMPC_OK);
    EXPECT(fwmpc_run_simulate(cfg, out_dir, &report) == FWMPC_ERR_CONFIG);
    EXPECT(report == NULL);
    fwmpc_config_free(cfg);

    EXPECT(fwmpc_config_parse("scenario: {laps: 1}\n", &cfg) == FWMPC_OK);
    EXPECT(fwmpc_run_sysid(cfg, out_dir, &report) == FWMPC_ERR_CONFIG);
    EXPECT(strstr(fwmpc_last_error(), "maneuver") != NULL);
    fwmpc_config_free(cfg);

    EXPECT(fwmpc_config_parse("scenario: {path: path3, laps: 1, timeout: 5}\n"
                              "controller: {mode: lookahead}\n",
                              &cfg) == FWMPC_OK);
    EXPECT(fwmpc_run_simulate(cfg, out_dir, &report) == FWMPC_ERR_RUN_INCOMPLETE);
    EXPECT(report != NULL);
    EXPECT(fwmpc_report_artifact_count(report) == 3);
    EXPECT(strstr(fwmpc_report_summary(report), "timeout") != NULL);
    EXPECT(fwmpc_report_artifact(report, 99) == NULL);
    fwmpc_report_free(report);
    fwmpc_config_free(cfg);
}

int main(int argc, char** argv)
{
    EXPECT(strlen(fwmpc_version()) > 0);
    EXPECT(strcmp(fwmpc_status_name(FWMPC_ERR_CONFIG), "config error") == 0);
    test_config();
    test_model_and_path();
    test_controller();
    test_runs(argc > 1 ? argv[1] : "capi_out");
    if (failures) {
        fprintf(stderr, "%d failures\n", failures);
        return 1;
    }
    printf("all C API checks passed\n");
    return 0;
}
