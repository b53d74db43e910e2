// fwmpc command-line runner. Talks to the library through the C interface
// only.

#include "fwmpc/fwmpc.h"

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Options {
    std::string config;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::string paths;
    std::string controllers;
    std::optional<int> laps;
    bool noise = false;
    std::vector<int> horizons;
};

int config_failure(int status)
{
    std::fprintf(stderr, "fwmpc: %s: %s\n", fwmpc_status_name(status), fwmpc_last_error());
    return status == FWMPC_ERR_CONFIG || status == FWMPC_ERR_ARGUMENT ? kExitConfig : kExitRuntime;
}

// Loads the file (or the built-in defaults) and applies the flag overrides.
int build_config(const Options& o, fwmpc_config** out)
{
    int rc = o.config.empty() ? fwmpc_config_default(out) : fwmpc_config_load(o.config.c_str(), out);
    if (rc != FWMPC_OK) return rc;
    fwmpc_config* cfg = *out;
    if (o.seed && (rc = fwmpc_config_set_seed(cfg, *o.seed)) != FWMPC_OK) return rc;
    if (o.laps && (rc = fwmpc_config_set_laps(cfg, *o.laps)) != FWMPC_OK) return rc;
    if (!o.paths.empty() && (rc = fwmpc_config_set_paths(cfg, o.paths.c_str())) != FWMPC_OK) return rc;
    if (!o.controllers.empty() && (rc = fwmpc_config_set_controllers(cfg, o.controllers.c_str())) != FWMPC_OK) {
        return rc;
    }
    if (!o.horizons.empty() &&
        (rc = fwmpc_config_set_horizons(cfg, o.horizons.data(), o.horizons.size())) != FWMPC_OK) {
        return rc;
    }
    if (o.noise && (rc = fwmpc_config_set_sysid_noise(cfg, 1)) != FWMPC_OK) return rc;
    return FWMPC_OK;
}

using RunFn = int (*)(const fwmpc_config*, const char*, fwmpc_report**);

int execute(const Options& o, RunFn fn)
{
    fwmpc_config* cfg = nullptr;
    int rc = build_config(o, &cfg);
    if (rc != FWMPC_OK) {
        const int code = config_failure(rc);
        fwmpc_config_free(cfg);
        return code;
    }
    fwmpc_report* report = nullptr;
    rc = fn(cfg, o.out_dir.c_str(), &report);
    fwmpc_config_free(cfg);
    if (report) {
        std::fputs(fwmpc_report_summary(report), stdout);
        for (size_t i = 0; i < fwmpc_report_artifact_count(report); ++i) {
            std::printf("wrote %s\n", fwmpc_report_artifact(report, i));
        }
        fwmpc_report_free(report);
    }
    if (rc == FWMPC_OK) return 0;
    std::fprintf(stderr, "fwmpc: %s: %s\n", fwmpc_status_name(rc), fwmpc_last_error());
    return rc == FWMPC_ERR_CONFIG ? kExitConfig : kExitRuntime;
}

void add_common(CLI::App* cmd, Options& o)
{
    cmd->add_option("--config", o.config, "YAML configuration file (built-in defaults when omitted)");
    cmd->add_option("--out-dir", o.out_dir, "artifact directory")->capture_default_str();
    cmd->add_option("--seed", o.seed, "seed for wind, noise and maneuvers");
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Fixed-wing MPC path-following runner"};
    app.set_version_flag("--version", std::string(fwmpc_version()));
    app.require_subcommand(1);
    Options o;

    auto* sim = app.add_subcommand("simulate", "closed-loop run of one controller on one path");
    add_common(sim, o);
    sim->add_option("--paths", o.paths, "path preset (first entry is used)");
    sim->add_option("--controllers", o.controllers, "controller (first entry is used)");
    sim->add_option("--laps", o.laps, "lap count")->check(CLI::PositiveNumber);

    auto* cmp = app.add_subcommand("compare", "every controller on every path, table of metrics");
    add_common(cmp, o);
    cmp->add_option("--paths", o.paths, "comma-separated path presets");
    cmp->add_option("--controllers", o.controllers, "comma-separated controllers");
    cmp->add_option("--laps", o.laps, "lap count")->check(CLI::PositiveNumber);

    auto* sid = app.add_subcommand("sysid", "identify the model from synthetic maneuver data");
    add_common(sid, o);
    sid->add_flag("--noise", o.noise, "add the measurement-noise preset");

    auto* sweep = app.add_subcommand("horizon-sweep", "solve times over horizon lengths");
    add_common(sweep, o);
    sweep->add_option("--horizon-list", o.horizons, "comma-separated horizon lengths N")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    if (sim->parsed()) return execute(o, &fwmpc_run_simulate);
    if (cmp->parsed()) return execute(o, &fwmpc_run_compare);
    if (sid->parsed()) return execute(o, &fwmpc_run_sysid);
    return execute(o, &fwmpc_run_horizon_sweep);
}
