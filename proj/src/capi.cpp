#include "fwmpc/fwmpc.h"

#include "fwmpc/config.hpp"
#include "fwmpc/errors.hpp"
#include "fwmpc/guidance.hpp"
#include "fwmpc/path.hpp"
#include "fwmpc/runner.hpp"
#include "fwmpc/simulation.hpp"

#include <algorithm>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

struct fwmpc_config {
    fwmpc::RunConfig cfg;
};

struct fwmpc_report {
    fwmpc::RunReport report;
};

struct fwmpc_path {
    std::shared_ptr<const fwmpc::ArcLengthPath> path;
};

struct fwmpc_controller {
    std::unique_ptr<fwmpc::GuidanceController> ctrl;
};

namespace {

thread_local std::string g_last_error;

int fail(int status, const std::string& msg)
{
    g_last_error = msg;
    return status;
}

template <class F>
int guarded(F&& f)
{
    try {
        g_last_error.clear();
        return f();
    } catch (const fwmpc::ConfigError& e) {
        return fail(FWMPC_ERR_CONFIG, e.what());
    } catch (const fwmpc::ExcitationError& e) {
        return fail(FWMPC_ERR_EXCITATION, e.what());
    } catch (const fwmpc::InvalidStateError& e) {
        return fail(FWMPC_ERR_INVALID_STATE, e.what());
    } catch (const fwmpc::DomainError& e) {
        return fail(FWMPC_ERR_DOMAIN, e.what());
    } catch (const fwmpc::ArgumentError& e) {
        return fail(FWMPC_ERR_ARGUMENT, e.what());
    } catch (const fwmpc::SolverError& e) {
        return fail(FWMPC_ERR_SOLVER, e.what());
    } catch (const fwmpc::IoError& e) {
        return fail(FWMPC_ERR_IO, e.what());
    } catch (const std::exception& e) {
        return fail(FWMPC_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(FWMPC_ERR_INTERNAL, "unknown error");
    }
}

std::vector<std::string> split_list(const char* list)
{
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        const auto b = cur.find_first_not_of(" \t");
        const auto e = cur.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(cur.substr(b, e - b + 1));
        cur.clear();
    };
    for (const char* p = list; *p; ++p) {
        if (*p == ',') {
            flush();
        } else {
            cur += *p;
        }
    }
    flush();
    return out;
}

using RunFn = fwmpc::RunReport (*)(const fwmpc::RunConfig&, const std::string&);

int run(RunFn fn, const fwmpc_config* cfg, const char* out_dir, fwmpc_report** out)
{
    if (!cfg || !out_dir || !out) return fail(FWMPC_ERR_ARGUMENT, "null argument");
    *out = nullptr;
    return guarded([&] {
        auto rep = std::make_unique<fwmpc_report>();
        rep->report = fn(cfg->cfg, out_dir);
        const bool ok = rep->report.ok;
        *out = rep.release();
        if (!ok) return fail(FWMPC_ERR_RUN_INCOMPLETE, "run did not complete; see the summary");
        return static_cast<int>(FWMPC_OK);
    });
}

}  // namespace

extern "C" {

const char* fwmpc_version(void) { return FWMPC_VERSION; }

const char* fwmpc_last_error(void) { return g_last_error.c_str(); }

const char* fwmpc_status_name(int status)
{
    switch (status) {
    case FWMPC_OK: return "ok";
    case FWMPC_ERR_ARGUMENT: return "argument error";
    case FWMPC_ERR_CONFIG: return "config error";
    case FWMPC_ERR_IO: return "io error";
    case FWMPC_ERR_DOMAIN: return "domain error";
    case FWMPC_ERR_INVALID_STATE: return "invalid state";
    case FWMPC_ERR_SOLVER: return "solver error";
    case FWMPC_ERR_EXCITATION: return "excitation error";
    case FWMPC_ERR_RUN_INCOMPLETE: return "run incomplete";
    default: return "internal error";
    }
}

int fwmpc_config_default(fwmpc_config** out)
{
    if (!out) return fail(FWMPC_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        *out = new fwmpc_config{fwmpc::default_config()};
        return static_cast<int>(FWMPC_OK);
    });
}

int fwmpc_config_load(const char* path, fwmpc_config** out)
{
    if (!path || !out) return fail(FWMPC_ERR_ARGUMENT, "null argument");
    *out = nullptr;
    return guarded([&] {
        *out = new fwmpc_config{fwmpc::load_config(path)};
        return static_cast<int>(FWMPC_OK);
    });
}

int fwmpc_config_parse(const char* yaml_text, fwmpc_config** out)
{
    if (!yaml_text || !out) return fail(FWMPC_ERR_ARGUMENT, "null argument");
    *out = nullptr;
    return guarded([&] {
        *out = new fwmpc_config{fwmpc::parse_config(yaml_text)};
        return static_cast<int>(FWMPC_OK);
    });
}

void fwmpc_config_free(fwmpc_config* cfg) { delete cfg; }

int fwmpc_config_set_seed(fwmpc_config* cfg, uint64_t seed)
{
    if (!cfg) return fail(FWMPC_ERR_ARGUMENT, "null config");
    cfg->cfg.scenario.seed = seed;
    if (cfg->cfg.sysid.maneuvers) cfg->cfg.sysid.maneuvers->seed = seed;
    return FWMPC_OK;
}

int fwmpc_config_set_laps(fwmpc_config* cfg, int laps)
{
    if (!cfg) return fail(FWMPC_ERR_ARGUMENT, "null config");
    if (laps < 1) return fail(FWMPC_ERR_CONFIG, "laps must be >= 1");
    cfg->cfg.scenario.laps = laps;
    return FWMPC_OK;
}

int fwmpc_config_set_paths(fwmpc_config* cfg, const char* list)
{
    if (!cfg || !list) return fail(FWMPC_ERR_ARGUMENT, "null argument");
    const auto names = split_list(list);
    if (names.empty()) return fail(FWMPC_ERR_CONFIG, "path list is empty");
    const auto& valid = fwmpc::path_names();
    for (const auto& n : names) {
        if (std::find(valid.begin(), valid.end(), n) == valid.end()) {
            std::string all;
            for (const auto& v : valid) all += (all.empty() ? "" : ", ") + v;
            return fail(FWMPC_ERR_CONFIG, "unknown path preset '" + n + "' (valid presets: " + all + ")");
        }
    }
    cfg->cfg.paths = names;
    cfg->cfg.scenario.path_name = names.front();
    cfg->cfg.scenario.path = nullptr;
    return FWMPC_OK;
}

int fwmpc_config_set_controllers(fwmpc_config* cfg, const char* list)
{
    if (!cfg || !list) return fail(FWMPC_ERR_ARGUMENT, "null argument");
    const auto names = split_list(list);
    if (names.empty()) return fail(FWMPC_ERR_CONFIG, "controller list is empty");
    std::vector<fwmpc::ControllerMode> modes;
    for (const auto& n : names) {
        try {
            modes.push_back(fwmpc::controller_mode_from_string(n));
        } catch (const fwmpc::ArgumentError& e) {
            return fail(FWMPC_ERR_CONFIG, e.what());
        }
    }
    cfg->cfg.controllers = modes;
    cfg->cfg.scenario.controller.mode = modes.front();
    return FWMPC_OK;
}

int fwmpc_config_set_horizons(fwmpc_config* cfg, const int* horizons, size_t count)
{
    if (!cfg || (!horizons && count)) return fail(FWMPC_ERR_ARGUMENT, "null argument");
    if (count == 0) return fail(FWMPC_ERR_CONFIG, "horizon list is empty");
    cfg->cfg.sweep.horizons.assign(horizons, horizons + count);
    return FWMPC_OK;
}

int fwmpc_config_set_sysid_noise(fwmpc_config* cfg, int enabled)
{
    if (!cfg) return fail(FWMPC_ERR_ARGUMENT, "null config");
    if (cfg->cfg.sysid.maneuvers) {
        cfg->cfg.sysid.maneuvers->noise = enabled ? fwmpc::SysIdNoise::preset() : fwmpc::SysIdNoise{};
    }
    return FWMPC_OK;
}

int fwmpc_config_validate(const fwmpc_config* cfg)
{
    if (!cfg) return fail(FWMPC_ERR_ARGUMENT, "null config");
    return guarded([&] {
        cfg->cfg.validate();
        return static_cast<int>(FWMPC_OK);
    });
}

int fwmpc_config_hash(const fwmpc_config* cfg, char* buffer, size_t size)
{
    if (!cfg || !buffer) return fail(FWMPC_ERR_ARGUMENT, "null argument");
    if (size < 17) return fail(FWMPC_ERR_ARGUMENT, "hash buffer needs 17 bytes");
    return guarded([&] {
        const auto h = fwmpc::hash_hex(fwmpc::config_hash(cfg->cfg));
        std::memcpy(buffer, h.c_str(), h.size() + 1);
        return static_cast<int>(FWMPC_OK);
    });
}

int fwmpc_config_dump(const fwmpc_config* cfg, char** out)
{
    if (!cfg || !out) return fail(FWMPC_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        const auto s = fwmpc::dump_config(cfg->cfg);
        auto* buf = new char[s.size() + 1];
        std::memcpy(buf, s.c_str(), s.size() + 1);
        *out = buf;
        return static_cast<int>(FWMPC_OK);
    });
}

void fwmpc_string_free(char* s) { delete[] s; }

int fwmpc_run_simulate(const fwmpc_config* cfg, const char* out_dir, fwmpc_report** out)
{
    return run(&fwmpc::cmd_simulate, cfg, out_dir, out);
}

int fwmpc_run_compare(const fwmpc_config* cfg, const char* out_dir, fwmpc_report** out)
{
    return run(&fwmpc::cmd_compare, cfg, out_dir, out);
}

int fwmpc_run_sysid(const fwmpc_config* cfg, const char* out_dir, fwmpc_report** out)
{
    return run(&fwmpc::cmd_sysid, cfg, out_dir, out);
}

int fwmpc_run_horizon_sweep(const fwmpc_config* cfg, const char* out_dir, fwmpc_report** out)
{
    return run(&fwmpc::cmd_horizon_sweep, cfg, out_dir, out);
}

const char* fwmpc_report_summary(const fwmpc_report* report) { return report ? report->report.summary.c_str() : ""; }

size_t fwmpc_report_artifact_count(const fwmpc_report* report) { return report ? report->report.artifacts.size() : 0; }

const char* fwmpc_report_artifact(const fwmpc_report* report, size_t index)
{
    if (!report || index >= report->report.artifacts.size()) return nullptr;
    return report->report.artifacts[index].c_str();
}

void fwmpc_report_free(fwmpc_report* report) { delete report; }

int fwmpc_path_create(const char* name, fwmpc_path** out)
{
    if (!name || !out) return fail(FWMPC_ERR_ARGUMENT, "null argument");
    *out = nullptr;
    return guarded([&] {
        *out = new fwmpc_path{fwmpc::make_path(name)};
        return static_cast<int>(FWMPC_OK);
    });
}

void fwmpc_path_free(fwmpc_path* path) { delete path; }

double fwmpc_path_length(const fwmpc_path* path) { return path ? path->path->total_length() : 0.0; }

int fwmpc_path_position(const fwmpc_path* path, double psi, double* position)
{
    if (!path || !position) return fail(FWMPC_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        const Eigen::Vector3d p = path->path->position(psi);
        for (int i = 0; i < 3; ++i) position[i] = p(i);
        return static_cast<int>(FWMPC_OK);
    });
}

int fwmpc_path_closest(const fwmpc_path* path, const double* position, double* psi)
{
    if (!path || !position || !psi) return fail(FWMPC_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        *psi = path->path->closest_param_global(Eigen::Vector3d(position[0], position[1], position[2]));
        return static_cast<int>(FWMPC_OK);
    });
}

int fwmpc_controller_create(const fwmpc_config* cfg, const char* path_name, const char* mode,
                            fwmpc_controller** out)
{
    if (!cfg || !path_name || !out) return fail(FWMPC_ERR_ARGUMENT, "null argument");
    *out = nullptr;
    return guarded([&] {
        fwmpc::ControllerConfig cc = cfg->cfg.scenario.controller;
        if (mode) cc.mode = fwmpc::controller_mode_from_string(mode);
        cc.validate();
        auto c = std::make_unique<fwmpc_controller>();
        c->ctrl = std::make_unique<fwmpc::GuidanceController>(cc, fwmpc::make_path(path_name));
        *out = c.release();
        return static_cast<int>(FWMPC_OK);
    });
}

void fwmpc_controller_free(fwmpc_controller* ctrl) { delete ctrl; }

int fwmpc_controller_query(fwmpc_controller* ctrl, const double* state, const double* wind, double* command,
                           int* degraded)
{
    if (!ctrl || !state || !command) return fail(FWMPC_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        fwmpc::StateVector x;
        for (int i = 0; i < fwmpc::kStateDim; ++i) x(i) = state[i];
        fwmpc::WindVector w;
        if (wind) w = {wind[0], wind[1], wind[2]};
        const auto o = ctrl->ctrl->query(fwmpc::AircraftState::from_vector(x), w);
        command[0] = o.command.phi_c;
        command[1] = o.command.theta_c;
        command[2] = o.command.delta_Tc;
        if (degraded) *degraded = o.degraded ? 1 : 0;
        return static_cast<int>(FWMPC_OK);
    });
}

int fwmpc_controller_reset(fwmpc_controller* ctrl)
{
    if (!ctrl) return fail(FWMPC_ERR_ARGUMENT, "null controller");
    ctrl->ctrl->reset();
    return FWMPC_OK;
}

int fwmpc_model_step(const fwmpc_config* cfg, const double* state, const double* command, const double* wind,
                     double dt, double* next_state)
{
    if (!cfg || !state || !command || !next_state) return fail(FWMPC_ERR_ARGUMENT, "null argument");
    if (!(dt > 0.0)) return fail(FWMPC_ERR_ARGUMENT, "dt must be positive");
    return guarded([&] {
        fwmpc::StateVector x;
        for (int i = 0; i < fwmpc::kStateDim; ++i) x(i) = state[i];
        fwmpc::check_state(x);
        const fwmpc::ControlVector u(command[0], command[1], command[2]);
        const Eigen::Vector3d w = wind ? Eigen::Vector3d(wind[0], wind[1], wind[2]) : Eigen::Vector3d::Zero();
        const fwmpc::StateVector nx = fwmpc::rk4_step(x, u, w, dt, cfg->cfg.scenario.controller.model);
        for (int i = 0; i < fwmpc::kStateDim; ++i) next_state[i] = nx(i);
        return static_cast<int>(FWMPC_OK);
    });
}

}  // extern "C"
