#pragma once

// Batch commands behind the CLI. Each validates the whole configuration
// before touching the output directory and stamps every artifact with the
// config hash and seed.

#include "fwmpc/config.hpp"
#include "fwmpc/simulation.hpp"
#include "fwmpc/sysid.hpp"

#include <map>
#include <string>
#include <vector>

namespace fwmpc {

inline constexpr const char* kCompareSchema = "fwmpc.compare/1";
inline constexpr const char* kSweepSchema = "fwmpc.sweep/1";
inline constexpr const char* kFitSchema = "fwmpc.fit/1";

struct RunReport {
    std::string command;
    std::string summary;                 // printable text
    std::vector<std::string> artifacts;  // written files
    /// False when a run finished without completing (timeout or divergence).
    bool ok = true;
};

RunReport cmd_simulate(const RunConfig& cfg, const std::string& out_dir);
RunReport cmd_compare(const RunConfig& cfg, const std::string& out_dir);
/// Throws ConfigError when sysid.maneuvers is missing.
RunReport cmd_sysid(const RunConfig& cfg, const std::string& out_dir);
RunReport cmd_horizon_sweep(const RunConfig& cfg, const std::string& out_dir);

struct SysIdRun {
    ModelParameters truth;
    ModelParameters start;
    FitResult closed_loop;
    FitResult open_loop;
    std::map<std::string, double> validation_rmse;  // fitted model on the held-out data
    std::map<std::string, double> truth_rmse;       // generating model on the same data
    SysIdNoise noise;
    int train_samples = 0;
    int validation_samples = 0;

    /// |fitted / truth - 1| over the ten identified parameters.
    [[nodiscard]] std::map<std::string, double> relative_errors() const;
};

/// generate, split, closed-loop fit, open-loop fit, validate. The truth is
/// the configured model.
[[nodiscard]] SysIdRun sysid_pipeline(const RunConfig& cfg);

struct SweepRow {
    int N = 0;
    int ticks = 0;
    double mean_ms = 0.0;
    double median_ms = 0.0;
    double p95_ms = 0.0;
    double max_ms = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    double exponent = 0.0;  // slope of log mean time against log N
};

[[nodiscard]] SweepResult horizon_sweep(const RunConfig& cfg);

/// Linear-interpolated percentile, p in [0, 100].
[[nodiscard]] double percentile(std::vector<double> values, double p);

}  // namespace fwmpc
