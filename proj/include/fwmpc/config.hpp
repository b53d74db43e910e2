#pragma once

// Run configuration: one YAML document covering the model, weights, envelope,
// controller, scenario and the per-command sections. Angles are written in
// degrees in the file and held in radians here.

#include "fwmpc/guidance.hpp"
#include "fwmpc/simulation.hpp"
#include "fwmpc/sysid.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fwmpc {

inline constexpr const char* kConfigSchema = "fwmpc.config/1";

struct SysIdConfig {
    /// Required by the sysid command; absent when the file has no
    /// sysid.maneuvers section.
    std::optional<ManeuverSpec> maneuvers;
    double train_fraction = 0.8;
    double initial_perturbation = 0.2;  // start guess is truth x (1 +/- this)
    FitOptions fit;
};

struct SweepConfig {
    std::vector<int> horizons{10, 25, 50, 75, 100};
    std::string path = "path1";
    ControllerMode mode = ControllerMode::CrMpc;
    double duration = 30.0;  // s of simulated flight per horizon
};

struct RunConfig {
    Scenario scenario;
    /// Random +/- fraction on the open-loop plant parameters, drawn from the
    /// scenario seed and multiplied into the explicit plant factors.
    double mismatch = 0.0;
    std::vector<std::string> paths{"path1", "path2", "path3", "path4"};
    std::vector<ControllerMode> controllers{ControllerMode::CrMpc, ControllerMode::Mpcc, ControllerMode::Lookahead};
    SysIdConfig sysid;
    SweepConfig sweep;

    /// Throws ConfigError naming the offending fields.
    void validate() const;
    /// Scenario with the mismatch factors applied.
    [[nodiscard]] Scenario effective_scenario() const;
};

/// Identified model, shipped weights and envelope, ten Hz CR-MPC, default
/// maneuver schedule.
[[nodiscard]] RunConfig default_config();

/// Keys missing from the document keep their defaults, except
/// sysid.maneuvers. Unknown keys and malformed values throw ConfigError.
[[nodiscard]] RunConfig parse_config(const std::string& yaml_text);
[[nodiscard]] RunConfig load_config(const std::string& path);

/// Canonical document; parse_config(dump_config(c)) reproduces c.
[[nodiscard]] std::string dump_config(const RunConfig& cfg);

/// FNV-1a 64 over the canonical document.
[[nodiscard]] std::uint64_t config_hash(const RunConfig& cfg);
[[nodiscard]] std::string hash_hex(std::uint64_t hash);

}  // namespace fwmpc
