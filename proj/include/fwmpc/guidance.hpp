#pragma once

// Closed-loop guidance policies queried at the guidance rate: constant-rate
// path-following MPC, contouring MPC, and a lookahead lateral law with PI
// airspeed/altitude loops as the baseline.

#include "fwmpc/ocp.hpp"
#include "fwmpc/path.hpp"
#include "fwmpc/sqp.hpp"
#include "fwmpc/vehicle_model.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace fwmpc {

enum class ControllerMode { CrMpc, Mpcc, Lookahead };

[[nodiscard]] std::string_view to_string(ControllerMode mode);
/// Accepts "cr-mpc", "mpcc" and "lookahead".
[[nodiscard]] ControllerMode controller_mode_from_string(std::string_view name);

/// Baseline loop gains. Not published with the original controller; tuned
/// once on the path presets and frozen.
struct LookaheadGains {
    double kp_airspeed = 0.08;    // throttle per m/s
    double ki_airspeed = 0.04;    // throttle per m
    double kp_altitude = 0.03;    // rad per m
    double ki_altitude = 0.004;   // rad per m s
    double airspeed_integrator_limit = 10.0;  // m
    double altitude_integrator_limit = 40.0;  // m s

    void validate() const;
};

struct ControllerConfig {
    ControllerMode mode = ControllerMode::CrMpc;
    int N = 50;
    double dt = 0.1;            // s, OCP node spacing
    double horizon = 5.0;       // s, must equal N dt
    double query_period = 0.1;  // s
    StageWeights weights;
    FlightEnvelope envelope;
    /// Prediction model used by the MPC variants.
    ModelParameters model;
    double psi_dot_ref = 25.0;     // m/s, CR-MPC path rate
    double lookahead_time = 4.0;   // s
    double airspeed_ref = 21.0;    // m/s
    LookaheadGains gains;
    double window_margin = 5.0;    // m, added to the local closest-point window
    SqpOptions solver;

    /// Throws ArgumentError when N dt differs from the horizon or a time is
    /// not positive.
    void validate() const;
    /// 2 x psi_dot upper bound x query period + margin.
    [[nodiscard]] double search_window() const;
};

struct ControllerState {
    std::optional<OcpSolution> previous;
    std::optional<double> psi_hint;  // last closest path parameter
    double airspeed_integrator = 0.0;
    double altitude_integrator = 0.0;
    std::int64_t queries = 0;
    /// QP workspace; one per controller instance.
    SqpSolver solver;
};

/// One guidance query worth of output and telemetry.
struct GuidanceOutput {
    ControlCommand command;
    double psi_dot_c = 0.0;   // MPCC only
    double psi_star = 0.0;
    double solve_time = 0.0;  // s, zero for the baseline
    int qp_iterations = 0;
    double kkt = 0.0;
    bool degraded = false;
};

/// Closest path parameter for the query: global on the first call, local
/// around the stored hint afterwards. Updates the hint.
double update_closest(ControllerState& cs, const AircraftState& x, const ArcLengthPath& path,
                      const ControllerConfig& cfg);

/// Throws InvalidStateError when x is outside the model domain. Solver
/// failures never propagate: the first command of the shifted previous
/// solution (or the clamped trim command on a first query) is returned
/// flagged degraded.
GuidanceOutput cr_mpc_query(ControllerState& cs, const AircraftState& x, const WindVector& w,
                            const std::shared_ptr<const ArcLengthPath>& path, const ControllerConfig& cfg);
GuidanceOutput mpcc_query(ControllerState& cs, const AircraftState& x, const WindVector& w,
                          const std::shared_ptr<const ArcLengthPath>& path, const ControllerConfig& cfg);
GuidanceOutput lookahead_query(ControllerState& cs, const AircraftState& x, const WindVector& w,
                               const ArcLengthPath& path, const ControllerConfig& cfg);

/// Owns a configuration, the path and the per-instance state; dispatches on
/// the configured mode.
class GuidanceController {
public:
    GuidanceController(ControllerConfig cfg, std::shared_ptr<const ArcLengthPath> path);

    GuidanceOutput query(const AircraftState& x, const WindVector& w);
    void reset();

    [[nodiscard]] const ControllerConfig& config() const { return cfg_; }
    [[nodiscard]] const ControllerState& state() const { return state_; }
    [[nodiscard]] const ArcLengthPath& path() const { return *path_; }

private:
    ControllerConfig cfg_;
    std::shared_ptr<const ArcLengthPath> path_;
    ControllerState state_;
};

}  // namespace fwmpc
