#pragma once

// Closed-loop simulation: guidance at a fixed query rate, zero-order hold of
// the commands, plant integrated at a finer substep with its own (possibly
// perturbed) parameters and stochastic wind.

#include "fwmpc/guidance.hpp"
#include "fwmpc/path.hpp"
#include "fwmpc/vehicle_model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace fwmpc {

inline constexpr const char* kSimLogSchema = "fwmpc.simlog/1";
inline constexpr const char* kTimingSchema = "fwmpc.timing/1";
inline constexpr const char* kMetricsSchema = "fwmpc.metrics/1";

struct WindModel {
    enum class Kind { Constant, Gusty };
    Kind kind = Kind::Constant;
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();   // m/s, NED
    Eigen::Vector3d sigma = Eigen::Vector3d::Zero();  // stationary std per axis, m/s
    double tau = 3.0;                                 // s, correlation time
    double max_magnitude = 15.0;                      // m/s, realized wind is scaled back to this

    void validate() const;
};

/// First-order colored noise around the mean, one independent
/// Ornstein-Uhlenbeck recursion per axis.
class WindGenerator {
public:
    WindGenerator(const WindModel& model, std::uint64_t seed);
    /// Wind at the current time; advance() moves it forward by dt.
    [[nodiscard]] Eigen::Vector3d current() const { return w_; }
    void advance(double dt);

private:
    WindModel model_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    Eigen::Vector3d w_;
};

/// Additive Gaussian noise on the state handed to the controller.
struct EstimateNoise {
    double position = 0.0;  // m
    double attitude = 0.0;  // rad, phi, theta, chi_a, gamma_a
    double airspeed = 0.0;  // m/s

    [[nodiscard]] bool enabled() const { return position > 0.0 || attitude > 0.0 || airspeed > 0.0; }
};

struct Scenario {
    std::string path_name = "path1";
    /// Built from path_name when null.
    std::shared_ptr<const ArcLengthPath> path;
    ControllerConfig controller;
    /// Defaults to a level trim on the path start, aligned with the tangent,
    /// at initial_airspeed.
    std::optional<AircraftState> initial_state;
    double initial_airspeed = 25.0;  // m/s
    WindModel wind;
    int laps = 2;
    /// Plant parameters are controller.model scaled entry-wise by these factors.
    std::map<std::string, double> plant_factors;
    double substep = 0.01;  // s
    std::uint64_t seed = 1;
    /// Simulated-time limit; 0 picks laps x length / 10 m/s + 60 s.
    double timeout = 0.0;
    EstimateNoise noise;

    /// Throws ArgumentError when the substep does not divide the query
    /// period, laps < 1, or a factor names an unknown parameter.
    void validate() const;
    [[nodiscard]] std::shared_ptr<const ArcLengthPath> resolve_path() const;
    [[nodiscard]] ModelParameters plant_parameters() const;
    [[nodiscard]] AircraftState start_state(const ArcLengthPath& path) const;
};

/// Presets: path1..path4 (Lissajous loops) and "racetrack", a closed
/// out-and-back course of two 400 m straights joined by 150 m radius turns.
[[nodiscard]] std::shared_ptr<const ArcLengthPath> make_path(const std::string& name);
[[nodiscard]] const std::vector<std::string>& path_names();

/// Factors 1 +/- fraction with random signs on the open-loop parameters.
[[nodiscard]] std::map<std::string, double> open_loop_mismatch(double fraction, std::uint64_t seed);

struct SimRecord {
    double t = 0.0;
    AircraftState plant;
    AircraftState estimate;
    Eigen::Vector3d wind = Eigen::Vector3d::Zero();           // truth
    Eigen::Vector3d wind_estimate = Eigen::Vector3d::Zero();  // given to the controller, w_d = 0
    ControlCommand command;
    double psi_dot_c = 0.0;
    double psi_star = 0.0;
    double progress = 0.0;  // unwrapped path progress since the start, m
    Eigen::Vector3d path_error = Eigen::Vector3d::Zero();  // r - r_P(psi_star)
    int qp_iterations = 0;
    bool degraded = false;
    double solve_time = 0.0;  // s; excluded from the deterministic table
};

struct SimLog {
    enum class Status { Completed, Timeout, Diverged };
    std::string path_name;
    std::string controller;
    std::uint64_t seed = 0;
    Status status = Status::Completed;
    std::string message;
    int laps_completed = 0;
    std::vector<double> lap_times;  // s
    std::vector<SimRecord> records;

    /// Deterministic tick table, schema line first.
    void write_csv(std::ostream& out) const;
    /// Solve times per tick.
    void write_timing_csv(std::ostream& out) const;
};

[[nodiscard]] std::string_view to_string(SimLog::Status status);

/// Runs the closed loop until the lap count is reached, the timeout expires,
/// or the plant leaves the model domain (Diverged).
[[nodiscard]] SimLog run_scenario(const Scenario& sc);

struct Stat {
    double mean = 0.0;
    double median = 0.0;
    double max = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;

    [[nodiscard]] double iqr() const { return q3 - q1; }
};
[[nodiscard]] Stat statistics(std::vector<double> values);

struct Metrics {
    std::string path_name;
    std::string controller;
    std::string status;
    int ticks = 0;
    Stat path_error;     // m, global projection
    Stat airspeed;       // m/s
    Stat groundspeed;    // m/s, 3-D
    Stat feedback_time;  // ms
    std::vector<double> lap_times;
    double airspeed_violation = 0.0;  // fraction of ticks outside [Va_min, Va_max]
    double alpha_violation = 0.0;     // fraction of ticks outside [alpha_min, alpha_max]
    int degraded_ticks = 0;

    /// Key-value document with the schema tag.
    [[nodiscard]] std::string to_json(int indent = 2, bool include_timing = true) const;
};

/// Throws ArgumentError on an empty log.
[[nodiscard]] Metrics compute_metrics(const SimLog& log, const ArcLengthPath& path, const FlightEnvelope& envelope);

/// The four metric blocks of the comparison table.
struct MetricRow {
    std::string block;
    Stat stat;
};
[[nodiscard]] std::vector<MetricRow> table_rows(const Metrics& m);

struct Comparison {
    std::string path_name;
    std::vector<std::pair<ControllerMode, Metrics>> results;
    std::vector<std::pair<ControllerMode, SimLog>> logs;
    std::map<std::string, bool> orderings;

    [[nodiscard]] const Metrics* find(ControllerMode mode) const;
};

/// Runs each controller on a copy of the scenario (same seed) and evaluates
/// the orderings between the MPC variants and the baseline. Runs are
/// independent and execute in parallel when `parallel` is set.
[[nodiscard]] Comparison compare_controllers(const Scenario& base, const std::vector<ControllerMode>& modes,
                                             bool parallel = true);

}  // namespace fwmpc
