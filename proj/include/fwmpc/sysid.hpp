#pragma once

// Grey-box output-error identification on synthetic maneuver data: the
// attitude constants first, then the open-loop aerodynamic and thrust
// parameters with the attitude constants held fixed.

#include "fwmpc/errors.hpp"
#include "fwmpc/vehicle_model.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fwmpc {

inline constexpr const char* kSysIdSchema = "fwmpc.sysid/1";

/// Raised when the data carry no information about a fitted parameter.
class ExcitationError : public Error {
public:
    using Error::Error;
};

struct ManeuverSegment {
    enum class Kind { Hold, Doublet, FreeForm };
    enum class Axis { Roll, Pitch, Throttle };
    Kind kind = Kind::Hold;
    double duration = 10.0;  // s, including the closing settle hold
    double airspeed = 0.0;   // m/s, trim the offsets act on; 0 uses the spec trim
    // doublet: +A for 2 pulse, -A for 1 pulse, +A for 1 pulse
    Axis axis = Axis::Roll;
    double amplitude = 0.0;  // rad or throttle fraction
    double pulse = 1.0;      // s
    // free-form: sum of sines on all three axes
    double roll_amplitude = 0.0;      // rad
    double pitch_amplitude = 0.0;     // rad
    double throttle_amplitude = 0.0;
    double bandwidth = 0.5;           // Hz
    std::uint64_t seed = 1;
};

struct SysIdNoise {
    double attitude = 0.0;  // rad, phi and theta
    double airspeed = 0.0;  // m/s
    double gamma = 0.0;     // rad
    double accel = 0.0;     // m/s^2

    [[nodiscard]] bool enabled() const { return attitude > 0.0 || airspeed > 0.0 || gamma > 0.0 || accel > 0.0; }
    /// 0.5 deg attitude, 0.3 m/s airspeed, 0.3 deg flight path, 0.1 m/s^2.
    static SysIdNoise preset();
};

struct ManeuverSpec {
    std::vector<ManeuverSegment> segments;
    double trim_airspeed = 22.0;  // m/s, default segment trim
    double sample_rate = 40.0;    // Hz
    int substeps = 2;             // RK4 steps per sample
    double settle = 2.0;          // s of trim hold closing every non-hold segment
    Eigen::Vector3d wind = Eigen::Vector3d::Zero();
    SysIdNoise noise;
    std::uint64_t seed = 1;
    /// Model the trim commands are computed from; the simulated one when unset.
    std::optional<ModelParameters> trim_model;

    /// Throws ArgumentError when a command leaves roll [-45, 45] deg, pitch
    /// [-20, 20] deg or throttle [0, 1], or the spec is empty.
    void validate(const ModelParameters& params) const;
    [[nodiscard]] double total_duration() const;
    /// Five-minute schedule: trim hold, roll/pitch/throttle 2-1-1 doublets and
    /// free-form excitation at trims of 17, 22 and 31 m/s; the last 20 % is a
    /// single free-form segment.
    static ManeuverSpec default_spec();
};

/// Output channels in table order.
enum class SysIdOutput { Phi = 0, Theta, Va, Gamma, Ax, Az };
inline constexpr int kSysIdOutputs = 6;
[[nodiscard]] const std::array<std::string, kSysIdOutputs>& sysid_output_names();

struct SysIdDataset {
    double sample_rate = 40.0;
    int substeps = 2;
    std::vector<double> t;
    std::vector<int> segment;  // maneuver segment index per sample
    std::vector<ControlCommand> commands;
    std::vector<std::array<double, kSysIdOutputs>> outputs;  // measured phi, theta, V_a, gamma_a, a_x, a_z
    std::vector<Eigen::Vector3d> wind;

    [[nodiscard]] int size() const { return static_cast<int>(t.size()); }
    void validate() const;
    /// Contiguous split at the segment boundary nearest to train_fraction of
    /// the samples.
    [[nodiscard]] std::pair<SysIdDataset, SysIdDataset> split(double train_fraction = 0.8) const;

    void write_csv(std::ostream& out) const;
    static SysIdDataset read_csv(std::istream& in);
};

/// Simulates the model under the spec's commands, sampled at the spec rate.
/// Throws DomainError when the airspeed leaves [15, 40] m/s.
[[nodiscard]] SysIdDataset generate_maneuvers(const ModelParameters& params, const ManeuverSpec& spec);

struct FitOptions {
    int max_iterations = 50;
    double tolerance = 1e-10;  // relative cost decrease for convergence
    double window = 20.0;      // s, shooting window length
    double min_sensitivity = 1e-8;
};

struct FitResult {
    std::vector<std::string> names;
    Eigen::VectorXd values;
    ModelParameters fitted;     // start record with the fitted entries replaced
    std::map<std::string, double> train_rmse;  // per fitted output channel
    std::vector<double> cost_history;          // accepted iterates
    int iterations = 0;
    bool converged = false;
    Eigen::VectorXd sensitivity;  // normalized output sensitivity per parameter
    Eigen::MatrixXd correlation;  // parameter correlation estimate
    std::vector<std::string> diagnostics;

    [[nodiscard]] double correlation_between(const std::string& a, const std::string& b) const;
};

/// K_phi, K_theta from the phi and theta channels. Throws ExcitationError
/// when the data cannot inform a constant.
[[nodiscard]] FitResult fit_closed_loop(const SysIdDataset& train, const ModelParameters& start,
                                        const FitOptions& options = {});

/// tau_T, C_L0, C_L1, C_D0, C_D1, C_D2, C_T, k_m from V_a, gamma_a, a_x and
/// a_z, with the closed-loop constants of `start` held fixed. Bounds: all
/// positive except C_D1, k_m in [50, 300].
[[nodiscard]] FitResult fit_open_loop(const SysIdDataset& train, const ModelParameters& start,
                                      const FitOptions& options = {});

/// Per-output RMSE of the full model simulated on the dataset commands from
/// the recorded initial conditions of each shooting window.
[[nodiscard]] std::map<std::string, double> validate_model(const ModelParameters& params, const SysIdDataset& data,
                                                           double window = 20.0);

/// Parameters scaled by 1 +/- fraction with alternating signs, in key order.
[[nodiscard]] ModelParameters perturbed_guess(const ModelParameters& truth, double fraction);

}  // namespace fwmpc
