#pragma once

// Control-augmented fixed-wing model: the aircraft together with its attitude
// autopilot, reduced to first-order roll/pitch/throttle responses plus point
// mass kinematics in the air-relative frame.

#include <Eigen/Dense>

#include <string>
#include <string_view>
#include <vector>

namespace fwmpc {

inline constexpr int kStateDim = 9;
inline constexpr int kControlDim = 3;

using StateVector = Eigen::Matrix<double, kStateDim, 1>;
using ControlVector = Eigen::Matrix<double, kControlDim, 1>;
using StateMatrix = Eigen::Matrix<double, kStateDim, kStateDim>;
using InputMatrix = Eigen::Matrix<double, kStateDim, kControlDim>;

/// Component offsets into StateVector / ControlVector.
namespace sx {
enum : int { N = 0, E, D, Phi, Theta, Chi, Va, Gamma, DeltaT };
}
namespace su {
enum : int { PhiC = 0, ThetaC, DeltaTC };
}

/// Airspeed at or below this is treated as outside the model.
inline constexpr double kMinValidAirspeed = 0.1;
/// |gamma_a| at or above this (89 deg) is treated as outside the model.
inline constexpr double kMaxValidGamma = 89.0 * 3.14159265358979323846 / 180.0;

struct AircraftState {
    double n = 0.0;        // m, north
    double e = 0.0;        // m, east
    double d = 0.0;        // m, down
    double phi = 0.0;      // rad
    double theta = 0.0;    // rad
    double chi_a = 0.0;    // rad, air-relative heading
    double V_a = 25.0;     // m/s
    double gamma_a = 0.0;  // rad, air-relative flight path angle
    double delta_T = 0.0;  // virtual throttle in [0, 1]

    [[nodiscard]] StateVector vector() const;
    [[nodiscard]] Eigen::Vector3d position() const { return {n, e, d}; }
    static AircraftState from_vector(const StateVector& x);
};

struct ControlCommand {
    double phi_c = 0.0;
    double theta_c = 0.0;
    double delta_Tc = 0.0;

    [[nodiscard]] ControlVector vector() const { return {phi_c, theta_c, delta_Tc}; }
    static ControlCommand from_vector(const ControlVector& u) { return {u(0), u(1), u(2)}; }
};

struct WindVector {
    double w_n = 0.0;
    double w_e = 0.0;
    double w_d = 0.0;

    [[nodiscard]] Eigen::Vector3d vector() const { return {w_n, w_e, w_d}; }
    [[nodiscard]] double magnitude() const { return vector().norm(); }
};

/// Closed-loop constants, open-loop aerodynamic/propulsion fit and physical
/// constants. Defaults are the fitted RAAVEN values.
struct ModelParameters {
    // closed loop
    double K_phi = 2.0316;
    double K_theta = 2.1498;
    // open loop
    double tau_T = 0.1161;
    double C_L0 = 0.0917;
    double C_L1 = 2.7493;
    double C_D0 = 0.0362;
    double C_D1 = 0.0868;
    double C_D2 = 0.4459;
    double C_T = 0.0233;
    double k_m = 143.3052;
    // constants
    double m = 6.65;
    double g = 9.81;
    double rho = 1.225;
    double S = 1.02;
    double S_p = 0.0856;

    /// Throws ArgumentError when a positivity invariant is broken.
    void validate() const;

    /// Parameter names, in file order.
    static const std::vector<std::string>& keys();
    /// Names of the eight open-loop parameters.
    static const std::vector<std::string>& open_loop_keys();
    [[nodiscard]] double get(std::string_view key) const;
    void set(std::string_view key, double value);
};

struct ForceSet {
    double L = 0.0;
    double D = 0.0;
    double T = 0.0;
    double alpha = 0.0;
    double V_inf = 0.0;
    /// The drag polynomial went negative (only possible far outside the
    /// trusted angle-of-attack range); D holds the raw value.
    bool negative_drag = false;
};

struct ImuAccels {
    double a_x = 0.0;
    double a_z = 0.0;
};

/// Angle of attack under the zero-sideslip assumption.
[[nodiscard]] double alpha_of(const AircraftState& state);

/// Air-relative flight path angle from the measured down-rate. Throws
/// DomainError when |d_dot - w_d| exceeds V_a.
[[nodiscard]] double gamma_from_kinematics(double d_dot, double w_d, double V_a);

[[nodiscard]] ForceSet forces(const AircraftState& state, const ModelParameters& params);

/// Body-frame specific forces seen by the IMU.
[[nodiscard]] ImuAccels imu_accels(const ForceSet& f, double mass);

/// Throws InvalidStateError when the dynamics are undefined at x.
void check_state(const StateVector& x);

[[nodiscard]] StateVector continuous_dynamics(const StateVector& x, const ControlVector& u,
                                              const Eigen::Vector3d& wind,
                                              const ModelParameters& params);
[[nodiscard]] StateVector continuous_dynamics(const AircraftState& state, const ControlCommand& cmd,
                                              const WindVector& wind,
                                              const ModelParameters& params);

/// Continuous-time Jacobians df/dx, df/du evaluated together with f.
struct ContinuousJacobians {
    StateVector f;
    StateMatrix dfdx;
    InputMatrix dfdu;
};
[[nodiscard]] ContinuousJacobians continuous_jacobians(const StateVector& x, const ControlVector& u,
                                                       const Eigen::Vector3d& wind,
                                                       const ModelParameters& params);

/// One classical RK4 step with the wind held constant over the step.
[[nodiscard]] StateVector rk4_step(const StateVector& x, const ControlVector& u,
                                   const Eigen::Vector3d& wind, double dt,
                                   const ModelParameters& params);
[[nodiscard]] AircraftState rk4_step(const AircraftState& state, const ControlCommand& cmd,
                                     const WindVector& wind, double dt,
                                     const ModelParameters& params);

/// Sensitivities of the RK4 map, obtained by differentiating through the four
/// stages.
struct DiscreteJacobians {
    StateVector next;
    StateMatrix A;
    InputMatrix B;
};
[[nodiscard]] DiscreteJacobians discrete_jacobians(const StateVector& x, const ControlVector& u,
                                                   const Eigen::Vector3d& wind, double dt,
                                                   const ModelParameters& params);

/// V^2 / (g tan(phi)). Throws DomainError for phi = 0 or |phi| >= pi/2.
[[nodiscard]] double coordinated_turn_radius(double V, double phi, double g);

/// Wings-level, constant-altitude equilibrium at airspeed V_a.
struct TrimPoint {
    ControlCommand command;
    double alpha = 0.0;
    AircraftState state;  // at the origin, heading north
};

/// Solves for pitch and throttle holding V_a and gamma_a = 0. Throws
/// SolverError if no equilibrium with throttle in [0, 1] exists.
[[nodiscard]] TrimPoint level_trim(double V_a, const ModelParameters& params);

/// level_trim with V_a clamped into the range where a trim exists and the
/// result clamped to the command box; never throws for finite input.
[[nodiscard]] TrimPoint best_effort_trim(double V_a, const ModelParameters& params);

}  // namespace fwmpc
