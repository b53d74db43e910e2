#pragma once

// Direct multiple-shooting optimal control problem in nonlinear least-squares
// form, for constant-rate path following (CR-MPC) and contouring control
// (MPCC).

#include "fwmpc/path.hpp"
#include "fwmpc/vehicle_model.hpp"

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fwmpc {

enum class OcpMode { CrMpc, Mpcc };

[[nodiscard]] std::string_view to_string(OcpMode mode);
/// Accepts "cr-mpc" and "mpcc". Throws ArgumentError otherwise.
[[nodiscard]] OcpMode ocp_mode_from_string(std::string_view name);

/// Slack order inside s_k.
namespace ss {
enum : int { VaUpper = 0, AlphaUpper, VaLower, AlphaLower };
}
inline constexpr int kSlackDim = 4;

struct StageWeights {
    double q_n = 1.0, q_e = 1.0, q_d = 1.0, q_chi = 1.0, q_gamma = 1.0;
    double b_phidot = 1.0, b_thetadot = 20.0, b_deltaTdot = 10.0;
    double s_alpha = 1e4, s_Va = 1e4;
    double r_phi = 400.0, r_theta = 400.0, r_deltaT = 400.0, r_psidot = 0.1;
    double lambda = 0.99;
    double mu = 0.001;

    void validate() const;
    static const std::vector<std::string>& keys();
    [[nodiscard]] double get(std::string_view key) const;
    void set(std::string_view key, double value);
};

struct FlightEnvelope {
    double Va_min = 20.0, Va_max = 40.0;
    double alpha_min = -6.0 * 3.14159265358979323846 / 180.0;
    double alpha_max = 12.0 * 3.14159265358979323846 / 180.0;
    double phi_c_min = -45.0 * 3.14159265358979323846 / 180.0;
    double phi_c_max = 45.0 * 3.14159265358979323846 / 180.0;
    double theta_c_min = -10.0 * 3.14159265358979323846 / 180.0;
    double theta_c_max = 10.0 * 3.14159265358979323846 / 180.0;
    double delta_Tc_min = 0.0, delta_Tc_max = 1.0;
    double psidot_c_min = 15.0, psidot_c_max = 45.0;

    void validate() const;
    static const std::vector<std::string>& keys();
    [[nodiscard]] double get(std::string_view key) const;
    void set(std::string_view key, double value);

    /// Command box for the given mode (3 or 4 entries).
    [[nodiscard]] Eigen::VectorXd control_lower(OcpMode mode) const;
    [[nodiscard]] Eigen::VectorXd control_upper(OcpMode mode) const;
    [[nodiscard]] ControlCommand clamp(const ControlCommand& cmd) const;
};

[[nodiscard]] inline int state_dim(OcpMode mode) { return mode == OcpMode::Mpcc ? kStateDim + 1 : kStateDim; }
[[nodiscard]] inline int control_dim(OcpMode mode) { return mode == OcpMode::Mpcc ? kControlDim + 1 : kControlDim; }
[[nodiscard]] inline int error_dim(OcpMode mode) { return mode == OcpMode::Mpcc ? 6 : 5; }

/// psi_hat_k = psi_star + psi_dot_ref k dt for k = 0..N, wrapped when a closed
/// path is given.
[[nodiscard]] std::vector<double> reference_schedule(double psi_star, double psi_dot_ref, double dt, int N,
                                                     const ArcLengthPath* path = nullptr);

/// Wraps an angle into (-pi, pi].
[[nodiscard]] double wrap_angle(double a);

/// Stage error y = [e_n, e_e, e_d, e_chi, e_gamma] (+ e_Va in MPCC mode) and
/// its Jacobian with respect to the aircraft state and psi_hat.
struct StageError {
    Eigen::VectorXd y;
    Eigen::MatrixXd dy_dx;     // rows of y, 9 columns
    Eigen::VectorXd dy_dpsi;   // rows of y
};
[[nodiscard]] StageError stage_error(const StateVector& x, double psi_hat, const Eigen::Vector3d& wind,
                                     const ArcLengthPath& path, OcpMode mode, const FlightEnvelope& env);

/// Soft envelope rows h(x, s) <= 0, linear in (x, s):
///   [V_a - sV+ - V_max, alpha - sa+ - a_max, V_min - V_a - sV-, a_min - alpha - sa-]
struct SoftRows {
    Eigen::Vector4d h;          // at the given slacks
    Eigen::Vector4d min_slack;  // smallest nonnegative slacks making h <= 0
};
[[nodiscard]] SoftRows soft_constraint_rows(const StateVector& x, const Eigen::Vector4d& s, const FlightEnvelope& env);

/// Constant matrices of the soft rows: h = Cx x + Cs s - d.
struct SoftRowMatrices {
    Eigen::Matrix<double, 4, kStateDim> Cx;
    Eigen::Matrix4d Cs;
    Eigen::Vector4d d;
};
[[nodiscard]] SoftRowMatrices soft_row_matrices(const FlightEnvelope& env);

/// [phi_dot, theta_dot, deltaT_dot] from the first-order command responses.
[[nodiscard]] Eigen::Vector3d rate_vector(const StateVector& x, const ControlVector& u, const ModelParameters& params);

/// Full per-stage data of the OCP. Stage k decision variables are x_k, u_k
/// (k < N) and s_k (1 <= k <= N); x_0 is pinned to the initial state and
/// carries no error or slack terms, stage N has no control.
class StructuredNlp {
public:
    struct Residual {
        Eigen::VectorXd r;   // stacked residual
        Eigen::VectorXd w;   // diagonal weight of each row
        Eigen::MatrixXd Jx;  // d r / d x_k
        Eigen::MatrixXd Ju;  // d r / d u_k (zero columns at k = N)
        Eigen::MatrixXd Js;  // d r / d s_k (zero columns at k = 0)
    };
    struct Dynamics {
        Eigen::VectorXd next;
        Eigen::MatrixXd A;
        Eigen::MatrixXd B;
    };

    [[nodiscard]] OcpMode mode() const { return mode_; }
    [[nodiscard]] int horizon() const { return N_; }
    [[nodiscard]] double dt() const { return dt_; }
    [[nodiscard]] int nx() const { return state_dim(mode_); }
    [[nodiscard]] int nu() const { return control_dim(mode_); }
    [[nodiscard]] static constexpr int ns() { return kSlackDim; }
    [[nodiscard]] bool has_controls(int k) const { return k < N_; }
    [[nodiscard]] bool has_slacks(int k) const { return k >= 1; }

    [[nodiscard]] const Eigen::VectorXd& initial_state() const { return x_init_; }
    [[nodiscard]] const Eigen::Vector3d& wind() const { return wind_; }
    [[nodiscard]] const ArcLengthPath& path() const { return *path_; }
    [[nodiscard]] const ModelParameters& params() const { return params_; }
    [[nodiscard]] const StageWeights& weights() const { return weights_; }
    [[nodiscard]] const FlightEnvelope& envelope() const { return envelope_; }
    /// CR-MPC: fixed psi_hat per stage (unwrapped). MPCC: empty.
    [[nodiscard]] const std::vector<double>& schedule() const { return schedule_; }
    /// Slew reference u*_{k,i-1} per stage.
    [[nodiscard]] const std::vector<Eigen::VectorXd>& slew_reference() const { return u_ref_; }
    [[nodiscard]] const Eigen::VectorXd& control_lower() const { return u_lo_; }
    [[nodiscard]] const Eigen::VectorXd& control_upper() const { return u_hi_; }

    /// Residual blocks of stage k:
    ///   k = 0:        [b; du]
    ///   0 < k < N:    [y; s; b; du]
    ///   k = N:        [y; s]
    [[nodiscard]] Residual residual(int k, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                    const Eigen::VectorXd& s) const;
    [[nodiscard]] Residual residual_values(int k, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                           const Eigen::VectorXd& s) const;

    /// x_{k+1} = F(x_k, u_k) and its sensitivities (psi_hat integrates psi_dot_c exactly).
    [[nodiscard]] Dynamics dynamics(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;
    [[nodiscard]] Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;

    /// 1/2 sum r' W r over all stages.
    [[nodiscard]] double cost(const std::vector<Eigen::VectorXd>& X, const std::vector<Eigen::VectorXd>& U,
                              const std::vector<Eigen::VectorXd>& S) const;

    /// psi_hat at stage k for state x (MPCC reads it from x).
    [[nodiscard]] double psi_hat(int k, const Eigen::VectorXd& x) const;

private:
    friend StructuredNlp assemble(OcpMode, const AircraftState&, const WindVector&, std::shared_ptr<const ArcLengthPath>,
                                  const ModelParameters&, const StageWeights&, const FlightEnvelope&, double,
                                  std::optional<double>, const std::vector<Eigen::VectorXd>*, int, double);

    Residual evaluate(int k, const Eigen::VectorXd& x, const Eigen::VectorXd& u, const Eigen::VectorXd& s,
                      bool jacobians) const;

    OcpMode mode_ = OcpMode::CrMpc;
    int N_ = 0;
    double dt_ = 0.1;
    Eigen::VectorXd x_init_;
    Eigen::Vector3d wind_ = Eigen::Vector3d::Zero();
    std::shared_ptr<const ArcLengthPath> path_;
    ModelParameters params_;
    StageWeights weights_;
    FlightEnvelope envelope_;
    std::vector<double> schedule_;
    std::vector<Eigen::VectorXd> u_ref_;
    Eigen::VectorXd u_lo_, u_hi_;
};

/// Builds the OCP at the current tick.
///
/// psi_star is the closest path parameter to x_i. CR-MPC needs psi_dot_ref;
/// MPCC appends psi_hat (pinned to psi_star) to the state and psi_dot_c to
/// the control. prev_controls, when given, holds the previous solution's N
/// controls and is used unshifted as the slew reference; without it the slew
/// reference is the level trim command at the current airspeed (plus
/// psi_dot_ref, or else the airspeed clamped to the rate box, for MPCC).
[[nodiscard]] StructuredNlp assemble(OcpMode mode, const AircraftState& x_i, const WindVector& w_i,
                                     std::shared_ptr<const ArcLengthPath> path, const ModelParameters& params,
                                     const StageWeights& weights, const FlightEnvelope& envelope, double psi_star,
                                     std::optional<double> psi_dot_ref,
                                     const std::vector<Eigen::VectorXd>* prev_controls, int N, double dt);

}  // namespace fwmpc
