#include "fwmpc/vehicle_model.hpp"

#include "fwmpc/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace fwmpc {

StateVector AircraftState::vector() const
{
    StateVector x;
    x << n, e, d, phi, theta, chi_a, V_a, gamma_a, delta_T;
    return x;
}

AircraftState AircraftState::from_vector(const StateVector& x)
{
    return {x(0), x(1), x(2), x(3), x(4), x(5), x(6), x(7), x(8)};
}

namespace {

struct ParamField {
    const char* key;
    double ModelParameters::*member;
};

constexpr std::array<ParamField, 15> kParamFields{{
    {"K_phi", &ModelParameters::K_phi},
    {"K_theta", &ModelParameters::K_theta},
    {"tau_T", &ModelParameters::tau_T},
    {"C_L0", &ModelParameters::C_L0},
    {"C_L1", &ModelParameters::C_L1},
    {"C_D0", &ModelParameters::C_D0},
    {"C_D1", &ModelParameters::C_D1},
    {"C_D2", &ModelParameters::C_D2},
    {"C_T", &ModelParameters::C_T},
    {"k_m", &ModelParameters::k_m},
    {"m", &ModelParameters::m},
    {"g", &ModelParameters::g},
    {"rho", &ModelParameters::rho},
    {"S", &ModelParameters::S},
    {"S_p", &ModelParameters::S_p},
}};

const ParamField& find_field(std::string_view key)
{
    for (const auto& f : kParamFields) {
        if (key == f.key) return f;
    }
    throw ArgumentError("unknown model parameter '" + std::string(key) + "'");
}

}  // namespace

const std::vector<std::string>& ModelParameters::keys()
{
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& f : kParamFields) v.emplace_back(f.key);
        return v;
    }();
    return names;
}

const std::vector<std::string>& ModelParameters::open_loop_keys()
{
    static const std::vector<std::string> names{"tau_T", "C_L0", "C_L1", "C_D0",
                                                "C_D1",  "C_D2", "C_T",  "k_m"};
    return names;
}

double ModelParameters::get(std::string_view key) const { return this->*(find_field(key).member); }

void ModelParameters::set(std::string_view key, double value) { this->*(find_field(key).member) = value; }

void ModelParameters::validate() const
{
    for (const auto& f : kParamFields) {
        if (!std::isfinite(this->*(f.member))) {
            throw ArgumentError(std::string("model parameter ") + f.key + " is not finite");
        }
    }
    const std::array<std::pair<const char*, double>, 8> positive{{{"m", m},
                                                                   {"g", g},
                                                                   {"rho", rho},
                                                                   {"S", S},
                                                                   {"S_p", S_p},
                                                                   {"tau_T", tau_T},
                                                                   {"K_phi", K_phi},
                                                                   {"K_theta", K_theta}}};
    for (const auto& [name, value] : positive) {
        if (!(value > 0.0)) throw ArgumentError(std::string("model parameter ") + name + " must be > 0");
    }
    // The propeller model loses meaning once free-stream speed reaches k_m.
    if (!(k_m > 45.0)) throw ArgumentError("model parameter k_m must exceed the maximum expected airspeed");
}

double alpha_of(const AircraftState& state) { return state.theta - state.gamma_a; }

double gamma_from_kinematics(double d_dot, double w_d, double V_a)
{
    if (!(V_a > 0.0)) throw DomainError("gamma_from_kinematics: V_a must be positive");
    const double arg = -(d_dot - w_d) / V_a;
    if (std::abs(arg) > 1.0) {
        throw DomainError("gamma_from_kinematics: vertical air-relative speed exceeds airspeed");
    }
    return std::asin(arg);
}

namespace {

// Force model with partial derivatives with respect to V_a, alpha and delta_T.
struct ForceDerivatives {
    double L, D, T, V_inf;
    double dL_dV, dL_da;
    double dD_dV, dD_da;
    double dT_dV, dT_da, dT_dd;
};

ForceDerivatives force_model(double V, double alpha, double delta, const ModelParameters& p)
{
    ForceDerivatives r{};
    const double qS = 0.5 * p.rho * V * V * p.S;
    const double cl = p.C_L0 + p.C_L1 * alpha;
    const double cd = p.C_D0 + p.C_D1 * alpha + p.C_D2 * alpha * alpha;
    r.L = qS * cl;
    r.D = qS * cd;
    r.dL_dV = p.rho * V * p.S * cl;
    r.dL_da = qS * p.C_L1;
    r.dD_dV = p.rho * V * p.S * cd;
    r.dD_da = qS * (p.C_D1 + 2.0 * p.C_D2 * alpha);

    const double ca = std::cos(alpha);
    const double sa = std::sin(alpha);
    r.V_inf = V * ca;
    const double k = p.rho * p.S_p * p.C_T;
    const double a = p.k_m - r.V_inf;
    r.T = k * delta * (r.V_inf + delta * a) * a;
    const double dT_dVinf = k * delta * (a - 2.0 * delta * a - r.V_inf);
    r.dT_dV = dT_dVinf * ca;
    r.dT_da = dT_dVinf * (-V * sa);
    r.dT_dd = k * a * (r.V_inf + 2.0 * delta * a);
    return r;
}

}  // namespace

ForceSet forces(const AircraftState& state, const ModelParameters& params)
{
    const double alpha = alpha_of(state);
    const auto fm = force_model(state.V_a, alpha, state.delta_T, params);
    ForceSet out;
    out.L = fm.L;
    out.D = fm.D;
    out.T = fm.T;
    out.alpha = alpha;
    out.V_inf = fm.V_inf;
    out.negative_drag = fm.D < 0.0;
    return out;
}

ImuAccels imu_accels(const ForceSet& f, double mass)
{
    const double ca = std::cos(f.alpha);
    const double sa = std::sin(f.alpha);
    const double fx = (f.T * ca - f.D) / mass;
    const double fz = (f.T * sa + f.L) / mass;
    return {ca * fx + sa * fz, sa * fx - ca * fz};
}

void check_state(const StateVector& x)
{
    if (!x.allFinite()) throw InvalidStateError("aircraft state has non-finite components");
    if (x(sx::Va) <= kMinValidAirspeed) {
        throw InvalidStateError("airspeed " + std::to_string(x(sx::Va)) + " m/s is outside the model");
    }
    if (std::abs(x(sx::Gamma)) >= kMaxValidGamma) {
        throw InvalidStateError("flight path angle " + std::to_string(x(sx::Gamma)) +
                                " rad is outside the model");
    }
}

namespace {

// Right-hand side and, when jac is non-null, its Jacobians.
StateVector evaluate(const StateVector& x, const ControlVector& u, const Eigen::Vector3d& w,
                     const ModelParameters& p, ContinuousJacobians* jac)
{
    check_state(x);
    const double phi = x(sx::Phi);
    const double theta = x(sx::Theta);
    const double chi = x(sx::Chi);
    const double V = x(sx::Va);
    const double gam = x(sx::Gamma);
    const double dT = x(sx::DeltaT);
    const double alpha = theta - gam;

    const auto fm = force_model(V, alpha, dT, p);
    const double ca = std::cos(alpha), sa = std::sin(alpha);
    const double cg = std::cos(gam), sg = std::sin(gam);
    const double cc = std::cos(chi), sc = std::sin(chi);
    const double cp = std::cos(phi), sp = std::sin(phi);

    const double normal = fm.T * sa + fm.L;  // force along the lift axis
    const double axial = fm.T * ca - fm.D;   // force along the velocity
    const double m = p.m;

    StateVector f;
    f(sx::N) = V * cg * cc + w(0);
    f(sx::E) = V * cg * sc + w(1);
    f(sx::D) = -V * sg + w(2);
    f(sx::Phi) = p.K_phi * (u(su::PhiC) - phi);
    f(sx::Theta) = p.K_theta * (u(su::ThetaC) - theta);
    f(sx::Chi) = sp * normal / (m * V * cg);
    f(sx::Va) = axial / m - p.g * sg;
    f(sx::Gamma) = (normal * cp - m * p.g * cg) / (m * V);
    f(sx::DeltaT) = (u(su::DeltaTC) - dT) / p.tau_T;

    if (jac == nullptr) return f;

    const double dN_dV = fm.dT_dV * sa + fm.dL_dV;
    const double dN_da = fm.dT_da * sa + fm.T * ca + fm.dL_da;
    const double dN_dd = fm.dT_dd * sa;
    const double dA_dV = fm.dT_dV * ca - fm.dD_dV;
    const double dA_da = fm.dT_da * ca - fm.T * sa - fm.dD_da;
    const double dA_dd = fm.dT_dd * ca;

    auto& J = jac->dfdx;
    J.setZero();
    J(sx::N, sx::Chi) = -V * cg * sc;
    J(sx::N, sx::Va) = cg * cc;
    J(sx::N, sx::Gamma) = -V * sg * cc;
    J(sx::E, sx::Chi) = V * cg * cc;
    J(sx::E, sx::Va) = cg * sc;
    J(sx::E, sx::Gamma) = -V * sg * sc;
    J(sx::D, sx::Va) = -sg;
    J(sx::D, sx::Gamma) = -V * cg;
    J(sx::Phi, sx::Phi) = -p.K_phi;
    J(sx::Theta, sx::Theta) = -p.K_theta;

    const double chi_scale = 1.0 / (m * V * cg);
    J(sx::Chi, sx::Phi) = cp * normal * chi_scale;
    J(sx::Chi, sx::Theta) = sp * dN_da * chi_scale;
    J(sx::Chi, sx::Va) = sp / (m * cg) * (dN_dV * V - normal) / (V * V);
    J(sx::Chi, sx::Gamma) = sp / (m * V) * (-dN_da / cg + normal * sg / (cg * cg));
    J(sx::Chi, sx::DeltaT) = sp * dN_dd * chi_scale;

    J(sx::Va, sx::Theta) = dA_da / m;
    J(sx::Va, sx::Va) = dA_dV / m;
    J(sx::Va, sx::Gamma) = -dA_da / m - p.g * cg;
    J(sx::Va, sx::DeltaT) = dA_dd / m;

    const double mv = m * V;
    J(sx::Gamma, sx::Phi) = -normal * sp / mv;
    J(sx::Gamma, sx::Theta) = dN_da * cp / mv;
    J(sx::Gamma, sx::Va) = dN_dV * cp / mv - (normal * cp - m * p.g * cg) / (mv * V);
    J(sx::Gamma, sx::Gamma) = (-dN_da * cp + m * p.g * sg) / mv;
    J(sx::Gamma, sx::DeltaT) = dN_dd * cp / mv;

    J(sx::DeltaT, sx::DeltaT) = -1.0 / p.tau_T;

    jac->dfdu.setZero();
    jac->dfdu(sx::Phi, su::PhiC) = p.K_phi;
    jac->dfdu(sx::Theta, su::ThetaC) = p.K_theta;
    jac->dfdu(sx::DeltaT, su::DeltaTC) = 1.0 / p.tau_T;
    jac->f = f;
    return f;
}

}  // namespace

StateVector continuous_dynamics(const StateVector& x, const ControlVector& u, const Eigen::Vector3d& wind,
                                const ModelParameters& params)
{
    return evaluate(x, u, wind, params, nullptr);
}

StateVector continuous_dynamics(const AircraftState& state, const ControlCommand& cmd, const WindVector& wind,
                                const ModelParameters& params)
{
    return evaluate(state.vector(), cmd.vector(), wind.vector(), params, nullptr);
}

ContinuousJacobians continuous_jacobians(const StateVector& x, const ControlVector& u,
                                         const Eigen::Vector3d& wind, const ModelParameters& params)
{
    ContinuousJacobians jac;
    evaluate(x, u, wind, params, &jac);
    return jac;
}

StateVector rk4_step(const StateVector& x, const ControlVector& u, const Eigen::Vector3d& wind, double dt,
                     const ModelParameters& params)
{
    if (dt == 0.0) return x;
    if (!(dt > 0.0)) throw ArgumentError("rk4_step: dt must be non-negative");
    const StateVector k1 = evaluate(x, u, wind, params, nullptr);
    const StateVector k2 = evaluate(x + 0.5 * dt * k1, u, wind, params, nullptr);
    const StateVector k3 = evaluate(x + 0.5 * dt * k2, u, wind, params, nullptr);
    const StateVector k4 = evaluate(x + dt * k3, u, wind, params, nullptr);
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

AircraftState rk4_step(const AircraftState& state, const ControlCommand& cmd, const WindVector& wind, double dt,
                       const ModelParameters& params)
{
    return AircraftState::from_vector(rk4_step(state.vector(), cmd.vector(), wind.vector(), dt, params));
}

DiscreteJacobians discrete_jacobians(const StateVector& x, const ControlVector& u, const Eigen::Vector3d& wind,
                                     double dt, const ModelParameters& params)
{
    DiscreteJacobians out;
    if (dt == 0.0) {
        check_state(x);
        out.next = x;
        out.A.setIdentity();
        out.B.setZero();
        return out;
    }
    if (!(dt > 0.0)) throw ArgumentError("discrete_jacobians: dt must be non-negative");

    const StateMatrix I = StateMatrix::Identity();
    const auto j1 = continuous_jacobians(x, u, wind, params);
    const StateMatrix dk1x = j1.dfdx;
    const InputMatrix dk1u = j1.dfdu;

    const auto j2 = continuous_jacobians(x + 0.5 * dt * j1.f, u, wind, params);
    const StateMatrix dk2x = j2.dfdx * (I + 0.5 * dt * dk1x);
    const InputMatrix dk2u = j2.dfdx * (0.5 * dt * dk1u) + j2.dfdu;

    const auto j3 = continuous_jacobians(x + 0.5 * dt * j2.f, u, wind, params);
    const StateMatrix dk3x = j3.dfdx * (I + 0.5 * dt * dk2x);
    const InputMatrix dk3u = j3.dfdx * (0.5 * dt * dk2u) + j3.dfdu;

    const auto j4 = continuous_jacobians(x + dt * j3.f, u, wind, params);
    const StateMatrix dk4x = j4.dfdx * (I + dt * dk3x);
    const InputMatrix dk4u = j4.dfdx * (dt * dk3u) + j4.dfdu;

    out.next = x + dt / 6.0 * (j1.f + 2.0 * j2.f + 2.0 * j3.f + j4.f);
    out.A = I + dt / 6.0 * (dk1x + 2.0 * dk2x + 2.0 * dk3x + dk4x);
    out.B = dt / 6.0 * (dk1u + 2.0 * dk2u + 2.0 * dk3u + dk4u);
    return out;
}

double coordinated_turn_radius(double V, double phi, double g)
{
    if (!(V > 0.0) || !(g > 0.0)) throw DomainError("coordinated_turn_radius: V and g must be positive");
    if (phi == 0.0 || std::abs(phi) >= std::numbers::pi / 2) {
        throw DomainError("coordinated_turn_radius: requires 0 < |phi| < pi/2");
    }
    return V * V / (g * std::tan(std::abs(phi)));
}

TrimPoint level_trim(double V_a, const ModelParameters& p)
{
    if (!(V_a > kMinValidAirspeed)) throw SolverError("level_trim: airspeed must be positive");
    // Unknowns: alpha (= theta at gamma = 0) and throttle. Residuals are the
    // axial and normal force balances.
    double alpha = (2.0 * p.m * p.g / (p.rho * V_a * V_a * p.S) - p.C_L0) / p.C_L1;
    double delta = 0.5;
    for (int it = 0; it < 50; ++it) {
        const auto fm = force_model(V_a, alpha, delta, p);
        const double ca = std::cos(alpha), sa = std::sin(alpha);
        const Eigen::Vector2d r(fm.T * ca - fm.D, fm.T * sa + fm.L - p.m * p.g);
        if (r.norm() < 1e-11) break;
        Eigen::Matrix2d J;
        J(0, 0) = fm.dT_da * ca - fm.T * sa - fm.dD_da;
        J(0, 1) = fm.dT_dd * ca;
        J(1, 0) = fm.dT_da * sa + fm.T * ca + fm.dL_da;
        J(1, 1) = fm.dT_dd * sa;
        Eigen::Vector2d step = J.fullPivLu().solve(-r);
        if (!step.allFinite()) throw SolverError("level_trim: singular force balance");
        // Limit steps so the iteration stays on the physical branch.
        const double scale = std::min({1.0, 0.1 / std::max(std::abs(step(0)), 1e-300),
                                       0.5 / std::max(std::abs(step(1)), 1e-300)});
        alpha += scale * step(0);
        delta += scale * step(1);
    }
    const auto fm = force_model(V_a, alpha, delta, p);
    const double residual = std::hypot(fm.T * std::cos(alpha) - fm.D,
                                       fm.T * std::sin(alpha) + fm.L - p.m * p.g);
    if (!(residual < 1e-8) || delta < -1e-12 || delta > 1.0 + 1e-12) {
        throw SolverError("level_trim: no equilibrium at V_a = " + std::to_string(V_a) + " m/s");
    }
    TrimPoint t;
    t.alpha = alpha;
    t.command = {0.0, alpha, delta};
    t.state.V_a = V_a;
    t.state.theta = alpha;
    t.state.delta_T = delta;
    return t;
}

TrimPoint best_effort_trim(double V_a, const ModelParameters& params)
{
    double v = std::isfinite(V_a) ? std::clamp(V_a, 15.0, 45.0) : 25.0;
    for (int attempt = 0; attempt < 40; ++attempt) {
        try {
            TrimPoint t = level_trim(v, params);
            t.command.theta_c = std::clamp(t.command.theta_c, -10.0 * std::numbers::pi / 180,
                                           10.0 * std::numbers::pi / 180);
            t.command.delta_Tc = std::clamp(t.command.delta_Tc, 0.0, 1.0);
            return t;
        } catch (const SolverError&) {
            // Too fast for the available thrust or too slow for lift: move
            // toward the middle of the envelope.
            v += (v > 25.0) ? -1.0 : 1.0;
        }
    }
    TrimPoint t;
    t.command = {0.0, 0.03, 0.5};
    t.alpha = 0.03;
    t.state.V_a = v;
    t.state.theta = 0.03;
    t.state.delta_T = 0.5;
    return t;
}

}  // namespace fwmpc
