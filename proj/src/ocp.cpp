#include "fwmpc/ocp.hpp"

#include "fwmpc/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace fwmpc {

std::string_view to_string(OcpMode mode) { return mode == OcpMode::Mpcc ? "mpcc" : "cr-mpc"; }

OcpMode ocp_mode_from_string(std::string_view name)
{
    if (name == "cr-mpc") return OcpMode::CrMpc;
    if (name == "mpcc") return OcpMode::Mpcc;
    throw ArgumentError("unknown OCP mode '" + std::string(name) + "' (expected cr-mpc or mpcc)");
}

namespace {

template <typename T>
struct Field {
    const char* key;
    double T::*member;
};

constexpr std::array<Field<StageWeights>, 16> kWeightFields{{
    {"q_n", &StageWeights::q_n},
    {"q_e", &StageWeights::q_e},
    {"q_d", &StageWeights::q_d},
    {"q_chi", &StageWeights::q_chi},
    {"q_gamma", &StageWeights::q_gamma},
    {"b_phidot", &StageWeights::b_phidot},
    {"b_thetadot", &StageWeights::b_thetadot},
    {"b_deltaTdot", &StageWeights::b_deltaTdot},
    {"s_alpha", &StageWeights::s_alpha},
    {"s_Va", &StageWeights::s_Va},
    {"r_phi", &StageWeights::r_phi},
    {"r_theta", &StageWeights::r_theta},
    {"r_deltaT", &StageWeights::r_deltaT},
    {"r_psidot", &StageWeights::r_psidot},
    {"lambda", &StageWeights::lambda},
    {"mu", &StageWeights::mu},
}};

constexpr std::array<Field<FlightEnvelope>, 12> kEnvelopeFields{{
    {"Va_min", &FlightEnvelope::Va_min},
    {"Va_max", &FlightEnvelope::Va_max},
    {"alpha_min", &FlightEnvelope::alpha_min},
    {"alpha_max", &FlightEnvelope::alpha_max},
    {"phi_c_min", &FlightEnvelope::phi_c_min},
    {"phi_c_max", &FlightEnvelope::phi_c_max},
    {"theta_c_min", &FlightEnvelope::theta_c_min},
    {"theta_c_max", &FlightEnvelope::theta_c_max},
    {"delta_Tc_min", &FlightEnvelope::delta_Tc_min},
    {"delta_Tc_max", &FlightEnvelope::delta_Tc_max},
    {"psidot_c_min", &FlightEnvelope::psidot_c_min},
    {"psidot_c_max", &FlightEnvelope::psidot_c_max},
}};

template <typename T, std::size_t M>
const Field<T>& find(const std::array<Field<T>, M>& fields, std::string_view key, const char* what)
{
    for (const auto& f : fields) {
        if (key == f.key) return f;
    }
    throw ArgumentError(std::string("unknown ") + what + " '" + std::string(key) + "'");
}

template <typename T, std::size_t M>
std::vector<std::string> names_of(const std::array<Field<T>, M>& fields)
{
    std::vector<std::string> v;
    for (const auto& f : fields) v.emplace_back(f.key);
    return v;
}

}  // namespace

void StageWeights::validate() const
{
    for (const auto& f : kWeightFields) {
        const double v = this->*(f.member);
        if (!std::isfinite(v) || v < 0.0) throw ArgumentError(std::string("weight ") + f.key + " must be >= 0");
    }
    if (lambda > 1.0) throw ArgumentError("weight lambda must lie in [0, 1]");
}

const std::vector<std::string>& StageWeights::keys()
{
    static const std::vector<std::string> names = names_of(kWeightFields);
    return names;
}

double StageWeights::get(std::string_view key) const { return this->*(find(kWeightFields, key, "weight").member); }

void StageWeights::set(std::string_view key, double value) { this->*(find(kWeightFields, key, "weight").member) = value; }

void FlightEnvelope::validate() const
{
    for (std::size_t i = 0; i < kEnvelopeFields.size(); i += 2) {
        const double lo = this->*(kEnvelopeFields[i].member);
        const double hi = this->*(kEnvelopeFields[i + 1].member);
        if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
            throw ArgumentError(std::string("envelope bounds ") + kEnvelopeFields[i].key + " < " +
                                kEnvelopeFields[i + 1].key + " violated");
        }
    }
}

const std::vector<std::string>& FlightEnvelope::keys()
{
    static const std::vector<std::string> names = names_of(kEnvelopeFields);
    return names;
}

double FlightEnvelope::get(std::string_view key) const { return this->*(find(kEnvelopeFields, key, "envelope field").member); }

void FlightEnvelope::set(std::string_view key, double value)
{
    this->*(find(kEnvelopeFields, key, "envelope field").member) = value;
}

Eigen::VectorXd FlightEnvelope::control_lower(OcpMode mode) const
{
    Eigen::VectorXd v(control_dim(mode));
    v.head<3>() << phi_c_min, theta_c_min, delta_Tc_min;
    if (mode == OcpMode::Mpcc) v(3) = psidot_c_min;
    return v;
}

Eigen::VectorXd FlightEnvelope::control_upper(OcpMode mode) const
{
    Eigen::VectorXd v(control_dim(mode));
    v.head<3>() << phi_c_max, theta_c_max, delta_Tc_max;
    if (mode == OcpMode::Mpcc) v(3) = psidot_c_max;
    return v;
}

ControlCommand FlightEnvelope::clamp(const ControlCommand& cmd) const
{
    return {std::clamp(cmd.phi_c, phi_c_min, phi_c_max), std::clamp(cmd.theta_c, theta_c_min, theta_c_max),
            std::clamp(cmd.delta_Tc, delta_Tc_min, delta_Tc_max)};
}

std::vector<double> reference_schedule(double psi_star, double psi_dot_ref, double dt, int N, const ArcLengthPath* path)
{
    if (N < 0) throw ArgumentError("reference_schedule: N must be >= 0");
    std::vector<double> out(N + 1);
    for (int k = 0; k <= N; ++k) {
        const double psi = psi_star + psi_dot_ref * k * dt;
        out[k] = (path && path->closed()) ? path->wrap(psi) : psi;
    }
    return out;
}

double wrap_angle(double a)
{
    double w = std::atan2(std::sin(a), std::cos(a));
    if (w == -std::numbers::pi) w = std::numbers::pi;
    return w;
}

namespace {

// Parameter used for path queries: wrapped on closed paths, clamped on open
// ones. `inside` is false when clamping was active.
double path_query(const ArcLengthPath& path, double psi, bool& inside)
{
    inside = true;
    if (path.closed()) return path.wrap(psi);
    if (psi < 0.0 || psi > path.total_length()) inside = false;
    return std::clamp(psi, 0.0, path.total_length());
}

}  // namespace

StageError stage_error(const StateVector& x, double psi_hat, const Eigen::Vector3d& wind, const ArcLengthPath& path,
                       OcpMode mode, const FlightEnvelope& env)
{
    check_state(x);
    bool inside = true;
    const PathDerivatives pd = path.derivatives(path_query(path, psi_hat, inside));
    const int ny = error_dim(mode);
    StageError out;
    out.y.setZero(ny);
    out.dy_dx.setZero(ny, kStateDim);
    out.dy_dpsi.setZero(ny);

    out.y.head<3>() = x.head<3>() - pd.r;
    out.dy_dx.block<3, 3>(0, 0).setIdentity();
    if (inside) out.dy_dpsi.head<3>() = -pd.d1;

    // course error from inertial ground velocity
    const double V = x(sx::Va), ga = x(sx::Gamma), chi = x(sx::Chi);
    const double cg = std::cos(ga), sg = std::sin(ga), cc = std::cos(chi), sc = std::sin(chi);
    const double ndot = V * cg * cc + wind(0);
    const double edot = V * cg * sc + wind(1);
    const double Tn = pd.d1(0), Te = pd.d1(1), Td = pd.d1(2);
    out.y(3) = wrap_angle(std::atan2(edot, ndot) - std::atan2(Te, Tn));
    const double g2 = ndot * ndot + edot * edot;
    if (g2 > 1e-12) {
        // d atan2(e, n) = (n de - e dn) / (n^2 + e^2)
        const double dn_dV = cg * cc, dn_dg = -V * sg * cc, dn_dc = -V * cg * sc;
        const double de_dV = cg * sc, de_dg = -V * sg * sc, de_dc = V * cg * cc;
        out.dy_dx(3, sx::Va) = (ndot * de_dV - edot * dn_dV) / g2;
        out.dy_dx(3, sx::Gamma) = (ndot * de_dg - edot * dn_dg) / g2;
        out.dy_dx(3, sx::Chi) = (ndot * de_dc - edot * dn_dc) / g2;
    }
    const double t2 = Tn * Tn + Te * Te;
    if (inside && t2 > 1e-12) out.dy_dpsi(3) = -(Tn * pd.d2(1) - Te * pd.d2(0)) / t2;

    // flight path angle error
    const double tnorm = pd.d1.norm();
    const double sin_gp = std::clamp(-Td / tnorm, -1.0, 1.0);
    out.y(4) = ga - std::asin(sin_gp);
    out.dy_dx(4, sx::Gamma) = 1.0;
    const double cos_gp = std::sqrt(std::max(1e-12, 1.0 - sin_gp * sin_gp));
    if (inside) {
        const double dsin = -pd.d2(2) / tnorm + Td * pd.d1.dot(pd.d2) / (tnorm * tnorm * tnorm);
        out.dy_dpsi(4) = -dsin / cos_gp;
    }

    if (mode == OcpMode::Mpcc) {
        out.y(5) = env.Va_max - V;
        out.dy_dx(5, sx::Va) = -1.0;
    }
    return out;
}

SoftRowMatrices soft_row_matrices(const FlightEnvelope& env)
{
    SoftRowMatrices m;
    m.Cx.setZero();
    m.Cx(0, sx::Va) = 1.0;
    m.Cx(1, sx::Theta) = 1.0;
    m.Cx(1, sx::Gamma) = -1.0;
    m.Cx(2, sx::Va) = -1.0;
    m.Cx(3, sx::Theta) = -1.0;
    m.Cx(3, sx::Gamma) = 1.0;
    m.Cs = -Eigen::Matrix4d::Identity();
    m.d << env.Va_max, env.alpha_max, -env.Va_min, -env.alpha_min;
    return m;
}

SoftRows soft_constraint_rows(const StateVector& x, const Eigen::Vector4d& s, const FlightEnvelope& env)
{
    const SoftRowMatrices m = soft_row_matrices(env);
    const Eigen::Vector4d base = m.Cx * x - m.d;
    return {base + m.Cs * s, base.cwiseMax(0.0)};
}

Eigen::Vector3d rate_vector(const StateVector& x, const ControlVector& u, const ModelParameters& p)
{
    return {p.K_phi * (u(su::PhiC) - x(sx::Phi)), p.K_theta * (u(su::ThetaC) - x(sx::Theta)),
            (u(su::DeltaTC) - x(sx::DeltaT)) / p.tau_T};
}

double StructuredNlp::psi_hat(int k, const Eigen::VectorXd& x) const
{
    return mode_ == OcpMode::Mpcc ? x(kStateDim) : schedule_.at(k);
}

StructuredNlp::Residual StructuredNlp::evaluate(int k, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                                const Eigen::VectorXd& s, bool jacobians) const
{
    if (k < 0 || k > N_) throw ArgumentError("stage index out of range");
    const int nx_ = nx(), nu_ = nu();
    const int ny = error_dim(mode_);
    const bool with_y = k >= 1;
    const bool with_b = k < N_;
    const int rows = (with_y ? ny + kSlackDim : 0) + (with_b ? 3 + nu_ : 0);

    Residual res;
    res.r.setZero(rows);
    res.w.setZero(rows);
    if (jacobians) {
        res.Jx.setZero(rows, nx_);
        res.Ju.setZero(rows, nu_);
        res.Js.setZero(rows, kSlackDim);
    }
    const StateVector xa = x.head<kStateDim>();
    const StageWeights& W = weights_;
    int row = 0;
    if (with_y) {
        const StageError e = stage_error(xa, psi_hat(k, x), wind_, *path_, mode_, envelope_);
        res.r.segment(row, ny) = e.y;
        res.w.segment(row, 5) << W.q_n, W.q_e, W.q_d, W.q_chi, W.q_gamma;
        if (mode_ == OcpMode::Mpcc) res.w(row + 5) = k < N_ ? W.mu : 0.0;
        if (jacobians) {
            res.Jx.block(row, 0, ny, kStateDim) = e.dy_dx;
            if (mode_ == OcpMode::Mpcc) res.Jx.block(row, kStateDim, ny, 1) = e.dy_dpsi;
        }
        row += ny;
        res.r.segment<kSlackDim>(row) = s;
        res.w.segment<kSlackDim>(row) << W.s_Va, W.s_alpha, W.s_Va, W.s_alpha;
        if (jacobians) res.Js.block<kSlackDim, kSlackDim>(row, 0).setIdentity();
        row += kSlackDim;
    }
    if (with_b) {
        const ControlVector ua = u.head<kControlDim>();
        res.r.segment<3>(row) = rate_vector(xa, ua, params_);
        res.w.segment<3>(row) << W.b_phidot, W.b_thetadot, W.b_deltaTdot;
        if (jacobians) {
            res.Jx(row, sx::Phi) = -params_.K_phi;
            res.Ju(row, su::PhiC) = params_.K_phi;
            res.Jx(row + 1, sx::Theta) = -params_.K_theta;
            res.Ju(row + 1, su::ThetaC) = params_.K_theta;
            res.Jx(row + 2, sx::DeltaT) = -1.0 / params_.tau_T;
            res.Ju(row + 2, su::DeltaTC) = 1.0 / params_.tau_T;
        }
        row += 3;
        const double discount = std::pow(W.lambda, k);
        res.r.segment(row, nu_) = u - u_ref_[k];
        res.w.segment<3>(row) << W.r_phi, W.r_theta, W.r_deltaT;
        if (mode_ == OcpMode::Mpcc) res.w(row + 3) = W.r_psidot;
        res.w.segment(row, nu_) *= discount;
        if (jacobians) res.Ju.block(row, 0, nu_, nu_).setIdentity();
        row += nu_;
    }
    return res;
}

StructuredNlp::Residual StructuredNlp::residual(int k, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                                const Eigen::VectorXd& s) const
{
    return evaluate(k, x, u, s, true);
}

StructuredNlp::Residual StructuredNlp::residual_values(int k, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                                       const Eigen::VectorXd& s) const
{
    return evaluate(k, x, u, s, false);
}

StructuredNlp::Dynamics StructuredNlp::dynamics(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const
{
    const int nx_ = nx(), nu_ = nu();
    const DiscreteJacobians dj =
        discrete_jacobians(x.head<kStateDim>(), u.head<kControlDim>(), wind_, dt_, params_);
    Dynamics d;
    d.next.resize(nx_);
    d.A.setZero(nx_, nx_);
    d.B.setZero(nx_, nu_);
    d.next.head<kStateDim>() = dj.next;
    d.A.topLeftCorner<kStateDim, kStateDim>() = dj.A;
    d.B.topLeftCorner<kStateDim, kControlDim>() = dj.B;
    if (mode_ == OcpMode::Mpcc) {
        d.next(kStateDim) = x(kStateDim) + dt_ * u(kControlDim);
        d.A(kStateDim, kStateDim) = 1.0;
        d.B(kStateDim, kControlDim) = dt_;
    }
    return d;
}

Eigen::VectorXd StructuredNlp::step(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const
{
    Eigen::VectorXd next(nx());
    next.head<kStateDim>() = rk4_step(x.head<kStateDim>(), u.head<kControlDim>(), wind_, dt_, params_);
    if (mode_ == OcpMode::Mpcc) next(kStateDim) = x(kStateDim) + dt_ * u(kControlDim);
    return next;
}

double StructuredNlp::cost(const std::vector<Eigen::VectorXd>& X, const std::vector<Eigen::VectorXd>& U,
                           const std::vector<Eigen::VectorXd>& S) const
{
    if (static_cast<int>(X.size()) != N_ + 1 || static_cast<int>(U.size()) != N_ ||
        static_cast<int>(S.size()) != N_ + 1) {
        throw ArgumentError("cost: trajectory lengths do not match the horizon");
    }
    double total = 0.0;
    const Eigen::VectorXd no_u = Eigen::VectorXd::Zero(nu());
    for (int k = 0; k <= N_; ++k) {
        const Residual r = residual_values(k, X[k], k < N_ ? U[k] : no_u, S[k]);
        total += 0.5 * r.r.dot(r.w.asDiagonal() * r.r);
    }
    return total;
}

StructuredNlp assemble(OcpMode mode, const AircraftState& x_i, const WindVector& w_i,
                       std::shared_ptr<const ArcLengthPath> path, const ModelParameters& params,
                       const StageWeights& weights, const FlightEnvelope& envelope, double psi_star,
                       std::optional<double> psi_dot_ref, const std::vector<Eigen::VectorXd>* prev_controls, int N,
                       double dt)
{
    if (N < 1) throw ArgumentError("assemble: horizon N must be >= 1");
    if (!(dt > 0.0)) throw ArgumentError("assemble: dt must be positive");
    if (!path) throw ArgumentError("assemble: path is required");
    if (mode == OcpMode::CrMpc && !psi_dot_ref) throw ArgumentError("assemble: CR-MPC needs psi_dot_ref");
    if (psi_dot_ref && !std::isfinite(*psi_dot_ref)) throw ArgumentError("assemble: psi_dot_ref must be finite");
    params.validate();
    weights.validate();
    envelope.validate();
    const StateVector xa = x_i.vector();
    check_state(xa);

    StructuredNlp nlp;
    nlp.mode_ = mode;
    nlp.N_ = N;
    nlp.dt_ = dt;
    nlp.wind_ = w_i.vector();
    nlp.path_ = std::move(path);
    nlp.params_ = params;
    nlp.weights_ = weights;
    nlp.envelope_ = envelope;
    nlp.u_lo_ = envelope.control_lower(mode);
    nlp.u_hi_ = envelope.control_upper(mode);

    nlp.x_init_.resize(state_dim(mode));
    nlp.x_init_.head<kStateDim>() = xa;
    if (mode == OcpMode::Mpcc) {
        nlp.x_init_(kStateDim) = psi_star;
    } else {
        nlp.schedule_ = reference_schedule(psi_star, *psi_dot_ref, dt, N);
    }

    const int nu = control_dim(mode);
    if (prev_controls) {
        if (static_cast<int>(prev_controls->size()) != N) {
            throw ArgumentError("assemble: previous solution has the wrong horizon");
        }
        for (const auto& u : *prev_controls) {
            if (u.size() != nu) throw ArgumentError("assemble: previous controls have the wrong dimension");
        }
        nlp.u_ref_ = *prev_controls;
    } else {
        const TrimPoint trim = best_effort_trim(x_i.V_a, params);
        Eigen::VectorXd ref(nu);
        ref.head<3>() = envelope.clamp(trim.command).vector();
        if (mode == OcpMode::Mpcc) {
            ref(3) = std::clamp(psi_dot_ref.value_or(x_i.V_a), envelope.psidot_c_min, envelope.psidot_c_max);
        }
        nlp.u_ref_.assign(N, ref);
    }
    return nlp;
}

}  // namespace fwmpc
