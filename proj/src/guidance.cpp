#include "fwmpc/guidance.hpp"

#include "fwmpc/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

namespace fwmpc {

namespace {

bool matches(const OcpSolution& s, OcpMode mode, int N)
{
    return s.horizon() == N && !s.X.empty() && s.X.front().size() == state_dim(mode) &&
           s.U.front().size() == control_dim(mode);
}

// Point at arc distance `ahead` past psi; open paths continue along the end
// tangent.
Eigen::Vector3d point_ahead(const ArcLengthPath& path, double psi, double ahead)
{
    const double target = psi + ahead;
    if (path.closed()) return path.position(path.wrap(target));
    const double L = path.total_length();
    if (target <= L) return path.position(std::max(target, 0.0));
    return path.position(L) + (target - L) * path.frame_at(L).tangent;
}

// Integrates only while the output is unsaturated or the error drives it
// back inside the box.
double integrate(double integ, double err, double period, double unsat, double lo, double hi, double limit)
{
    const bool saturated_high = unsat > hi && err > 0.0;
    const bool saturated_low = unsat < lo && err < 0.0;
    if (!saturated_high && !saturated_low) integ += err * period;
    return std::clamp(integ, -limit, limit);
}

GuidanceOutput mpc_query(OcpMode mode, ControllerState& cs, const AircraftState& x, const WindVector& w,
                         const std::shared_ptr<const ArcLengthPath>& path, const ControllerConfig& cfg)
{
    if (!path) throw ArgumentError("guidance query: no path");
    check_state(x.vector());
    const auto start = std::chrono::steady_clock::now();
    GuidanceOutput out;
    out.psi_star = update_closest(cs, x, *path, cfg);
    ++cs.queries;

    const bool warm = cs.previous && matches(*cs.previous, mode, cfg.N);
    const std::optional<double> rate = mode == OcpMode::CrMpc ? std::optional<double>(cfg.psi_dot_ref) : std::nullopt;
    std::optional<OcpSolution> guess;
    Eigen::VectorXd u;
    try {
        const StructuredNlp nlp = assemble(mode, x, w, path, cfg.model, cfg.weights, cfg.envelope, out.psi_star, rate,
                                           warm ? &cs.previous->U : nullptr, cfg.N, cfg.dt);
        guess = warm ? shift_warm_start(*cs.previous, nlp) : cold_start(nlp);
        OcpSolution sol = cs.solver.rti_step(nlp, *guess);
        out.degraded = sol.degraded;
        out.qp_iterations = sol.qp_iterations;
        out.kkt = sol.kkt.max();
        u = sol.U.front();
        cs.previous = std::move(sol);
    } catch (const Error&) {
        out.degraded = true;
        if (guess) {
            u = guess->U.front();
            cs.previous = std::move(*guess);
        } else if (warm) {
            u = cs.previous->U[std::min(1, cfg.N - 1)];
        } else {
            u = cfg.envelope.control_lower(mode);
            u.head<kControlDim>() = cfg.envelope.clamp(best_effort_trim(x.V_a, cfg.model).command).vector();
            if (mode == OcpMode::Mpcc) u(kControlDim) = std::clamp(x.V_a, cfg.envelope.psidot_c_min, cfg.envelope.psidot_c_max);
        }
    }
    out.command = cfg.envelope.clamp(ControlCommand::from_vector(u.head<kControlDim>()));
    if (mode == OcpMode::Mpcc) {
        out.psi_dot_c = std::clamp(u(kControlDim), cfg.envelope.psidot_c_min, cfg.envelope.psidot_c_max);
    }
    out.solve_time = std::max(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 1e-9);
    return out;
}

}  // namespace

std::string_view to_string(ControllerMode mode)
{
    switch (mode) {
    case ControllerMode::CrMpc: return "cr-mpc";
    case ControllerMode::Mpcc: return "mpcc";
    case ControllerMode::Lookahead: return "lookahead";
    }
    return "unknown";
}

ControllerMode controller_mode_from_string(std::string_view name)
{
    if (name == "cr-mpc") return ControllerMode::CrMpc;
    if (name == "mpcc") return ControllerMode::Mpcc;
    if (name == "lookahead") return ControllerMode::Lookahead;
    throw ArgumentError("unknown controller '" + std::string(name) + "' (expected cr-mpc, mpcc or lookahead)");
}

void LookaheadGains::validate() const
{
    for (double g : {kp_airspeed, ki_airspeed, kp_altitude, ki_altitude}) {
        if (!std::isfinite(g) || g < 0.0) throw ArgumentError("lookahead gains must be finite and nonnegative");
    }
    if (!(airspeed_integrator_limit >= 0.0) || !(altitude_integrator_limit >= 0.0)) {
        throw ArgumentError("integrator limits must be nonnegative");
    }
}

void ControllerConfig::validate() const
{
    if (N < 1) throw ArgumentError("horizon length N must be >= 1");
    if (!(dt > 0.0) || !(horizon > 0.0) || !(query_period > 0.0) || !(lookahead_time > 0.0)) {
        throw ArgumentError("dt, horizon, query_period and lookahead_time must be positive");
    }
    if (std::abs(N * dt - horizon) > 1e-9 * horizon) {
        throw ArgumentError("N dt = " + std::to_string(N * dt) + " s does not match the horizon " +
                            std::to_string(horizon) + " s");
    }
    if (!(psi_dot_ref > 0.0) || !(airspeed_ref > 0.0)) throw ArgumentError("reference speeds must be positive");
    if (!(window_margin >= 0.0)) throw ArgumentError("window_margin must be nonnegative");
    weights.validate();
    envelope.validate();
    model.validate();
    gains.validate();
}

double ControllerConfig::search_window() const
{
    return 2.0 * envelope.psidot_c_max * query_period + window_margin;
}

double update_closest(ControllerState& cs, const AircraftState& x, const ArcLengthPath& path,
                      const ControllerConfig& cfg)
{
    const Eigen::Vector3d r = x.position();
    const double psi = cs.psi_hint ? path.closest_param_local(r, *cs.psi_hint, cfg.search_window())
                                   : path.closest_param_global(r);
    cs.psi_hint = psi;
    return psi;
}

GuidanceOutput cr_mpc_query(ControllerState& cs, const AircraftState& x, const WindVector& w,
                            const std::shared_ptr<const ArcLengthPath>& path, const ControllerConfig& cfg)
{
    return mpc_query(OcpMode::CrMpc, cs, x, w, path, cfg);
}

GuidanceOutput mpcc_query(ControllerState& cs, const AircraftState& x, const WindVector& w,
                          const std::shared_ptr<const ArcLengthPath>& path, const ControllerConfig& cfg)
{
    return mpc_query(OcpMode::Mpcc, cs, x, w, path, cfg);
}

GuidanceOutput lookahead_query(ControllerState& cs, const AircraftState& x, const WindVector& w,
                               const ArcLengthPath& path, const ControllerConfig& cfg)
{
    check_state(x.vector());
    GuidanceOutput out;
    out.psi_star = update_closest(cs, x, path, cfg);
    ++cs.queries;
    const FlightEnvelope& env = cfg.envelope;
    const LookaheadGains& k = cfg.gains;

    // lateral: L1 law on the horizontal ground track
    const double vh = x.V_a * std::cos(x.gamma_a);
    const Eigen::Vector2d vg(vh * std::cos(x.chi_a) + w.w_n, vh * std::sin(x.chi_a) + w.w_e);
    const double Vg = std::max(vg.norm(), 1.0);
    const double L1 = cfg.lookahead_time * Vg;
    const Eigen::Vector3d target = point_ahead(path, out.psi_star, L1);
    const Eigen::Vector2d los(target(0) - x.n, target(1) - x.e);
    const double eta = wrap_angle(std::atan2(los(1), los(0)) - std::atan2(vg(1), vg(0)));
    const double a_lat = 2.0 * Vg * Vg * std::sin(eta) / L1;
    const double phi_c = std::atan(a_lat / cfg.model.g);

    // longitudinal: PI airspeed -> throttle, PI altitude -> pitch
    const TrimPoint trim = best_effort_trim(cfg.airspeed_ref, cfg.model);
    const PathFrame frame = path.frame_at(out.psi_star);
    const double gamma_path = std::asin(std::clamp(-frame.tangent(2), -1.0, 1.0));
    const double e_V = cfg.airspeed_ref - x.V_a;
    const double e_h = x.d - path.position(out.psi_star)(2);

    auto throttle = [&](double integ) { return trim.command.delta_Tc + k.kp_airspeed * e_V + k.ki_airspeed * integ; };
    auto pitch = [&](double integ) {
        return trim.command.theta_c + gamma_path + k.kp_altitude * e_h + k.ki_altitude * integ;
    };
    cs.airspeed_integrator = integrate(cs.airspeed_integrator, e_V, cfg.query_period, throttle(cs.airspeed_integrator),
                                       env.delta_Tc_min, env.delta_Tc_max, k.airspeed_integrator_limit);
    cs.altitude_integrator = integrate(cs.altitude_integrator, e_h, cfg.query_period, pitch(cs.altitude_integrator),
                                       env.theta_c_min, env.theta_c_max, k.altitude_integrator_limit);

    out.command = env.clamp({phi_c, pitch(cs.altitude_integrator), throttle(cs.airspeed_integrator)});
    return out;
}

GuidanceController::GuidanceController(ControllerConfig cfg, std::shared_ptr<const ArcLengthPath> path)
    : cfg_(std::move(cfg)), path_(std::move(path))
{
    state_.solver = SqpSolver(cfg_.solver);
    if (!path_) throw ArgumentError("GuidanceController: no path");
    cfg_.validate();
}

GuidanceOutput GuidanceController::query(const AircraftState& x, const WindVector& w)
{
    switch (cfg_.mode) {
    case ControllerMode::CrMpc: return cr_mpc_query(state_, x, w, path_, cfg_);
    case ControllerMode::Mpcc: return mpcc_query(state_, x, w, path_, cfg_);
    case ControllerMode::Lookahead: return lookahead_query(state_, x, w, *path_, cfg_);
    }
    throw ArgumentError("unknown controller mode");
}

void GuidanceController::reset()
{
    state_ = ControllerState{};
    state_.solver = SqpSolver(cfg_.solver);
}

}  // namespace fwmpc
