#include "fwmpc/sysid.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <istream>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

namespace fwmpc {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kMinAirspeed = 15.0;
constexpr double kMaxAirspeed = 40.0;

using Outputs = std::array<double, kSysIdOutputs>;

Outputs observe(const StateVector& x, const ModelParameters& p)
{
    const AircraftState s = AircraftState::from_vector(x);
    const ImuAccels a = imu_accels(forces(s, p), p.m);
    return {s.phi, s.theta, s.V_a, s.gamma_a, a.a_x, a.a_z};
}

int excitation_samples(const ManeuverSegment& seg, double settle, double fs)
{
    return static_cast<int>(std::lround((seg.duration - settle) * fs));
}

// Offsets added to the trim command, one row per sample of the segment.
std::vector<ControlVector> segment_offsets(const ManeuverSegment& seg, double settle, double fs)
{
    const int n = static_cast<int>(std::lround(seg.duration * fs));
    std::vector<ControlVector> u(n, ControlVector::Zero());
    if (seg.kind == ManeuverSegment::Kind::Hold) return u;

    if (seg.kind == ManeuverSegment::Kind::Doublet) {
        const int axis = static_cast<int>(seg.axis);
        for (int i = 0; i < n; ++i) {
            const double tau = i / fs;
            double v = 0.0;
            if (tau < 2.0 * seg.pulse) v = seg.amplitude;
            else if (tau < 3.0 * seg.pulse) v = -seg.amplitude;
            else if (tau < 4.0 * seg.pulse) v = seg.amplitude;
            u[i](axis) = v;
        }
        return u;
    }

    // free-form: eight log-spaced tones per axis with random phases, tapered
    // at both ends and scaled to the requested peak
    const int ne = excitation_samples(seg, settle, fs);
    const double te = ne / fs;
    const double ramp = std::min(1.0, 0.25 * te);
    std::mt19937_64 rng(seg.seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    const std::array<double, 3> amps{seg.roll_amplitude, seg.pitch_amplitude, seg.throttle_amplitude};
    constexpr int kTones = 8;
    const double f_lo = std::min(0.05, 0.5 * seg.bandwidth);
    for (int axis = 0; axis < 3; ++axis) {
        std::array<double, kTones> f{}, ph{};
        for (int k = 0; k < kTones; ++k) {
            f[k] = f_lo * std::pow(seg.bandwidth / f_lo, k / double(kTones - 1));
            ph[k] = phase(rng);
        }
        if (amps[axis] == 0.0) continue;
        std::vector<double> s(ne);
        double peak = 0.0;
        for (int i = 0; i < ne; ++i) {
            const double tau = i / fs;
            double v = 0.0;
            for (int k = 0; k < kTones; ++k) v += std::sin(2.0 * std::numbers::pi * f[k] * tau + ph[k]);
            const double edge = std::min(tau, te - tau) / ramp;
            const double w = edge >= 1.0 ? 1.0 : std::pow(std::sin(0.5 * std::numbers::pi * std::max(edge, 0.0)), 2);
            s[i] = w * v;
            peak = std::max(peak, std::abs(s[i]));
        }
        if (peak > 0.0) {
            for (int i = 0; i < ne; ++i) u[i](axis) = amps[axis] * s[i] / peak;
        }
    }
    return u;
}

// Shooting windows: [begin, end) sample ranges, each inside one maneuver
// segment. `fresh` marks the first window of a segment, where the throttle
// state restarts at the command in force before it (segments close with a
// settle hold, so the lag has converged there).
struct Window {
    int begin = 0;
    int end = 0;
    bool fresh = false;
};

std::vector<Window> shooting_windows(const SysIdDataset& d, double window)
{
    const int len = std::max(1, static_cast<int>(std::lround(window * d.sample_rate)));
    std::vector<Window> out;
    int i = 0;
    const int n = d.size();
    while (i < n) {
        int seg_end = i;
        while (seg_end < n && d.segment[seg_end] == d.segment[i]) ++seg_end;
        for (int b = i; b < seg_end; b += len) out.push_back({b, std::min(b + len, seg_end), b == i});
        i = seg_end;
    }
    return out;
}

enum class SimScope { Attitude, Full };

// phi, theta, V_a, gamma_a at a window start
using Initial = std::array<double, 4>;

std::vector<Initial> measured_initials(const SysIdDataset& d, const std::vector<Window>& windows)
{
    std::vector<Initial> out;
    for (const Window& w : windows) {
        const Outputs& m = d.outputs[w.begin];
        out.push_back({m[0], m[1], m[2], m[3]});
    }
    return out;
}

// Simulates one window and returns the throttle state at its end. Throws
// when the model leaves its domain.
double simulate_window(const ModelParameters& p, const SysIdDataset& d, const Window& w, const Initial& x0,
                       double delta_T, SimScope scope, std::vector<Outputs>& y)
{
    const double h = 1.0 / (d.sample_rate * d.substeps);
    if (scope == SimScope::Attitude) {
        auto lag = [h](double x, double target, double k) {
            const double k1 = k * (target - x);
            const double k2 = k * (target - (x + 0.5 * h * k1));
            const double k3 = k * (target - (x + 0.5 * h * k2));
            const double k4 = k * (target - (x + h * k3));
            return x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        };
        double phi = x0[0];
        double theta = x0[1];
        for (int i = w.begin; i < w.end; ++i) {
            y[i] = d.outputs[i];
            y[i][0] = phi;
            y[i][1] = theta;
            for (int s = 0; s < d.substeps; ++s) {
                phi = lag(phi, d.commands[i].phi_c, p.K_phi);
                theta = lag(theta, d.commands[i].theta_c, p.K_theta);
            }
        }
        return delta_T;
    }
    StateVector x;
    x << 0.0, 0.0, 0.0, x0[0], x0[1], 0.0, x0[2], x0[3], delta_T;
    for (int i = w.begin; i < w.end; ++i) {
        y[i] = observe(x, p);
        const ControlVector u = d.commands[i].vector();
        for (int s = 0; s < d.substeps; ++s) x = rk4_step(x, u, d.wind[i], h, p);
        if (!x.allFinite()) throw InvalidStateError("simulated state is not finite");
    }
    return x(sx::DeltaT);
}

struct Trajectory {
    std::vector<Outputs> y;
    std::vector<double> throttle;  // lag state at each window start
};

// Outputs over the dataset, restarting phi, theta, V_a and gamma_a from
// `initials` at every window start. nullopt when the model leaves its
// domain.
std::optional<Trajectory> simulate(const ModelParameters& p, const SysIdDataset& d, const std::vector<Window>& windows,
                                   const std::vector<Initial>& initials, SimScope scope)
{
    Trajectory tr;
    tr.y.resize(d.size());
    try {
        double delta_T = 0.0;
        for (std::size_t k = 0; k < windows.size(); ++k) {
            const Window& w = windows[k];
            if (w.fresh) delta_T = d.commands[std::max(w.begin - 1, 0)].delta_Tc;
            tr.throttle.push_back(delta_T);
            delta_T = simulate_window(p, d, w, initials[k], delta_T, scope, tr.y);
        }
    } catch (const Error&) {
        return std::nullopt;
    }
    return tr;
}

struct Problem {
    std::vector<std::string> names;
    std::vector<int> channels;     // fitted outputs
    std::vector<int> initial_ids;  // Initial entries refined per window
    Eigen::VectorXd lower;         // bounds on the named parameters
    Eigen::VectorXd upper;
    SimScope scope = SimScope::Full;
};

struct Evaluation {
    Eigen::VectorXd r;
    double cost = 0.0;
    std::vector<double> throttle;
};

// Unknowns: the named parameters followed by the refined initial states of
// every window, which start at the measured values.
class OutputError {
public:
    OutputError(const SysIdDataset& d, const ModelParameters& base, Problem pb, double window)
        : d_(d), base_(base), pb_(std::move(pb)), windows_(shooting_windows(d, window)),
          measured_(measured_initials(d, windows_))
    {
        for (int c : pb_.channels) {
            double mean = 0.0;
            for (const auto& o : d_.outputs) mean += o[c];
            mean /= d_.size();
            double var = 0.0;
            for (const auto& o : d_.outputs) var += (o[c] - mean) * (o[c] - mean);
            const double sd = std::sqrt(var / d_.size());
            scale_.push_back(sd > 1e-12 ? sd : 1.0);
        }
        const auto ng = static_cast<Eigen::Index>(pb_.names.size());
        const Eigen::Index n = ng + static_cast<Eigen::Index>(windows_.size() * pb_.initial_ids.size());
        lower_ = Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
        upper_ = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
        lower_.head(ng) = pb_.lower;
        upper_.head(ng) = pb_.upper;
    }

    [[nodiscard]] Eigen::Index globals() const { return static_cast<Eigen::Index>(pb_.names.size()); }
    [[nodiscard]] int per_window() const { return static_cast<int>(pb_.initial_ids.size()); }

    [[nodiscard]] Eigen::VectorXd start(const ModelParameters& p) const
    {
        Eigen::VectorXd x(lower_.size());
        for (Eigen::Index k = 0; k < globals(); ++k) x(k) = p.get(pb_.names[static_cast<std::size_t>(k)]);
        Eigen::Index j = globals();
        for (const Initial& m : measured_) {
            for (int id : pb_.initial_ids) x(j++) = m[id];
        }
        return x;
    }

    [[nodiscard]] Eigen::VectorXd project(const Eigen::VectorXd& x) const { return x.cwiseMax(lower_).cwiseMin(upper_); }

    [[nodiscard]] ModelParameters params(const Eigen::VectorXd& x) const
    {
        ModelParameters p = base_;
        for (Eigen::Index k = 0; k < globals(); ++k) p.set(pb_.names[static_cast<std::size_t>(k)], x(k));
        return p;
    }

    [[nodiscard]] std::vector<Initial> initials(const Eigen::VectorXd& x) const
    {
        std::vector<Initial> out = measured_;
        Eigen::Index j = globals();
        for (Initial& m : out) {
            for (int id : pb_.initial_ids) m[id] = x(j++);
        }
        return out;
    }

    [[nodiscard]] std::optional<Evaluation> evaluate(const Eigen::VectorXd& x) const
    {
        const auto tr = simulate(params(x), d_, windows_, initials(x), pb_.scope);
        if (!tr) return std::nullopt;
        Evaluation e;
        e.r.resize(static_cast<Eigen::Index>(d_.size()) * nc());
        fill(tr->y, 0, d_.size(), e.r);
        e.cost = 0.5 * e.r.squaredNorm();
        if (!std::isfinite(e.cost)) return std::nullopt;
        e.throttle = tr->throttle;
        return e;
    }

    // Gauss-Newton normal equations J'J, J'r with central-difference
    // columns; an initial state only reaches the rows of its own window.
    void normal_equations(const Eigen::VectorXd& x, const Evaluation& at, Eigen::MatrixXd& H, Eigen::VectorXd& g) const
    {
        const Eigen::Index n = x.size();
        const Eigen::Index ng = globals();
        const Eigen::Index rows = at.r.size();
        H.setZero(n, n);
        g.setZero(n);
        Eigen::MatrixXd Jg(rows, ng);
        for (Eigen::Index k = 0; k < ng; ++k) {
            const double h = 1e-6 * std::max(std::abs(x(k)), 1e-3);
            Eigen::VectorXd xp = x, xm = x;
            xp(k) = std::min(x(k) + h, upper_(k));
            xm(k) = std::max(x(k) - h, lower_(k));
            const auto ep = evaluate(xp);
            const auto em = evaluate(xm);
            if (!ep || !em) throw SolverError("sensitivity of '" + pb_.names[static_cast<std::size_t>(k)] + "' could not be evaluated");
            Jg.col(k) = (ep->r - em->r) / (xp(k) - xm(k));
        }
        H.topLeftCorner(ng, ng) = Jg.transpose() * Jg;
        g.head(ng) = Jg.transpose() * at.r;

        const ModelParameters p = params(x);
        const std::vector<Initial> init = initials(x);
        const int m = per_window();
        std::vector<Outputs> y(d_.size());
        for (std::size_t w = 0; w < windows_.size() && m > 0; ++w) {
            const Window& win = windows_[w];
            const Eigen::Index r0 = static_cast<Eigen::Index>(win.begin) * nc();
            const Eigen::Index len = static_cast<Eigen::Index>(win.end - win.begin) * nc();
            Eigen::MatrixXd Jw(len, m);
            Eigen::VectorXd rp(rows), rm(rows);
            for (int k = 0; k < m; ++k) {
                const int id = pb_.initial_ids[static_cast<std::size_t>(k)];
                const double h = 1e-6 * std::max(std::abs(init[w][id]), 1.0);
                Initial a = init[w], b = init[w];
                a[id] += h;
                b[id] -= h;
                try {
                    simulate_window(p, d_, win, a, at.throttle[w], pb_.scope, y);
                    fill(y, win.begin, win.end, rp);
                    simulate_window(p, d_, win, b, at.throttle[w], pb_.scope, y);
                    fill(y, win.begin, win.end, rm);
                } catch (const Error&) {
                    throw SolverError("initial-state sensitivity of window " + std::to_string(w) + " failed");
                }
                Jw.col(k) = (rp.segment(r0, len) - rm.segment(r0, len)) / (2.0 * h);
            }
            const Eigen::Index c0 = ng + static_cast<Eigen::Index>(w) * m;
            H.block(c0, c0, m, m) = Jw.transpose() * Jw;
            const Eigen::MatrixXd cross = Jg.middleRows(r0, len).transpose() * Jw;
            H.block(0, c0, ng, m) = cross;
            H.block(c0, 0, m, ng) = cross.transpose();
            g.segment(c0, m) = Jw.transpose() * at.r.segment(r0, len);
        }
    }

    [[nodiscard]] std::map<std::string, double> rmse(const Eigen::VectorXd& x) const
    {
        std::map<std::string, double> out;
        const auto tr = simulate(params(x), d_, windows_, initials(x), pb_.scope);
        if (!tr) return out;
        for (int c : pb_.channels) {
            double s = 0.0;
            for (int i = 0; i < d_.size(); ++i) s += std::pow(tr->y[i][c] - d_.outputs[i][c], 2);
            out[sysid_output_names()[c]] = std::sqrt(s / d_.size());
        }
        return out;
    }

    [[nodiscard]] const Problem& problem() const { return pb_; }

private:
    [[nodiscard]] int nc() const { return static_cast<int>(pb_.channels.size()); }

    // Normalized residual rows of samples [b, e).
    void fill(const std::vector<Outputs>& y, int b, int e, Eigen::VectorXd& r) const
    {
        const double norm = 1.0 / std::sqrt(static_cast<double>(d_.size()));
        for (int i = b; i < e; ++i) {
            for (int k = 0; k < nc(); ++k) {
                const int c = pb_.channels[static_cast<std::size_t>(k)];
                r(static_cast<Eigen::Index>(i) * nc() + k) = (y[i][c] - d_.outputs[i][c]) / scale_[static_cast<std::size_t>(k)] * norm;
            }
        }
    }

    const SysIdDataset& d_;
    ModelParameters base_;
    Problem pb_;
    std::vector<Window> windows_;
    std::vector<Initial> measured_;
    std::vector<double> scale_;
    Eigen::VectorXd lower_;
    Eigen::VectorXd upper_;
};

FitResult gauss_newton(const OutputError& oe, const ModelParameters& start, const FitOptions& opt)
{
    const Problem& pb = oe.problem();
    const Eigen::Index ng = oe.globals();
    FitResult res;
    res.names = pb.names;
    Eigen::VectorXd x = oe.project(oe.start(start));
    auto cur = oe.evaluate(x);
    if (!cur) throw SolverError("model simulation fails at the initial parameters");
    res.cost_history.push_back(cur->cost);

    double lambda = 1e-3;
    Eigen::MatrixXd H;
    Eigen::VectorXd g;
    for (int it = 0; it < opt.max_iterations; ++it) {
        oe.normal_equations(x, *cur, H, g);
        if (it == 0) {
            res.sensitivity.resize(ng);
            for (Eigen::Index k = 0; k < ng; ++k) {
                res.sensitivity(k) = std::sqrt(H(k, k)) * std::max(std::abs(x(k)), 1e-3);
                if (!(res.sensitivity(k) >= opt.min_sensitivity)) {
                    throw ExcitationError("insufficient excitation: output sensitivity to '" +
                                          pb.names[static_cast<std::size_t>(k)] + "' is " +
                                          std::to_string(res.sensitivity(k)));
                }
            }
        }

        bool accepted = false;
        Eigen::VectorXd step;
        for (int trial = 0; trial < 12 && !accepted; ++trial) {
            Eigen::MatrixXd A = H;
            A.diagonal() += lambda * H.diagonal();
            const Eigen::VectorXd dx = A.ldlt().solve(-g);
            for (double a = 1.0; a >= 0.25 && !accepted; a *= 0.5) {
                const Eigen::VectorXd xn = oe.project(x + a * dx);
                const auto en = oe.evaluate(xn);
                if (en && en->cost < cur->cost) {
                    step = xn - x;
                    x = xn;
                    const double prev = cur->cost;
                    cur = en;
                    res.cost_history.push_back(cur->cost);
                    accepted = true;
                    lambda = std::max(lambda * 0.1, 1e-12);
                    if ((prev - cur->cost) <= opt.tolerance * prev) res.converged = true;
                }
            }
            if (!accepted) lambda *= 10.0;
        }
        res.iterations = it + 1;
        if (!accepted) {
            // no descent left: stationary up to rounding
            res.converged = g.cwiseAbs().maxCoeff() <= 1e-8 * std::max(1.0, cur->cost) || cur->cost < 1e-24;
            break;
        }
        const double rel_step = (step.array() / x.array().abs().max(1e-3)).abs().maxCoeff();
        if (rel_step < 1e-10 || cur->cost < 1e-26) res.converged = true;
        if (res.converged) break;
    }
    if (!res.converged) res.diagnostics.push_back("iteration limit reached before convergence");

    res.values = x.head(ng);
    res.fitted = oe.params(x);
    res.train_rmse = oe.rmse(x);
    // parameter block of the inverse, i.e. with the initial states marginalized
    const Eigen::MatrixXd cov = H.completeOrthogonalDecomposition().pseudoInverse().topLeftCorner(ng, ng);
    res.correlation = Eigen::MatrixXd::Identity(ng, ng);
    for (Eigen::Index i = 0; i < ng; ++i) {
        for (Eigen::Index j = 0; j < ng; ++j) {
            const double den = std::sqrt(cov(i, i) * cov(j, j));
            if (den > 0.0) res.correlation(i, j) = cov(i, j) / den;
        }
    }
    for (Eigen::Index k = 0; k < ng; ++k) {
        if (res.values(k) == pb.lower(k) || res.values(k) == pb.upper(k)) {
            res.diagnostics.push_back("'" + pb.names[static_cast<std::size_t>(k)] + "' ends on its bound");
        }
    }
    return res;
}

Problem make_problem(const std::vector<std::string>& names, std::vector<int> channels, std::vector<int> initial_ids,
                     SimScope scope)
{
    Problem pb;
    pb.names = names;
    pb.channels = std::move(channels);
    pb.initial_ids = std::move(initial_ids);
    pb.scope = scope;
    const auto n = static_cast<Eigen::Index>(names.size());
    pb.lower = Eigen::VectorXd::Constant(n, 1e-9);
    pb.upper = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
    for (Eigen::Index k = 0; k < n; ++k) {
        if (names[static_cast<std::size_t>(k)] == "C_D1") pb.lower(k) = -std::numeric_limits<double>::infinity();
        if (names[static_cast<std::size_t>(k)] == "k_m") {
            pb.lower(k) = 50.0;
            pb.upper(k) = 300.0;
        }
    }
    return pb;
}

void put(std::string& line, double v)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    line.append(buf, res.ptr);
}

double parse_double(std::string_view s, int line_no)
{
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw IoError("sysid dataset line " + std::to_string(line_no) + ": bad number '" + std::string(s) + "'");
    }
    return v;
}

}  // namespace

SysIdNoise SysIdNoise::preset()
{
    return {0.5 * kDeg, 0.3, 0.3 * kDeg, 0.1};
}

const std::array<std::string, kSysIdOutputs>& sysid_output_names()
{
    static const std::array<std::string, kSysIdOutputs> names{"phi", "theta", "V_a", "gamma_a", "a_x", "a_z"};
    return names;
}

void ManeuverSpec::validate(const ModelParameters& params) const
{
    if (segments.empty()) throw ArgumentError("maneuver spec has no segments");
    if (!(sample_rate > 0.0) || substeps < 1) throw ArgumentError("sample_rate must be > 0 and substeps >= 1");
    if (!(settle >= 0.0)) throw ArgumentError("settle must be nonnegative");
    if (!(trim_airspeed >= kMinAirspeed && trim_airspeed <= kMaxAirspeed)) {
        throw ArgumentError("trim airspeed must lie in [15, 40] m/s");
    }
    if (!wind.allFinite()) throw ArgumentError("wind must be finite");
    for (double s : {noise.attitude, noise.airspeed, noise.gamma, noise.accel}) {
        if (!(s >= 0.0)) throw ArgumentError("noise levels must be nonnegative");
    }
    ControlCommand c;
    auto check = [&](std::size_t i, double roll, double pitch, double throttle) {
        const std::string where = "segment " + std::to_string(i) + ": ";
        if (roll > 45.0 * kDeg + 1e-12) throw ArgumentError(where + "roll command exceeds 45 deg");
        if (std::abs(c.theta_c) + pitch > 20.0 * kDeg + 1e-12) throw ArgumentError(where + "pitch command exceeds 20 deg");
        if (c.delta_Tc - throttle < 0.0 || c.delta_Tc + throttle > 1.0) {
            throw ArgumentError(where + "throttle command leaves [0, 1]");
        }
    };
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const ManeuverSegment& s = segments[i];
        const std::string where = "segment " + std::to_string(i) + ": ";
        if (!(s.duration > 0.0) || !std::isfinite(s.duration)) throw ArgumentError(where + "duration must be > 0");
        const double v = s.airspeed > 0.0 ? s.airspeed : trim_airspeed;
        if (!(s.airspeed >= 0.0) || v < kMinAirspeed || v > kMaxAirspeed) {
            throw ArgumentError(where + "trim airspeed must lie in [15, 40] m/s");
        }
        try {
            c = level_trim(v, trim_model ? *trim_model : params).command;
        } catch (const Error& e) {
            throw ArgumentError(where + "no trim at " + std::to_string(v) + " m/s: " + e.what());
        }
        switch (s.kind) {
        case ManeuverSegment::Kind::Hold: break;
        case ManeuverSegment::Kind::Doublet: {
            if (!(s.pulse > 0.0)) throw ArgumentError(where + "pulse width must be > 0");
            if (4.0 * s.pulse + settle > s.duration + 1e-9) {
                throw ArgumentError(where + "doublet and settle hold do not fit the duration");
            }
            const double a = std::abs(s.amplitude);
            check(i, s.axis == ManeuverSegment::Axis::Roll ? a : 0.0, s.axis == ManeuverSegment::Axis::Pitch ? a : 0.0,
                  s.axis == ManeuverSegment::Axis::Throttle ? a : 0.0);
            break;
        }
        case ManeuverSegment::Kind::FreeForm:
            if (!(s.bandwidth > 0.0)) throw ArgumentError(where + "bandwidth must be > 0");
            if (s.duration - settle < 4.0) throw ArgumentError(where + "free-form excitation needs at least 4 s");
            if (s.roll_amplitude < 0.0 || s.pitch_amplitude < 0.0 || s.throttle_amplitude < 0.0) {
                throw ArgumentError(where + "amplitudes must be nonnegative");
            }
            check(i, s.roll_amplitude, s.pitch_amplitude, s.throttle_amplitude);
            break;
        }
    }
}

double ManeuverSpec::total_duration() const
{
    double t = 0.0;
    for (const auto& s : segments) t += s.duration;
    return t;
}

ManeuverSpec ManeuverSpec::default_spec()
{
    using K = ManeuverSegment::Kind;
    using A = ManeuverSegment::Axis;
    constexpr double slow = 17.0;
    constexpr double fast = 31.0;
    ManeuverSpec spec;
    auto doublet = [](A axis, double amp, double pulse, double duration, double airspeed) {
        ManeuverSegment s;
        s.kind = K::Doublet;
        s.axis = axis;
        s.amplitude = amp;
        s.pulse = pulse;
        s.duration = duration;
        s.airspeed = airspeed;
        return s;
    };
    auto free_form = [](std::uint64_t seed, double duration, double airspeed, double pitch, double throttle) {
        ManeuverSegment s;
        s.kind = K::FreeForm;
        s.duration = duration;
        s.airspeed = airspeed;
        s.roll_amplitude = 35.0 * kDeg;
        s.pitch_amplitude = pitch * kDeg;
        s.throttle_amplitude = throttle;
        s.bandwidth = 0.5;
        s.seed = seed;
        return s;
    };
    ManeuverSegment hold;
    hold.duration = 10.0;
    spec.segments = {hold,
                     doublet(A::Roll, 25.0 * kDeg, 1.0, 10.0, 0.0),
                     doublet(A::Roll, -25.0 * kDeg, 1.0, 10.0, 0.0),
                     doublet(A::Pitch, 5.0 * kDeg, 1.0, 10.0, slow),
                     doublet(A::Pitch, -5.0 * kDeg, 1.0, 10.0, fast),
                     doublet(A::Throttle, 0.3, 2.0, 15.0, slow),
                     doublet(A::Throttle, -0.2, 2.0, 15.0, fast),
                     free_form(11, 40.0, slow, 6.0, 0.25),
                     free_form(12, 40.0, fast, 8.0, 0.2),
                     free_form(14, 80.0, 0.0, 8.0, 0.3),
                     free_form(13, 60.0, 0.0, 8.0, 0.3)};
    return spec;
}

void SysIdDataset::validate() const
{
    const std::size_t n = t.size();
    if (n == 0) throw ArgumentError("sysid dataset is empty");
    if (segment.size() != n || commands.size() != n || outputs.size() != n || wind.size() != n) {
        throw ArgumentError("sysid dataset columns differ in length");
    }
    if (!(sample_rate > 0.0) || substeps < 1) throw ArgumentError("sysid dataset: bad sample_rate or substeps");
    const double dt = 1.0 / sample_rate;
    for (std::size_t i = 1; i < n; ++i) {
        if (std::abs(t[i] - t[i - 1] - dt) > 1e-6 * dt) {
            throw ArgumentError("sysid dataset is not uniformly sampled at index " + std::to_string(i));
        }
    }
}

std::pair<SysIdDataset, SysIdDataset> SysIdDataset::split(double train_fraction) const
{
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ArgumentError("train fraction must lie in (0, 1)");
    const int n = size();
    const double target = train_fraction * n;
    int best = -1;
    for (int i = 1; i < n; ++i) {
        if (segment[i] != segment[i - 1] && (best < 0 || std::abs(i - target) < std::abs(best - target))) best = i;
    }
    if (best < 0) throw ArgumentError("dataset has a single segment and cannot be split");
    auto slice = [&](int b, int e) {
        SysIdDataset d;
        d.sample_rate = sample_rate;
        d.substeps = substeps;
        d.t.assign(t.begin() + b, t.begin() + e);
        d.segment.assign(segment.begin() + b, segment.begin() + e);
        d.commands.assign(commands.begin() + b, commands.begin() + e);
        d.outputs.assign(outputs.begin() + b, outputs.begin() + e);
        d.wind.assign(wind.begin() + b, wind.begin() + e);
        return d;
    };
    return {slice(0, best), slice(best, n)};
}

void SysIdDataset::write_csv(std::ostream& out) const
{
    out << "# schema " << kSysIdSchema << " sample_rate=" << sample_rate << " substeps=" << substeps << '\n';
    out << "t,segment,phi_c,theta_c,delta_Tc,phi,theta,V_a,gamma_a,a_x,a_z,w_n,w_e,w_d\n";
    std::string line;
    for (int i = 0; i < size(); ++i) {
        line.clear();
        put(line, t[i]);
        line += ',' + std::to_string(segment[i]);
        for (double v : {commands[i].phi_c, commands[i].theta_c, commands[i].delta_Tc}) {
            line += ',';
            put(line, v);
        }
        for (double v : outputs[i]) {
            line += ',';
            put(line, v);
        }
        for (int k = 0; k < 3; ++k) {
            line += ',';
            put(line, wind[i](k));
        }
        out << line << '\n';
    }
}

SysIdDataset SysIdDataset::read_csv(std::istream& in)
{
    SysIdDataset d;
    std::string line;
    if (!std::getline(in, line) || line.rfind(std::string("# schema ") + kSysIdSchema, 0) != 0) {
        throw IoError(std::string("sysid dataset: missing '# schema ") + kSysIdSchema + "' line");
    }
    std::istringstream head(line.substr(9 + std::string(kSysIdSchema).size()));
    std::string kv;
    while (head >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = kv.substr(0, eq);
        const std::string value = kv.substr(eq + 1);
        if (key == "sample_rate") d.sample_rate = parse_double(value, 1);
        if (key == "substeps") d.substeps = static_cast<int>(parse_double(value, 1));
    }
    if (!std::getline(in, line)) throw IoError("sysid dataset: missing header");
    int line_no = 2;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string_view> f;
        std::string_view rest(line);
        for (std::size_t pos; (pos = rest.find(',')) != std::string_view::npos; rest.remove_prefix(pos + 1)) {
            f.push_back(rest.substr(0, pos));
        }
        f.push_back(rest);
        if (f.size() != 14) throw IoError("sysid dataset line " + std::to_string(line_no) + ": expected 14 fields");
        d.t.push_back(parse_double(f[0], line_no));
        d.segment.push_back(static_cast<int>(parse_double(f[1], line_no)));
        d.commands.push_back({parse_double(f[2], line_no), parse_double(f[3], line_no), parse_double(f[4], line_no)});
        Outputs o{};
        for (int k = 0; k < kSysIdOutputs; ++k) o[k] = parse_double(f[5 + k], line_no);
        d.outputs.push_back(o);
        d.wind.emplace_back(parse_double(f[11], line_no), parse_double(f[12], line_no), parse_double(f[13], line_no));
    }
    d.validate();
    return d;
}

SysIdDataset generate_maneuvers(const ModelParameters& params, const ManeuverSpec& spec)
{
    params.validate();
    spec.validate(params);
    const ModelParameters& trim_params = spec.trim_model ? *spec.trim_model : params;
    const TrimPoint trim = level_trim(spec.trim_airspeed, params);
    const double fs = spec.sample_rate;
    const double h = 1.0 / (fs * spec.substeps);

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::array<double, kSysIdOutputs> sigma{spec.noise.attitude, spec.noise.attitude, spec.noise.airspeed,
                                                  spec.noise.gamma,    spec.noise.accel,    spec.noise.accel};

    SysIdDataset d;
    d.sample_rate = fs;
    d.substeps = spec.substeps;
    StateVector x = trim.state.vector();
    int i = 0;
    for (std::size_t si = 0; si < spec.segments.size(); ++si) {
        const double v = spec.segments[si].airspeed > 0.0 ? spec.segments[si].airspeed : spec.trim_airspeed;
        const ControlVector base = level_trim(v, trim_params).command.vector();
        for (const ControlVector& offset : segment_offsets(spec.segments[si], spec.settle, fs)) {
            const double t = i / fs;
            if (x(sx::Va) < kMinAirspeed || x(sx::Va) > kMaxAirspeed) {
                throw DomainError("maneuver leaves the airspeed envelope at t = " + std::to_string(t) + " s (V_a = " +
                                  std::to_string(x(sx::Va)) + " m/s)");
            }
            Outputs y = observe(x, params);
            for (int k = 0; k < kSysIdOutputs; ++k) {
                if (sigma[k] > 0.0) y[k] += sigma[k] * normal(rng);
            }
            const ControlVector u = base + offset;
            d.t.push_back(t);
            d.segment.push_back(static_cast<int>(si));
            d.commands.push_back(ControlCommand::from_vector(u));
            d.outputs.push_back(y);
            d.wind.push_back(spec.wind);
            for (int s = 0; s < spec.substeps; ++s) x = rk4_step(x, u, spec.wind, h, params);
            ++i;
        }
    }
    return d;
}

double FitResult::correlation_between(const std::string& a, const std::string& b) const
{
    const auto ia = std::find(names.begin(), names.end(), a);
    const auto ib = std::find(names.begin(), names.end(), b);
    if (ia == names.end() || ib == names.end()) throw ArgumentError("parameter not part of this fit");
    return correlation(ia - names.begin(), ib - names.begin());
}

FitResult fit_closed_loop(const SysIdDataset& train, const ModelParameters& start, const FitOptions& options)
{
    train.validate();
    start.validate();
    const OutputError oe(train, start, make_problem({"K_phi", "K_theta"}, {0, 1}, {0, 1}, SimScope::Attitude),
                         options.window);
    return gauss_newton(oe, start, options);
}

FitResult fit_open_loop(const SysIdDataset& train, const ModelParameters& start, const FitOptions& options)
{
    train.validate();
    start.validate();
    const OutputError oe(train, start, make_problem(ModelParameters::open_loop_keys(), {2, 3, 4, 5}, {2, 3}, SimScope::Full),
                         options.window);
    return gauss_newton(oe, start, options);
}

std::map<std::string, double> validate_model(const ModelParameters& params, const SysIdDataset& data, double window)
{
    data.validate();
    params.validate();
    const auto windows = shooting_windows(data, window);
    const auto tr = simulate(params, data, windows, measured_initials(data, windows), SimScope::Full);
    if (!tr) throw SolverError("model leaves its domain on the validation commands");
    std::map<std::string, double> out;
    for (int c = 0; c < kSysIdOutputs; ++c) {
        double s = 0.0;
        for (int i = 0; i < data.size(); ++i) s += std::pow(tr->y[i][c] - data.outputs[i][c], 2);
        out[sysid_output_names()[c]] = std::sqrt(s / data.size());
    }
    return out;
}

ModelParameters perturbed_guess(const ModelParameters& truth, double fraction)
{
    ModelParameters p = truth;
    std::vector<std::string> names{"K_phi", "K_theta"};
    for (const auto& k : ModelParameters::open_loop_keys()) names.push_back(k);
    for (std::size_t i = 0; i < names.size(); ++i) {
        const double f = (i % 2 == 0) ? 1.0 + fraction : 1.0 - fraction;
        p.set(names[i], truth.get(names[i]) * f);
    }
    p.k_m = std::clamp(p.k_m, 50.0, 300.0);
    p.validate();
    return p;
}

}  // namespace fwmpc
