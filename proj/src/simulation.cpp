#include "fwmpc/simulation.hpp"

#include "fwmpc/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <future>
#include <numbers>
#include <ostream>

namespace fwmpc {

namespace {

void put(std::string& line, double v)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    line.append(buf, res.ptr);
}

void put_fields(std::string& line, std::initializer_list<double> values)
{
    for (double v : values) {
        line += ',';
        put(line, v);
    }
}

Eigen::Vector3d ground_velocity(const AircraftState& s, const Eigen::Vector3d& wind)
{
    const double cg = std::cos(s.gamma_a);
    return Eigen::Vector3d(s.V_a * cg * std::cos(s.chi_a), s.V_a * cg * std::sin(s.chi_a), -s.V_a * std::sin(s.gamma_a)) +
           wind;
}

std::vector<Eigen::Vector3d> racetrack_samples()
{
    constexpr double straight = 400.0, R = 150.0, alt = 100.0, step = 2.0;
    std::vector<Eigen::Vector3d> pts;
    for (double n = 0.0; n < straight; n += step) pts.emplace_back(n, 0.0, -alt);
    const int arc = static_cast<int>(std::round(std::numbers::pi * R / step));
    for (int i = 0; i < arc; ++i) {
        const double a = -std::numbers::pi / 2 + std::numbers::pi * i / arc;
        pts.emplace_back(straight + R * std::cos(a), R + R * std::sin(a), -alt);
    }
    for (double n = straight; n > 0.0; n -= step) pts.emplace_back(n, 2 * R, -alt);
    for (int i = 0; i < arc; ++i) {
        const double a = std::numbers::pi / 2 + std::numbers::pi * i / arc;
        pts.emplace_back(R * std::cos(a), R + R * std::sin(a), -alt);
    }
    return pts;
}

double quantile(const std::vector<double>& sorted, double q)
{
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

nlohmann::ordered_json stat_json(const Stat& s)
{
    return {{"mean", s.mean}, {"median", s.median}, {"max", s.max}, {"q1", s.q1}, {"q3", s.q3}};
}

}  // namespace

void WindModel::validate() const
{
    if (!mean.allFinite() || !sigma.allFinite() || (sigma.array() < 0.0).any()) {
        throw ArgumentError("wind mean and sigma must be finite, sigma nonnegative");
    }
    if (!(tau > 0.0)) throw ArgumentError("wind correlation time must be positive");
    if (!(max_magnitude > 0.0)) throw ArgumentError("wind magnitude bound must be positive");
    if (mean.norm() > max_magnitude) throw ArgumentError("mean wind exceeds the magnitude bound");
}

WindGenerator::WindGenerator(const WindModel& model, std::uint64_t seed) : model_(model), rng_(seed)
{
    model_.validate();
    w_ = model_.mean;
    if (model_.kind == WindModel::Kind::Gusty) {
        for (int i = 0; i < 3; ++i) w_(i) += model_.sigma(i) * normal_(rng_);
        const double m = w_.norm();
        if (m > model_.max_magnitude) w_ *= model_.max_magnitude / m;
    }
}

void WindGenerator::advance(double dt)
{
    if (model_.kind == WindModel::Kind::Constant) return;
    const double a = std::exp(-dt / model_.tau);
    const double b = std::sqrt(1.0 - a * a);
    for (int i = 0; i < 3; ++i) {
        w_(i) = model_.mean(i) + a * (w_(i) - model_.mean(i)) + model_.sigma(i) * b * normal_(rng_);
    }
    const double m = w_.norm();
    if (m > model_.max_magnitude) w_ *= model_.max_magnitude / m;
}

void Scenario::validate() const
{
    controller.validate();
    wind.validate();
    if (laps < 1) throw ArgumentError("laps must be >= 1");
    if (!(substep > 0.0)) throw ArgumentError("substep must be positive");
    const double ratio = controller.query_period / substep;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
        throw ArgumentError("substep must divide the guidance period");
    }
    if (timeout < 0.0) throw ArgumentError("timeout must be nonnegative");
    if (!(initial_airspeed > 0.0)) throw ArgumentError("initial airspeed must be positive");
    if (noise.position < 0.0 || noise.attitude < 0.0 || noise.airspeed < 0.0) {
        throw ArgumentError("estimate noise levels must be nonnegative");
    }
    (void)plant_parameters();
    if (initial_state) check_state(initial_state->vector());
    if (!path) (void)make_path(path_name);
}

std::shared_ptr<const ArcLengthPath> Scenario::resolve_path() const { return path ? path : make_path(path_name); }

ModelParameters Scenario::plant_parameters() const
{
    ModelParameters p = controller.model;
    for (const auto& [key, factor] : plant_factors) {
        if (!std::isfinite(factor) || factor <= 0.0) {
            throw ArgumentError("plant factor for '" + key + "' must be positive");
        }
        p.set(key, p.get(key) * factor);
    }
    p.validate();
    return p;
}

AircraftState Scenario::start_state(const ArcLengthPath& p) const
{
    if (initial_state) return *initial_state;
    AircraftState s = best_effort_trim(initial_airspeed, controller.model).state;
    const Eigen::Vector3d r = p.position(0.0);
    const Eigen::Vector3d t = p.frame_at(0.0).tangent;
    s.n = r(0);
    s.e = r(1);
    s.d = r(2);
    s.chi_a = std::atan2(t(1), t(0));
    return s;
}

const std::vector<std::string>& path_names()
{
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v = preset_names();
        v.emplace_back("racetrack");
        return v;
    }();
    return names;
}

std::shared_ptr<const ArcLengthPath> make_path(const std::string& name)
{
    if (name == "racetrack") return std::make_shared<const ArcLengthPath>(ArcLengthPath::build(racetrack_samples(), true));
    const auto& presets = preset_names();
    if (std::find(presets.begin(), presets.end(), name) == presets.end()) {
        std::string valid;
        for (const auto& n : path_names()) valid += (valid.empty() ? "" : ", ") + n;
        throw ArgumentError("unknown path '" + name + "' (valid: " + valid + ")");
    }
    return std::make_shared<const ArcLengthPath>(lissajous_path(lissajous_preset(name)));
}

std::map<std::string, double> open_loop_mismatch(double fraction, std::uint64_t seed)
{
    if (!(fraction >= 0.0 && fraction < 1.0)) throw ArgumentError("mismatch fraction must be in [0, 1)");
    std::mt19937_64 rng(seed);
    std::map<std::string, double> f;
    for (const auto& key : ModelParameters::open_loop_keys()) f[key] = 1.0 + ((rng() & 1U) ? fraction : -fraction);
    return f;
}

std::string_view to_string(SimLog::Status status)
{
    switch (status) {
    case SimLog::Status::Completed: return "completed";
    case SimLog::Status::Timeout: return "timeout";
    case SimLog::Status::Diverged: return "diverged";
    }
    return "unknown";
}

void SimLog::write_csv(std::ostream& out) const
{
    out << "# schema " << kSimLogSchema << " path=" << path_name << " controller=" << controller << " seed=" << seed
        << " status=" << to_string(status) << " laps=" << laps_completed << '\n';
    out << "t,n,e,d,phi,theta,chi_a,V_a,gamma_a,delta_T,"
           "est_n,est_e,est_d,est_phi,est_theta,est_chi_a,est_V_a,est_gamma_a,est_delta_T,"
           "wind_n,wind_e,wind_d,west_n,west_e,west_d,phi_c,theta_c,delta_Tc,psi_dot_c,psi_star,progress,"
           "err_n,err_e,err_d,qp_iterations,degraded\n";
    std::string line;
    for (const auto& r : records) {
        line.clear();
        put(line, r.t);
        for (const auto* s : {&r.plant, &r.estimate}) {
            put_fields(line, {s->n, s->e, s->d, s->phi, s->theta, s->chi_a, s->V_a, s->gamma_a, s->delta_T});
        }
        put_fields(line, {r.wind(0), r.wind(1), r.wind(2), r.wind_estimate(0), r.wind_estimate(1), r.wind_estimate(2),
                          r.command.phi_c, r.command.theta_c, r.command.delta_Tc, r.psi_dot_c, r.psi_star, r.progress,
                          r.path_error(0), r.path_error(1), r.path_error(2)});
        line += ',' + std::to_string(r.qp_iterations) + ',' + (r.degraded ? '1' : '0') + '\n';
        out << line;
    }
}

void SimLog::write_timing_csv(std::ostream& out) const
{
    out << "# schema " << kTimingSchema << " path=" << path_name << " controller=" << controller << '\n';
    out << "t,solve_time_ms\n";
    std::string line;
    for (const auto& r : records) {
        line.clear();
        put(line, r.t);
        put_fields(line, {r.solve_time * 1e3});
        line += '\n';
        out << line;
    }
}

SimLog run_scenario(const Scenario& sc)
{
    sc.validate();
    const auto path = sc.resolve_path();
    const ModelParameters plant = sc.plant_parameters();
    GuidanceController ctl(sc.controller, path);

    SimLog log;
    log.path_name = sc.path_name;
    log.controller = std::string(to_string(sc.controller.mode));
    log.seed = sc.seed;

    const double period = sc.controller.query_period;
    const int substeps = static_cast<int>(std::lround(period / sc.substep));
    const double L = path->total_length();
    const double timeout = sc.timeout > 0.0 ? sc.timeout : sc.laps * L / 10.0 + 60.0;

    WindGenerator wind(sc.wind, sc.seed);
    std::mt19937_64 noise_rng(sc.seed ^ 0x5bd1e995ULL);
    std::normal_distribution<double> normal(0.0, 1.0);

    AircraftState x = sc.start_state(*path);
    double progress = 0.0, prev_psi = 0.0, last_lap = 0.0;
    for (long tick = 0;; ++tick) {
        const double t = static_cast<double>(tick) * period;
        if (t > timeout) {
            log.status = SimLog::Status::Timeout;
            log.message = "lap count not reached within " + std::to_string(timeout) + " s";
            break;
        }
        SimRecord rec;
        rec.t = t;
        rec.plant = x;
        rec.estimate = x;
        if (sc.noise.enabled()) {
            rec.estimate.n += sc.noise.position * normal(noise_rng);
            rec.estimate.e += sc.noise.position * normal(noise_rng);
            rec.estimate.d += sc.noise.position * normal(noise_rng);
            rec.estimate.phi += sc.noise.attitude * normal(noise_rng);
            rec.estimate.theta += sc.noise.attitude * normal(noise_rng);
            rec.estimate.chi_a += sc.noise.attitude * normal(noise_rng);
            rec.estimate.gamma_a += sc.noise.attitude * normal(noise_rng);
            rec.estimate.V_a += sc.noise.airspeed * normal(noise_rng);
        }
        rec.wind = wind.current();
        rec.wind_estimate = Eigen::Vector3d(rec.wind(0), rec.wind(1), 0.0);

        GuidanceOutput out;
        try {
            out = ctl.query(rec.estimate, {rec.wind_estimate(0), rec.wind_estimate(1), 0.0});
        } catch (const InvalidStateError& e) {
            log.status = SimLog::Status::Diverged;
            log.message = std::string("controller rejected the state at t = ") + std::to_string(t) + ": " + e.what();
            break;
        }
        rec.command = out.command;
        rec.psi_dot_c = out.psi_dot_c;
        rec.psi_star = out.psi_star;
        rec.qp_iterations = out.qp_iterations;
        rec.degraded = out.degraded;
        rec.solve_time = out.solve_time;
        if (tick > 0) {
            double delta = out.psi_star - prev_psi;
            if (path->closed()) delta -= L * std::round(delta / L);
            progress += delta;
        }
        prev_psi = out.psi_star;
        rec.progress = progress;
        rec.path_error = x.position() - path->position(out.psi_star);
        log.records.push_back(rec);

        if (path->closed()) {
            while (progress >= (log.laps_completed + 1) * L) {
                log.lap_times.push_back(t - last_lap);
                last_lap = t;
                ++log.laps_completed;
            }
        } else if (out.psi_star >= L - 0.5) {
            log.lap_times.push_back(t);
            log.laps_completed = sc.laps;
        }
        if (log.laps_completed >= sc.laps) {
            log.status = SimLog::Status::Completed;
            break;
        }

        try {
            for (int j = 0; j < substeps; ++j) {
                x = rk4_step(x, out.command, {rec.wind(0), rec.wind(1), rec.wind(2)}, sc.substep, plant);
                check_state(x.vector());
                wind.advance(sc.substep);
            }
        } catch (const Error& e) {
            log.status = SimLog::Status::Diverged;
            log.message = std::string("plant left the model domain after t = ") + std::to_string(t) + ": " + e.what();
            break;
        }
        if (!x.vector().allFinite()) {
            log.status = SimLog::Status::Diverged;
            log.message = "plant state is not finite after t = " + std::to_string(t);
            break;
        }
    }
    return log;
}

Stat statistics(std::vector<double> values)
{
    Stat s;
    if (values.empty()) return s;
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    s.median = quantile(values, 0.5);
    s.q1 = quantile(values, 0.25);
    s.q3 = quantile(values, 0.75);
    s.max = values.back();
    return s;
}

Metrics compute_metrics(const SimLog& log, const ArcLengthPath& path, const FlightEnvelope& envelope)
{
    if (log.records.empty()) throw ArgumentError("compute_metrics: empty log");
    Metrics m;
    m.path_name = log.path_name;
    m.controller = log.controller;
    m.status = std::string(to_string(log.status));
    m.ticks = static_cast<int>(log.records.size());
    m.lap_times = log.lap_times;
    std::vector<double> err, va, vg, ft;
    int va_out = 0, alpha_out = 0;
    for (const auto& r : log.records) {
        const Eigen::Vector3d p = r.plant.position();
        err.push_back((p - path.position(path.closest_param_global(p))).norm());
        va.push_back(r.plant.V_a);
        vg.push_back(ground_velocity(r.plant, r.wind).norm());
        ft.push_back(r.solve_time * 1e3);
        if (r.plant.V_a < envelope.Va_min || r.plant.V_a > envelope.Va_max) ++va_out;
        const double a = alpha_of(r.plant);
        if (a < envelope.alpha_min || a > envelope.alpha_max) ++alpha_out;
        if (r.degraded) ++m.degraded_ticks;
    }
    m.path_error = statistics(std::move(err));
    m.airspeed = statistics(std::move(va));
    m.groundspeed = statistics(std::move(vg));
    m.feedback_time = statistics(std::move(ft));
    m.airspeed_violation = static_cast<double>(va_out) / m.ticks;
    m.alpha_violation = static_cast<double>(alpha_out) / m.ticks;
    return m;
}

std::string Metrics::to_json(int indent, bool include_timing) const
{
    nlohmann::ordered_json j;
    j["schema"] = kMetricsSchema;
    j["path"] = path_name;
    j["controller"] = controller;
    j["status"] = status;
    j["ticks"] = ticks;
    j["path_error_m"] = stat_json(path_error);
    j["airspeed_mps"] = stat_json(airspeed);
    j["groundspeed_mps"] = stat_json(groundspeed);
    if (include_timing) j["feedback_time_ms"] = stat_json(feedback_time);
    j["lap_times_s"] = lap_times;
    j["airspeed_violation_fraction"] = airspeed_violation;
    j["alpha_violation_fraction"] = alpha_violation;
    j["degraded_ticks"] = degraded_ticks;
    return j.dump(indent);
}

std::vector<MetricRow> table_rows(const Metrics& m)
{
    return {{"Path-Following Error [m]", m.path_error},
            {"Airspeed [m/s]", m.airspeed},
            {"Ground Speed [m/s]", m.groundspeed},
            {"Feedback Time [ms]", m.feedback_time}};
}

const Metrics* Comparison::find(ControllerMode mode) const
{
    for (const auto& [m, metrics] : results) {
        if (m == mode) return &metrics;
    }
    return nullptr;
}

Comparison compare_controllers(const Scenario& base, const std::vector<ControllerMode>& modes, bool parallel)
{
    if (modes.empty()) throw ArgumentError("compare_controllers: no controllers");
    base.validate();
    Comparison c;
    c.path_name = base.path_name;
    Scenario shared = base;
    shared.path = base.resolve_path();

    std::vector<Scenario> runs;
    for (ControllerMode mode : modes) {
        Scenario s = shared;
        s.controller.mode = mode;
        runs.push_back(std::move(s));
    }
    std::vector<SimLog> logs(runs.size());
    if (parallel) {
        std::vector<std::future<SimLog>> jobs;
        for (const auto& s : runs) jobs.push_back(std::async(std::launch::async, [&s] { return run_scenario(s); }));
        for (std::size_t i = 0; i < jobs.size(); ++i) logs[i] = jobs[i].get();
    } else {
        for (std::size_t i = 0; i < runs.size(); ++i) logs[i] = run_scenario(runs[i]);
    }
    for (std::size_t i = 0; i < runs.size(); ++i) {
        c.results.emplace_back(modes[i], compute_metrics(logs[i], *shared.path, base.controller.envelope));
        c.logs.emplace_back(modes[i], std::move(logs[i]));
    }

    const Metrics* cr = c.find(ControllerMode::CrMpc);
    const Metrics* mp = c.find(ControllerMode::Mpcc);
    const Metrics* la = c.find(ControllerMode::Lookahead);
    if (cr && la) c.orderings["cr-mpc mean error < lookahead mean error"] = cr->path_error.mean < la->path_error.mean;
    if (mp && la) c.orderings["mpcc mean error < lookahead mean error"] = mp->path_error.mean < la->path_error.mean;
    if (cr && mp) {
        c.orderings["mpcc max groundspeed > cr-mpc max groundspeed"] = mp->groundspeed.max > cr->groundspeed.max;
        c.orderings["cr-mpc groundspeed IQR < mpcc groundspeed IQR"] = cr->groundspeed.iqr() < mp->groundspeed.iqr();
    }
    return c;
}

}  // namespace fwmpc
