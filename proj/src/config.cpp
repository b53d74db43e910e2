#include "fwmpc/config.hpp"

#include "fwmpc/errors.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace fwmpc {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

const std::set<std::string>& envelope_angles()
{
    static const std::set<std::string> keys{"alpha_min", "alpha_max", "phi_c_min", "phi_c_max", "theta_c_min",
                                            "theta_c_max"};
    return keys;
}

std::string join(const std::vector<std::string>& v)
{
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
    return s;
}

std::string kind_name(ManeuverSegment::Kind k)
{
    switch (k) {
    case ManeuverSegment::Kind::Hold: return "hold";
    case ManeuverSegment::Kind::Doublet: return "doublet";
    case ManeuverSegment::Kind::FreeForm: return "free-form";
    }
    return "hold";
}

std::string axis_name(ManeuverSegment::Axis a)
{
    switch (a) {
    case ManeuverSegment::Axis::Roll: return "roll";
    case ManeuverSegment::Axis::Pitch: return "pitch";
    case ManeuverSegment::Axis::Throttle: return "throttle";
    }
    return "roll";
}

// Mapping node reader that remembers which keys were consumed so leftovers
// can be reported as unknown.
class Section {
public:
    Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path))
    {
        if (node_ && !node_.IsNull() && !node_.IsMap()) throw ConfigError(path_ + ": expected a mapping");
    }

    [[nodiscard]] bool has(const std::string& key) const { return node_ && node_.IsMap() && node_[key]; }
    [[nodiscard]] std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    YAML::Node take(const std::string& key)
    {
        used_.insert(key);
        return has(key) ? node_[key] : YAML::Node(YAML::NodeType::Undefined);
    }

    Section sub(const std::string& key) { return {take(key), field(key)}; }

    void num(const std::string& key, double& dst, double scale = 1.0)
    {
        auto n = take(key);
        if (!n) return;
        dst = scalar<double>(n, key) * scale;
        if (!std::isfinite(dst)) throw ConfigError(field(key) + ": must be finite");
    }
    void integer(const std::string& key, int& dst)
    {
        auto n = take(key);
        if (n) dst = scalar<int>(n, key);
    }
    void seed(const std::string& key, std::uint64_t& dst)
    {
        auto n = take(key);
        if (n) dst = scalar<std::uint64_t>(n, key);
    }
    void text(const std::string& key, std::string& dst)
    {
        auto n = take(key);
        if (n) dst = scalar<std::string>(n, key);
    }
    void vec3(const std::string& key, Eigen::Vector3d& dst)
    {
        auto n = take(key);
        if (!n) return;
        if (!n.IsSequence() || n.size() != 3) throw ConfigError(field(key) + ": expected a list of three numbers");
        for (int i = 0; i < 3; ++i) dst(i) = scalar<double>(n[i], key);
    }
    template <class T>
    std::vector<T> list(const std::string& key)
    {
        auto n = take(key);
        std::vector<T> out;
        if (!n) return out;
        if (!n.IsSequence()) throw ConfigError(field(key) + ": expected a list");
        for (const auto& e : n) out.push_back(scalar<T>(e, key));
        if (out.empty()) throw ConfigError(field(key) + ": must not be empty");
        return out;
    }

    void finish() const
    {
        if (!node_ || !node_.IsMap()) return;
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (!used_.count(key)) throw ConfigError("unknown key '" + field(key) + "'");
        }
    }

    template <class T>
    T scalar(const YAML::Node& n, const std::string& key) const
    {
        if (!n.IsScalar()) throw ConfigError(field(key) + ": expected a scalar");
        try {
            return n.as<T>();
        } catch (const YAML::Exception&) {
            throw ConfigError(field(key) + ": cannot read '" + n.Scalar() + "'");
        }
    }

private:
    YAML::Node node_;
    std::string path_;
    std::set<std::string> used_;
};

ControllerMode parse_mode(const std::string& s, const std::string& field)
{
    try {
        return controller_mode_from_string(s);
    } catch (const ArgumentError& e) {
        throw ConfigError(field + ": " + e.what());
    }
}

ManeuverSegment parse_segment(Section s)
{
    ManeuverSegment seg;
    std::string kind = "hold";
    s.text("kind", kind);
    if (kind == "hold") {
        seg.kind = ManeuverSegment::Kind::Hold;
    } else if (kind == "doublet") {
        seg.kind = ManeuverSegment::Kind::Doublet;
    } else if (kind == "free-form") {
        seg.kind = ManeuverSegment::Kind::FreeForm;
    } else {
        throw ConfigError(s.field("kind") + ": unknown segment kind '" + kind + "' (expected hold, doublet or free-form)");
    }
    s.num("duration", seg.duration);
    s.num("airspeed", seg.airspeed);
    if (seg.kind == ManeuverSegment::Kind::Doublet) {
        std::string axis = "roll";
        s.text("axis", axis);
        if (axis == "roll") {
            seg.axis = ManeuverSegment::Axis::Roll;
        } else if (axis == "pitch") {
            seg.axis = ManeuverSegment::Axis::Pitch;
        } else if (axis == "throttle") {
            seg.axis = ManeuverSegment::Axis::Throttle;
        } else {
            throw ConfigError(s.field("axis") + ": unknown axis '" + axis + "' (expected roll, pitch or throttle)");
        }
        s.num("amplitude", seg.amplitude, seg.axis == ManeuverSegment::Axis::Throttle ? 1.0 : kDeg);
        s.num("pulse", seg.pulse);
    } else if (seg.kind == ManeuverSegment::Kind::FreeForm) {
        s.num("roll_amplitude", seg.roll_amplitude, kDeg);
        s.num("pitch_amplitude", seg.pitch_amplitude, kDeg);
        s.num("throttle_amplitude", seg.throttle_amplitude);
        s.num("bandwidth", seg.bandwidth);
        s.seed("seed", seg.seed);
    }
    s.finish();
    return seg;
}

ManeuverSpec parse_maneuvers(Section s)
{
    ManeuverSpec spec;
    spec.segments.clear();
    s.num("trim_airspeed", spec.trim_airspeed);
    s.num("sample_rate", spec.sample_rate);
    s.integer("substeps", spec.substeps);
    s.num("settle", spec.settle);
    s.seed("seed", spec.seed);
    s.vec3("wind", spec.wind);
    {
        Section n = s.sub("noise");
        n.num("attitude", spec.noise.attitude, kDeg);
        n.num("airspeed", spec.noise.airspeed);
        n.num("gamma", spec.noise.gamma, kDeg);
        n.num("accel", spec.noise.accel);
        n.finish();
    }
    auto segs = s.take("segments");
    if (!segs || !segs.IsSequence() || segs.size() == 0) {
        throw ConfigError(s.field("segments") + ": missing maneuver segments");
    }
    for (std::size_t i = 0; i < segs.size(); ++i) {
        spec.segments.push_back(parse_segment(Section(segs[i], s.field("segments") + "[" + std::to_string(i) + "]")));
    }
    s.finish();
    return spec;
}

// Shortest round-trip representation.
std::string fmt(double v)
{
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, r.ptr);
    if (s.find_first_of(".en") == std::string::npos) s += ".0";
    return s;
}

std::string fmt3(const Eigen::Vector3d& v) { return "[" + fmt(v(0)) + ", " + fmt(v(1)) + ", " + fmt(v(2)) + "]"; }

}  // namespace

Scenario RunConfig::effective_scenario() const
{
    Scenario sc = scenario;
    if (mismatch > 0.0) {
        for (const auto& [key, f] : open_loop_mismatch(mismatch, scenario.seed)) {
            auto it = sc.plant_factors.find(key);
            sc.plant_factors[key] = (it == sc.plant_factors.end() ? 1.0 : it->second) * f;
        }
    }
    return sc;
}

void RunConfig::validate() const
{
    const auto& c = scenario.controller;
    if (c.N < 1) throw ConfigError("controller.N must be >= 1");
    if (!(c.dt > 0.0)) throw ConfigError("controller.dt must be positive");
    if (std::abs(c.N * c.dt - c.horizon) > 1e-9 * std::max(c.horizon, 1e-9)) {
        throw ConfigError("controller.N * controller.dt = " + fmt(c.N * c.dt) +
                          " s does not match controller.horizon = " + fmt(c.horizon) + " s");
    }
    auto valid_path = [](const std::string& name, const std::string& field) {
        const auto& names = path_names();
        if (std::find(names.begin(), names.end(), name) == names.end()) {
            throw ConfigError(field + ": unknown path preset '" + name + "' (valid presets: " + join(names) + ")");
        }
    };
    valid_path(scenario.path_name, "scenario.path");
    try {
        scenario.validate();
    } catch (const ArgumentError& e) {
        throw ConfigError(std::string("invalid scenario/controller settings: ") + e.what());
    }
    if (!(mismatch >= 0.0 && mismatch < 0.9)) throw ConfigError("scenario.mismatch must lie in [0, 0.9)");

    if (paths.empty()) throw ConfigError("compare.paths must not be empty");
    for (const auto& p : paths) valid_path(p, "compare.paths");
    if (controllers.empty()) throw ConfigError("compare.controllers must not be empty");
    for (std::size_t i = 0; i < controllers.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (controllers[i] == controllers[j]) {
                throw ConfigError("compare.controllers lists '" + std::string(to_string(controllers[i])) + "' twice");
            }
        }
    }

    if (sweep.horizons.empty()) throw ConfigError("sweep.horizons must not be empty");
    for (int n : sweep.horizons) {
        if (n < 1 || n > 1000) throw ConfigError("sweep.horizons entries must lie in [1, 1000]");
    }
    valid_path(sweep.path, "sweep.path");
    if (!(sweep.duration > 0.0)) throw ConfigError("sweep.duration must be positive");

    if (!(sysid.train_fraction > 0.0 && sysid.train_fraction < 1.0)) {
        throw ConfigError("sysid.train_fraction must lie in (0, 1)");
    }
    if (!(sysid.initial_perturbation >= 0.0 && sysid.initial_perturbation < 0.9)) {
        throw ConfigError("sysid.initial_perturbation must lie in [0, 0.9)");
    }
    if (sysid.fit.max_iterations < 1) throw ConfigError("sysid.fit.max_iterations must be >= 1");
    if (!(sysid.fit.tolerance > 0.0)) throw ConfigError("sysid.fit.tolerance must be positive");
    if (!(sysid.fit.window > 0.0)) throw ConfigError("sysid.fit.window must be positive");
    if (!(sysid.fit.min_sensitivity >= 0.0)) throw ConfigError("sysid.fit.min_sensitivity must be nonnegative");
    if (sysid.maneuvers) {
        try {
            sysid.maneuvers->validate(scenario.controller.model);
        } catch (const ArgumentError& e) {
            throw ConfigError(std::string("sysid.maneuvers: ") + e.what());
        }
    }
}

RunConfig default_config()
{
    RunConfig cfg;
    cfg.sysid.maneuvers = ManeuverSpec::default_spec();
    return cfg;
}

RunConfig parse_config(const std::string& yaml_text)
{
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("YAML parse error: ") + e.what());
    }
    RunConfig cfg;
    Section top(root, "");
    {
        auto schema = top.take("schema");
        if (schema && schema.as<std::string>() != kConfigSchema) {
            throw ConfigError("schema: expected " + std::string(kConfigSchema) + ", got " + schema.as<std::string>());
        }
    }
    auto& ctl = cfg.scenario.controller;
    {
        Section s = top.sub("model");
        for (const auto& k : ModelParameters::keys()) {
            double v = ctl.model.get(k);
            s.num(k, v);
            ctl.model.set(k, v);
        }
        s.finish();
    }
    {
        Section s = top.sub("weights");
        for (const auto& k : StageWeights::keys()) {
            double v = ctl.weights.get(k);
            s.num(k, v);
            ctl.weights.set(k, v);
        }
        s.finish();
    }
    {
        Section s = top.sub("envelope");
        for (const auto& k : FlightEnvelope::keys()) {
            double v = ctl.envelope.get(k);
            s.num(k, v, envelope_angles().count(k) ? kDeg : 1.0);
            ctl.envelope.set(k, v);
        }
        s.finish();
    }
    {
        Section s = top.sub("controller");
        std::string mode(to_string(ctl.mode));
        s.text("mode", mode);
        ctl.mode = parse_mode(mode, "controller.mode");
        s.integer("N", ctl.N);
        s.num("dt", ctl.dt);
        s.num("horizon", ctl.horizon);
        s.num("query_period", ctl.query_period);
        s.num("psi_dot_ref", ctl.psi_dot_ref);
        s.num("lookahead_time", ctl.lookahead_time);
        s.num("airspeed_ref", ctl.airspeed_ref);
        s.num("window_margin", ctl.window_margin);
        {
            Section g = s.sub("lookahead_gains");
            g.num("kp_airspeed", ctl.gains.kp_airspeed);
            g.num("ki_airspeed", ctl.gains.ki_airspeed);
            g.num("kp_altitude", ctl.gains.kp_altitude);
            g.num("ki_altitude", ctl.gains.ki_altitude);
            g.num("airspeed_integrator_limit", ctl.gains.airspeed_integrator_limit);
            g.num("altitude_integrator_limit", ctl.gains.altitude_integrator_limit);
            g.finish();
        }
        {
            Section q = s.sub("solver");
            q.num("regularization", ctl.solver.regularization);
            q.num("trust_radius", ctl.solver.trust_radius);
            q.num("qp_tolerance", ctl.solver.qp.tol);
            q.integer("qp_max_iterations", ctl.solver.qp.max_iterations);
            q.finish();
        }
        s.finish();
    }
    {
        Section s = top.sub("scenario");
        auto& sc = cfg.scenario;
        s.text("path", sc.path_name);
        s.integer("laps", sc.laps);
        s.seed("seed", sc.seed);
        s.num("initial_airspeed", sc.initial_airspeed);
        s.num("substep", sc.substep);
        s.num("timeout", sc.timeout);
        s.num("mismatch", cfg.mismatch);
        {
            Section f = s.sub("plant_factors");
            for (const auto& k : ModelParameters::keys()) {
                if (!f.has(k)) continue;
                double v = 1.0;
                f.num(k, v);
                sc.plant_factors[k] = v;
            }
            f.finish();
        }
        {
            Section w = s.sub("wind");
            std::string kind = sc.wind.kind == WindModel::Kind::Gusty ? "gusty" : "constant";
            w.text("kind", kind);
            if (kind == "constant") {
                sc.wind.kind = WindModel::Kind::Constant;
            } else if (kind == "gusty") {
                sc.wind.kind = WindModel::Kind::Gusty;
            } else {
                throw ConfigError("scenario.wind.kind: unknown wind kind '" + kind + "' (expected constant or gusty)");
            }
            w.vec3("mean", sc.wind.mean);
            w.vec3("sigma", sc.wind.sigma);
            w.num("tau", sc.wind.tau);
            w.num("max_magnitude", sc.wind.max_magnitude);
            w.finish();
        }
        {
            Section n = s.sub("estimate_noise");
            n.num("position", sc.noise.position);
            n.num("attitude", sc.noise.attitude, kDeg);
            n.num("airspeed", sc.noise.airspeed);
            n.finish();
        }
        s.finish();
    }
    {
        Section s = top.sub("compare");
        if (s.has("paths")) cfg.paths = s.list<std::string>("paths");
        if (s.has("controllers")) {
            cfg.controllers.clear();
            for (const auto& m : s.list<std::string>("controllers")) {
                cfg.controllers.push_back(parse_mode(m, "compare.controllers"));
            }
        }
        s.finish();
    }
    {
        Section s = top.sub("sysid");
        s.num("train_fraction", cfg.sysid.train_fraction);
        s.num("initial_perturbation", cfg.sysid.initial_perturbation);
        {
            Section f = s.sub("fit");
            f.integer("max_iterations", cfg.sysid.fit.max_iterations);
            f.num("tolerance", cfg.sysid.fit.tolerance);
            f.num("window", cfg.sysid.fit.window);
            f.num("min_sensitivity", cfg.sysid.fit.min_sensitivity);
            f.finish();
        }
        if (s.has("maneuvers")) cfg.sysid.maneuvers = parse_maneuvers(s.sub("maneuvers"));
        s.finish();
    }
    {
        Section s = top.sub("sweep");
        if (s.has("horizons")) cfg.sweep.horizons = s.list<int>("horizons");
        s.text("path", cfg.sweep.path);
        std::string mode(to_string(cfg.sweep.mode));
        s.text("controller", mode);
        cfg.sweep.mode = parse_mode(mode, "sweep.controller");
        s.num("duration", cfg.sweep.duration);
        s.finish();
    }
    top.finish();
    return cfg;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string dump_config(const RunConfig& cfg)
{
    const auto& ctl = cfg.scenario.controller;
    const auto& sc = cfg.scenario;
    std::ostringstream o;
    o << "# angles in degrees, speeds in m/s, times in s\n";
    o << "schema: " << kConfigSchema << "\n";
    o << "model:\n";
    for (const auto& k : ModelParameters::keys()) o << "  " << k << ": " << fmt(ctl.model.get(k)) << "\n";
    o << "weights:\n";
    for (const auto& k : StageWeights::keys()) o << "  " << k << ": " << fmt(ctl.weights.get(k)) << "\n";
    o << "envelope:\n";
    for (const auto& k : FlightEnvelope::keys()) {
        const double v = ctl.envelope.get(k);
        o << "  " << k << ": " << fmt(envelope_angles().count(k) ? v / kDeg : v) << "\n";
    }
    o << "controller:\n"
      << "  mode: " << to_string(ctl.mode) << "\n"
      << "  N: " << ctl.N << "\n"
      << "  dt: " << fmt(ctl.dt) << "\n"
      << "  horizon: " << fmt(ctl.horizon) << "\n"
      << "  query_period: " << fmt(ctl.query_period) << "\n"
      << "  psi_dot_ref: " << fmt(ctl.psi_dot_ref) << "\n"
      << "  lookahead_time: " << fmt(ctl.lookahead_time) << "\n"
      << "  airspeed_ref: " << fmt(ctl.airspeed_ref) << "\n"
      << "  window_margin: " << fmt(ctl.window_margin) << "\n"
      << "  lookahead_gains:\n"
      << "    kp_airspeed: " << fmt(ctl.gains.kp_airspeed) << "\n"
      << "    ki_airspeed: " << fmt(ctl.gains.ki_airspeed) << "\n"
      << "    kp_altitude: " << fmt(ctl.gains.kp_altitude) << "\n"
      << "    ki_altitude: " << fmt(ctl.gains.ki_altitude) << "\n"
      << "    airspeed_integrator_limit: " << fmt(ctl.gains.airspeed_integrator_limit) << "\n"
      << "    altitude_integrator_limit: " << fmt(ctl.gains.altitude_integrator_limit) << "\n"
      << "  solver:\n"
      << "    regularization: " << fmt(ctl.solver.regularization) << "\n"
      << "    trust_radius: " << fmt(ctl.solver.trust_radius) << "\n"
      << "    qp_tolerance: " << fmt(ctl.solver.qp.tol) << "\n"
      << "    qp_max_iterations: " << ctl.solver.qp.max_iterations << "\n";
    o << "scenario:\n"
      << "  path: " << sc.path_name << "\n"
      << "  laps: " << sc.laps << "\n"
      << "  seed: " << sc.seed << "\n"
      << "  initial_airspeed: " << fmt(sc.initial_airspeed) << "\n"
      << "  substep: " << fmt(sc.substep) << "\n"
      << "  timeout: " << fmt(sc.timeout) << "\n"
      << "  mismatch: " << fmt(cfg.mismatch) << "\n";
    o << "  plant_factors:" << (sc.plant_factors.empty() ? " {}" : "") << "\n";
    for (const auto& [k, v] : sc.plant_factors) o << "    " << k << ": " << fmt(v) << "\n";
    o << "  wind:\n"
      << "    kind: " << (sc.wind.kind == WindModel::Kind::Gusty ? "gusty" : "constant") << "\n"
      << "    mean: " << fmt3(sc.wind.mean) << "\n"
      << "    sigma: " << fmt3(sc.wind.sigma) << "\n"
      << "    tau: " << fmt(sc.wind.tau) << "\n"
      << "    max_magnitude: " << fmt(sc.wind.max_magnitude) << "\n"
      << "  estimate_noise:\n"
      << "    position: " << fmt(sc.noise.position) << "\n"
      << "    attitude: " << fmt(sc.noise.attitude / kDeg) << "\n"
      << "    airspeed: " << fmt(sc.noise.airspeed) << "\n";
    o << "compare:\n  paths: [";
    for (std::size_t i = 0; i < cfg.paths.size(); ++i) o << (i ? ", " : "") << cfg.paths[i];
    o << "]\n  controllers: [";
    for (std::size_t i = 0; i < cfg.controllers.size(); ++i) o << (i ? ", " : "") << to_string(cfg.controllers[i]);
    o << "]\n";
    o << "sysid:\n"
      << "  train_fraction: " << fmt(cfg.sysid.train_fraction) << "\n"
      << "  initial_perturbation: " << fmt(cfg.sysid.initial_perturbation) << "\n"
      << "  fit:\n"
      << "    max_iterations: " << cfg.sysid.fit.max_iterations << "\n"
      << "    tolerance: " << fmt(cfg.sysid.fit.tolerance) << "\n"
      << "    window: " << fmt(cfg.sysid.fit.window) << "\n"
      << "    min_sensitivity: " << fmt(cfg.sysid.fit.min_sensitivity) << "\n";
    if (cfg.sysid.maneuvers) {
        const auto& m = *cfg.sysid.maneuvers;
        o << "  maneuvers:\n"
          << "    trim_airspeed: " << fmt(m.trim_airspeed) << "\n"
          << "    sample_rate: " << fmt(m.sample_rate) << "\n"
          << "    substeps: " << m.substeps << "\n"
          << "    settle: " << fmt(m.settle) << "\n"
          << "    seed: " << m.seed << "\n"
          << "    wind: " << fmt3(m.wind) << "\n"
          << "    noise:\n"
          << "      attitude: " << fmt(m.noise.attitude / kDeg) << "\n"
          << "      airspeed: " << fmt(m.noise.airspeed) << "\n"
          << "      gamma: " << fmt(m.noise.gamma / kDeg) << "\n"
          << "      accel: " << fmt(m.noise.accel) << "\n"
          << "    segments:\n";
        for (const auto& s : m.segments) {
            o << "      - {kind: " << kind_name(s.kind) << ", duration: " << fmt(s.duration)
              << ", airspeed: " << fmt(s.airspeed);
            if (s.kind == ManeuverSegment::Kind::Doublet) {
                const bool angle = s.axis != ManeuverSegment::Axis::Throttle;
                o << ", axis: " << axis_name(s.axis) << ", amplitude: " << fmt(angle ? s.amplitude / kDeg : s.amplitude)
                  << ", pulse: " << fmt(s.pulse);
            } else if (s.kind == ManeuverSegment::Kind::FreeForm) {
                o << ", roll_amplitude: " << fmt(s.roll_amplitude / kDeg)
                  << ", pitch_amplitude: " << fmt(s.pitch_amplitude / kDeg)
                  << ", throttle_amplitude: " << fmt(s.throttle_amplitude) << ", bandwidth: " << fmt(s.bandwidth)
                  << ", seed: " << s.seed;
            }
            o << "}\n";
        }
    }
    o << "sweep:\n  horizons: [";
    for (std::size_t i = 0; i < cfg.sweep.horizons.size(); ++i) o << (i ? ", " : "") << cfg.sweep.horizons[i];
    o << "]\n"
      << "  path: " << cfg.sweep.path << "\n"
      << "  controller: " << to_string(cfg.sweep.mode) << "\n"
      << "  duration: " << fmt(cfg.sweep.duration) << "\n";
    return o.str();
}

std::uint64_t config_hash(const RunConfig& cfg)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : dump_config(cfg)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hash_hex(std::uint64_t hash)
{
    char buf[17];
    auto r = std::to_chars(buf, buf + sizeof buf, hash, 16);
    std::string s(buf, r.ptr);
    return std::string(16 - s.size(), '0') + s;
}

}  // namespace fwmpc
