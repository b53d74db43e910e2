#include "fwmpc/runner.hpp"

#include "fwmpc/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

namespace fwmpc {
namespace {

namespace fs = std::filesystem;
constexpr double kDeg = std::numbers::pi / 180.0;

struct Provenance {
    std::string hash;
    std::uint64_t seed = 0;

    [[nodiscard]] std::string csv_line() const
    {
        return "# config_hash=" + hash + " seed=" + std::to_string(seed) + "\n";
    }
    void stamp(nlohmann::ordered_json& j) const
    {
        j["config_hash"] = hash;
        j["seed"] = seed;
    }
};

Provenance provenance(const RunConfig& cfg, std::uint64_t seed) { return {hash_hex(config_hash(cfg)), seed}; }

// Creates the directory only after every check has passed.
void prepare_dir(const std::string& out_dir)
{
    if (out_dir.empty()) throw ArgumentError("output directory must not be empty");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + out_dir + "': " + ec.message());
}

std::string write_file(const std::string& dir, const std::string& name, const std::string& content)
{
    const auto p = (fs::path(dir) / name).string();
    std::ofstream out(p, std::ios::binary);
    out << content;
    out.close();
    if (!out) throw IoError("cannot write '" + p + "'");
    return p;
}

// Provenance after the schema line so the schema stays first.
std::string with_provenance(const std::string& csv, const Provenance& prov)
{
    const auto nl = csv.find('\n');
    if (nl == std::string::npos) return csv + "\n" + prov.csv_line();
    return csv.substr(0, nl + 1) + prov.csv_line() + csv.substr(nl + 1);
}

std::string num(double v, int prec = 4)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

std::string pad(const std::string& s, std::size_t w)
{
    return s.size() >= w ? s : s + std::string(w - s.size(), ' ');
}

std::string rpad(const std::string& s, std::size_t w)
{
    return s.size() >= w ? s : std::string(w - s.size(), ' ') + s;
}

std::string metrics_json(const Metrics& m, const Provenance& prov, bool timing)
{
    auto j = nlohmann::ordered_json::parse(m.to_json(2, timing));
    prov.stamp(j);
    return j.dump(2) + "\n";
}

void require_maneuvers(const RunConfig& cfg)
{
    if (!cfg.sysid.maneuvers) throw ConfigError("sysid.maneuvers: missing maneuver spec");
}

bool is_angle(const std::string& output) { return output == "phi" || output == "theta" || output == "gamma_a"; }

}  // namespace

double percentile(std::vector<double> values, double p)
{
    if (values.empty()) throw ArgumentError("percentile of an empty sample");
    std::sort(values.begin(), values.end());
    const double pos = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

RunReport cmd_simulate(const RunConfig& cfg, const std::string& out_dir)
{
    cfg.validate();
    const Scenario sc = cfg.effective_scenario();
    const auto path = sc.resolve_path();
    prepare_dir(out_dir);

    const SimLog log = run_scenario(sc);
    const Metrics m = compute_metrics(log, *path, sc.controller.envelope);
    const Provenance prov = provenance(cfg, sc.seed);

    RunReport r;
    r.command = "simulate";
    r.ok = log.status == SimLog::Status::Completed;
    std::ostringstream table;
    log.write_csv(table);
    r.artifacts.push_back(write_file(out_dir, "simlog.csv", with_provenance(table.str(), prov)));
    r.artifacts.push_back(write_file(out_dir, "metrics.json", metrics_json(m, prov, false)));
    std::ostringstream timing;
    log.write_timing_csv(timing);
    r.artifacts.push_back(write_file(out_dir, "timing.csv", with_provenance(timing.str(), prov)));

    std::ostringstream s;
    s << "simulate " << sc.path_name << " " << to_string(sc.controller.mode) << " seed=" << sc.seed
      << " config=" << prov.hash << "\n";
    s << "status: " << to_string(log.status) << (log.message.empty() ? "" : " (" + log.message + ")") << "\n";
    s << "laps: " << log.laps_completed << "\n";
    for (const auto& row : table_rows(m)) {
        s << pad(row.block, 26) << " mean " << rpad(num(row.stat.mean, 3), 9) << "  median "
          << rpad(num(row.stat.median, 3), 9) << "  max " << rpad(num(row.stat.max, 3), 9) << "\n";
    }
    s << "airspeed violation: " << num(100.0 * m.airspeed_violation, 2) << " %, alpha violation: "
      << num(100.0 * m.alpha_violation, 2) << " %, degraded ticks: " << m.degraded_ticks << "\n";
    r.summary = s.str();
    return r;
}

RunReport cmd_compare(const RunConfig& cfg, const std::string& out_dir)
{
    cfg.validate();
    const Scenario base = cfg.effective_scenario();
    prepare_dir(out_dir);
    const Provenance prov = provenance(cfg, base.seed);

    RunReport r;
    r.command = "compare";
    std::string csv = std::string("# schema ") + kCompareSchema + "\n" + prov.csv_line() +
                      "path,controller,block,mean,median,max,q1,q3\n";
    nlohmann::ordered_json doc;
    doc["schema"] = kCompareSchema;
    prov.stamp(doc);
    doc["paths"] = nlohmann::ordered_json::array();
    std::ostringstream s;
    s << "compare seed=" << base.seed << " config=" << prov.hash << "\n";

    for (const auto& name : cfg.paths) {
        Scenario sc = base;
        sc.path_name = name;
        sc.path = nullptr;
        const auto path = sc.resolve_path();
        const Comparison c = compare_controllers(sc, cfg.controllers);

        nlohmann::ordered_json pj;
        pj["path"] = name;
        pj["results"] = nlohmann::ordered_json::array();
        for (const auto& [mode, m] : c.results) {
            for (const auto& row : table_rows(m)) {
                csv += name + "," + std::string(to_string(mode)) + "," + row.block + "," + num(row.stat.mean, 6) + "," +
                       num(row.stat.median, 6) + "," + num(row.stat.max, 6) + "," + num(row.stat.q1, 6) + "," +
                       num(row.stat.q3, 6) + "\n";
            }
            pj["results"].push_back(nlohmann::ordered_json::parse(m.to_json(2, true)));
            if (m.status != "completed") r.ok = false;
        }
        pj["orderings"] = c.orderings;
        doc["paths"].push_back(pj);
        for (const auto& [mode, log] : c.logs) {
            std::ostringstream t;
            log.write_csv(t);
            r.artifacts.push_back(write_file(out_dir, "simlog_" + name + "_" + std::string(to_string(mode)) + ".csv",
                                             with_provenance(t.str(), prov)));
        }

        s << "\n" << name << "\n" << pad("", 26) << pad("", 8);
        for (const auto& [mode, m] : c.results) s << rpad(std::string(to_string(mode)), 11);
        s << "\n";
        const auto& first = c.results.front().second;
        const auto blocks = table_rows(first);
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            for (int k = 0; k < 3; ++k) {
                s << pad(k == 0 ? blocks[b].block : "", 26) << pad(k == 0 ? "mean" : k == 1 ? "median" : "max", 8);
                for (const auto& [mode, m] : c.results) {
                    const Stat& st = table_rows(m)[b].stat;
                    s << rpad(num(k == 0 ? st.mean : k == 1 ? st.median : st.max, 3), 11);
                }
                s << "\n";
            }
        }
        for (const auto& [label, holds] : c.orderings) s << "  " << (holds ? "[holds] " : "[fails] ") << label << "\n";
    }
    r.artifacts.insert(r.artifacts.begin(), write_file(out_dir, "compare.json", doc.dump(2) + "\n"));
    r.artifacts.insert(r.artifacts.begin(), write_file(out_dir, "compare.csv", csv));
    r.summary = s.str();
    return r;
}

std::map<std::string, double> SysIdRun::relative_errors() const
{
    std::map<std::string, double> out;
    std::vector<std::string> keys{"K_phi", "K_theta"};
    for (const auto& k : ModelParameters::open_loop_keys()) keys.push_back(k);
    for (const auto& k : keys) out[k] = std::abs(open_loop.fitted.get(k) / truth.get(k) - 1.0);
    return out;
}

SysIdRun sysid_pipeline(const RunConfig& cfg)
{
    require_maneuvers(cfg);
    SysIdRun run;
    run.truth = cfg.scenario.controller.model;
    run.noise = cfg.sysid.maneuvers->noise;
    run.start = perturbed_guess(run.truth, cfg.sysid.initial_perturbation);
    const SysIdDataset data = generate_maneuvers(run.truth, *cfg.sysid.maneuvers);
    const auto [train, valid] = data.split(cfg.sysid.train_fraction);
    run.train_samples = train.size();
    run.validation_samples = valid.size();
    run.closed_loop = fit_closed_loop(train, run.start, cfg.sysid.fit);
    run.open_loop = fit_open_loop(train, run.closed_loop.fitted, cfg.sysid.fit);
    run.validation_rmse = validate_model(run.open_loop.fitted, valid, cfg.sysid.fit.window);
    run.truth_rmse = validate_model(run.truth, valid, cfg.sysid.fit.window);
    return run;
}

RunReport cmd_sysid(const RunConfig& cfg, const std::string& out_dir)
{
    require_maneuvers(cfg);
    cfg.validate();
    prepare_dir(out_dir);
    const std::uint64_t seed = cfg.sysid.maneuvers->seed;
    const Provenance prov = provenance(cfg, seed);
    const SysIdRun run = sysid_pipeline(cfg);
    const auto rel = run.relative_errors();

    RunReport r;
    r.command = "sysid";
    r.ok = run.closed_loop.converged && run.open_loop.converged;

    nlohmann::ordered_json doc;
    doc["schema"] = kFitSchema;
    prov.stamp(doc);
    doc["noise"] = {{"enabled", run.noise.enabled()},
                    {"attitude_deg", run.noise.attitude / kDeg},
                    {"airspeed_mps", run.noise.airspeed},
                    {"gamma_deg", run.noise.gamma / kDeg},
                    {"accel_mps2", run.noise.accel}};
    doc["train_samples"] = run.train_samples;
    doc["validation_samples"] = run.validation_samples;
    auto fit_json = [](const FitResult& f) {
        nlohmann::ordered_json j;
        j["converged"] = f.converged;
        j["iterations"] = f.iterations;
        nlohmann::ordered_json values;
        for (std::size_t i = 0; i < f.names.size(); ++i) values[f.names[i]] = f.values(static_cast<int>(i));
        j["values"] = values;
        j["train_rmse"] = f.train_rmse;
        j["cost_history"] = f.cost_history;
        nlohmann::ordered_json sens;
        for (std::size_t i = 0; i < f.names.size(); ++i) sens[f.names[i]] = f.sensitivity(static_cast<int>(i));
        j["sensitivity"] = sens;
        nlohmann::ordered_json corr = nlohmann::ordered_json::array();
        for (int i = 0; i < f.correlation.rows(); ++i) {
            std::vector<double> row(f.correlation.cols());
            for (int k = 0; k < f.correlation.cols(); ++k) row[k] = f.correlation(i, k);
            corr.push_back(row);
        }
        j["correlation"] = corr;
        j["diagnostics"] = f.diagnostics;
        return j;
    };
    doc["closed_loop"] = fit_json(run.closed_loop);
    doc["open_loop"] = fit_json(run.open_loop);
    nlohmann::ordered_json params;
    for (const auto& [k, e] : rel) {
        params[k] = {{"truth", run.truth.get(k)},
                     {"start", run.start.get(k)},
                     {"fitted", run.open_loop.fitted.get(k)},
                     {"relative_error", e}};
    }
    doc["parameters"] = params;
    doc["validation_rmse"] = run.validation_rmse;
    doc["truth_model_rmse"] = run.truth_rmse;

    std::string params_csv = std::string("# schema ") + kFitSchema + "\n" + prov.csv_line() +
                             "parameter,truth,start,fitted,relative_error\n";
    for (const auto& [k, e] : rel) {
        params_csv += k + "," + num(run.truth.get(k), 8) + "," + num(run.start.get(k), 8) + "," +
                      num(run.open_loop.fitted.get(k), 8) + "," + num(e, 8) + "\n";
    }
    std::string rmse_csv = std::string("# schema ") + kFitSchema + "\n" + prov.csv_line() +
                           "output,unit,rmse_fitted,rmse_truth_model\n";
    for (const auto& name : sysid_output_names()) {
        const double scale = is_angle(name) ? 1.0 / kDeg : 1.0;
        const std::string unit = is_angle(name) ? "deg" : name == "V_a" ? "m/s" : "m/s^2";
        rmse_csv += name + "," + unit + "," + num(run.validation_rmse.at(name) * scale, 8) + "," +
                    num(run.truth_rmse.at(name) * scale, 8) + "\n";
    }
    r.artifacts.push_back(write_file(out_dir, "fit.json", doc.dump(2) + "\n"));
    r.artifacts.push_back(write_file(out_dir, "parameters.csv", params_csv));
    r.artifacts.push_back(write_file(out_dir, "validation_rmse.csv", rmse_csv));

    std::ostringstream s;
    s << "sysid seed=" << seed << " config=" << prov.hash << "\n";
    if (run.noise.enabled()) {
        s << "measurement noise: attitude " << num(run.noise.attitude / kDeg, 2) << " deg, airspeed "
          << num(run.noise.airspeed, 2) << " m/s, gamma " << num(run.noise.gamma / kDeg, 2) << " deg, accel "
          << num(run.noise.accel, 2) << " m/s^2\n";
    } else {
        s << "measurement noise: none\n";
    }
    s << "samples: " << run.train_samples << " train, " << run.validation_samples << " validation\n";
    s << "closed loop: " << run.closed_loop.iterations << " iterations, "
      << (run.closed_loop.converged ? "converged" : "not converged") << "\n";
    s << "open loop:   " << run.open_loop.iterations << " iterations, "
      << (run.open_loop.converged ? "converged" : "not converged") << "\n\n";
    s << pad("parameter", 10) << rpad("truth", 12) << rpad("start", 12) << rpad("fitted", 12) << rpad("error %", 10)
      << "\n";
    for (const auto& [k, e] : rel) {
        s << pad(k, 10) << rpad(num(run.truth.get(k), 4), 12) << rpad(num(run.start.get(k), 4), 12)
          << rpad(num(run.open_loop.fitted.get(k), 4), 12) << rpad(num(100.0 * e, 3), 10) << "\n";
    }
    s << "\n" << pad("output", 10) << pad("unit", 8) << rpad("RMSE", 12) << rpad("truth RMSE", 12) << "\n";
    for (const auto& name : sysid_output_names()) {
        const double scale = is_angle(name) ? 1.0 / kDeg : 1.0;
        const std::string unit = is_angle(name) ? "deg" : name == "V_a" ? "m/s" : "m/s^2";
        s << pad(name, 10) << pad(unit, 8) << rpad(num(run.validation_rmse.at(name) * scale, 4), 12)
          << rpad(num(run.truth_rmse.at(name) * scale, 4), 12) << "\n";
    }
    r.summary = s.str();
    return r;
}

SweepResult horizon_sweep(const RunConfig& cfg)
{
    SweepResult out;
    for (int N : cfg.sweep.horizons) {
        Scenario sc = cfg.effective_scenario();
        sc.path_name = cfg.sweep.path;
        sc.path = nullptr;
        sc.controller.mode = cfg.sweep.mode;
        sc.controller.N = N;
        sc.controller.horizon = N * sc.controller.dt;
        sc.laps = 1000;
        sc.timeout = cfg.sweep.duration;
        const SimLog log = run_scenario(sc);
        std::vector<double> ms;
        for (const auto& rec : log.records) {
            if (rec.solve_time > 0.0) ms.push_back(1e3 * rec.solve_time);
        }
        if (ms.empty()) throw SolverError("horizon sweep: no timed solves at N = " + std::to_string(N));
        SweepRow row;
        row.N = N;
        row.ticks = static_cast<int>(ms.size());
        const Stat st = statistics(ms);
        row.mean_ms = st.mean;
        row.median_ms = st.median;
        row.max_ms = st.max;
        row.p95_ms = percentile(ms, 95.0);
        out.rows.push_back(row);
    }
    if (out.rows.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double n = static_cast<double>(out.rows.size());
        for (const auto& row : out.rows) {
            const double x = std::log(row.N), y = std::log(row.mean_ms);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        const double den = n * sxx - sx * sx;
        out.exponent = den > 0.0 ? (n * sxy - sx * sy) / den : 0.0;
    }
    return out;
}

RunReport cmd_horizon_sweep(const RunConfig& cfg, const std::string& out_dir)
{
    cfg.validate();
    {
        // every swept horizon must pass the controller checks before any work
        Scenario sc = cfg.effective_scenario();
        for (int N : cfg.sweep.horizons) {
            sc.controller.N = N;
            sc.controller.horizon = N * sc.controller.dt;
            try {
                sc.controller.validate();
            } catch (const ArgumentError& e) {
                throw ConfigError("sweep.horizons: N = " + std::to_string(N) + ": " + e.what());
            }
        }
    }
    prepare_dir(out_dir);
    const Provenance prov = provenance(cfg, cfg.scenario.seed);
    const SweepResult res = horizon_sweep(cfg);

    RunReport r;
    r.command = "horizon-sweep";
    std::string csv = std::string("# schema ") + kSweepSchema + "\n" + prov.csv_line() +
                      "N,horizon_s,ticks,mean_ms,median_ms,p95_ms,max_ms\n";
    nlohmann::ordered_json doc;
    doc["schema"] = kSweepSchema;
    prov.stamp(doc);
    doc["path"] = cfg.sweep.path;
    doc["controller"] = std::string(to_string(cfg.sweep.mode));
    doc["duration_s"] = cfg.sweep.duration;
    doc["rows"] = nlohmann::ordered_json::array();
    std::ostringstream s;
    s << "horizon-sweep " << cfg.sweep.path << " " << to_string(cfg.sweep.mode) << " seed=" << cfg.scenario.seed
      << " config=" << prov.hash << "\n";
    s << rpad("N", 5) << rpad("ticks", 8) << rpad("mean ms", 11) << rpad("median ms", 11) << rpad("p95 ms", 11)
      << rpad("max ms", 11) << "\n";
    const double dt = cfg.scenario.controller.dt;
    for (const auto& row : res.rows) {
        csv += std::to_string(row.N) + "," + num(row.N * dt, 3) + "," + std::to_string(row.ticks) + "," +
               num(row.mean_ms, 4) + "," + num(row.median_ms, 4) + "," + num(row.p95_ms, 4) + "," +
               num(row.max_ms, 4) + "\n";
        doc["rows"].push_back({{"N", row.N},
                               {"horizon_s", row.N * dt},
                               {"ticks", row.ticks},
                               {"mean_ms", row.mean_ms},
                               {"median_ms", row.median_ms},
                               {"p95_ms", row.p95_ms},
                               {"max_ms", row.max_ms}});
        s << rpad(std::to_string(row.N), 5) << rpad(std::to_string(row.ticks), 8) << rpad(num(row.mean_ms, 2), 11)
          << rpad(num(row.median_ms, 2), 11) << rpad(num(row.p95_ms, 2), 11) << rpad(num(row.max_ms, 2), 11) << "\n";
    }
    doc["exponent"] = res.exponent;
    s << "growth exponent (log mean vs log N): " << num(res.exponent, 3) << "\n";
    r.artifacts.push_back(write_file(out_dir, "sweep.csv", csv));
    r.artifacts.push_back(write_file(out_dir, "sweep.json", doc.dump(2) + "\n"));
    r.summary = s.str();
    return r;
}

}  // namespace fwmpc
