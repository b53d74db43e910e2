#include "fwmpc/errors.hpp"
#include "fwmpc/ocp.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace fwmpc;
using testing::deg;

namespace {

std::shared_ptr<const ArcLengthPath> north_line()
{
    std::vector<Eigen::Vector3d> pts;
    for (int i = 0; i <= 20; ++i) pts.emplace_back(-200.0 + 100.0 * i, 0.0, -100.0);
    return std::make_shared<const ArcLengthPath>(ArcLengthPath::build(pts, false));
}

std::shared_ptr<const ArcLengthPath> preset(const std::string& name)
{
    return std::make_shared<const ArcLengthPath>(lissajous_path(lissajous_preset(name)));
}

struct Trajectory {
    std::vector<Eigen::VectorXd> X, U, S;
};

Trajectory random_trajectory(std::mt19937_64& rng, const StructuredNlp& nlp)
{
    Trajectory t;
    const int N = nlp.horizon();
    for (int k = 0; k <= N; ++k) {
        Eigen::VectorXd x(nlp.nx());
        x.head<kStateDim>() = testing::random_state(rng);
        if (nlp.nx() > kStateDim) x(kStateDim) = testing::uniform(rng, 0.0, 500.0);
        t.X.push_back(x);
        Eigen::VectorXd s(kSlackDim);
        for (int i = 0; i < kSlackDim; ++i) s(i) = testing::uniform(rng, 0.0, 0.5);
        t.S.push_back(s);
        if (k < N) {
            Eigen::VectorXd u(nlp.nu());
            u.head<3>() = testing::random_command(rng);
            if (nlp.nu() > kControlDim) u(3) = testing::uniform(rng, 15.0, 45.0);
            t.U.push_back(u);
        }
    }
    return t;
}

// Scalar sum of the two quadratic forms, written out term by term.
double reference_cost(const StructuredNlp& nlp, const Trajectory& t)
{
    const StageWeights& W = nlp.weights();
    const ModelParameters& p = nlp.params();
    const ArcLengthPath& path = nlp.path();
    const int N = nlp.horizon();
    const bool mpcc = nlp.mode() == OcpMode::Mpcc;
    double J = 0.0;
    for (int k = 1; k <= N; ++k) {
        const auto& x = t.X[k];
        const double psi = mpcc ? x(9) : nlp.schedule()[k];
        const double q = path.closed() ? path.wrap(psi) : std::clamp(psi, 0.0, path.total_length());
        const Eigen::Vector3d rp = path.position(q);
        const auto f = path.frame_at(q);
        const double en = x(0) - rp(0), ee = x(1) - rp(1), ed = x(2) - rp(2);
        const double ndot = x(6) * std::cos(x(7)) * std::cos(x(5)) + nlp.wind()(0);
        const double edot = x(6) * std::cos(x(7)) * std::sin(x(5)) + nlp.wind()(1);
        const double ec = std::atan2(edot, ndot) - std::atan2(f.tangent(1), f.tangent(0));
        const double echi = std::atan2(std::sin(ec), std::cos(ec));
        const double egam = x(7) - std::asin(-f.tangent(2) / f.tangent.norm());
        J += 0.5 * (W.q_n * en * en + W.q_e * ee * ee + W.q_d * ed * ed + W.q_chi * echi * echi +
                    W.q_gamma * egam * egam);
        if (mpcc && k < N) {
            const double ev = nlp.envelope().Va_max - x(6);
            J += 0.5 * W.mu * ev * ev;
        }
        const auto& s = t.S[k];
        J += 0.5 * (W.s_Va * s(0) * s(0) + W.s_alpha * s(1) * s(1) + W.s_Va * s(2) * s(2) + W.s_alpha * s(3) * s(3));
    }
    for (int k = 0; k < N; ++k) {
        const auto& x = t.X[k];
        const auto& u = t.U[k];
        const double pd = p.K_phi * (u(0) - x(3));
        const double td = p.K_theta * (u(1) - x(4));
        const double dd = (u(2) - x(8)) / p.tau_T;
        J += 0.5 * (W.b_phidot * pd * pd + W.b_thetadot * td * td + W.b_deltaTdot * dd * dd);
        const Eigen::VectorXd du = u - nlp.slew_reference()[k];
        const double lk = std::pow(W.lambda, k);
        J += 0.5 * lk * (W.r_phi * du(0) * du(0) + W.r_theta * du(1) * du(1) + W.r_deltaT * du(2) * du(2));
        if (mpcc) J += 0.5 * lk * W.r_psidot * du(3) * du(3);
    }
    return J;
}

AircraftState on_line_state(double V)
{
    AircraftState s = level_trim(V, ModelParameters{}).state;
    s.d = -100.0;
    return s;
}

}  // namespace

TEST_CASE("reference schedule")
{
    const auto s = reference_schedule(100.0, 25.0, 0.1, 50);
    CHECK(s.size() == 51);
    CHECK(s[10] == doctest::Approx(125.0).epsilon(1e-12));
    const auto flat = reference_schedule(100.0, 0.0, 0.1, 5);
    for (double v : flat) CHECK(v == 100.0);

    std::vector<Eigen::Vector3d> pts;
    for (int i = 0; i < 100; ++i) {
        const double a = 2 * std::numbers::pi * i / 100;
        pts.emplace_back(500.0 / (2 * std::numbers::pi) * std::cos(a), 500.0 / (2 * std::numbers::pi) * std::sin(a), 0);
    }
    const auto loop = ArcLengthPath::build(pts, true);
    const auto w = reference_schedule(loop.total_length() - 10.0, 25.0, 0.1, 10, &loop);
    CHECK(w[10] == doctest::Approx(15.0).epsilon(1e-9));
}

TEST_CASE("course error wrapping")
{
    CHECK(wrap_angle(1.5 * std::numbers::pi) == doctest::Approx(-0.5 * std::numbers::pi));
    CHECK(wrap_angle(std::numbers::pi) == std::numbers::pi);
    CHECK(wrap_angle(-std::numbers::pi) == std::numbers::pi);
    double prev = wrap_angle(-4.0 * std::numbers::pi + 1e-3);
    for (int i = 1; i <= 80000; ++i) {
        const double a = -4.0 * std::numbers::pi + 1e-3 + i * 1e-4;
        const double w = wrap_angle(a);
        CHECK_MESSAGE(w > -std::numbers::pi, a);
        CHECK(w <= std::numbers::pi);
        // continuous except where the raw angle passes an odd multiple of pi
        const double k = std::round((a - std::numbers::pi) / (2 * std::numbers::pi));
        const double nearest = std::numbers::pi + 2 * std::numbers::pi * k;
        if (std::abs(a - nearest) > 2e-4) CHECK(std::abs(w - prev) < 2e-4);
        prev = w;
    }
}

TEST_CASE("stage error: zero on path, level-path values")
{
    const auto path = north_line();
    const FlightEnvelope env;
    AircraftState s = on_line_state(25.0);
    s.n = 300.0;
    const double psi = 500.0;  // line starts at n = -200
    auto e = stage_error(s.vector(), psi, Eigen::Vector3d::Zero(), *path, OcpMode::CrMpc, env);
    CHECK(e.y.norm() < 1e-9);

    s.gamma_a = 0.1;
    s.theta += 0.1;
    e = stage_error(s.vector(), psi, Eigen::Vector3d::Zero(), *path, OcpMode::CrMpc, env);
    CHECK(e.y(4) == doctest::Approx(0.1).epsilon(1e-9));

    s = on_line_state(25.0);
    const auto m = stage_error(s.vector(), 200.0, Eigen::Vector3d::Zero(), *path, OcpMode::Mpcc, env);
    CHECK(m.y.size() == 6);
    CHECK(m.y(5) == doctest::Approx(15.0));

    // crosswind: ground track, not heading, sets the course error
    s.chi_a = 0.0;
    const auto cw = stage_error(s.vector(), 200.0, Eigen::Vector3d(0, 5, 0), *path, OcpMode::CrMpc, env);
    CHECK(cw.y(3) == doctest::Approx(std::atan2(5.0, s.V_a)).epsilon(1e-9));
}

TEST_CASE("soft constraint rows")
{
    const FlightEnvelope env;
    AircraftState s = on_line_state(30.0);
    auto r = soft_constraint_rows(s.vector(), Eigen::Vector4d::Zero(), env);
    CHECK((r.h.array() <= 0.0).all());
    CHECK(r.min_slack.norm() == 0.0);

    s.V_a = 42.0;
    r = soft_constraint_rows(s.vector(), Eigen::Vector4d::Zero(), env);
    CHECK(r.min_slack(ss::VaUpper) == doctest::Approx(2.0));

    s = on_line_state(30.0);
    s.theta = deg(-8.0);
    s.gamma_a = 0.0;
    r = soft_constraint_rows(s.vector(), Eigen::Vector4d::Zero(), env);
    CHECK(r.min_slack(ss::AlphaLower) == doctest::Approx(deg(2.0)).epsilon(1e-12));
    r = soft_constraint_rows(s.vector(), r.min_slack, env);
    CHECK(r.h.maxCoeff() <= 1e-15);

    // zero slack is feasible exactly when V_a and alpha are inside
    struct Case {
        double V, alpha;
        bool inside;
    };
    const Case cases[] = {{20.0, 0.0, true},       {19.99, 0.0, false},      {40.0, 0.0, true},
                          {40.01, 0.0, false},     {30.0, deg(12.0), true},  {30.0, deg(12.01), false},
                          {30.0, deg(-6.0), true}, {30.0, deg(-6.01), false}};
    for (const auto& c : cases) {
        AircraftState t = on_line_state(30.0);
        t.V_a = c.V;
        t.gamma_a = 0.02;
        t.theta = 0.02 + c.alpha;
        const auto rr = soft_constraint_rows(t.vector(), Eigen::Vector4d::Zero(), env);
        CHECK((rr.h.maxCoeff() <= 1e-12) == c.inside);
    }
}

TEST_CASE("rate vector")
{
    const ModelParameters p;
    StateVector x = on_line_state(25.0).vector();
    ControlVector u(x(sx::Phi), x(sx::Theta), x(sx::DeltaT));
    CHECK(rate_vector(x, u, p).norm() == 0.0);
    x(sx::Phi) = 0.0;
    u(0) = 0.2;
    CHECK(rate_vector(x, u, p)(0) == doctest::Approx(0.40632).epsilon(1e-9));
    x(sx::DeltaT) = 0.3;
    u(2) = 0.8;
    CHECK(rate_vector(x, u, p)(2) == doctest::Approx(0.5 / 0.1161).epsilon(1e-9));
    CHECK(rate_vector(x, u, p)(2) == doctest::Approx(4.307).epsilon(1e-3));
}

TEST_CASE("assemble structure")
{
    const auto path = north_line();
    const AircraftState s = on_line_state(25.0);
    const StructuredNlp cr = assemble(OcpMode::CrMpc, s, {}, path, {}, {}, {}, 200.0, 25.0, nullptr, 50, 0.1);
    CHECK(cr.horizon() == 50);
    CHECK(cr.nx() == 9);
    CHECK(cr.nu() == 3);
    CHECK(cr.schedule().size() == 51);
    CHECK(cr.slew_reference().size() == 50);

    const StructuredNlp mp = assemble(OcpMode::Mpcc, s, {}, path, {}, {}, {}, 200.0, std::nullopt, nullptr, 50, 0.1);
    CHECK(mp.nx() == 10);
    CHECK(mp.nu() == 4);
    CHECK(mp.initial_state()(9) == 200.0);
    CHECK(mp.control_lower()(3) == 15.0);
    CHECK(mp.control_upper()(3) == 45.0);

    // cold start: slew measured from the level trim command
    const TrimPoint trim = level_trim(25.0, ModelParameters{});
    CHECK((cr.slew_reference()[7] - trim.command.vector()).norm() < 1e-12);
    Eigen::VectorXd u = trim.command.vector();
    const auto r = cr.residual_values(3, cr.initial_state(), u, Eigen::Vector4d::Zero());
    CHECK(r.r.tail(3).norm() < 1e-12);

    // residual layout per stage
    const Eigen::VectorXd x0 = cr.initial_state();
    CHECK(cr.residual_values(0, x0, u, Eigen::Vector4d::Zero()).r.size() == 6);
    CHECK(cr.residual_values(1, x0, u, Eigen::Vector4d::Zero()).r.size() == 15);
    CHECK(cr.residual_values(50, x0, u, Eigen::Vector4d::Zero()).r.size() == 9);

    // terminal MPCC airspeed weight is zero
    Eigen::VectorXd xm = mp.initial_state();
    const auto rN = mp.residual_values(50, xm, Eigen::VectorXd::Zero(4), Eigen::Vector4d::Zero());
    CHECK(rN.w(5) == 0.0);
    const auto r1 = mp.residual_values(1, xm, Eigen::VectorXd::Zero(4), Eigen::Vector4d::Zero());
    CHECK(r1.w(5) == doctest::Approx(0.001));

    // previous controls are used unshifted
    std::vector<Eigen::VectorXd> prev(50, Eigen::Vector3d(0.1, 0.02, 0.5));
    prev[0] = Eigen::Vector3d(0.3, 0.0, 0.4);
    const StructuredNlp warm = assemble(OcpMode::CrMpc, s, {}, path, {}, {}, {}, 200.0, 25.0, &prev, 50, 0.1);
    CHECK(warm.slew_reference()[0] == prev[0]);

    CHECK_THROWS_AS((void)assemble(OcpMode::CrMpc, s, {}, path, {}, {}, {}, 200.0, std::nullopt, nullptr, 50, 0.1),
                    ArgumentError);
    std::vector<Eigen::VectorXd> short_prev(10, Eigen::Vector3d::Zero());
    CHECK_THROWS_AS((void)assemble(OcpMode::CrMpc, s, {}, path, {}, {}, {}, 200.0, 25.0, &short_prev, 50, 0.1),
                    ArgumentError);
    AircraftState bad = s;
    bad.V_a = 0.05;
    CHECK_THROWS_AS((void)assemble(OcpMode::CrMpc, bad, {}, path, {}, {}, {}, 200.0, 25.0, nullptr, 50, 0.1),
                    InvalidStateError);
}

TEST_CASE("cost equals the term-by-term sum")
{
    std::mt19937_64 rng(11);
    for (const std::string name : {"path1", "path3"}) {
        const auto path = preset(name);
        for (OcpMode mode : {OcpMode::CrMpc, OcpMode::Mpcc}) {
            for (int trial = 0; trial < 10; ++trial) {
                AircraftState s = AircraftState::from_vector(testing::random_state(rng));
                StageWeights W;
                W.q_chi = testing::uniform(rng, 0.5, 3.0);
                W.mu = testing::uniform(rng, 0.0, 0.1);
                W.lambda = testing::uniform(rng, 0.8, 1.0);
                const WindVector w{testing::uniform(rng, -5, 5), testing::uniform(rng, -5, 5), 0.0};
                const StructuredNlp nlp =
                    assemble(mode, s, w, path, {}, W, {}, testing::uniform(rng, 0.0, path->total_length()),
                             25.0, nullptr, 20, 0.1);
                const Trajectory t = random_trajectory(rng, nlp);
                const double a = nlp.cost(t.X, t.U, t.S);
                const double b = reference_cost(nlp, t);
                CHECK(std::abs(a - b) <= 1e-10 * std::abs(b));
            }
        }
    }
}

TEST_CASE("MPCC reduces to CR-MPC with mu = 0, r_psidot = 0 and the rate pinned")
{
    std::mt19937_64 rng(12);
    const auto path = preset("path2");
    StageWeights W;
    W.mu = 0.0;
    W.r_psidot = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        const AircraftState s = AircraftState::from_vector(testing::random_state(rng));
        const double psi0 = testing::uniform(rng, 0.0, path->total_length());
        const StructuredNlp cr = assemble(OcpMode::CrMpc, s, {}, path, {}, W, {}, psi0, 25.0, nullptr, 30, 0.1);
        const StructuredNlp mp = assemble(OcpMode::Mpcc, s, {}, path, {}, W, {}, psi0, 25.0, nullptr, 30, 0.1);
        Trajectory t = random_trajectory(rng, cr);
        Trajectory m;
        for (int k = 0; k <= 30; ++k) {
            Eigen::VectorXd x(10);
            x << t.X[k], psi0 + 25.0 * 0.1 * k;
            m.X.push_back(x);
            m.S.push_back(t.S[k]);
            if (k < 30) {
                Eigen::VectorXd u(4);
                u << t.U[k], 25.0;
                m.U.push_back(u);
            }
        }
        const double a = cr.cost(t.X, t.U, t.S);
        const double b = mp.cost(m.X, m.U, m.S);
        CHECK(std::abs(a - b) <= 1e-10 * std::abs(a));
        for (int k = 1; k <= 30; ++k) {
            const auto ra = cr.residual_values(k, t.X[k], k < 30 ? t.U[k] : Eigen::VectorXd::Zero(3), t.S[k]);
            const auto rb = mp.residual_values(k, m.X[k], k < 30 ? m.U[k] : Eigen::VectorXd::Zero(4), m.S[k]);
            CHECK((ra.r.head(5) - rb.r.head(5)).cwiseAbs().maxCoeff() <= 1e-10);
        }
    }
}

TEST_CASE("residual Jacobians match central differences")
{
    std::mt19937_64 rng(13);
    const auto path = preset("path3");
    double worst = 0.0;
    int points = 0;
    for (OcpMode mode : {OcpMode::CrMpc, OcpMode::Mpcc}) {
        for (int trial = 0; trial < 60; ++trial) {
            const AircraftState s = AircraftState::from_vector(testing::random_state(rng));
            const WindVector w{testing::uniform(rng, -5, 5), testing::uniform(rng, -5, 5), 0.0};
            const StructuredNlp nlp = assemble(mode, s, w, path, {}, {}, {}, 300.0, 25.0, nullptr, 10, 0.1);
            const Trajectory t = random_trajectory(rng, nlp);
            const int k = std::uniform_int_distribution<int>(0, 10)(rng);
            const Eigen::VectorXd u = k < 10 ? t.U[k] : Eigen::VectorXd::Zero(nlp.nu());
            const auto res = nlp.residual(k, t.X[k], u, t.S[k]);
            const Eigen::VectorXd x = t.X[k];
            auto fx = [&](const Eigen::VectorXd& xx) { return Eigen::VectorXd(nlp.residual_values(k, xx, u, t.S[k]).r); };
            auto fu = [&](const Eigen::VectorXd& uu) { return Eigen::VectorXd(nlp.residual_values(k, x, uu, t.S[k]).r); };
            auto fs = [&](const Eigen::VectorXd& sv) { return Eigen::VectorXd(nlp.residual_values(k, x, u, sv).r); };
            worst = std::max(worst, testing::max_rel_error(res.Jx, testing::fd_jacobian(fx, x, testing::fd_steps(x))));
            if (k < 10) {
                worst = std::max(worst, testing::max_rel_error(res.Ju, testing::fd_jacobian(fu, u, testing::fd_steps(u))));
            }
            if (k > 0) {
                worst = std::max(worst, testing::max_rel_error(res.Js, testing::fd_jacobian(fs, t.S[k], testing::fd_steps(t.S[k]))));
            }

            const auto dyn = nlp.dynamics(x, u);
            if (k < 10) {
                auto gx = [&](const Eigen::VectorXd& xx) { return nlp.step(xx, u); };
                auto gu = [&](const Eigen::VectorXd& uu) { return nlp.step(x, uu); };
                worst = std::max(worst, testing::max_rel_error(dyn.A, testing::fd_jacobian(gx, x, testing::fd_steps(x))));
                worst = std::max(worst, testing::max_rel_error(dyn.B, testing::fd_jacobian(gu, u, testing::fd_steps(u))));
            }
            ++points;
        }
    }
    MESSAGE("worst residual/dynamics Jacobian error " << worst << " over " << points << " points");
    CHECK(points >= 100);
    CHECK(worst <= 1e-5);
}

TEST_CASE("weights and envelope keys round trip")
{
    StageWeights w;
    for (const auto& k : StageWeights::keys()) w.set(k, w.get(k) + 1.0);
    CHECK(w.q_n == 2.0);
    CHECK(w.r_psidot == doctest::Approx(1.1));
    CHECK_THROWS_AS(w.set("nope", 1.0), ArgumentError);
    w.lambda = 1.5;
    CHECK_THROWS_AS(w.validate(), ArgumentError);

    FlightEnvelope e;
    CHECK(FlightEnvelope::keys().size() == 12);
    e.set("Va_min", 50.0);
    CHECK_THROWS_AS(e.validate(), ArgumentError);
    CHECK(ocp_mode_from_string("mpcc") == OcpMode::Mpcc);
    CHECK_THROWS_AS((void)ocp_mode_from_string("pid"), ArgumentError);
}
