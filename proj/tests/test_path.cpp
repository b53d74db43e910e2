#include "fwmpc/errors.hpp"
#include "fwmpc/path.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace fwmpc;

namespace {

ArcLengthPath straight_line()
{
    std::vector<Eigen::Vector3d> pts;
    for (int i = 0; i <= 10; ++i) pts.emplace_back(10.0 * i, 0.0, 0.0);
    return ArcLengthPath::build(pts, false);
}

ArcLengthPath circle(double radius, int n)
{
    std::vector<Eigen::Vector3d> pts;
    for (int i = 0; i < n; ++i) {
        const double t = 2.0 * std::numbers::pi * i / n;
        pts.emplace_back(radius * std::cos(t), radius * std::sin(t), -100.0);
    }
    return ArcLengthPath::build(pts, true);
}

double circular_distance(double a, double b, double L)
{
    const double d = std::fmod(std::abs(a - b), L);
    return std::min(d, L - d);
}

// Brute-force projection at a fixed parameter resolution.
double brute_force_closest(const ArcLengthPath& path, const Eigen::Vector3d& p, double step)
{
    double best = 0.0, best_d = INFINITY;
    const int n = static_cast<int>(std::ceil(path.total_length() / step));
    for (int i = 0; i <= n; ++i) {
        const double psi = std::min(i * step, path.total_length());
        const double d = (path.position(psi) - p).squaredNorm();
        if (d < best_d) { best_d = d; best = psi; }
    }
    return best;
}

}  // namespace

TEST_CASE("straight segment")
{
    const auto path = straight_line();
    CHECK(path.total_length() == doctest::Approx(100.0).epsilon(1e-9));
    CHECK((path.position(50.0) - Eigen::Vector3d(50, 0, 0)).norm() < 1e-9);
    for (double psi = 0.0; psi <= 100.0; psi += 0.37) CHECK(path.frame_at(psi).curvature < 1e-9);
    CHECK_THROWS_AS((void)path.frame_at(100.5), DomainError);
    CHECK_THROWS_AS((void)path.frame_at(-0.5), DomainError);
}

TEST_CASE("circle: circumference, curvature, wrap")
{
    const auto path = circle(50.0, 64);
    CHECK(std::abs(path.total_length() - 2 * std::numbers::pi * 50.0) / (2 * std::numbers::pi * 50.0) < 1e-3);
    for (int k = 0; k < 1000; ++k) {
        const double psi = path.total_length() * k / 1000.0;
        CHECK(std::abs(path.frame_at(psi).curvature - 0.02) < 1e-3);
    }
    const double L = path.total_length();
    for (double x : {0.0, 3.3, 100.0, 250.0}) {
        const auto a = path.frame_at(x);
        const auto b = path.frame_at(L + x);
        CHECK((a.position - b.position).norm() < 1e-9);
        CHECK((a.tangent - b.tangent).norm() < 1e-9);
    }
    // Centre is equidistant from everything; any valid parameter will do.
    const double psi = path.closest_param_global(Eigen::Vector3d(0, 0, -100));
    CHECK(psi >= 0.0);
    CHECK(psi < L);
}

TEST_CASE("unit speed and C2 continuity on built paths")
{
    std::vector<ArcLengthPath> paths{straight_line(), circle(50.0, 64)};
    for (const auto& name : preset_names()) paths.push_back(lissajous_path(lissajous_preset(name)));
    for (const auto& path : paths) {
        CHECK(path.max_speed_deviation(10000) <= 1e-3);
        CHECK(path.max_second_derivative_jump() <= 1e-6);
        for (int k = 0; k < 200; ++k) {
            const auto f = path.frame_at(path.total_length() * k / 200.0);
            CHECK(std::abs(f.tangent.norm() - 1.0) < 1e-6);
            CHECK(f.curvature >= 0.0);
        }
    }
}

TEST_CASE("closed path endpoint continuity")
{
    const auto path = lissajous_path(lissajous_preset("path4"));
    const double L = path.total_length();
    const auto a = path.derivatives(L - 1e-9);
    const auto b = path.derivatives(0.0);
    CHECK((a.r - b.r).norm() < 1e-6);
    CHECK((a.d1 - b.d1).norm() < 1e-6);
    CHECK((a.d2 - b.d2).norm() < 1e-6);
}

TEST_CASE("build rejects bad input")
{
    std::vector<Eigen::Vector3d> few{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
    CHECK_THROWS_AS((void)ArcLengthPath::build(few, false), ArgumentError);
    std::vector<Eigen::Vector3d> dup{{0, 0, 0}, {1, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
    CHECK_THROWS_AS((void)ArcLengthPath::build(dup, false), ArgumentError);
}

TEST_CASE("global closest point")
{
    const auto path = lissajous_path(lissajous_preset("path1"));
    const Eigen::Vector3d on = path.position(37.5);
    const double psi = path.closest_param_global(on);
    CHECK(std::abs(psi - 37.5) <= path.cache_spacing());
    CHECK((path.position(psi) - on).norm() < 1e-6);
}

TEST_CASE("global closest point against a 10x brute-force scan")
{
    std::mt19937_64 rng(41);
    for (const auto& name : preset_names()) {
        const auto path = lissajous_path(lissajous_preset(name));
        const double L = path.total_length();
        const double spacing = path.cache_spacing();
        for (int i = 0; i < 100; ++i) {
            const Eigen::Vector3d p =
                path.position(testing::uniform(rng, 0, L)) +
                Eigen::Vector3d(testing::uniform(rng, -20, 20), testing::uniform(rng, -20, 20),
                                testing::uniform(rng, -5, 5));
            const double psi = path.closest_param_global(p);
            const double oracle = brute_force_closest(path, p, spacing / 10.0);
            INFO(name << " point " << i);
            CHECK(circular_distance(psi, oracle, L) <= 2.0 * spacing);
            // never worse than any cache candidate
            CHECK((path.position(psi) - p).norm() <= (path.position(oracle) - p).norm() + 1e-9);
        }
    }
}

TEST_CASE("projection is orthogonal to the tangent")
{
    const auto path = lissajous_path(lissajous_preset("path3"));
    std::mt19937_64 rng(43);
    for (int i = 0; i < 200; ++i) {
        const double s = testing::uniform(rng, 0, path.total_length());
        const auto f = path.frame_at(s);
        // Offset along the normal plane, well inside the curvature radius.
        Eigen::Vector3d n = f.tangent.cross(Eigen::Vector3d::UnitZ()).normalized();
        const Eigen::Vector3d p = f.position + testing::uniform(rng, -8, 8) * n;
        const double psi = path.closest_param_global(p);
        const Eigen::Vector3d err = p - path.position(psi);
        if (err.norm() < 1e-6) continue;
        CHECK(std::abs(path.frame_at(psi).tangent.dot(err)) <= 1e-3 * err.norm());
    }
}

TEST_CASE("local closest point")
{
    const auto path = lissajous_path(lissajous_preset("path1"));
    const double L = path.total_length();
    const Eigen::Vector3d on = path.position(200.0);
    CHECK(std::abs(path.closest_param_local(on, 200.0, 14.0) - 200.0) < 1e-6);

    // A window covering the whole loop reduces to the global search.
    const Eigen::Vector3d off(37.0, -12.0, -95.0);
    CHECK(path.closest_param_local(off, 10.0, L) == path.closest_param_global(off));
}

TEST_CASE("local search stays on branch A when branch B is globally nearer")
{
    const auto path = lissajous_path(lissajous_preset("path1"));
    const double L = path.total_length();
    // Find the two parameters passing through the crossing point.
    std::vector<double> cross;
    for (double s = 0.0; s < L; s += 0.05) {
        if (path.position(s).head<2>().norm() < 0.3 &&
            (cross.empty() || (s - cross.back() > 50.0 && L - s + cross.front() > 50.0)))
            cross.push_back(s);
    }
    REQUIRE(cross.size() == 2);
    const auto fa = path.frame_at(cross[0]);
    const auto fb = path.frame_at(cross[1]);
    // Point 6 m along branch A, displaced toward branch B so B is nearer.
    const Eigen::Vector3d pa = path.position(path.wrap(cross[0] + 6.0));
    const Eigen::Vector3d pb = path.position(path.wrap(cross[1] + 6.0 * (fa.tangent.dot(fb.tangent) > 0 ? 1 : -1)));
    const Eigen::Vector3d p = pa + 0.7 * (pb - pa);
    const double global = path.closest_param_global(p);
    REQUIRE(circular_distance(global, cross[1], L) < 20.0);
    const double local = path.closest_param_local(p, path.wrap(cross[0] + 4.0), 14.0);
    CHECK(circular_distance(local, cross[0], L) < 20.0);
}

TEST_CASE("Lissajous presets reproduce the target geometry")
{
    const std::vector<std::pair<std::string, double>> targets{
        {"path1", 41.7}, {"path2", 6.9}, {"path3", 30.2}, {"path4", 11.9}};
    for (const auto& [name, radius] : targets) {
        const auto path = lissajous_path(lissajous_preset(name));
        const double r = path.min_curvature_radius(20000);
        INFO(name << " min radius " << r);
        CHECK(std::abs(r - radius) / radius <= 0.05);
    }
    // Steepest climb on path3.
    const auto p3 = lissajous_path(lissajous_preset("path3"));
    double max_fpa = 0.0;
    for (int k = 0; k < 20000; ++k) {
        const auto t = p3.frame_at(p3.total_length() * k / 20000.0).tangent;
        max_fpa = std::max(max_fpa, std::abs(std::atan(t(2) / t.head<2>().norm())));
    }
    CHECK(std::abs(max_fpa * 180.0 / std::numbers::pi - 8.4) <= 1.0);

    // Planar presets hold altitude; the 3D ones span 80-120 m.
    const auto p1 = lissajous_path(lissajous_preset("path1"));
    double dmin = 1e9, dmax = -1e9;
    for (const auto& p : p1.sample(1.0)) { dmin = std::min(dmin, p(2)); dmax = std::max(dmax, p(2)); }
    CHECK(std::abs(dmin + 100.0) <= 0.1);
    CHECK(std::abs(dmax + 100.0) <= 0.1);
    dmin = 1e9; dmax = -1e9;
    for (const auto& p : p3.sample(1.0)) { dmin = std::min(dmin, p(2)); dmax = std::max(dmax, p(2)); }
    CHECK(dmin == doctest::Approx(-120.0).epsilon(1e-3));
    CHECK(dmax == doctest::Approx(-80.0).epsilon(1e-3));

    CHECK_THROWS_AS((void)lissajous_preset("path9"), ArgumentError);
    LissajousSpec bad;
    bad.samples = 10;
    CHECK_THROWS_AS((void)lissajous_path(bad), ArgumentError);
}

TEST_CASE("path table round trip")
{
    const auto path = lissajous_path(lissajous_preset("path2"));
    std::stringstream ss;
    write_path_table(ss, path, 2.0);
    const auto pts = read_path_table(ss);
    CHECK(pts.size() == path.sample(2.0).size());
    const auto rebuilt = ArcLengthPath::build(pts, true);
    CHECK(std::abs(rebuilt.total_length() - path.total_length()) / path.total_length() < 2e-3);

    std::stringstream broken("1 2 3\n4 5\n");
    CHECK_THROWS_AS((void)read_path_table(broken), IoError);
}
