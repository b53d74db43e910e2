#include "fwmpc/errors.hpp"
#include "fwmpc/qp.hpp"

#include "qp_oracle.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cstring>
#include <random>

using namespace fwmpc;

using testing::manufacture;
using testing::dense_oracle;
using testing::flatten;
using testing::Manufactured;

TEST_CASE("unconstrained single stage matches the closed form")
{
    QpProblem qp;
    qp.x0.resize(0);
    QpStage s(0, 2, 0);
    s.H << 4.0, 1.0, 1.0, 3.0;
    s.h << 1.0, 2.0;
    qp.stages.push_back(s);
    QpSolver solver;
    const QpSolution sol = solver.solve(qp);
    REQUIRE(sol.status == QpStatus::Converged);
    // H^-1 = [3 -1; -1 4] / 11
    CHECK(std::abs(sol.v[0](0) - (-(3.0 * 1.0 - 1.0 * 2.0) / 11.0)) < 1e-10);
    CHECK(std::abs(sol.v[0](1) - (-(-1.0 * 1.0 + 4.0 * 2.0) / 11.0)) < 1e-10);
}

TEST_CASE("active upper bound: min (u - 2)^2 s.t. u <= 1")
{
    QpProblem qp;
    qp.x0.resize(0);
    QpStage s(0, 1, 0);
    s.H(0, 0) = 2.0;
    s.h(0) = -4.0;
    s.add_bounds(Eigen::VectorXd::Constant(1, -INFINITY), Eigen::VectorXd::Constant(1, 1.0));
    qp.stages.push_back(s);
    const QpSolution sol = QpSolver().solve(qp);
    REQUIRE(sol.status == QpStatus::Converged);
    CHECK(std::abs(sol.v[0](0) - 1.0) < 1e-8);
    CHECK(std::abs(sol.lambda[0](0) - 2.0) < 1e-7);
}

TEST_CASE("infeasible box is rejected")
{
    QpStage s(0, 1, 0);
    CHECK_THROWS_AS(s.add_bounds(Eigen::VectorXd::Constant(1, 2.0), Eigen::VectorXd::Constant(1, 1.0)), ArgumentError);
}

TEST_CASE("indefinite Hessian is rejected")
{
    QpProblem qp;
    qp.x0.resize(0);
    QpStage s(0, 1, 0);
    s.H(0, 0) = -1.0;
    qp.stages.push_back(s);
    CHECK_THROWS_AS((void)QpSolver().solve(qp), ArgumentError);
}

TEST_CASE("LQ without inequalities solves in one pass")
{
    std::mt19937_64 rng(5);
    Manufactured m = manufacture(rng, 4);
    for (auto& s : m.qp.stages) s = [&] {
        QpStage c(s.nx(), s.nv(), static_cast<int>(s.c.size()));
        c.H = s.H;
        c.h = s.h;
        c.A = s.A;
        c.B = s.B;
        c.c = s.c;
        return c;
    }();
    const QpSolution sol = QpSolver().solve(m.qp);
    CHECK(sol.status == QpStatus::Converged);
    CHECK(sol.iterations == 0);
    CHECK(sol.residuals.max() < 1e-9);
}

TEST_CASE("manufactured QPs match the dense KKT oracle")
{
    std::mt19937_64 rng(2024);
    QpSolver solver;
    double worst = 0.0, worst_lambda = 0.0;
    int converged = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int N = std::uniform_int_distribution<int>(1, 5)(rng);
        const Manufactured m = manufacture(rng, N);
        const QpSolution sol = solver.solve(m.qp);
        INFO("trial " << trial << " N " << N);
        REQUIRE(sol.status == QpStatus::Converged);
        ++converged;
        CHECK(sol.residuals.max() <= 1e-6);
        const Eigen::VectorXd z = flatten(sol);
        const Eigen::VectorXd oracle = dense_oracle(m);
        QpSolution exact;
        exact.x = m.x;
        exact.v = m.v;
        const Eigen::VectorXd zt = flatten(exact);
        worst = std::max(worst, (z - oracle).cwiseAbs().maxCoeff());
        CHECK((oracle - zt).cwiseAbs().maxCoeff() < 1e-9);
        for (int k = 0; k <= N; ++k) {
            if (m.lambda[k].size()) worst_lambda = std::max(worst_lambda, (sol.lambda[k] - m.lambda[k]).cwiseAbs().maxCoeff());
        }
    }
    MESSAGE("worst primal deviation " << worst << ", worst multiplier deviation " << worst_lambda);
    CHECK(converged == 200);
    CHECK(worst <= 1e-8);
    CHECK(worst_lambda <= 1e-6);
}

TEST_CASE("longer horizons converge with small residuals")
{
    std::mt19937_64 rng(99);
    QpSolver solver;
    for (int trial = 0; trial < 20; ++trial) {
        const Manufactured m = manufacture(rng, 40);
        const QpSolution sol = solver.solve(m.qp);
        REQUIRE(sol.status == QpStatus::Converged);
        CHECK(sol.residuals.max() <= 1e-6);
        CHECK((flatten(sol) - dense_oracle(m)).cwiseAbs().maxCoeff() <= 1e-7);
    }
}

TEST_CASE("solves are bit-identical")
{
    std::mt19937_64 rng(7);
    const Manufactured m = manufacture(rng, 5);
    QpSolver a, b;
    const QpSolution s1 = a.solve(m.qp);
    const QpSolution s2 = b.solve(m.qp);
    const QpSolution s3 = a.solve(m.qp);
    const Eigen::VectorXd z1 = flatten(s1), z2 = flatten(s2), z3 = flatten(s3);
    CHECK(std::memcmp(z1.data(), z2.data(), sizeof(double) * z1.size()) == 0);
    CHECK(std::memcmp(z1.data(), z3.data(), sizeof(double) * z1.size()) == 0);
    CHECK(s1.iterations == s2.iterations);
}
