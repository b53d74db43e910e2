#include "fwmpc/sqp.hpp"

#include "fwmpc/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <string>

namespace fwmpc {

namespace {

int stage_nv(const StructuredNlp& nlp, int k)
{
    return (nlp.has_controls(k) ? nlp.nu() : 0) + (nlp.has_slacks(k) ? nlp.ns() : 0);
}

void check_dimensions(const StructuredNlp& nlp, const OcpSolution& s)
{
    const int N = nlp.horizon();
    if (static_cast<int>(s.X.size()) != N + 1 || static_cast<int>(s.U.size()) != N ||
        static_cast<int>(s.S.size()) != N + 1) {
        throw ArgumentError("OCP guess has the wrong horizon");
    }
    for (int k = 0; k <= N; ++k) {
        if (s.X[k].size() != nlp.nx() || s.S[k].size() != nlp.ns() || (k < N && s.U[k].size() != nlp.nu())) {
            throw ArgumentError("OCP guess has the wrong dimension at stage " + std::to_string(k));
        }
    }
}

Eigen::Vector4d min_slack(const StructuredNlp& nlp, const Eigen::VectorXd& x)
{
    return soft_constraint_rows(x.head<kStateDim>(), Eigen::Vector4d::Zero(), nlp.envelope()).min_slack;
}

double solution_cost(const StructuredNlp& nlp, const OcpSolution& s) { return nlp.cost(s.X, s.U, s.S); }

QpSolution zero_step(const QpProblem& qp, const OcpSolution& s)
{
    const int N = qp.horizon();
    QpSolution z;
    z.x.resize(N + 1);
    z.v.resize(N + 1);
    z.lambda.resize(N + 1);
    z.pi.resize(N);
    for (int k = 0; k <= N; ++k) {
        z.x[k].setZero(qp.stages[k].nx());
        z.v[k].setZero(qp.stages[k].nv());
        const int rows = qp.stages[k].rows();
        z.lambda[k] = (k < static_cast<int>(s.lambda.size()) && s.lambda[k].size() == rows)
                          ? s.lambda[k]
                          : Eigen::VectorXd::Zero(rows);
        if (k < N) {
            const int nn = static_cast<int>(qp.stages[k].c.size());
            z.pi[k] = (k < static_cast<int>(s.pi.size()) && s.pi[k].size() == nn) ? s.pi[k]
                                                                                   : Eigen::VectorXd::Zero(nn);
        }
    }
    z.x[0] = qp.x0;
    return z;
}

}  // namespace

Eigen::VectorXd state_scale(OcpMode mode)
{
    Eigen::VectorXd s(state_dim(mode));
    s.head<kStateDim>() << 10.0, 10.0, 10.0, 0.5, 0.5, 0.5, 5.0, 0.2, 0.5;
    if (mode == OcpMode::Mpcc) s(kStateDim) = 10.0;
    return s;
}

QpProblem linearize(const StructuredNlp& nlp, const OcpSolution& guess, double regularization)
{
    check_dimensions(nlp, guess);
    const int N = nlp.horizon(), nx = nlp.nx(), nu = nlp.nu(), ns = nlp.ns();
    const SoftRowMatrices soft = soft_row_matrices(nlp.envelope());

    QpProblem qp;
    qp.x0 = nlp.initial_state() - guess.X[0];
    qp.stages.reserve(N + 1);
    for (int k = 0; k <= N; ++k) {
        const int nv = stage_nv(nlp, k);
        QpStage st(nx, nv, k < N ? nx : 0);
        const Eigen::VectorXd& x = guess.X[k];
        const Eigen::VectorXd u = k < N ? guess.U[k] : Eigen::VectorXd::Zero(nu);
        StructuredNlp::Residual res;
        try {
            check_state(x.head<kStateDim>());
            res = nlp.residual(k, x, u, guess.S[k]);
        } catch (const InvalidStateError& e) {
            throw InvalidStateError("linearize: node " + std::to_string(k) + ": " + e.what());
        }

        // J = [Jx | Jv]
        Eigen::MatrixXd J(res.r.size(), nx + nv);
        J.leftCols(nx) = res.Jx;
        int o = nx;
        if (nlp.has_controls(k)) {
            J.middleCols(o, nu) = res.Ju;
            o += nu;
        }
        if (nlp.has_slacks(k)) J.middleCols(o, ns) = res.Js;
        const Eigen::MatrixXd WJ = res.w.asDiagonal() * J;
        st.H.noalias() = J.transpose() * WJ;
        st.H.diagonal().array() += regularization;
        st.H = 0.5 * (st.H + st.H.transpose()).eval();
        st.h.noalias() = WJ.transpose() * res.r;

        if (k < N) {
            StructuredNlp::Dynamics dyn;
            try {
                dyn = nlp.dynamics(x, u);
            } catch (const InvalidStateError& e) {
                throw InvalidStateError("linearize: node " + std::to_string(k) + ": " + e.what());
            }
            st.A = dyn.A;
            st.B.leftCols(nu) = dyn.B;
            st.c = dyn.next - guess.X[k + 1];
        }

        if (nlp.has_slacks(k)) {
            Eigen::MatrixXd Gx = Eigen::MatrixXd::Zero(4, nx);
            Gx.leftCols(kStateDim) = soft.Cx;
            Eigen::MatrixXd Gv = Eigen::MatrixXd::Zero(4, nv);
            Gv.rightCols(ns) = soft.Cs;
            const Eigen::Vector4d h0 = soft.Cx * x.head<kStateDim>() + soft.Cs * guess.S[k] - soft.d;
            st.add_rows(Gx, Gv, -h0);
        }
        Eigen::VectorXd lo(nv), hi(nv);
        o = 0;
        if (nlp.has_controls(k)) {
            lo.segment(o, nu) = nlp.control_lower() - u;
            hi.segment(o, nu) = nlp.control_upper() - u;
            o += nu;
        }
        if (nlp.has_slacks(k)) {
            lo.segment(o, ns) = -guess.S[k];
            hi.segment(o, ns).setConstant(INFINITY);
        }
        st.add_bounds(lo.cwiseMin(hi), hi);
        qp.stages.push_back(std::move(st));
    }
    return qp;
}

KktResiduals kkt_residuals(const StructuredNlp& nlp, const OcpSolution& sol)
{
    const QpProblem qp = linearize(nlp, sol, 0.0);
    return qp_residuals(qp, zero_step(qp, sol));
}

OcpSolution cold_start(const StructuredNlp& nlp)
{
    const int N = nlp.horizon();
    const Eigen::VectorXd& x0 = nlp.initial_state();
    const TrimPoint trim = best_effort_trim(x0(sx::Va), nlp.params());
    Eigen::VectorXd u(nlp.nu());
    u.head<3>() = nlp.envelope().clamp(trim.command).vector();
    if (nlp.mode() == OcpMode::Mpcc) u(3) = nlp.slew_reference().front()(3);

    OcpSolution s;
    s.X.reserve(N + 1);
    s.X.push_back(x0);
    for (int k = 0; k < N; ++k) {
        s.U.push_back(u);
        try {
            s.X.push_back(nlp.step(s.X[k], u));
        } catch (const InvalidStateError&) {
            throw SolverError("cold_start: trim rollout left the flight envelope at node " + std::to_string(k + 1));
        }
    }
    for (int k = 0; k <= N; ++k) s.S.push_back(min_slack(nlp, s.X[k]));
    s.pi.assign(N, Eigen::VectorXd::Zero(nlp.nx()));
    s.cost = solution_cost(nlp, s);
    return s;
}

OcpSolution shift_warm_start(const OcpSolution& prev, const StructuredNlp& nlp)
{
    const int N = nlp.horizon();
    if (prev.horizon() != N || static_cast<int>(prev.X.size()) != N + 1 || static_cast<int>(prev.S.size()) != N + 1 ||
        prev.X.front().size() != nlp.nx() || (N > 0 && prev.U.front().size() != nlp.nu())) {
        throw ArgumentError("shift_warm_start: previous solution does not match the OCP dimensions");
    }
    OcpSolution g;
    g.X.resize(N + 1);
    g.U.resize(N);
    g.S.resize(N + 1);
    for (int k = 0; k < N; ++k) {
        g.X[k] = prev.X[k + 1];
        g.U[k] = prev.U[std::min(k + 1, N - 1)];
        g.S[k] = prev.S[k + 1];
    }
    g.X[N] = nlp.step(prev.X[N], prev.U[N - 1]);
    g.S[N] = prev.S[N];
    g.S[0] = min_slack(nlp, g.X[0]);

    if (nlp.mode() == OcpMode::Mpcc && nlp.path().closed()) {
        const double L = nlp.path().total_length();
        const double offset = std::round((nlp.initial_state()(kStateDim) - g.X[0](kStateDim)) / L) * L;
        if (offset != 0.0) {
            for (auto& x : g.X) x(kStateDim) += offset;
        }
    }

    g.pi.resize(N);
    for (int k = 0; k < N; ++k) g.pi[k] = prev.pi.size() == static_cast<std::size_t>(N) ? prev.pi[std::min(k + 1, N - 1)]
                                                                                       : Eigen::VectorXd::Zero(nlp.nx());
    if (prev.lambda.size() == static_cast<std::size_t>(N + 1)) {
        g.lambda.resize(N + 1);
        for (int k = 0; k <= N; ++k) {
            const int src = std::min(k + 1, N);
            g.lambda[k] = prev.lambda[src];
        }
    }
    return g;
}

SqpSolver::SqpSolver(SqpOptions options) : options_(options), qp_(options.qp) {}

OcpSolution SqpSolver::iterate(const StructuredNlp& nlp, const OcpSolution& guess, bool capped, int iteration)
{
    const auto start = std::chrono::steady_clock::now();
    const int N = nlp.horizon(), nu = nlp.nu(), ns = nlp.ns();
    OcpSolution out = guess;
    out.degraded = false;

    QpSolution step;
    bool ok = true;
    try {
        const QpProblem qp = linearize(nlp, guess, options_.regularization);
        step = qp_.solve(qp);
        out.qp_status = step.status;
        out.qp_iterations = step.iterations;
        if (step.status == QpStatus::Failed) ok = false;
        for (int k = 0; ok && k <= N; ++k) {
            if (!step.x[k].allFinite() || !step.v[k].allFinite()) ok = false;
        }
    } catch (const Error&) {
        ok = false;
        out.qp_status = QpStatus::Failed;
    }

    if (ok) {
        double alpha = 1.0;
        if (capped) {
            const Eigen::VectorXd cap = options_.trust_radius * state_scale(nlp.mode());
            for (int k = 0; k <= N; ++k) {
                for (int i = 0; i < cap.size(); ++i) {
                    const double a = std::abs(step.x[k](i));
                    if (a > cap(i)) alpha = std::min(alpha, cap(i) / a);
                }
            }
        }
        double norm = 0.0;
        for (int k = 0; k <= N; ++k) {
            norm = std::max(norm, step.x[k].cwiseAbs().maxCoeff());
            if (step.v[k].size()) norm = std::max(norm, step.v[k].cwiseAbs().maxCoeff());
            out.X[k] += alpha * step.x[k];
            int o = 0;
            if (nlp.has_controls(k)) {
                out.U[k] += alpha * step.v[k].segment(o, nu);
                out.U[k] = out.U[k].cwiseMax(nlp.control_lower()).cwiseMin(nlp.control_upper());
                o += nu;
            }
            if (nlp.has_slacks(k)) out.S[k] = (out.S[k] + alpha * step.v[k].segment(o, ns)).cwiseMax(0.0);
        }
        out.step_norm = alpha * norm;
        out.S[0] = min_slack(nlp, out.X[0]);
        out.lambda.resize(N + 1);
        out.pi.resize(N);
        for (int k = 0; k <= N; ++k) {
            const Eigen::VectorXd old = (k < static_cast<int>(guess.lambda.size()) &&
                                         guess.lambda[k].size() == step.lambda[k].size())
                                            ? guess.lambda[k]
                                            : Eigen::VectorXd::Zero(step.lambda[k].size());
            out.lambda[k] = old + alpha * (step.lambda[k] - old);
            if (k < N) {
                const Eigen::VectorXd oldp = (k < static_cast<int>(guess.pi.size()) &&
                                              guess.pi[k].size() == step.pi[k].size())
                                                 ? guess.pi[k]
                                                 : Eigen::VectorXd::Zero(step.pi[k].size());
                out.pi[k] = oldp + alpha * (step.pi[k] - oldp);
            }
        }
        for (const auto& x : out.X) {
            if (!x.allFinite()) ok = false;
        }
    }
    if (!ok) {
        out = guess;
        out.degraded = true;
        out.qp_status = QpStatus::Failed;
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.solve_time = std::max(elapsed, 1e-9);

    try {
        out.kkt = kkt_residuals(nlp, out);
        out.cost = solution_cost(nlp, out);
    } catch (const Error&) {
        out.kkt = KktResiduals{INFINITY, INFINITY, INFINITY, INFINITY};
        out.cost = INFINITY;
        out.degraded = true;
    }

    if (options_.trace) {
        nlohmann::json line{{"iteration", iteration},
                            {"stationarity", out.kkt.stationarity},
                            {"equality", out.kkt.equality},
                            {"inequality", out.kkt.inequality},
                            {"complementarity", out.kkt.complementarity},
                            {"step_norm", out.step_norm},
                            {"cost", out.cost},
                            {"qp_status", std::string(to_string(out.qp_status))},
                            {"qp_iterations", out.qp_iterations},
                            {"solve_time_s", out.solve_time},
                            {"degraded", out.degraded}};
        *options_.trace << line.dump() << '\n';
    }
    return out;
}

OcpSolution SqpSolver::rti_step(const StructuredNlp& nlp, const OcpSolution& guess)
{
    check_dimensions(nlp, guess);
    OcpSolution out = iterate(nlp, guess, false, 1);
    out.sqp_iterations = 1;
    out.converged = !out.degraded && out.qp_status == QpStatus::Converged;
    return out;
}

OcpSolution SqpSolver::sqp_solve(const StructuredNlp& nlp, const OcpSolution& guess, double kkt_tol, int max_iters)
{
    check_dimensions(nlp, guess);
    if (max_iters < 1) throw ArgumentError("sqp_solve: max_iters must be >= 1");
    OcpSolution current = guess;
    double total_time = 0.0;
    for (int it = 1; it <= max_iters; ++it) {
        OcpSolution next = iterate(nlp, current, true, it);
        total_time += next.solve_time;
        next.sqp_iterations = it;
        if (next.degraded) {
            next.solve_time = total_time;
            next.converged = false;
            return next;
        }
        current = std::move(next);
        if (current.kkt.max() <= kkt_tol) {
            current.converged = true;
            current.solve_time = total_time;
            return current;
        }
    }
    current.converged = false;
    current.solve_time = total_time;
    return current;
}

}  // namespace fwmpc
