#include "fwmpc/qp.hpp"

#include "fwmpc/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace fwmpc {

QpStage::QpStage(int nx, int nv, int nx_next) : nx_(nx), nv_(nv)
{
    if (nx < 0 || nv < 0 || nx_next < 0) throw ArgumentError("QpStage: negative dimension");
    H.setZero(nx + nv, nx + nv);
    h.setZero(nx + nv);
    A.setZero(nx_next, nx);
    B.setZero(nx_next, nv);
    c.setZero(nx_next);
    Cx.resize(0, nx);
    Cv.resize(0, nv);
    d.resize(0);
}

void QpStage::add_rows(const Eigen::MatrixXd& Gx, const Eigen::MatrixXd& Gv, const Eigen::VectorXd& g)
{
    if (Gx.cols() != nx_ || Gv.cols() != nv_ || Gx.rows() != g.size() || Gv.rows() != g.size()) {
        throw ArgumentError("QpStage::add_rows: dimension mismatch");
    }
    const int m = rows(), extra = static_cast<int>(g.size());
    Cx.conservativeResize(m + extra, Eigen::NoChange);
    Cv.conservativeResize(m + extra, Eigen::NoChange);
    d.conservativeResize(m + extra);
    Cx.bottomRows(extra) = Gx;
    Cv.bottomRows(extra) = Gv;
    d.tail(extra) = g;
}

void QpStage::add_bounds(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi)
{
    if (lo.size() != nv_ || hi.size() != nv_) throw ArgumentError("QpStage::add_bounds: dimension mismatch");
    for (int i = 0; i < nv_; ++i) {
        if (lo(i) > hi(i)) {
            throw ArgumentError("QpStage::add_bounds: infeasible box, lower bound " + std::to_string(lo(i)) +
                                " exceeds upper bound " + std::to_string(hi(i)) + " at index " + std::to_string(i));
        }
    }
    for (int i = 0; i < nv_; ++i) {
        Eigen::RowVectorXd e = Eigen::RowVectorXd::Zero(nv_);
        if (std::isfinite(hi(i))) {
            e(i) = 1.0;
            add_rows(Eigen::MatrixXd::Zero(1, nx_), e, Eigen::VectorXd::Constant(1, hi(i)));
        }
        if (std::isfinite(lo(i))) {
            e(i) = -1.0;
            add_rows(Eigen::MatrixXd::Zero(1, nx_), e, Eigen::VectorXd::Constant(1, -lo(i)));
        }
    }
}

void QpProblem::validate() const
{
    const int N = horizon();
    if (N < 0) throw ArgumentError("QP has no stages");
    if (x0.size() != stages[0].nx()) throw ArgumentError("QP initial state has the wrong dimension");
    for (int k = 0; k <= N; ++k) {
        const QpStage& s = stages[k];
        const int n = s.nx() + s.nv();
        const std::string at = " at stage " + std::to_string(k);
        if (s.H.rows() != n || s.H.cols() != n || s.h.size() != n) throw ArgumentError("QP cost block size" + at);
        if (s.Cx.rows() != s.rows() || s.Cv.rows() != s.rows() || s.Cx.cols() != s.nx() || s.Cv.cols() != s.nv()) {
            throw ArgumentError("QP inequality block size" + at);
        }
        if (k < N) {
            const int nn = stages[k + 1].nx();
            if (s.A.rows() != nn || s.A.cols() != s.nx() || s.B.rows() != nn || s.B.cols() != s.nv() ||
                s.c.size() != nn) {
                throw ArgumentError("QP dynamics block size" + at);
            }
        }
        if (n == 0) continue;
        if ((s.H - s.H.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, s.H.cwiseAbs().maxCoeff())) {
            throw ArgumentError("QP Hessian block is not symmetric" + at);
        }
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s.H, Eigen::EigenvaluesOnly);
        if (eig.eigenvalues().minCoeff() < -1e-10) throw ArgumentError("QP Hessian block is indefinite" + at);
    }
}

std::string_view to_string(QpStatus status)
{
    switch (status) {
    case QpStatus::Converged: return "converged";
    case QpStatus::MaxIterations: return "max_iterations";
    case QpStatus::Failed: return "failed";
    }
    return "unknown";
}

double KktResiduals::max() const { return std::max({stationarity, equality, inequality, complementarity}); }

namespace {

double inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

Eigen::VectorXd stacked(const Eigen::VectorXd& x, const Eigen::VectorXd& v)
{
    Eigen::VectorXd z(x.size() + v.size());
    z << x, v;
    return z;
}

// Gradient of the Lagrangian without the dynamics multipliers.
Eigen::VectorXd partial_gradient(const QpStage& s, const Eigen::VectorXd& z, const Eigen::VectorXd& lambda)
{
    Eigen::VectorXd g = s.H * z + s.h;
    if (s.rows() > 0) {
        g.head(s.nx()) += s.Cx.transpose() * lambda;
        g.tail(s.nv()) += s.Cv.transpose() * lambda;
    }
    return g;
}

Eigen::VectorXd row_values(const QpStage& s, const Eigen::VectorXd& x, const Eigen::VectorXd& v)
{
    return s.Cx * x + s.Cv * v;
}

// Stationarity residual of stage k, x_0 excluded.
Eigen::VectorXd full_gradient(const QpProblem& qp, int k, const Eigen::VectorXd& z, const Eigen::VectorXd& lambda,
                              const std::vector<Eigen::VectorXd>& pi)
{
    const QpStage& s = qp.stages[k];
    Eigen::VectorXd g = partial_gradient(s, z, lambda);
    const int N = qp.horizon();
    if (k < N) {
        g.head(s.nx()) += s.A.transpose() * pi[k];
        g.tail(s.nv()) += s.B.transpose() * pi[k];
    }
    if (k > 0) g.head(s.nx()) -= pi[k - 1];
    else g.head(s.nx()).setZero();
    return g;
}

}  // namespace

KktResiduals qp_residuals(const QpProblem& qp, const QpSolution& sol)
{
    KktResiduals r;
    const int N = qp.horizon();
    for (int k = 0; k <= N; ++k) {
        const QpStage& s = qp.stages[k];
        const Eigen::VectorXd z = stacked(sol.x[k], sol.v[k]);
        r.stationarity = std::max(r.stationarity, inf_norm(full_gradient(qp, k, z, sol.lambda[k], sol.pi)));
        if (k < N) {
            r.equality = std::max(r.equality, inf_norm(s.A * sol.x[k] + s.B * sol.v[k] + s.c - sol.x[k + 1]));
        }
        if (s.rows() > 0) {
            const Eigen::VectorXd slack = s.d - row_values(s, sol.x[k], sol.v[k]);
            r.inequality = std::max(r.inequality, (-slack).cwiseMax(0.0).maxCoeff());
            r.complementarity = std::max(r.complementarity, slack.cwiseProduct(sol.lambda[k]).cwiseAbs().maxCoeff());
            r.complementarity = std::max(r.complementarity, (-sol.lambda[k]).cwiseMax(0.0).maxCoeff());
        }
    }
    r.equality = std::max(r.equality, inf_norm(sol.x[0] - qp.x0));
    return r;
}

bool QpSolver::factorize(const QpProblem& qp)
{
    const int N = qp.horizon();
    for (int k = N; k >= 0; --k) {
        const QpStage& s = qp.stages[k];
        StageWork& w = work_[k];
        const int nx = s.nx(), nv = s.nv();
        const Eigen::MatrixXd Q = w.Hmod.topLeftCorner(nx, nx);
        const Eigen::MatrixXd S = w.Hmod.topRightCorner(nx, nv);
        Eigen::MatrixXd R = w.Hmod.bottomRightCorner(nv, nv);
        if (k == N) {
            w.Sbar = S;
        } else {
            const Eigen::MatrixXd& P1 = work_[k + 1].P;
            const Eigen::MatrixXd PB = P1 * s.B;
            w.Sbar = S + s.A.transpose() * PB;
            R += s.B.transpose() * PB;
        }
        if (nv > 0) {
            w.Rbar.compute(R);
            if (w.Rbar.info() != Eigen::Success) return false;
            w.K = -w.Rbar.solve(w.Sbar.transpose());
        } else {
            w.K.resize(0, nx);
        }
        if (k > 0) {
            if (k == N) {
                w.P = Q + w.Sbar * w.K;
            } else {
                w.P = Q + s.A.transpose() * work_[k + 1].P * s.A + w.Sbar * w.K;
            }
            w.P = 0.5 * (w.P + w.P.transpose()).eval();
        }
    }
    return true;
}

void QpSolver::back_substitute(const QpProblem& qp)
{
    const int N = qp.horizon();
    for (int k = N; k >= 0; --k) {
        const QpStage& s = qp.stages[k];
        StageWork& w = work_[k];
        const int nx = s.nx(), nv = s.nv();
        Eigen::VectorXd qbar = w.grad.head(nx);
        Eigen::VectorXd rbar = w.grad.tail(nv);
        if (k < N) {
            const StageWork& n = work_[k + 1];
            const Eigen::VectorXd cw = n.P * w.defect + n.p;
            qbar += s.A.transpose() * cw;
            rbar += s.B.transpose() * cw;
        }
        w.kff = nv > 0 ? Eigen::VectorXd(-w.Rbar.solve(rbar)) : Eigen::VectorXd(0);
        if (k > 0) w.p = qbar + w.Sbar * w.kff;
    }
    work_[0].dx.setZero(qp.stages[0].nx());
    for (int k = 0; k <= N; ++k) {
        const QpStage& s = qp.stages[k];
        StageWork& w = work_[k];
        w.dv = w.K * w.dx + w.kff;
        if (k < N) {
            StageWork& n = work_[k + 1];
            n.dx = s.A * w.dx + s.B * w.dv + w.defect;
            w.nu = n.P * n.dx + n.p;
        }
    }
}

QpSolution QpSolver::solve(const QpProblem& qp)
{
    qp.validate();
    const int N = qp.horizon();
    work_.assign(N + 1, StageWork{});

    QpSolution sol;
    sol.x.resize(N + 1);
    sol.v.resize(N + 1);
    sol.lambda.resize(N + 1);
    sol.pi.assign(N, Eigen::VectorXd());
    std::vector<Eigen::VectorXd> t(N + 1);
    int m = 0;
    double dual_scale = 1.0, primal_scale = 1.0 + inf_norm(qp.x0);
    for (int k = 0; k <= N; ++k) {
        const QpStage& s = qp.stages[k];
        sol.x[k].setZero(s.nx());
        sol.v[k].setZero(s.nv());
        sol.lambda[k].setZero(s.rows());
        if (k < N) sol.pi[k].setZero(s.c.size());
        m += s.rows();
        dual_scale = std::max(dual_scale, 1.0 + inf_norm(s.h));
        primal_scale = std::max(primal_scale, 1.0 + inf_norm(s.c));
        if (s.rows() > 0) primal_scale = std::max(primal_scale, 1.0 + inf_norm(s.d));
    }
    sol.x[0] = qp.x0;

    auto set_defects = [&] {
        for (int k = 0; k < N; ++k) {
            const QpStage& s = qp.stages[k];
            work_[k].defect = s.A * sol.x[k] + s.B * sol.v[k] + s.c - sol.x[k + 1];
        }
    };

    // Equality-constrained start.
    for (int k = 0; k <= N; ++k) {
        work_[k].Hmod = qp.stages[k].H;
        work_[k].grad = qp.stages[k].H * stacked(sol.x[k], sol.v[k]) + qp.stages[k].h;
    }
    set_defects();
    if (!factorize(qp)) {
        sol.status = QpStatus::Failed;
        sol.residuals = qp_residuals(qp, sol);
        return sol;
    }
    back_substitute(qp);
    for (int k = 0; k <= N; ++k) {
        if (k > 0) sol.x[k] += work_[k].dx;
        sol.v[k] += work_[k].dv;
        if (k < N) sol.pi[k] = work_[k].nu;
    }
    for (int k = 0; k <= N; ++k) {
        const QpStage& s = qp.stages[k];
        if (s.rows() == 0) continue;
        t[k] = (s.d - row_values(s, sol.x[k], sol.v[k])).cwiseMax(1.0);
        sol.lambda[k].setOnes();
    }

    std::vector<Eigen::VectorXd> rp(N + 1), dt_aff(N + 1), dl_aff(N + 1), dt(N + 1), dl(N + 1);
    std::vector<Eigen::VectorXd> partial(N + 1);

    auto max_step = [&](const std::vector<Eigen::VectorXd>& d_t, const std::vector<Eigen::VectorXd>& d_l) {
        double alpha = std::numeric_limits<double>::infinity();
        for (int k = 0; k <= N; ++k) {
            for (int i = 0; i < t[k].size(); ++i) {
                if (d_t[k](i) < 0.0) alpha = std::min(alpha, -t[k](i) / d_t[k](i));
                if (d_l[k](i) < 0.0) alpha = std::min(alpha, -sol.lambda[k](i) / d_l[k](i));
            }
        }
        return alpha;
    };

    // Solves the LQ system for the complementarity target rc and recovers
    // the slack / multiplier directions.
    auto direction = [&](const std::vector<Eigen::VectorXd>& rc, std::vector<Eigen::VectorXd>& d_t,
                         std::vector<Eigen::VectorXd>& d_l) {
        for (int k = 0; k <= N; ++k) {
            const QpStage& s = qp.stages[k];
            work_[k].grad = partial[k];
            if (s.rows() == 0) continue;
            const Eigen::VectorXd corr =
                ((sol.lambda[k].cwiseProduct(rp[k]) - rc[k]).array() / t[k].array()).matrix();
            work_[k].grad.head(s.nx()) += s.Cx.transpose() * corr;
            work_[k].grad.tail(s.nv()) += s.Cv.transpose() * corr;
        }
        back_substitute(qp);
        for (int k = 0; k <= N; ++k) {
            const QpStage& s = qp.stages[k];
            if (s.rows() == 0) {
                d_t[k].resize(0);
                d_l[k].resize(0);
                continue;
            }
            d_t[k] = -rp[k] - row_values(s, work_[k].dx, work_[k].dv);
            d_l[k] = ((-rc[k] - sol.lambda[k].cwiseProduct(d_t[k])).array() / t[k].array()).matrix();
        }
    };

    const double tol = options_.tol;
    sol.status = QpStatus::MaxIterations;
    for (int it = 0; it <= options_.max_iterations; ++it) {
        set_defects();
        double rd = 0.0, re = 0.0, rpn = 0.0, comp = 0.0, gap = 0.0;
        for (int k = 0; k <= N; ++k) {
            const QpStage& s = qp.stages[k];
            const Eigen::VectorXd z = stacked(sol.x[k], sol.v[k]);
            partial[k] = partial_gradient(s, z, sol.lambda[k]);
            rd = std::max(rd, inf_norm(full_gradient(qp, k, z, sol.lambda[k], sol.pi)));
            if (k < N) re = std::max(re, inf_norm(work_[k].defect));
            if (s.rows() > 0) {
                rp[k] = row_values(s, sol.x[k], sol.v[k]) + t[k] - s.d;
                rpn = std::max(rpn, inf_norm(rp[k]));
                const Eigen::VectorXd tl = t[k].cwiseProduct(sol.lambda[k]);
                comp = std::max(comp, tl.maxCoeff());
                gap += tl.sum();
            } else {
                rp[k].resize(0);
            }
        }
        sol.iterations = it;
        if (rd <= tol * dual_scale && re <= tol * primal_scale && rpn <= tol * primal_scale && comp <= tol) {
            sol.status = QpStatus::Converged;
            break;
        }
        if (it == options_.max_iterations) break;
        const double mu = m > 0 ? gap / m : 0.0;

        for (int k = 0; k <= N; ++k) {
            const QpStage& s = qp.stages[k];
            work_[k].Hmod = s.H;
            if (s.rows() == 0) continue;
            Eigen::MatrixXd G(s.rows(), s.nx() + s.nv());
            G << s.Cx, s.Cv;
            const Eigen::VectorXd D = (sol.lambda[k].array() / t[k].array()).matrix();
            work_[k].Hmod.noalias() += G.transpose() * D.asDiagonal() * G;
        }
        if (!factorize(qp)) {
            sol.status = QpStatus::Failed;
            break;
        }

        std::vector<Eigen::VectorXd> rc(N + 1);
        for (int k = 0; k <= N; ++k) rc[k] = t[k].cwiseProduct(sol.lambda[k]);
        direction(rc, dt_aff, dl_aff);
        const double a_aff = std::min(1.0, max_step(dt_aff, dl_aff));
        double mu_aff = 0.0;
        for (int k = 0; k <= N; ++k) {
            if (t[k].size() == 0) continue;
            mu_aff += (t[k] + a_aff * dt_aff[k]).dot(sol.lambda[k] + a_aff * dl_aff[k]);
        }
        mu_aff = m > 0 ? mu_aff / m : 0.0;
        const double sigma = mu > 0.0 ? std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3) : 0.0;

        for (int k = 0; k <= N; ++k) {
            if (t[k].size() == 0) continue;
            rc[k] += dt_aff[k].cwiseProduct(dl_aff[k]);
            rc[k].array() -= sigma * mu;
        }
        direction(rc, dt, dl);
        const double alpha = m > 0 ? std::min(1.0, 0.995 * max_step(dt, dl)) : 1.0;

        for (int k = 0; k <= N; ++k) {
            if (k > 0) sol.x[k] += alpha * work_[k].dx;
            sol.v[k] += alpha * work_[k].dv;
            if (k < N) sol.pi[k] += alpha * (work_[k].nu - sol.pi[k]);
            if (t[k].size() > 0) {
                t[k] += alpha * dt[k];
                sol.lambda[k] += alpha * dl[k];
            }
        }
    }
    sol.residuals = qp_residuals(qp, sol);
    return sol;
}

}  // namespace fwmpc
