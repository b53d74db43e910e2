#pragma once

// Stage-structured convex QP
//
//   min  sum_k 1/2 [x_k; v_k]' H_k [x_k; v_k] + h_k' [x_k; v_k]
//   s.t. x_{k+1} = A_k x_k + B_k v_k + c_k      k = 0..N-1
//        Cx_k x_k + Cv_k v_k <= d_k              k = 0..N
//        x_0 = x0 (fixed)
//
// solved by a Mehrotra predictor-corrector interior point method whose Newton
// systems are factorized by a backward Riccati recursion.

#include <Eigen/Dense>

#include <string_view>
#include <vector>

namespace fwmpc {

struct QpStage {
    QpStage() = default;
    /// Zero-initialized stage with nx states, nv stage variables and nx_next
    /// states at the following stage (0 for the last stage).
    QpStage(int nx, int nv, int nx_next);

    [[nodiscard]] int nx() const { return nx_; }
    [[nodiscard]] int nv() const { return nv_; }
    [[nodiscard]] int rows() const { return static_cast<int>(d.size()); }

    /// Appends lo <= v(i) <= hi as inequality rows; infinite bounds are
    /// skipped. Throws ArgumentError when lo > hi.
    void add_bounds(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);
    /// Appends rows Gx x + Gv v <= g.
    void add_rows(const Eigen::MatrixXd& Gx, const Eigen::MatrixXd& Gv, const Eigen::VectorXd& g);

    Eigen::MatrixXd H;  // (nx + nv) square, PSD
    Eigen::VectorXd h;
    Eigen::MatrixXd A, B;
    Eigen::VectorXd c;
    Eigen::MatrixXd Cx, Cv;
    Eigen::VectorXd d;

private:
    int nx_ = 0;
    int nv_ = 0;
};

struct QpProblem {
    std::vector<QpStage> stages;  // N + 1 entries
    Eigen::VectorXd x0;

    [[nodiscard]] int horizon() const { return static_cast<int>(stages.size()) - 1; }
    /// Throws ArgumentError on inconsistent dimensions, asymmetric or
    /// indefinite Hessian blocks (eigenvalue floor -1e-10).
    void validate() const;
};

enum class QpStatus { Converged, MaxIterations, Failed };
[[nodiscard]] std::string_view to_string(QpStatus status);

struct QpOptions {
    double tol = 1e-11;
    int max_iterations = 100;
};

struct KktResiduals {
    double stationarity = 0.0;
    double equality = 0.0;
    double inequality = 0.0;
    double complementarity = 0.0;

    [[nodiscard]] double max() const;
};

struct QpSolution {
    std::vector<Eigen::VectorXd> x;       // N + 1
    std::vector<Eigen::VectorXd> v;       // N + 1
    std::vector<Eigen::VectorXd> lambda;  // inequality multipliers per stage
    std::vector<Eigen::VectorXd> pi;      // dynamics multipliers, N entries
    QpStatus status = QpStatus::Failed;
    int iterations = 0;
    KktResiduals residuals;
};

/// KKT residuals of an arbitrary primal-dual point (infinity norms).
/// Dynamics multiplier pi_k belongs to the row x_{k+1} = A_k x_k + ... with
/// Lagrangian term pi_k' (A_k x_k + B_k v_k + c_k - x_{k+1}).
[[nodiscard]] KktResiduals qp_residuals(const QpProblem& qp, const QpSolution& sol);

/// Solver with reusable workspace. Not thread-safe; use one per thread.
class QpSolver {
public:
    explicit QpSolver(QpOptions options = {}) : options_(options) {}

    /// Returns the final iterate. status is MaxIterations when the tolerance
    /// was not reached and Failed on a numerical breakdown.
    QpSolution solve(const QpProblem& qp);

    [[nodiscard]] const QpOptions& options() const { return options_; }

private:
    struct StageWork {
        Eigen::MatrixXd Hmod;     // barrier-augmented Hessian
        Eigen::MatrixXd P;        // cost-to-go Hessian
        Eigen::VectorXd p;        // cost-to-go gradient
        Eigen::MatrixXd K;        // feedback gain
        Eigen::VectorXd kff;      // feedforward
        Eigen::LLT<Eigen::MatrixXd> Rbar;
        Eigen::MatrixXd Sbar;
        Eigen::VectorXd grad;     // LQ gradient
        Eigen::VectorXd defect;   // LQ dynamics offset
        Eigen::VectorXd dx, dv, nu;
    };

    bool factorize(const QpProblem& qp);
    void back_substitute(const QpProblem& qp);

    QpOptions options_;
    std::vector<StageWork> work_;
};

}  // namespace fwmpc
