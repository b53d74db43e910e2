#pragma once

// Gauss-Newton SQP over the multiple-shooting OCP: one iteration per call in
// real-time-iteration mode, or repeated full steps until the KKT conditions
// hold.

#include "fwmpc/ocp.hpp"
#include "fwmpc/qp.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <vector>

namespace fwmpc {

struct OcpSolution {
    std::vector<Eigen::VectorXd> X;       // N + 1 states
    std::vector<Eigen::VectorXd> U;       // N controls
    std::vector<Eigen::VectorXd> S;       // N + 1 slacks; S[0] is the minimal feasible value
    std::vector<Eigen::VectorXd> lambda;  // inequality multipliers, QP row order
    std::vector<Eigen::VectorXd> pi;      // dynamics multipliers, N entries
    KktResiduals kkt;
    QpStatus qp_status = QpStatus::Converged;
    int qp_iterations = 0;
    int sqp_iterations = 0;
    double solve_time = 0.0;  // s
    double step_norm = 0.0;   // infinity norm of the last primal step
    double cost = 0.0;
    bool converged = false;
    /// Set when the solver failed and the guess was returned unchanged.
    bool degraded = false;

    [[nodiscard]] int horizon() const { return static_cast<int>(U.size()); }
};

/// GN QP about the guess. Stage variables: v_0 = du_0, v_k = [du_k; ds_k],
/// v_N = ds_N. Rows per stage: soft envelope rows (k >= 1), then the bounds
/// on v (upper/lower pairs). Throws InvalidStateError naming the node when
/// the dynamics are undefined there.
[[nodiscard]] QpProblem linearize(const StructuredNlp& nlp, const OcpSolution& guess, double regularization = 1e-8);

/// NLP KKT residuals at the solution's primal-dual point.
[[nodiscard]] KktResiduals kkt_residuals(const StructuredNlp& nlp, const OcpSolution& sol);

/// Forward simulation under the level trim command from the initial state.
[[nodiscard]] OcpSolution cold_start(const StructuredNlp& nlp);

/// Drops stage 0, repeats the last control, rolls the last state forward.
/// On closed MPCC paths psi_hat is moved by a multiple of the path length to
/// sit next to the new initial value.
[[nodiscard]] OcpSolution shift_warm_start(const OcpSolution& prev, const StructuredNlp& nlp);

/// Nominal per-component state scale used by the step cap.
[[nodiscard]] Eigen::VectorXd state_scale(OcpMode mode);

struct SqpOptions {
    double regularization = 1e-8;
    /// Full-convergence mode caps the state step at trust_radius x state_scale.
    double trust_radius = 10.0;
    QpOptions qp;
    /// Line-delimited JSON trace of every iteration when non-null.
    std::ostream* trace = nullptr;
};

/// Owns the QP workspace; one instance per thread.
class SqpSolver {
public:
    SqpSolver() : SqpSolver(SqpOptions{}) {}
    explicit SqpSolver(SqpOptions options);

    /// One linearization, one QP, full step. On failure returns the guess
    /// flagged degraded.
    OcpSolution rti_step(const StructuredNlp& nlp, const OcpSolution& guess);

    /// Full steps (capped by the trust radius) until max KKT residual <=
    /// kkt_tol or max_iters. max_iters = 1 reproduces rti_step.
    OcpSolution sqp_solve(const StructuredNlp& nlp, const OcpSolution& guess, double kkt_tol, int max_iters);

    [[nodiscard]] const SqpOptions& options() const { return options_; }

private:
    OcpSolution iterate(const StructuredNlp& nlp, const OcpSolution& guess, bool capped, int iteration);

    SqpOptions options_;
    QpSolver qp_;
};

}  // namespace fwmpc
