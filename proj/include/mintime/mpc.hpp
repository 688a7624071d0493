#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "mintime/pipeline.hpp"
#include "mintime/solver.hpp"

namespace mintime {

/// Receding-horizon settings. The weight source is indexed by absolute time
/// by default: the solve started at step t uses weights w(t+1), ..., w(t+tau),
/// so the tail problem of an optimal trajectory keeps its original weights.
/// Setting absolute_time = false always uses w(1), ..., w(tau) instead.
struct MpcConfig {
    Eigen::Index tau = 0;            ///< lookahead horizon, must exceed the state dimension
    Eigen::Index resolve_period = 1; ///< 1 = re-solve every step, tau = apply whole blocks
    Eigen::Index max_steps = 200;
    double zero_tol = 0.0;           ///< <= 0: 1e-6 * (1 + ||x0||) at run start
    std::function<double(Eigen::Index)> weight_at;  ///< weight at absolute index k >= 1
    bool absolute_time = true;

    void validate(const LtiSystem& sys) const {
        require(tau > sys.n(), "MpcConfig: tau must exceed the state dimension");
        require(resolve_period >= 1 && resolve_period <= tau,
                "MpcConfig: resolve_period must lie in [1, tau]");
        require(max_steps >= 1, "MpcConfig: max_steps must be at least 1");
        require(static_cast<bool>(weight_at), "MpcConfig: weight source not set");
    }
};

struct ClosedLoopTrace {
    Matrix x;                        ///< n x (K+1), exact forward simulation of u
    Matrix u;                        ///< n_u x K applied inputs
    std::vector<int> solve_times;    ///< steps at which the finite-horizon problem was solved
    std::optional<int> reached_zero_at;
};

namespace detail {
inline WeightSchedule mpc_window_weights(const MpcConfig& cfg, Eigen::Index t_abs) {
    std::vector<double> w(static_cast<std::size_t>(cfg.tau));
    const Eigen::Index base = cfg.absolute_time ? t_abs : 0;
    for (Eigen::Index k = 1; k <= cfg.tau; ++k) {
        const double v = cfg.weight_at(base + k);
        require(v > 0 && std::isfinite(v), "mpc: weight source returned a non-positive weight");
        w[static_cast<std::size_t>(k - 1)] = v;
    }
    return explicit_weights(std::move(w));
}
}  // namespace detail

/// One policy evaluation: solve the tau-step problem from the current state
/// and return the whole control block (columns u(t|t), ..., u(t+tau-1|t)).
/// A state already at numerical zero short-circuits to a zero block.
inline Matrix mpc_step(const LtiSystem& sys, const AdmissibleSet& set, const Vector& x_current,
                       Eigen::Index t_abs, const MpcConfig& cfg, const SolverConfig& solver_cfg = {},
                       const Matrix* warm_start_u = nullptr) {
    cfg.validate(sys);
    require(x_current.size() == sys.n(), "mpc_step: state has wrong dimension");
    const double zero_tol = cfg.zero_tol > 0 ? cfg.zero_tol : default_state_tol(x_current);
    if (x_current.norm() <= zero_tol) return Matrix::Zero(sys.n_u(), cfg.tau);

    RelaxationProblem p{sys, x_current, set, detail::mpc_window_weights(cfg, t_abs)};
    return solve_relaxation(p, solver_cfg, warm_start_u).u;
}

/// Closed loop: re-solve every resolve_period steps, consume the stored block
/// in between, stop once the state norm falls below zero_tol or max_steps is
/// exhausted. Each re-solve warm-starts from the previous block shifted by
/// the number of steps applied since it was computed.
inline ClosedLoopTrace mpc_run(const LtiSystem& sys, const AdmissibleSet& set, const Vector& x0,
                               const MpcConfig& cfg, const SolverConfig& solver_cfg = {}) {
    cfg.validate(sys);
    require(x0.size() == sys.n(), "mpc_run: x0 has wrong dimension");
    const double zero_tol = cfg.zero_tol > 0 ? cfg.zero_tol : default_state_tol(x0);
    MpcConfig run_cfg = cfg;
    run_cfg.zero_tol = zero_tol;

    std::vector<Vector> states{x0};
    std::vector<Vector> inputs;
    ClosedLoopTrace trace;

    Matrix block;          // most recent control block
    Eigen::Index block_age = 0;
    Vector x = x0;
    std::optional<int> reached;

    for (Eigen::Index k = 0; k < cfg.max_steps; ++k) {
        if (x.norm() <= zero_tol) {
            reached = static_cast<int>(k);
            break;
        }
        if (k % cfg.resolve_period == 0) {
            Matrix warm;
            const Matrix* warm_ptr = nullptr;
            if (block.size() > 0 && block_age < cfg.tau) {
                warm = Matrix::Zero(sys.n_u(), cfg.tau);
                warm.leftCols(cfg.tau - block_age) = block.rightCols(cfg.tau - block_age);
                warm_ptr = &warm;
            }
            block = mpc_step(sys, set, x, k, run_cfg, solver_cfg, warm_ptr);
            block_age = 0;
            trace.solve_times.push_back(static_cast<int>(k));
        }
        const Vector u_k = block.col(block_age++);
        x = sys.A * x + sys.B * u_k;
        inputs.push_back(u_k);
        states.push_back(x);
    }
    if (!reached.has_value() && x.norm() <= zero_tol)
        reached = static_cast<int>(inputs.size());

    trace.reached_zero_at = reached;
    trace.x.resize(sys.n(), static_cast<Eigen::Index>(states.size()));
    for (std::size_t i = 0; i < states.size(); ++i)
        trace.x.col(static_cast<Eigen::Index>(i)) = states[i];
    trace.u.resize(sys.n_u(), static_cast<Eigen::Index>(inputs.size()));
    for (std::size_t i = 0; i < inputs.size(); ++i)
        trace.u.col(static_cast<Eigen::Index>(i)) = inputs[i];
    return trace;
}

}  // namespace mintime
