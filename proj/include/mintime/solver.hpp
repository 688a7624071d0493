#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "mintime/admissible_set.hpp"
#include "mintime/common.hpp"
#include "mintime/lti.hpp"
#include "mintime/weights.hpp"

namespace mintime {

/// Penalized-splitting iteration parameters.
struct SolverConfig {
    double rho = 1.0;               ///< penalty parameter, fixed over the run
    double eps_abs = 1e-8;          ///< absolute residual tolerance
    double eps_rel = 1e-6;          ///< relative residual tolerance
    int max_iters = 50000;
    double over_relaxation = 1.6;   ///< in [1, 1.9]

    void validate() const {
        require(rho > 0 && std::isfinite(rho), "SolverConfig: rho must be positive");
        require(eps_abs > 0 && std::isfinite(eps_abs), "SolverConfig: eps_abs must be positive");
        require(eps_rel >= 0 && std::isfinite(eps_rel), "SolverConfig: eps_rel must be nonnegative");
        require(max_iters >= 1, "SolverConfig: max_iters must be at least 1");
        require(over_relaxation >= 1.0 && over_relaxation <= 1.9,
                "SolverConfig: over_relaxation must lie in [1, 1.9]");
    }
};

/// Weighted sum-of-norms instance: minimize sum_t w(t) ||x(t)||_2 over
/// controls in the admissible set, subject to the plant dynamics from x0.
struct RelaxationProblem {
    LtiSystem sys;
    Vector x0;
    AdmissibleSet set;
    WeightSchedule weights;

    Eigen::Index horizon() const { return weights.horizon(); }

    void validate() const {
        require(x0.size() == sys.n(), "RelaxationProblem: x0 has wrong dimension");
        require_finite(x0, "x0");
        require(set.n_u() == sys.n_u(), "RelaxationProblem: control set dimension mismatch");
        require(weights.horizon() >= 1, "RelaxationProblem: empty weight schedule");
        if (weights.provenance != WeightSchedule::Provenance::Explicit) {
            require(weights.all_positive(), "RelaxationProblem: weights must be positive");
            require(weights.strictly_increasing(),
                    "RelaxationProblem: weights must be strictly increasing");
        } else {
            for (double w : weights.values)
                require(w >= 0 && std::isfinite(w),
                        "RelaxationProblem: explicit weights must be finite and nonnegative");
        }
    }
};

struct SolveOutput {
    enum class Status { Converged, MaxIters };

    Matrix u;                 ///< n_u x T, each column exactly in the admissible set
    Matrix x;                 ///< n x (T+1), re-simulated from u, col 0 = x0
    double objective = 0.0;   ///< sum_t w(t) ||x(t)|| evaluated on the re-simulated states
    int iterations = 0;
    Status status = Status::Converged;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
};

/// Proximal operator of lambda * ||.||_2: shrink v radially, zero it when its
/// norm is at most lambda.
inline Vector block_soft_threshold(const Vector& v, double lambda) {
    require(lambda >= 0, "block_soft_threshold: lambda must be nonnegative");
    if (lambda == 0.0) return v;
    const double norm = v.norm();
    if (norm <= lambda) return Vector::Zero(v.size());
    return v * (1.0 - lambda / norm);
}

/// Euclidean projection onto the trajectories of x(t+1) = A x(t) + B u(t)
/// with x(0) fixed. The normal equations of the constrained least-squares
/// problem form a block-tridiagonal SPD system whose factorization depends
/// only on (A, B, T); it is computed once here and reused for every
/// projection.
class DynamicsProjector {
public:
    DynamicsProjector(const LtiSystem& sys, Eigen::Index T)
        : A_(sys.A), B_(sys.B), T_(T), n_(sys.n()), m_(sys.n_u()) {
        require(T >= 1, "DynamicsProjector: horizon must be at least 1");
        const Matrix eye = Matrix::Identity(n_, n_);
        const Matrix AAt = A_ * A_.transpose();
        const Matrix BBt = B_ * B_.transpose();

        // Block-Thomas elimination: S_0 = D_0, S_t = D_t - A S_{t-1}^{-1} A^T
        // with D_0 = I + B B^T and D_t = I + A A^T + B B^T for t >= 1.
        factors_.reserve(static_cast<std::size_t>(T_));
        Matrix s = eye + BBt;
        factors_.emplace_back(s);
        for (Eigen::Index t = 1; t < T_; ++t) {
            if (factors_.back().info() != Eigen::Success)
                throw NumericalError("DynamicsProjector: factorization failed");
            const Matrix w = factors_.back().solve(A_.transpose());
            s = eye + AAt + BBt - A_ * w;
            factors_.emplace_back(s);
        }
        if (factors_.back().info() != Eigen::Success)
            throw NumericalError("DynamicsProjector: factorization failed");
    }

    Eigen::Index horizon() const { return T_; }

    /// Overwrites (x_target, u_target) with the closest dynamics-consistent
    /// trajectory. x columns are x(1..T), u columns are u(0..T-1).
    void project(const Vector& x0, Matrix& x, Matrix& u) const {
        require(x0.size() == n_, "DynamicsProjector: x0 has wrong dimension");
        require(x.rows() == n_ && x.cols() == T_ && u.rows() == m_ && u.cols() == T_,
                "DynamicsProjector: target has wrong shape");

        // Right-hand side b_t = (C z_hat - d)_t, one block per constraint row.
        std::vector<Vector> c(static_cast<std::size_t>(T_));
        c[0] = x.col(0) - B_ * u.col(0) - A_ * x0;
        for (Eigen::Index t = 1; t < T_; ++t)
            c[static_cast<std::size_t>(t)] = x.col(t) - A_ * x.col(t - 1) - B_ * u.col(t);

        // Forward sweep, then back substitution for the multipliers.
        for (Eigen::Index t = 1; t < T_; ++t)
            c[static_cast<std::size_t>(t)] +=
                A_ * factors_[static_cast<std::size_t>(t - 1)].solve(c[static_cast<std::size_t>(t - 1)]);
        std::vector<Vector> nu(static_cast<std::size_t>(T_));
        nu[static_cast<std::size_t>(T_ - 1)] =
            factors_[static_cast<std::size_t>(T_ - 1)].solve(c[static_cast<std::size_t>(T_ - 1)]);
        for (Eigen::Index t = T_ - 2; t >= 0; --t)
            nu[static_cast<std::size_t>(t)] = factors_[static_cast<std::size_t>(t)].solve(
                c[static_cast<std::size_t>(t)] + A_.transpose() * nu[static_cast<std::size_t>(t + 1)]);

        // z := z_hat - C^T nu.
        for (Eigen::Index t = 0; t < T_; ++t) {
            x.col(t) -= nu[static_cast<std::size_t>(t)];
            if (t + 1 < T_) x.col(t) += A_.transpose() * nu[static_cast<std::size_t>(t + 1)];
            u.col(t) += B_.transpose() * nu[static_cast<std::size_t>(t)];
        }
    }

    std::pair<Matrix, Matrix> projected(const Vector& x0, Matrix x, Matrix u) const {
        project(x0, x, u);
        return {std::move(x), std::move(u)};
    }

private:
    Matrix A_;
    Matrix B_;
    Eigen::Index T_;
    Eigen::Index n_;
    Eigen::Index m_;
    std::vector<Eigen::LLT<Matrix>> factors_;
};

inline double trajectory_objective(const WeightSchedule& weights, const Matrix& x) {
    double obj = 0.0;
    for (Eigen::Index t = 1; t <= weights.horizon(); ++t) obj += weights.at(t) * x.col(t).norm();
    return obj;
}

namespace solver_detail {

struct StageState {
    Matrix xt, ut;  // prox-side iterates: states x(1..T), inputs u(0..T-1)
    Matrix yx, yu;  // scaled duals
};

struct StageResult {
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    bool converged = false;
};

/// One splitting run at fixed rho: alternate the cached dynamics projection
/// with the separable proximal step (soft threshold on each state block, set
/// projection on each input block), over-relaxed, scaled dual updates, and
/// the combined absolute/relative stopping rule.
inline StageResult run_stage(const DynamicsProjector& projector, const WeightSchedule& weights,
                             const AdmissibleSet& set, const Vector& x0, double rho,
                             double eps_abs, double eps_rel, int max_iters, double alpha,
                             StageState& s) {
    const Eigen::Index T = projector.horizon();
    const Eigen::Index n = s.xt.rows();
    const Eigen::Index m = s.ut.rows();
    const double sqrt_dim = std::sqrt(static_cast<double>(T * (n + m)));

    Matrix x(n, T), u(m, T), xt_prev(n, T), ut_prev(m, T);
    StageResult res;
    while (res.iterations < max_iters) {
        ++res.iterations;
        x = s.xt - s.yx;
        u = s.ut - s.yu;
        projector.project(x0, x, u);

        xt_prev.swap(s.xt);
        ut_prev.swap(s.ut);
        for (Eigen::Index t = 0; t < T; ++t) {
            const Vector vx = alpha * x.col(t) + (1.0 - alpha) * xt_prev.col(t) + s.yx.col(t);
            s.xt.col(t) = block_soft_threshold(vx, weights.at(t + 1) / rho);
            s.yx.col(t) += alpha * x.col(t) + (1.0 - alpha) * xt_prev.col(t) - s.xt.col(t);
            const Vector vu = alpha * u.col(t) + (1.0 - alpha) * ut_prev.col(t) + s.yu.col(t);
            s.ut.col(t) = set.project(vu);
            s.yu.col(t) += alpha * u.col(t) + (1.0 - alpha) * ut_prev.col(t) - s.ut.col(t);
        }

        res.primal_residual = std::sqrt((x - s.xt).squaredNorm() + (u - s.ut).squaredNorm());
        res.dual_residual =
            rho * std::sqrt((s.xt - xt_prev).squaredNorm() + (s.ut - ut_prev).squaredNorm());
        const double z_scale = std::max(std::sqrt(x.squaredNorm() + u.squaredNorm()),
                                        std::sqrt(s.xt.squaredNorm() + s.ut.squaredNorm()));
        const double y_scale = rho * std::sqrt(s.yx.squaredNorm() + s.yu.squaredNorm());
        if (res.primal_residual <= sqrt_dim * eps_abs + eps_rel * z_scale &&
            res.dual_residual <= sqrt_dim * eps_abs + eps_rel * y_scale) {
            res.converged = true;
            break;
        }
    }
    return res;
}

}  // namespace solver_detail

/// Operator-splitting solve of the relaxation.
///
/// The penalty follows a fixed geometric continuation: it starts at
/// cfg.rho * max(w) and descends by factors of 10 to cfg.rho * min positive
/// w, carrying the primal iterates and rescaled duals across stages. A
/// single fixed penalty cannot serve weight schedules spanning many orders
/// of magnitude (large penalties leave the small-weight blocks without
/// traction, small ones pin large-weight blocks at zero for as many
/// iterations as the dual needs to outgrow the threshold); the schedule is
/// still a deterministic function of the inputs. Intermediate stages run at
/// relaxed tolerance, the final stage at the configured one.
///
/// The problem is solved in coordinates scaled by 1/(1 + ||x0||); the
/// returned controls are unscaled, re-projected onto the original set so
/// membership holds exactly, and the states are re-simulated from them.
inline SolveOutput solve_relaxation(const RelaxationProblem& p, const SolverConfig& cfg = {},
                                    const Matrix* warm_start_u = nullptr) {
    p.validate();
    cfg.validate();

    const Eigen::Index T = p.horizon();
    const Eigen::Index n = p.sys.n();
    const Eigen::Index m = p.sys.n_u();

    const double sigma = 1.0 / (1.0 + p.x0.norm());
    const Vector x0s = sigma * p.x0;
    const AdmissibleSet set_s = p.set.scaled(sigma);

    double w_max = 0.0;
    double w_min_pos = 0.0;
    for (double w : p.weights.values)
        if (w > 0) {
            w_max = std::max(w_max, w);
            w_min_pos = w_min_pos == 0.0 ? w : std::min(w_min_pos, w);
        }
    const double rho_final = cfg.rho * (w_min_pos > 0 ? w_min_pos : 1.0);
    const double rho_start = cfg.rho * (w_max > 0 ? w_max : 1.0);

    DynamicsProjector projector(p.sys, T);

    solver_detail::StageState s;
    s.xt = Matrix::Zero(n, T);
    s.ut = Matrix::Zero(m, T);
    if (warm_start_u != nullptr) {
        require(warm_start_u->rows() == m && warm_start_u->cols() == T,
                "solve_relaxation: warm start has wrong shape");
        for (Eigen::Index t = 0; t < T; ++t)
            s.ut.col(t) = set_s.project(sigma * warm_start_u->col(t));
        s.xt = simulate(p.sys, x0s, s.ut).rightCols(T);
    }
    s.yx = Matrix::Zero(n, T);
    s.yu = Matrix::Zero(m, T);

    int total_iterations = 0;
    solver_detail::StageResult last;
    double rho = rho_start;
    while (true) {
        const bool final_stage = rho <= rho_final * 1.0000001;
        // Intermediate stages only position the iterates for the next penalty
        // level; fixed loose tolerances are enough.
        const double stage_eps_abs = final_stage ? cfg.eps_abs : 1e-4;
        const double stage_eps_rel = final_stage ? cfg.eps_rel : 1e-3;
        last = solver_detail::run_stage(projector, p.weights, set_s, x0s, rho, stage_eps_abs,
                                        stage_eps_rel, cfg.max_iters, cfg.over_relaxation, s);
        total_iterations += last.iterations;
        if (final_stage) break;
        const double rho_next = std::max(rho / 10.0, rho_final);
        s.yx *= rho / rho_next;  // keep the unscaled duals across the change
        s.yu *= rho / rho_next;
        rho = rho_next;
    }

    SolveOutput out;
    out.iterations = total_iterations;
    out.status = last.converged ? SolveOutput::Status::Converged : SolveOutput::Status::MaxIters;
    out.primal_residual = last.primal_residual;
    out.dual_residual = last.dual_residual;
    out.u.resize(m, T);
    for (Eigen::Index t = 0; t < T; ++t) out.u.col(t) = p.set.project(s.ut.col(t) / sigma);
    out.x = simulate(p.sys, p.x0, out.u);
    out.objective = trajectory_objective(p.weights, out.x);

    // Polish: the proximal side ends with an exact-zero suffix wherever the
    // soft threshold fired. Each suffix start t0 proposes a candidate
    // "reach zero at t0, then hold with zero input", realized by the
    // well-conditioned single-weight subproblem at horizon t0. A candidate
    // replaces the iterate only if it strictly lowers the true objective, so
    // this is a descent step, never a heuristic override. Subproblems have a
    // single positive weight and are themselves never polished.
    int positive_weights = 0;
    for (double w : p.weights.values)
        if (w > 0) ++positive_weights;
    if (positive_weights >= 2) {
        Eigen::Index suffix_start = T + 1;
        for (Eigen::Index t = T; t >= 1 && s.xt.col(t - 1).isZero(0.0); --t) suffix_start = t;
        for (Eigen::Index t0 = suffix_start; t0 <= T; ++t0) {
            Matrix u_cand = Matrix::Zero(m, T);
            std::vector<double> wf(static_cast<std::size_t>(t0), 0.0);
            wf.back() = 1.0;
            RelaxationProblem sub{p.sys, p.x0, p.set, explicit_weights(std::move(wf))};
            const Matrix warm = out.u.leftCols(t0);
            const SolveOutput sub_out = solve_relaxation(sub, cfg, &warm);
            out.iterations += sub_out.iterations;
            u_cand.leftCols(t0) = sub_out.u;
            const Matrix x_cand = simulate(p.sys, p.x0, u_cand);
            const double obj_cand = trajectory_objective(p.weights, x_cand);
            if (obj_cand < out.objective) {
                out.u = std::move(u_cand);
                out.x = x_cand;
                out.objective = obj_cand;
            }
        }
    }

    if (!out.u.allFinite() || !out.x.allFinite() || !std::isfinite(out.objective))
        throw NumericalError("solve_relaxation: non-finite result");
    return out;
}

}  // namespace mintime
