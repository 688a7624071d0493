#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "mintime/rng.hpp"
#include "mintime/solver.hpp"

namespace mintime {

/// Default tolerance scale: absolute tolerances grow with the initial state.
inline double default_state_tol(const Vector& x0) { return 1e-6 * (1.0 + x0.norm()); }

struct FeasibilityResult {
    double distance = 0.0;   ///< best achieved ||x(t)|| at the probed horizon
    StackedInput witness;    ///< control sequence achieving it
};

/// Smallest achievable ||x(t)|| under admissible controls, with a witness.
/// Solved as a relaxation whose only weighted state is the last one, so the
/// objective equals ||x(t)|| exactly. An optional candidate control sequence
/// (n_u x t) is evaluated too and the better of the two is returned; any
/// feasible sequence gives a valid upper bound on the true minimum.
inline FeasibilityResult feasibility_distance(const LtiSystem& sys, const AdmissibleSet& set,
                                              const Vector& x0, Eigen::Index t,
                                              const SolverConfig& cfg = {},
                                              const Matrix* candidate_u = nullptr) {
    require(t >= 1, "feasibility_distance: horizon must be at least 1");
    std::vector<double> w(static_cast<std::size_t>(t), 0.0);
    w.back() = 1.0;
    RelaxationProblem p{sys, x0, set, explicit_weights(std::move(w))};
    // The distance feeds a reachable/unreachable decision at roughly the
    // 1e-6 scale, which needs more accuracy than a generic solve.
    SolverConfig tight = cfg;
    tight.eps_abs = std::min(cfg.eps_abs, 1e-10);
    tight.eps_rel = std::min(cfg.eps_rel, 1e-9);
    tight.max_iters = std::max(cfg.max_iters, 200000);
    const SolveOutput out = solve_relaxation(p, tight, candidate_u);

    FeasibilityResult best{out.x.col(t).norm(), StackedInput::from_matrix(out.u)};
    if (candidate_u != nullptr) {
        const Matrix cx = simulate(sys, x0, *candidate_u);
        const double cd = cx.col(t).norm();
        if (cd < best.distance) best = {cd, StackedInput::from_matrix(*candidate_u)};
    }
    return best;
}

struct OracleResult {
    std::optional<int> t_star;                      ///< empty: unreachable within t_max
    StackedInput witness;                           ///< empty when t_star is 0 or unreachable
    std::vector<std::pair<int, double>> distances;  ///< (t, d(t)) for each probed horizon
    double feas_tol = 0.0;
    int t_max = 0;
};

/// Minimum time to reach the origin: the first horizon whose feasibility
/// distance falls below feas_tol. The default ascending scan probes every
/// horizon; the bisection variant cuts the probe count to O(log t_max) and
/// relies on reachability being absorbing (exact once the origin is hit),
/// which can misjudge marginal cases near the tolerance.
inline OracleResult oracle_scan(const LtiSystem& sys, const AdmissibleSet& set, const Vector& x0,
                                Eigen::Index t_max, double feas_tol = 0.0,
                                const SolverConfig& cfg = {}, bool bisect = false) {
    require(t_max >= 1, "oracle_scan: t_max must be at least 1");
    require(x0.size() == sys.n(), "oracle_scan: x0 has wrong dimension");
    OracleResult result;
    result.feas_tol = feas_tol > 0 ? feas_tol : default_state_tol(x0);
    result.t_max = static_cast<int>(t_max);

    if (x0.norm() <= result.feas_tol) {
        result.t_star = 0;
        return result;
    }

    if (!bisect) {
        for (Eigen::Index t = 1; t <= t_max; ++t) {
            FeasibilityResult fd = feasibility_distance(sys, set, x0, t, cfg);
            result.distances.emplace_back(static_cast<int>(t), fd.distance);
            if (fd.distance <= result.feas_tol) {
                result.t_star = static_cast<int>(t);
                result.witness = std::move(fd.witness);
                return result;
            }
        }
        return result;
    }

    std::map<Eigen::Index, FeasibilityResult> probes;
    auto probe = [&](Eigen::Index t) -> const FeasibilityResult& {
        auto it = probes.find(t);
        if (it == probes.end())
            it = probes.emplace(t, feasibility_distance(sys, set, x0, t, cfg)).first;
        return it->second;
    };
    if (probe(t_max).distance > result.feas_tol) {
        for (const auto& [t, fd] : probes) result.distances.emplace_back(static_cast<int>(t), fd.distance);
        return result;
    }
    Eigen::Index lo = 1, hi = t_max;
    while (lo < hi) {
        const Eigen::Index mid = lo + (hi - lo) / 2;
        if (probe(mid).distance <= result.feas_tol)
            hi = mid;
        else
            lo = mid + 1;
    }
    result.t_star = static_cast<int>(lo);
    result.witness = probe(lo).witness;
    for (const auto& [t, fd] : probes) result.distances.emplace_back(static_cast<int>(t), fd.distance);
    return result;
}

/// First index from which the state stays below zero_tol through the end of
/// the sequence; empty when the final state is still above it. Column k of x
/// is x(k), so a value of 0 means the sequence starts at (numerical) zero.
inline std::optional<int> detect_first_zero(const Matrix& x, double zero_tol) {
    require(zero_tol > 0, "detect_first_zero: zero_tol must be positive");
    const Eigen::Index last = x.cols() - 1;
    Eigen::Index k = last;
    while (k >= 0 && x.col(k).norm() <= zero_tol) --k;
    if (k == last) return std::nullopt;
    return static_cast<int>(k + 1);
}

/// Monte-Carlo lower bound on the worst-case ratio of partial to full
/// weighted input-response sums,
///     sup over u drawn from (U (-) U)^T of
///         [sum_{t<=T1} w(t) ||Delta_t u_t||] / [sum_{t<=T} w(t) ||Delta_t u_t||].
/// Draws with a zero denominator are discarded; a returned value >= 1/2
/// refutes the exact-recovery condition, a smaller value certifies nothing.
inline double estimate_mu(const LtiSystem& sys, const AdmissibleSet& set,
                          const WeightSchedule& weights, Eigen::Index T1, Eigen::Index T,
                          Eigen::Index num_samples, Rng& rng) {
    require(T1 >= 1 && T1 <= T, "estimate_mu: need 1 <= T1 <= T");
    require(weights.horizon() >= T, "estimate_mu: weight schedule shorter than horizon");
    require(num_samples >= 1, "estimate_mu: need at least one sample");
    require(set.n_u() == sys.n_u(), "estimate_mu: control set dimension mismatch");

    const AdmissibleSet diff = set.self_difference();
    double best = -1.0;
    for (Eigen::Index s = 0; s < num_samples; ++s) {
        // state of the zero-initial-state response: after step t it equals Delta_t u_t
        Vector resp = Vector::Zero(sys.n());
        double partial = 0.0, full = 0.0;
        for (Eigen::Index t = 1; t <= T; ++t) {
            resp = sys.A * resp + sys.B * diff.sample_uniform(rng);
            full += weights.at(t) * resp.norm();
            if (t == T1) partial = full;
        }
        if (full == 0.0) continue;
        best = std::max(best, partial / full);
    }
    if (best < 0.0)
        throw DegenerateSamplingError("estimate_mu: every sample had a zero denominator");
    return best;
}

struct PipelineOptions {
    double feas_tol = 0.0;      ///< <= 0: 1e-6 * (1 + ||x0||)
    double zero_tol = 0.0;      ///< <= 0: same default
    Eigen::Index mu_samples = 0;  ///< 0 disables the Monte-Carlo refuter
    std::uint64_t seed = 0;
    bool bisect = false;
};

struct PipelineReport {
    SolveOutput relaxation;
    std::optional<int> first_zero_time;  ///< detected from the relaxed trajectory
    bool certified = false;
    OracleResult oracle;
    std::optional<double> mu_lower_bound;
    std::optional<bool> condition12_refuted;
    bool uniqueness_hint = false;  ///< B has full column rank
    bool bang_bang = false;        ///< all controls before the first zero sit on the set boundary
    double zero_tol = 0.0;
    double feas_tol = 0.0;
};

/// End-to-end run: solve the relaxation, locate the first zero state, verify
/// it against the exact oracle (reachable at that time, not one step
/// earlier), and annotate with the uniqueness hint and bang-bang flag.
inline PipelineReport run_pipeline(const RelaxationProblem& p, const SolverConfig& cfg = {},
                                   const PipelineOptions& opts = {}) {
    p.validate();
    const Eigen::Index T = p.horizon();

    PipelineReport report;
    report.zero_tol = opts.zero_tol > 0 ? opts.zero_tol : default_state_tol(p.x0);
    report.feas_tol = opts.feas_tol > 0 ? opts.feas_tol : default_state_tol(p.x0);
    report.relaxation = solve_relaxation(p, cfg);
    report.first_zero_time = detect_first_zero(report.relaxation.x, report.zero_tol);
    report.oracle = oracle_scan(p.sys, p.set, p.x0, T, report.feas_tol, cfg, opts.bisect);
    report.uniqueness_hint = rank_b_full(p.sys);

    if (report.first_zero_time.has_value()) {
        const Eigen::Index t1 = *report.first_zero_time;
        bool reachable_at_t1 = false, unreachable_before = false;
        if (t1 == 0) {
            reachable_at_t1 = p.x0.norm() <= report.feas_tol;
            unreachable_before = true;
        } else {
            const Matrix prefix = report.relaxation.u.leftCols(t1);
            reachable_at_t1 =
                feasibility_distance(p.sys, p.set, p.x0, t1, cfg, &prefix).distance <= report.feas_tol;
            unreachable_before =
                t1 == 1 ? p.x0.norm() > report.feas_tol
                        : feasibility_distance(p.sys, p.set, p.x0, t1 - 1, cfg).distance > report.feas_tol;
        }
        report.certified = reachable_at_t1 && unreachable_before &&
                           report.oracle.t_star == report.first_zero_time;
    }

    const Eigen::Index boundary_steps = static_cast<Eigen::Index>(report.first_zero_time.value_or(static_cast<int>(T)));
    report.bang_bang = true;
    for (Eigen::Index t = 0; t < std::min(boundary_steps, T); ++t)
        if (!p.set.on_boundary(report.relaxation.u.col(t), 1e-6)) {
            report.bang_bang = false;
            break;
        }

    if (opts.mu_samples > 0 && report.first_zero_time.has_value() && *report.first_zero_time >= 1) {
        Rng rng(opts.seed);
        report.mu_lower_bound =
            estimate_mu(p.sys, p.set, p.weights, *report.first_zero_time, T, opts.mu_samples, rng);
        report.condition12_refuted = *report.mu_lower_bound >= 0.5;
    }
    return report;
}

}  // namespace mintime
