#include <catch2/catch_amalgamated.hpp>

#include <mintime/demo_fixtures.hpp>
#include <mintime/pipeline.hpp>

using namespace mintime;

namespace {

// Exhaustive lower bound on the feasibility distance for scalar box inputs
// (grid step 0.01); exact at grid points, used to pin the hand-derived values.
double brute_distance(const LtiSystem& sys, const Vector& x0, Eigen::Index t) {
    std::vector<int> idx(static_cast<std::size_t>(t), 0);
    double best = std::numeric_limits<double>::infinity();
    Matrix u(1, t);
    while (true) {
        for (Eigen::Index k = 0; k < t; ++k) u(0, k) = -1.0 + 0.01 * idx[static_cast<std::size_t>(k)];
        best = std::min(best, simulate(sys, x0, u).col(t).norm());
        Eigen::Index carry = 0;
        while (carry < t && ++idx[static_cast<std::size_t>(carry)] > 200) {
            idx[static_cast<std::size_t>(carry)] = 0;
            ++carry;
        }
        if (carry == t) break;
    }
    return best;
}

}  // namespace

TEST_CASE("feasibility distance on the double integrator") {
    const LtiSystem sys = demo::double_integrator();
    const AdmissibleSet box = demo::unit_interval();
    Vector x0(2);
    x0 << 0, 1;

    SECTION("hand-derived horizon distances") {
        // x(1) = [1, 1+u]; x(2) = [2+u0, 1+u0+u1]; both floor at distance 1.
        REQUIRE(feasibility_distance(sys, box, x0, 1).distance == Catch::Approx(1.0).margin(1e-6));
        REQUIRE(feasibility_distance(sys, box, x0, 2).distance == Catch::Approx(1.0).margin(1e-6));
        const FeasibilityResult fd3 = feasibility_distance(sys, box, x0, 3);
        REQUIRE(fd3.distance <= 1e-6 * (1.0 + x0.norm()));
        const Matrix w = fd3.witness.as_matrix();
        REQUIRE(w(0, 0) == Catch::Approx(-1.0).margin(1e-5));
        REQUIRE(w(0, 1) == Catch::Approx(-1.0).margin(1e-5));
        REQUIRE(w(0, 2) == Catch::Approx(1.0).margin(1e-5));
    }

    SECTION("grid cross-check") {
        REQUIRE(brute_distance(sys, x0, 1) == Catch::Approx(1.0).epsilon(1e-12));
        REQUIRE(brute_distance(sys, x0, 2) == Catch::Approx(1.0).epsilon(1e-12));
        REQUIRE(brute_distance(sys, x0, 3) == 0.0);
    }

    SECTION("zero start has zero distance with a zero witness") {
        const FeasibilityResult fd = feasibility_distance(sys, box, Vector::Zero(2), 4);
        REQUIRE(fd.distance <= 1e-12);
        REQUIRE(fd.witness.as_matrix().norm() <= 1e-9);
    }

    SECTION("a huge ball reduces to the range condition") {
        // im([B]) misses A x0, so one step stays infeasible even with radius 1e6;
        // two steps span the state space.
        const AdmissibleSet big = AdmissibleSet::ball2(1, 1e6);
        REQUIRE(feasibility_distance(sys, big, x0, 1).distance == Catch::Approx(1.0).margin(1e-5));
        REQUIRE(feasibility_distance(sys, big, x0, 2).distance <= 1e-6 * (1.0 + x0.norm()));
    }

    SECTION("candidate witness can only improve the bound") {
        Matrix cand(1, 3);
        cand << -1, -1, 1;
        const FeasibilityResult fd = feasibility_distance(sys, box, x0, 3, SolverConfig{}, &cand);
        REQUIRE(fd.distance == 0.0);  // the candidate is exact
    }

    SECTION("horizon must be positive") {
        REQUIRE_THROWS_AS(feasibility_distance(sys, box, x0, 0), InvalidInputError);
    }
}

TEST_CASE("oracle scan") {
    const LtiSystem sys = demo::double_integrator();
    const AdmissibleSet box = demo::unit_interval();

    SECTION("zero start") {
        const OracleResult r = oracle_scan(sys, box, Vector::Zero(2), 5);
        REQUIRE(r.t_star == 0);
        REQUIRE(r.distances.empty());
    }

    SECTION("anchor instance needs three steps") {
        Vector x0(2);
        x0 << 0, 1;
        const OracleResult r = oracle_scan(sys, box, x0, 10);
        REQUIRE(r.t_star == 3);
        REQUIRE(r.distances.size() == 3);
        REQUIRE(r.distances[0].second == Catch::Approx(1.0).margin(1e-6));
        REQUIRE(r.distances[1].second == Catch::Approx(1.0).margin(1e-6));
        REQUIRE(r.distances[2].second <= r.feas_tol);
    }

    SECTION("mirrored start has the mirrored witness") {
        Vector x0(2);
        x0 << 0, -1;
        const OracleResult r = oracle_scan(sys, box, x0, 10);
        REQUIRE(r.t_star == 3);
        const Matrix w = r.witness.as_matrix();
        REQUIRE(w(0, 0) == Catch::Approx(1.0).margin(1e-5));
        REQUIRE(w(0, 1) == Catch::Approx(1.0).margin(1e-5));
        REQUIRE(w(0, 2) == Catch::Approx(-1.0).margin(1e-5));
    }

    SECTION("unreachable within a short scan") {
        Vector x0(2);
        x0 << 0, 1;
        const OracleResult r = oracle_scan(sys, box, x0, 1);
        REQUIRE_FALSE(r.t_star.has_value());
        REQUIRE(r.distances.size() == 1);
    }

    SECTION("bisection agrees with the ascending scan here") {
        Vector x0(2);
        x0 << 0, 1;
        const OracleResult lin = oracle_scan(sys, box, x0, 10);
        const OracleResult bis = oracle_scan(sys, box, x0, 10, 0.0, SolverConfig{}, true);
        REQUIRE(bis.t_star == lin.t_star);
    }

    SECTION("distances are per-horizon minima and may rise before the minimum time") {
        // Hand check: from [0,3], d(1) = sqrt(13) < d(2) = sqrt(26) < d(3) = 6.
        // The first horizons get strictly harder because the drift outruns a
        // single bounded input; only near the end does the distance collapse.
        Vector x0(2);
        x0 << 0, 3;
        const OracleResult r = oracle_scan(sys, box, x0, 10);
        REQUIRE(r.t_star == 8);
        REQUIRE(r.distances[0].second == Catch::Approx(std::sqrt(13.0)).margin(1e-5));
        REQUIRE(r.distances[1].second == Catch::Approx(std::sqrt(26.0)).margin(1e-5));
        REQUIRE(r.distances[2].second == Catch::Approx(6.0).margin(1e-5));
        REQUIRE(r.distances[1].second > r.distances[0].second);
    }
}

TEST_CASE("first-zero detection") {
    SECTION("all-zero sequence starts at zero") {
        REQUIRE(detect_first_zero(Matrix::Zero(2, 5), 1e-6) == 0);
    }

    SECTION("nonzero final state means none") {
        Matrix x = Matrix::Zero(2, 4);
        x(0, 3) = 1.0;
        REQUIRE_FALSE(detect_first_zero(x, 1e-6).has_value());
    }

    SECTION("first index of the trailing run") {
        Matrix x(1, 5);
        x << 5, 2, 1e-9, 1e-10, 1e-9;
        REQUIRE(detect_first_zero(x, 1e-6) == 2);
    }

    SECTION("tolerance must be positive") {
        REQUIRE_THROWS_AS(detect_first_zero(Matrix::Zero(1, 2), 0.0), InvalidInputError);
    }
}

TEST_CASE("Monte-Carlo exactness refuter") {
    const LtiSystem sys = demo::double_integrator();
    const AdmissibleSet box = demo::unit_interval();
    const WeightSchedule ws = linear_weights(1.0, 10);

    SECTION("full-range ratio is exactly one") {
        Rng rng(1);
        REQUIRE(estimate_mu(sys, box, ws, 10, 10, 100, rng) == 1.0);
    }

    SECTION("every ratio is a partial sum fraction") {
        Rng rng(2);
        const double mu = estimate_mu(sys, box, explicit_weights({1, 1, 1, 1, 1}), 3, 5, 500, rng);
        REQUIRE(mu > 0.0);
        REQUIRE(mu <= 1.0 + 1e-12);
    }

    SECTION("frozen regression value") {
        Rng rng(12345);
        const double mu = estimate_mu(sys, box, ws, 2, 10, 10000, rng);
        REQUIRE(mu == 0.1091489964024881);
    }

    SECTION("reproducible and monotone in the sample count") {
        Rng a(7), b(7);
        REQUIRE(estimate_mu(sys, box, ws, 2, 10, 500, a) ==
                estimate_mu(sys, box, ws, 2, 10, 500, b));
        double prev = 0.0;
        for (Eigen::Index n : {10, 100, 1000}) {
            Rng rng(7);
            const double mu = estimate_mu(sys, box, ws, 2, 10, n, rng);
            REQUIRE(mu >= prev);
            prev = mu;
        }
    }

    SECTION("all-degenerate sampling is an explicit error") {
        const LtiSystem dead{Matrix::Identity(2, 2), Matrix::Zero(2, 1)};
        Rng rng(3);
        REQUIRE_THROWS_AS(
            estimate_mu(dead, AdmissibleSet::ball2(1, 1.0), ws, 2, 10, 50, rng),
            DegenerateSamplingError);
    }

    SECTION("index bounds") {
        Rng rng(4);
        REQUIRE_THROWS_AS(estimate_mu(sys, box, ws, 0, 10, 10, rng), InvalidInputError);
        REQUIRE_THROWS_AS(estimate_mu(sys, box, ws, 11, 10, 10, rng), InvalidInputError);
    }
}

TEST_CASE("pipeline end to end") {
    const LtiSystem sys = demo::double_integrator();
    const AdmissibleSet box = demo::unit_interval();

    SECTION("zero start certifies immediately") {
        RelaxationProblem p{sys, Vector::Zero(2), box, linear_weights(1.0, 6)};
        const PipelineReport r = run_pipeline(p);
        REQUIRE(r.first_zero_time == 0);
        REQUIRE(r.certified);
        REQUIRE(r.oracle.t_star == 0);
    }

    SECTION("anchor instance certifies at three") {
        Vector x0(2);
        x0 << 0, 1;
        RelaxationProblem p{sys, x0, box, linear_weights(1.0, 10)};
        const PipelineReport r = run_pipeline(p);
        REQUIRE(r.first_zero_time == 3);
        REQUIRE(r.certified);
        REQUIRE(r.oracle.t_star == 3);
        REQUIRE(r.uniqueness_hint);
        // (-1, -1, 1) saturates the box at every step before the zero tail
        REQUIRE(r.bang_bang);

        SECTION("certification re-checked at tighter tolerance") {
            SolverConfig tight;
            tight.eps_abs = 1e-11;
            tight.eps_rel = 1e-9;
            REQUIRE(feasibility_distance(sys, box, x0, 3, tight).distance <= r.feas_tol);
            REQUIRE(feasibility_distance(sys, box, x0, 2, tight).distance > r.feas_tol);
        }
    }

    SECTION("multi-input demo, frozen first-zero time") {
        Vector x0(3);
        x0 << 10, -10, 5;
        RelaxationProblem p{demo::multi_input_plant(), x0, demo::unit_ball2(),
                            linear_weights(1.0, 10)};
        const PipelineReport r = run_pipeline(p);
        REQUIRE(r.first_zero_time == 5);
        REQUIRE(r.certified);
        REQUIRE(r.oracle.t_star == 5);
        REQUIRE(r.uniqueness_hint);
        // controls shrink as the state approaches zero
        REQUIRE_FALSE(r.bang_bang);
    }

    SECTION("mu refuter is attached on request") {
        Vector x0(2);
        x0 << 0, 1;
        RelaxationProblem p{sys, x0, box, linear_weights(1.0, 10)};
        PipelineOptions opts;
        opts.mu_samples = 200;
        opts.seed = 9;
        const PipelineReport r = run_pipeline(p, SolverConfig{}, opts);
        REQUIRE(r.mu_lower_bound.has_value());
        REQUIRE(*r.mu_lower_bound > 0.0);
        REQUIRE(r.condition12_refuted.has_value());
        REQUIRE(*r.condition12_refuted == (*r.mu_lower_bound >= 0.5));
    }

    SECTION("no zero tail within the horizon: uncertified, oracle still reported") {
        // From [0,3] the minimum time is 8, so a 5-step run cannot finish.
        Vector x0(2);
        x0 << 0, 3;
        RelaxationProblem p{sys, x0, box, linear_weights(1.0, 5)};
        const PipelineReport r = run_pipeline(p);
        REQUIRE_FALSE(r.first_zero_time.has_value());
        REQUIRE_FALSE(r.certified);
        REQUIRE_FALSE(r.oracle.t_star.has_value());
        REQUIRE(r.oracle.distances.size() == 5);
    }

    SECTION("never beats the oracle on a handful of random instances") {
        Rng rng(77);
        for (int i = 0; i < 10; ++i) {
            Matrix a(2, 2), b(2, 1);
            for (int r = 0; r < 2; ++r)
                for (int c = 0; c < 2; ++c) a(r, c) = rng.uniform(-1, 1);
            b << rng.uniform(-1, 1), rng.uniform(-1, 1);
            Vector x0(2);
            x0 << rng.uniform(-1, 1), rng.uniform(-1, 1);
            const LtiSystem s{a, b};
            const AdmissibleSet ball = AdmissibleSet::ball2(1, 1.0);
            const OracleResult oracle = oracle_scan(s, ball, x0, 8);
            if (!oracle.t_star.has_value()) continue;
            RelaxationProblem p{s, x0, ball, linear_weights(1.0, 8)};
            const auto t1 = detect_first_zero(solve_relaxation(p).x, default_state_tol(x0));
            if (t1.has_value()) REQUIRE(*t1 >= *oracle.t_star);
        }
    }
}
