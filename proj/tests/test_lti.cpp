#include <catch2/catch_amalgamated.hpp>

#include <mintime/demo_fixtures.hpp>
#include <mintime/lti.hpp>
#include <mintime/rng.hpp>

using namespace mintime;

namespace {

LtiSystem random_system(Rng& rng, int n, int m) {
    Matrix a(n, n), b(n, m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = rng.uniform(-1, 1);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) b(i, j) = rng.uniform(-1, 1);
    return {a, b};
}

Vector random_vector(Rng& rng, int n) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = rng.uniform(-1, 1);
    return v;
}

// Largest singular value by power iteration on M^T M; independent of the
// SVD used by the implementation.
double power_iteration_norm(const Matrix& m) {
    const Matrix gram = m.transpose() * m;
    Vector v = Vector::Ones(gram.rows()).normalized();
    for (int k = 0; k < 500; ++k) v = (gram * v).normalized();
    return std::sqrt(v.dot(gram * v));
}

}  // namespace

TEST_CASE("simulate follows the recursion") {
    const LtiSystem sys = demo::double_integrator();

    SECTION("one step of the demo plant") {
        Vector x0 = Vector::Zero(2);
        Matrix u(1, 1);
        u << 1.0;
        const Matrix x = simulate(sys, x0, u);
        REQUIRE(x.col(1)(0) == 0.0);
        REQUIRE(x.col(1)(1) == 1.0);
    }

    SECTION("zero input gives the free response") {
        Rng rng(7);
        const LtiSystem s = random_system(rng, 3, 2);
        const Vector x0 = random_vector(rng, 3);
        const Matrix x = simulate(s, x0, Matrix::Zero(2, 5));
        Vector expected = x0;
        for (int t = 1; t <= 5; ++t) {
            expected = s.A * expected;
            REQUIRE((x.col(t) - expected).norm() < 1e-14);
        }
    }

    SECTION("dimension mismatch") {
        REQUIRE_THROWS_AS(simulate(sys, Vector::Zero(3), Matrix::Zero(1, 2)), InvalidInputError);
        REQUIRE_THROWS_AS(simulate(sys, Vector::Zero(2), Matrix::Zero(2, 2)), InvalidInputError);
    }
}

TEST_CASE("build_delta blocks") {
    const LtiSystem sys = demo::double_integrator();

    SECTION("t = 1 is B") {
        REQUIRE(build_delta(sys, 1) == sys.B);
    }

    SECTION("double integrator t = 2") {
        Matrix expected(2, 2);
        expected << 1, 0, 1, 1;  // [AB  B]
        REQUIRE((build_delta(sys, 2) - expected).norm() == 0.0);
    }

    SECTION("shape") {
        Rng rng(3);
        const LtiSystem s = random_system(rng, 3, 2);
        const Matrix d = build_delta(s, 5);
        REQUIRE(d.rows() == 3);
        REQUIRE(d.cols() == 10);
    }

    SECTION("recursion: delta_{t+1} = [A delta_t, B]") {
        Rng rng(11);
        const LtiSystem s = random_system(rng, 4, 2);
        for (int t = 1; t < 6; ++t) {
            const Matrix d = build_delta(s, t);
            const Matrix d_next = build_delta(s, t + 1);
            Matrix expected(4, d.cols() + 2);
            expected << s.A * d, s.B;
            REQUIRE((d_next - expected).norm() < 1e-13 * (1 + expected.norm()));
        }
    }

    SECTION("t = 0 rejected") {
        REQUIRE_THROWS_AS(build_delta(sys, 0), InvalidInputError);
    }
}

TEST_CASE("condensed state equals recursive simulation") {
    SECTION("zero input") {
        Rng rng(5);
        const LtiSystem s = random_system(rng, 3, 1);
        const Vector x0 = random_vector(rng, 3);
        Matrix u = Matrix::Zero(1, 4);
        const Vector via_condensed = condensed_state(s, x0, StackedInput::from_matrix(u));
        REQUIRE((via_condensed - simulate(s, x0, u).col(4)).norm() < 1e-13);
    }

    SECTION("one step of the demo plant") {
        const LtiSystem sys = demo::double_integrator();
        Vector x0 = Vector::Zero(2);
        Matrix u(1, 1);
        u << 1.0;
        const Vector x1 = condensed_state(sys, x0, StackedInput::from_matrix(u));
        REQUIRE(x1(0) == 0.0);
        REQUIRE(x1(1) == 1.0);
    }

    SECTION("random instance cross-check") {
        Rng rng(13);
        const LtiSystem s = random_system(rng, 3, 2);
        const Vector x0 = random_vector(rng, 3);
        Matrix u(2, 6);
        for (int t = 0; t < 6; ++t) u.col(t) = random_vector(rng, 2);
        const Matrix x = simulate(s, x0, u);
        for (int t = 1; t <= 6; ++t) {
            const StackedInput prefix = StackedInput::from_matrix(u.leftCols(t));
            REQUIRE((condensed_state(s, x0, prefix) - x.col(t)).norm() < 1e-12);
        }
    }

    SECTION("200 random systems, all horizons") {
        Rng rng(2024);
        for (int i = 0; i < 200; ++i) {
            const int n = 1 + static_cast<int>(rng.uniform01() * 4);
            const int m = 1 + static_cast<int>(rng.uniform01() * 2);
            const LtiSystem s = random_system(rng, n, m);
            const Vector x0 = random_vector(rng, n);
            Matrix u(m, 10);
            for (int t = 0; t < 10; ++t) u.col(t) = random_vector(rng, m);
            const Matrix x = simulate(s, x0, u);
            const double tol = 1e-10 * (1.0 + x0.norm());
            for (int t = 1; t <= 10; ++t) {
                const StackedInput prefix = StackedInput::from_matrix(u.leftCols(t));
                REQUIRE((condensed_state(s, x0, prefix) - x.col(t)).norm() <= tol);
            }
        }
    }
}

TEST_CASE("spectral norm") {
    SECTION("identity") {
        for (int n : {1, 3, 7}) REQUIRE(spectral_norm(Matrix::Identity(n, n)) == Catch::Approx(1.0));
    }

    SECTION("single column equals its euclidean norm") {
        Matrix m(2, 1);
        m << 0, 1;
        REQUIRE(spectral_norm(m) == Catch::Approx(1.0));
    }

    SECTION("matches an independent power iteration on the demo blocks") {
        const LtiSystem sys = demo::double_integrator();
        const Matrix d3 = build_delta(sys, 3);
        REQUIRE(spectral_norm(d3) ==
                Catch::Approx(power_iteration_norm(d3)).epsilon(1e-10));
        const LtiSystem mi = demo::multi_input_plant();
        const Matrix d5 = build_delta(mi, 5);
        REQUIRE(spectral_norm(d5) ==
                Catch::Approx(power_iteration_norm(d5)).epsilon(1e-10));
    }

    SECTION("dominates every Rayleigh quotient") {
        Rng rng(99);
        const LtiSystem s = random_system(rng, 4, 3);
        const Matrix d = build_delta(s, 4);
        const double norm = spectral_norm(d);
        for (int k = 0; k < 20; ++k) {
            const Vector v = random_vector(rng, static_cast<int>(d.cols()));
            if (v.norm() == 0) continue;
            REQUIRE(norm >= (d * v).norm() / v.norm() - 1e-9);
        }
    }
}

TEST_CASE("rank_b_full") {
    SECTION("nonzero column") {
        Matrix a = Matrix::Identity(2, 2), b(2, 1);
        b << 0, 1;
        REQUIRE(rank_b_full(LtiSystem{a, b}));
    }

    SECTION("zero matrix") {
        REQUIRE_FALSE(rank_b_full(LtiSystem{Matrix::Identity(2, 2), Matrix::Zero(2, 1)}));
    }

    SECTION("demo plant has independent input columns") {
        REQUIRE(rank_b_full(demo::multi_input_plant()));
    }

    SECTION("duplicated column is rank deficient") {
        Matrix a = Matrix::Identity(3, 3), b(3, 2);
        b << 1, 1, 0, 0, 2, 2;
        REQUIRE_FALSE(rank_b_full(LtiSystem{a, b}));
    }

    SECTION("tolerance must be positive") {
        REQUIRE_THROWS_AS(rank_b_full(demo::double_integrator(), 0.0), InvalidInputError);
    }
}

TEST_CASE("system construction validates shapes") {
    REQUIRE_THROWS_AS(LtiSystem(Matrix::Zero(2, 3), Matrix::Zero(2, 1)), InvalidInputError);
    REQUIRE_THROWS_AS(LtiSystem(Matrix::Zero(2, 2), Matrix::Zero(3, 1)), InvalidInputError);
    Matrix bad = Matrix::Zero(2, 2);
    bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(LtiSystem(bad, Matrix::Zero(2, 1)), InvalidInputError);
}

TEST_CASE("demo plant transcription is frozen") {
    const LtiSystem mi = demo::multi_input_plant();
    REQUIRE(demo::matrix_checksum(mi.A, mi.B) == demo::kMultiInputChecksum);
}
