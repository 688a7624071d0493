#pragma once

#include <string>

#include "mintime/common.hpp"

namespace mintime {

/// Discrete-time LTI plant x(t+1) = A x(t) + B u(t).
struct LtiSystem {
    Matrix A;  ///< n x n state matrix
    Matrix B;  ///< n x n_u input matrix

    LtiSystem(Matrix A_in, Matrix B_in) : A(std::move(A_in)), B(std::move(B_in)) {
        require(A.rows() >= 1, "state dimension must be at least 1");
        require(A.rows() == A.cols(), "A must be square");
        require(B.cols() >= 1, "input dimension must be at least 1");
        require(B.rows() == A.rows(), "B must have as many rows as A");
        require_finite(A, "A");
        require_finite(B, "B");
    }

    Eigen::Index n() const { return A.rows(); }
    Eigen::Index n_u() const { return B.cols(); }
};

/// Input sequence u(0..t-1) stacked into a single column, u(0) first.
struct StackedInput {
    Vector values;          ///< length steps * n_u
    Eigen::Index n_u = 0;

    StackedInput() = default;
    StackedInput(Vector v, Eigen::Index inputs) : values(std::move(v)), n_u(inputs) {
        require(n_u >= 1, "StackedInput: input dimension must be at least 1");
        require(values.size() % n_u == 0,
                "StackedInput: length must be a multiple of the input dimension");
    }

    Eigen::Index steps() const { return n_u == 0 ? 0 : values.size() / n_u; }

    /// u(k) as a vector.
    Vector input(Eigen::Index k) const { return values.segment(k * n_u, n_u); }

    /// Columns are u(0), u(1), ...
    Matrix as_matrix() const {
        Matrix m(n_u, steps());
        for (Eigen::Index k = 0; k < steps(); ++k) m.col(k) = input(k);
        return m;
    }

    /// Stack the columns of an n_u x t matrix.
    static StackedInput from_matrix(const Matrix& u) {
        Vector v(u.size());
        for (Eigen::Index k = 0; k < u.cols(); ++k) v.segment(k * u.rows(), u.rows()) = u.col(k);
        return StackedInput(std::move(v), u.rows());
    }
};

/// Roll the dynamics forward. Columns of the result are x(0), ..., x(T) with
/// x(0) = x0 and T = u.cols().
inline Matrix simulate(const LtiSystem& sys, const Vector& x0, const Matrix& u) {
    require(x0.size() == sys.n(), "simulate: x0 has wrong dimension");
    require(u.rows() == sys.n_u() || u.size() == 0, "simulate: u has wrong input dimension");
    const Eigen::Index T = u.cols();
    Matrix x(sys.n(), T + 1);
    x.col(0) = x0;
    for (Eigen::Index t = 0; t < T; ++t) x.col(t + 1) = sys.A * x.col(t) + sys.B * u.col(t);
    return x;
}

/// Input-to-state map over t steps: the block matrix
/// [A^{t-1}B ... AB B], shaped n x (t*n_u). Block k from the left multiplies
/// u(k) in the stacked ordering, so x(t) = A^t x0 + delta * stacked(u).
inline Matrix build_delta(const LtiSystem& sys, Eigen::Index t) {
    require(t >= 1, "build_delta: horizon must be at least 1");
    const Eigen::Index n = sys.n();
    const Eigen::Index m = sys.n_u();
    Matrix delta(n, t * m);
    delta.rightCols(m) = sys.B;
    // Fill right-to-left; each block is A times the block to its right.
    for (Eigen::Index k = t - 2; k >= 0; --k)
        delta.middleCols(k * m, m) = sys.A * delta.middleCols((k + 1) * m, m);
    return delta;
}

/// Condensed state evaluation x(t) = A^t x0 + Delta_t u. The matrix power is
/// accumulated by repeated multiplication.
inline Vector condensed_state(const LtiSystem& sys, const Vector& x0, const StackedInput& u) {
    require(x0.size() == sys.n(), "condensed_state: x0 has wrong dimension");
    require(u.n_u == sys.n_u(), "condensed_state: input dimension mismatch");
    const Eigen::Index t = u.steps();
    if (t == 0) return x0;
    Vector free_response = x0;
    for (Eigen::Index k = 0; k < t; ++k) free_response = sys.A * free_response;
    return free_response + build_delta(sys, t) * u.values;
}

/// Largest singular value.
inline double spectral_norm(const Matrix& m) {
    require_finite(m, "spectral_norm argument");
    if (m.size() == 0) return 0.0;
    return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

/// True when B has full column rank, counting singular values above tol.
inline bool rank_b_full(const LtiSystem& sys, double tol) {
    require(tol > 0, "rank_b_full: tolerance must be positive");
    Eigen::JacobiSVD<Matrix> svd(sys.B);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > tol) ++rank;
    return rank == sys.n_u();
}

/// Default tolerance: 1e-10 relative to the norm of B. A zero B never passes.
inline bool rank_b_full(const LtiSystem& sys) {
    const double scale = spectral_norm(sys.B);
    if (scale == 0.0) return false;
    return rank_b_full(sys, 1e-10 * scale);
}

}  // namespace mintime
