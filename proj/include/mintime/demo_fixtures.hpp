#pragma once

#include <cstdint>
#include <cstdio>
#include <vector>

#include "mintime/admissible_set.hpp"
#include "mintime/lti.hpp"

namespace mintime::demo {

/// Position/velocity chain with unit sampling time.
inline LtiSystem double_integrator(double sampling = 1.0) {
    Matrix a(2, 2), b(2, 1);
    a << 1.0, sampling, 0.0, 1.0;
    b << 0.0, sampling;
    return {a, b};
}

/// Scalar box |u| <= 1 used by the double-integrator demo.
inline AdmissibleSet unit_interval() {
    return AdmissibleSet::ball_inf(Vector::Ones(1));
}

/// Initial states for the double-integrator demo; every entry is reachable
/// within 10 steps under |u| <= 1.
inline std::vector<Vector> double_integrator_grid() {
    std::vector<Vector> grid;
    const double entries[][2] = {{0, 1},  {0, -1}, {1, 0},  {-1, 0},
                                 {1, 1},  {-1, -1}, {2, -1}, {-3, 1}};
    for (const auto& e : entries) {
        Vector x0(2);
        x0 << e[0], e[1];
        grid.push_back(x0);
    }
    return grid;
}

/// Three-state, two-input plant used by the multi-input demo. The matrix
/// entries are frozen; transcription_checksum guards against accidental
/// edits.
inline LtiSystem multi_input_plant() {
    Matrix a(3, 3), b(3, 2);
    a << -0.093, 0.25, 0.500,
         -0.540, -0.255, 0.160,
         -0.072, 0.525, -0.445;
    b << 0.580, -0.360,
         0.0, 0.0,
         0.0, 2.230;
    return {a, b};
}

inline AdmissibleSet unit_ball2() { return AdmissibleSet::ball2(2, 1.0); }

/// Initial states for the multi-input demo. The second one typically needs a
/// horizon beyond 10; the demo extends the horizon until the oracle certifies
/// reachability.
inline std::vector<Vector> multi_input_initial_states() {
    std::vector<Vector> states;
    Vector a(3), b(3);
    a << 10.0, -10.0, 5.0;
    b << 50.0, -50.0, -50.0;
    states.push_back(a);
    states.push_back(b);
    return states;
}

/// FNV-1a over the row-major entries printed at 17 significant digits.
inline std::uint64_t matrix_checksum(const Matrix& a, const Matrix& b) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const Matrix& m) {
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                char buf[32];
                const int len = std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
                for (int k = 0; k < len; ++k) {
                    h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[k]));
                    h *= 1099511628211ull;
                }
            }
    };
    mix(a);
    mix(b);
    return h;
}

/// Frozen checksum of the multi-input plant's (A, B).
inline constexpr std::uint64_t kMultiInputChecksum = 14391033880488456616ull;

}  // namespace mintime::demo
