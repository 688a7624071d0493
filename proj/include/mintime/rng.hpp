#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace mintime {

/// Deterministic random source. All distributions are derived from the raw
/// mt19937_64 stream with fixed arithmetic, so a given seed reproduces the
/// same sequence regardless of the standard library's distribution
/// implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1).
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via Box-Muller (two draws per call, no cached spare).
    double gaussian() {
        // First draw shifted into (0, 1] so the log is finite.
        const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace mintime
