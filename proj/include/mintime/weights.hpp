#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mintime/admissible_set.hpp"
#include "mintime/common.hpp"
#include "mintime/lti.hpp"

namespace mintime {

/// Positive weights on the state norms. values[k] multiplies ||x(k+1)||.
struct WeightSchedule {
    enum class Provenance { Linear, Theorem1, Explicit };

    std::vector<double> values;
    Provenance provenance = Provenance::Explicit;
    /// Non-empty when construction noticed something worth reporting (e.g. a
    /// recursively built sequence that is not strictly increasing).
    std::string diagnostic;

    Eigen::Index horizon() const { return static_cast<Eigen::Index>(values.size()); }

    /// Weight on ||x(t)||, t in 1..horizon.
    double at(Eigen::Index t) const { return values.at(static_cast<std::size_t>(t - 1)); }

    bool strictly_increasing() const {
        for (std::size_t k = 0; k + 1 < values.size(); ++k)
            if (!(values[k + 1] > values[k])) return false;
        return true;
    }

    bool all_positive() const {
        for (double w : values)
            if (!(w > 0)) return false;
        return true;
    }
};

/// w(t) = a * t.
inline WeightSchedule linear_weights(double a, Eigen::Index T) {
    require(a > 0 && std::isfinite(a), "linear_weights: slope must be positive and finite");
    require(T >= 1, "linear_weights: horizon must be at least 1");
    WeightSchedule ws;
    ws.provenance = WeightSchedule::Provenance::Linear;
    ws.values.resize(static_cast<std::size_t>(T));
    for (Eigen::Index t = 1; t <= T; ++t) ws.values[static_cast<std::size_t>(t - 1)] = a * static_cast<double>(t);
    return ws;
}

inline WeightSchedule explicit_weights(std::vector<double> values) {
    require(!values.empty(), "explicit_weights: empty schedule");
    for (double w : values)
        require(w >= 0 && std::isfinite(w), "explicit_weights: entries must be finite and nonnegative");
    WeightSchedule ws;
    ws.provenance = WeightSchedule::Provenance::Explicit;
    ws.values = std::move(values);
    return ws;
}

constexpr double kWeightOverflowGuard = 1e300;

/// Recursive schedule that turns the sufficient-growth condition into an
/// assignment: w(1) = 1 and, for t >= 2,
///     w(t) = safety * (2 r / eta) * sum_{k<t} sqrt(k) ||Delta_k|| w(k),
/// with r the l2 bound on the control set. safety > 1 keeps the defining
/// inequality strict. Growth past 1e300 is a hard error naming the first
/// offending index; a non-increasing result (possible only when some
/// ||Delta_k|| vanishes) is reported through the diagnostic field.
inline WeightSchedule theorem1_weights(const LtiSystem& sys, const AdmissibleSet& set,
                                       double eta, double safety, Eigen::Index T) {
    require(eta > 0 && std::isfinite(eta), "theorem1_weights: eta must be positive and finite");
    require(safety > 1 && std::isfinite(safety), "theorem1_weights: safety must exceed 1");
    require(T >= 1, "theorem1_weights: horizon must be at least 1");
    require(set.n_u() == sys.n_u(), "theorem1_weights: control set dimension mismatch");

    WeightSchedule ws;
    ws.provenance = WeightSchedule::Provenance::Theorem1;
    ws.values.assign(static_cast<std::size_t>(T), 0.0);
    ws.values[0] = 1.0;

    const double gain = 2.0 * set.radius_bound() / eta;
    double weighted_sum = 0.0;  // sum_{k<t} sqrt(k) ||Delta_k|| w(k)
    for (Eigen::Index t = 2; t <= T; ++t) {
        const Eigen::Index k = t - 1;
        weighted_sum += std::sqrt(static_cast<double>(k)) * spectral_norm(build_delta(sys, k)) *
                        ws.values[static_cast<std::size_t>(k - 1)];
        const double w = safety * gain * weighted_sum;
        if (!(w <= kWeightOverflowGuard))
            throw WeightOverflowError(
                "theorem1_weights: recursion overflowed the 1e300 guard at t = " + std::to_string(t),
                static_cast<int>(t));
        ws.values[static_cast<std::size_t>(t - 1)] = w;
    }
    if (!ws.strictly_increasing())
        ws.diagnostic = "theorem1_weights: constructed sequence is not strictly increasing";
    return ws;
}

/// Divide by the largest weight; ordering and ratios are preserved.
inline WeightSchedule normalize(const WeightSchedule& ws) {
    require(!ws.values.empty(), "normalize: empty schedule");
    double max_w = 0.0;
    for (double w : ws.values) max_w = std::max(max_w, w);
    require(max_w > 0, "normalize: all weights are zero");
    WeightSchedule out = ws;
    for (double& w : out.values) w /= max_w;
    return out;
}

}  // namespace mintime
