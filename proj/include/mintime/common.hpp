#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace mintime {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Thrown when an argument violates a precondition (bad dimension, non-finite
/// entry, out-of-range parameter).
class InvalidInputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown when a computation cannot continue for numerical reasons.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Weight recursion exceeded the overflow guard. Carries the first offending
/// time index.
class WeightOverflowError : public NumericalError {
public:
    WeightOverflowError(const std::string& msg, int index)
        : NumericalError(msg), index_(index) {}
    int index() const { return index_; }

private:
    int index_;
};

/// Every Monte-Carlo draw was degenerate (zero denominator).
class DegenerateSamplingError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw InvalidInputError(message);
}

inline void require_finite(const Matrix& m, const std::string& name) {
    if (!m.allFinite()) throw InvalidInputError(name + " contains non-finite entries");
}

}  // namespace mintime
