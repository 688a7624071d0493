#pragma once

#include <algorithm>
#include <cmath>

#include "mintime/common.hpp"
#include "mintime/rng.hpp"

namespace mintime {

/// Admissible control set U: either a Euclidean ball of radius r or an
/// axis-aligned box with per-coordinate radii. Both contain the origin by
/// construction.
class AdmissibleSet {
public:
    enum class Kind { Ball2, BallInf };

    static AdmissibleSet ball2(Eigen::Index n_u, double r) {
        require(n_u >= 1, "ball2: input dimension must be at least 1");
        require(r > 0 && std::isfinite(r), "ball2: radius must be positive and finite");
        AdmissibleSet s;
        s.kind_ = Kind::Ball2;
        s.n_u_ = n_u;
        s.r_ = r;
        return s;
    }

    static AdmissibleSet ball_inf(Vector radii) {
        require(radii.size() >= 1, "ball_inf: input dimension must be at least 1");
        require((radii.array() > 0).all() && radii.allFinite(),
                "ball_inf: all radii must be positive and finite");
        AdmissibleSet s;
        s.kind_ = Kind::BallInf;
        s.n_u_ = radii.size();
        s.radii_ = std::move(radii);
        return s;
    }

    Kind kind() const { return kind_; }
    Eigen::Index n_u() const { return n_u_; }
    double r() const { return r_; }
    const Vector& radii() const { return radii_; }

    /// Euclidean projection onto the set. The result is a fixed point of this
    /// function, including in floating point: the ball branch rescales until
    /// the computed norm no longer exceeds r.
    Vector project(const Vector& v) const {
        require(v.size() == n_u_, "project: dimension mismatch");
        if (kind_ == Kind::BallInf)
            return v.cwiseMax(-radii_).cwiseMin(radii_);
        Vector u = v;
        for (int pass = 0; pass < 100; ++pass) {
            const double norm = u.norm();
            if (!(norm > r_)) return u;
            const double scale = r_ / norm;
            if (!(scale < 1.0)) return u;  // cannot shrink further in doubles
            u *= scale;
        }
        return u;
    }

    /// Tight bound on ||u||_2 over the set.
    double radius_bound() const {
        return kind_ == Kind::Ball2 ? r_ : radii_.norm();
    }

    /// Minkowski difference of the set from itself, {a - b : a, b in U}.
    AdmissibleSet self_difference() const {
        if (kind_ == Kind::Ball2) return ball2(n_u_, 2.0 * r_);
        return ball_inf(2.0 * radii_);
    }

    /// Uniform draw. Ball: uniform direction on the sphere, radius
    /// r * U^{1/n_u}. Box: independent uniform coordinates.
    Vector sample_uniform(Rng& rng) const {
        Vector u(n_u_);
        if (kind_ == Kind::BallInf) {
            for (Eigen::Index i = 0; i < n_u_; ++i)
                u(i) = rng.uniform(-radii_(i), radii_(i));
            return u;
        }
        for (Eigen::Index i = 0; i < n_u_; ++i) u(i) = rng.gaussian();
        const double norm = u.norm();
        if (norm == 0.0) return Vector::Zero(n_u_);
        const double radius = r_ * std::pow(rng.uniform01(), 1.0 / static_cast<double>(n_u_));
        u *= radius / norm;
        return project(u);
    }

    /// Whether v lies within tol of the boundary. Ball: | ||v|| - r | <= tol.
    /// Box: every coordinate within tol of one of its bounds.
    bool on_boundary(const Vector& v, double tol) const {
        require(v.size() == n_u_, "on_boundary: dimension mismatch");
        if (kind_ == Kind::Ball2) return std::abs(v.norm() - r_) <= tol;
        for (Eigen::Index i = 0; i < n_u_; ++i)
            if (std::abs(std::abs(v(i)) - radii_(i)) > tol) return false;
        return true;
    }

    /// The set scaled by a positive factor.
    AdmissibleSet scaled(double factor) const {
        require(factor > 0 && std::isfinite(factor), "scaled: factor must be positive");
        if (kind_ == Kind::Ball2) return ball2(n_u_, factor * r_);
        return ball_inf(factor * radii_);
    }

private:
    AdmissibleSet() = default;

    Kind kind_ = Kind::Ball2;
    Eigen::Index n_u_ = 0;
    double r_ = 0.0;
    Vector radii_;
};

}  // namespace mintime
