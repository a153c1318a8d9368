#pragma once

#include <cmath>
#include <stdexcept>

namespace slam2d {

/// Planar point or vector, in meters.
struct Point2 {
    double x = 0.0;
    double y = 0.0;

    Point2() = default;
    Point2(double px, double py) : x(px), y(py) {}

    Point2 operator+(const Point2& o) const { return {x + o.x, y + o.y}; }
    Point2 operator-(const Point2& o) const { return {x - o.x, y - o.y}; }
    Point2 operator*(double s) const { return {x * s, y * s}; }
    Point2 operator-() const { return {-x, -y}; }

    double dot(const Point2& o) const { return x * o.x + y * o.y; }
    double cross(const Point2& o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
    double squared_norm() const { return x * x + y * y; }
    /// Counter-clockwise perpendicular.
    Point2 perp() const { return {-y, x}; }
};

inline Point2 operator*(double s, const Point2& p) { return p * s; }

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double a) {
    if (!std::isfinite(a)) {
        throw std::invalid_argument("normalize_angle: non-finite angle");
    }
    double r = std::remainder(a, 2.0 * M_PI);
    if (r <= -M_PI) {
        r += 2.0 * M_PI;
    }
    return r;
}

/// SE(2) rigid motion (x, y, theta). theta is kept in (-pi, pi].
struct Pose2 {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;

    Pose2() = default;
    Pose2(double px, double py, double ptheta) : x(px), y(py) {
        if (!std::isfinite(px) || !std::isfinite(py)) {
            throw std::invalid_argument("Pose2: non-finite translation");
        }
        theta = normalize_angle(ptheta);
    }

    Point2 translation() const { return {x, y}; }
};

/// a then b: translation = a.t + R(a.theta) * b.t, angle sum normalized.
inline Pose2 compose(const Pose2& a, const Pose2& b) {
    const double c = std::cos(a.theta);
    const double s = std::sin(a.theta);
    return Pose2(a.x + c * b.x - s * b.y,
                 a.y + s * b.x + c * b.y,
                 a.theta + b.theta);
}

inline Pose2 inverse(const Pose2& a) {
    const double c = std::cos(a.theta);
    const double s = std::sin(a.theta);
    return Pose2(-(c * a.x + s * a.y), s * a.x - c * a.y, -a.theta);
}

/// b expressed in a's frame: compose(a, between(a, b)) == b.
inline Pose2 between(const Pose2& a, const Pose2& b) {
    const double c = std::cos(a.theta);
    const double s = std::sin(a.theta);
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    return Pose2(c * dx + s * dy, -s * dx + c * dy, b.theta - a.theta);
}

inline Point2 transform_point(const Pose2& q, const Point2& p) {
    const double c = std::cos(q.theta);
    const double s = std::sin(q.theta);
    return {q.x + c * p.x - s * p.y, q.y + s * p.x + c * p.y};
}

}  // namespace slam2d
