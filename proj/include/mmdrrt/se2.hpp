#pragma once

// Minimal planar rigid-body math: 2-D vectors, SE(2) poses, angle helpers.

#include <cmath>
#include <cstdint>
#include <limits>

namespace mmdrrt {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator-() const { return {-x, -y}; }

    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double cross(const Vec2& o) const { return x * o.y - y * o.x; }
    double norm2() const { return x * x + y * y; }
    double norm() const { return std::sqrt(norm2()); }
    Vec2 perp() const { return {-y, x}; }

    bool operator==(const Vec2& o) const { return x == o.x && y == o.y; }
};

inline Vec2 operator*(double s, const Vec2& v) { return {s * v.x, s * v.y}; }

// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
    a = std::fmod(a, 2.0 * kPi);
    if (a <= -kPi) a += 2.0 * kPi;
    else if (a > kPi) a -= 2.0 * kPi;
    return a;
}

inline double angle_diff(double a, double b) { return wrap_angle(a - b); }

// Pose in SE(2): translation plus heading.
struct Pose2 {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;

    Vec2 xy() const { return {x, y}; }

    // Applies this pose to a point expressed in the local frame.
    Vec2 apply(const Vec2& p) const {
        const double c = std::cos(theta), s = std::sin(theta);
        return {x + c * p.x - s * p.y, y + s * p.x + c * p.y};
    }

    // Frame composition: (a * b) maps b's local frame through a.
    Pose2 operator*(const Pose2& o) const {
        const Vec2 t = apply({o.x, o.y});
        return {t.x, t.y, theta + o.theta};
    }

    Pose2 inverse() const {
        const double c = std::cos(theta), s = std::sin(theta);
        return {-(c * x + s * y), -(-s * x + c * y), -theta};
    }

    Vec2 heading() const { return {std::cos(theta), std::sin(theta)}; }
};

// True when two poses coincide within separate position / angle tolerances.
inline bool poses_close(const Pose2& a, const Pose2& b, double tol_pos, double tol_ang) {
    return (a.xy() - b.xy()).norm() <= tol_pos &&
           std::abs(angle_diff(a.theta, b.theta)) <= tol_ang;
}

}  // namespace mmdrrt
