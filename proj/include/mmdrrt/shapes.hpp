#pragma once

// Planar collision primitives: segments, circles, convex polygons.
//
// Everything is exact-arithmetic-free and conservative: touching counts as
// colliding. Distances are returned squared where only comparisons happen.

#include <algorithm>
#include <cmath>
#include <vector>

#include "se2.hpp"

namespace mmdrrt {

struct Segment {
    Vec2 a;
    Vec2 b;

    Vec2 dir() const { return b - a; }
    double length() const { return dir().norm(); }
};

struct Circle {
    Vec2 center;
    double radius = 0.0;
};

inline double clamp01(double t) { return t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t); }

inline double dist2_point_segment(const Vec2& p, const Segment& s) {
    const Vec2 ab = s.dir();
    const double denom = ab.norm2();
    const double t = denom > 0.0 ? clamp01((p - s.a).dot(ab) / denom) : 0.0;
    const Vec2 closest = s.a + t * ab;
    return (p - closest).norm2();
}

namespace detail {
inline int orientation(const Vec2& a, const Vec2& b, const Vec2& c) {
    const double v = (b - a).cross(c - a);
    if (v > 0.0) return 1;
    if (v < 0.0) return -1;
    return 0;
}

inline bool on_segment_collinear(const Vec2& a, const Vec2& b, const Vec2& p) {
    return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
           std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}
}  // namespace detail

// Intersection including endpoint touches and collinear overlap.
inline bool segments_intersect(const Segment& s1, const Segment& s2) {
    using detail::orientation;
    const int o1 = orientation(s1.a, s1.b, s2.a);
    const int o2 = orientation(s1.a, s1.b, s2.b);
    const int o3 = orientation(s2.a, s2.b, s1.a);
    const int o4 = orientation(s2.a, s2.b, s1.b);
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && detail::on_segment_collinear(s1.a, s1.b, s2.a)) return true;
    if (o2 == 0 && detail::on_segment_collinear(s1.a, s1.b, s2.b)) return true;
    if (o3 == 0 && detail::on_segment_collinear(s2.a, s2.b, s1.a)) return true;
    if (o4 == 0 && detail::on_segment_collinear(s2.a, s2.b, s1.b)) return true;
    return false;
}

inline double dist2_segment_segment(const Segment& s1, const Segment& s2) {
    if (segments_intersect(s1, s2)) return 0.0;
    const double d1 = dist2_point_segment(s2.a, s1);
    const double d2 = dist2_point_segment(s2.b, s1);
    const double d3 = dist2_point_segment(s1.a, s2);
    const double d4 = dist2_point_segment(s1.b, s2);
    return std::min(std::min(d1, d2), std::min(d3, d4));
}

// Convex polygon, vertices counter-clockwise.
struct ConvexPolygon {
    std::vector<Vec2> pts;

    bool contains(const Vec2& p) const {
        const std::size_t n = pts.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2& a = pts[i];
            const Vec2& b = pts[(i + 1) % n];
            if ((b - a).cross(p - a) < 0.0) return false;
        }
        return true;
    }

    Segment edge(std::size_t i) const { return {pts[i], pts[(i + 1) % pts.size()]}; }

    ConvexPolygon transformed(const Pose2& pose) const {
        ConvexPolygon out;
        out.pts.reserve(pts.size());
        for (const Vec2& p : pts) out.pts.push_back(pose.apply(p));
        return out;
    }
};

// True when the vertex list forms a convex counter-clockwise polygon with
// nonzero area. Used by scene validation.
inline bool is_convex_ccw(const std::vector<Vec2>& pts) {
    const std::size_t n = pts.size();
    if (n < 3) return false;
    double area2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a = pts[i];
        const Vec2& b = pts[(i + 1) % n];
        const Vec2& c = pts[(i + 2) % n];
        if ((b - a).cross(c - b) < 0.0) return false;
        area2 += a.cross(b);
    }
    return area2 > 0.0;
}

namespace detail {
inline void project_onto(const ConvexPolygon& poly, const Vec2& axis, double& lo, double& hi) {
    lo = hi = poly.pts[0].dot(axis);
    for (std::size_t i = 1; i < poly.pts.size(); ++i) {
        const double v = poly.pts[i].dot(axis);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
}

inline bool sat_separated_by_edges_of(const ConvexPolygon& a, const ConvexPolygon& b) {
    const std::size_t n = a.pts.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 axis = (a.pts[(i + 1) % n] - a.pts[i]).perp();
        double alo, ahi, blo, bhi;
        project_onto(a, axis, alo, ahi);
        project_onto(b, axis, blo, bhi);
        if (ahi < blo || bhi < alo) return true;
    }
    return false;
}
}  // namespace detail

// Separating-axis test; touching polygons count as overlapping.
inline bool polygons_overlap(const ConvexPolygon& a, const ConvexPolygon& b) {
    return !detail::sat_separated_by_edges_of(a, b) &&
           !detail::sat_separated_by_edges_of(b, a);
}

inline double dist2_point_polygon(const Vec2& p, const ConvexPolygon& poly) {
    if (poly.contains(p)) return 0.0;
    double best = dist2_point_segment(p, poly.edge(0));
    for (std::size_t i = 1; i < poly.pts.size(); ++i)
        best = std::min(best, dist2_point_segment(p, poly.edge(i)));
    return best;
}

inline double dist2_segment_polygon(const Segment& s, const ConvexPolygon& poly) {
    if (poly.contains(s.a) || poly.contains(s.b)) return 0.0;
    double best = dist2_segment_segment(s, poly.edge(0));
    for (std::size_t i = 1; i < poly.pts.size(); ++i) {
        if (best == 0.0) return 0.0;
        best = std::min(best, dist2_segment_segment(s, poly.edge(i)));
    }
    return best;
}

// Capsule = segment swept by a radius. All checks below are boolean hits.
inline bool capsules_hit(const Segment& s1, double r1, const Segment& s2, double r2) {
    const double r = r1 + r2;
    return dist2_segment_segment(s1, s2) <= r * r;
}

inline bool capsule_circle_hit(const Segment& s, double r, const Circle& c) {
    const double rr = r + c.radius;
    return dist2_point_segment(c.center, s) <= rr * rr;
}

inline bool capsule_polygon_hit(const Segment& s, double r, const ConvexPolygon& poly) {
    return dist2_segment_polygon(s, poly) <= r * r;
}

inline bool polygon_circle_hit(const ConvexPolygon& poly, const Circle& c) {
    return dist2_point_polygon(c.center, poly) <= c.radius * c.radius;
}

inline bool circles_hit(const Circle& a, const Circle& b) {
    const double r = a.radius + b.radius;
    return (a.center - b.center).norm2() <= r * r;
}

}  // namespace mmdrrt
