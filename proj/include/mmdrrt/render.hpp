#pragma once

// Offline SVG rendering: one frame per uniform time sample of a plan,
// drawing obstacles, surfaces, arms, the carried object, and markers for
// the task transitions that have happened so far.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "arm.hpp"
#include "plan.hpp"
#include "scene.hpp"
#include "shapes.hpp"

namespace mmdrrt {
namespace detail {

inline std::string fmt_svg(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

struct SvgCanvas {
    double min_x, min_y, max_x, max_y, scale;
    std::string body;

    SvgCanvas(double x0, double y0, double x1, double y1, double width)
        : min_x(x0), min_y(y0), max_x(x1), max_y(y1), scale(width / (x1 - x0)) {}

    double sx(double x) const { return (x - min_x) * scale; }
    double sy(double y) const { return (max_y - y) * scale; }
    double w() const { return (max_x - min_x) * scale; }
    double h() const { return (max_y - min_y) * scale; }

    void polygon(const std::vector<Vec2>& pts, const std::string& style) {
        body += "<polygon points=\"";
        for (const Vec2& p : pts) body += fmt_svg(sx(p.x)) + "," + fmt_svg(sy(p.y)) + " ";
        body += "\" " + style + "/>\n";
    }
    void circle(Vec2 c, double r, const std::string& style) {
        body += "<circle cx=\"" + fmt_svg(sx(c.x)) + "\" cy=\"" + fmt_svg(sy(c.y)) + "\" r=\"" +
                fmt_svg(r * scale) + "\" " + style + "/>\n";
    }
    void line(Vec2 a, Vec2 b, const std::string& style) {
        body += "<line x1=\"" + fmt_svg(sx(a.x)) + "\" y1=\"" + fmt_svg(sy(a.y)) + "\" x2=\"" +
                fmt_svg(sx(b.x)) + "\" y2=\"" + fmt_svg(sy(b.y)) + "\" " + style + "/>\n";
    }
    void text(double px, double py, const std::string& s) {
        body += "<text x=\"" + fmt_svg(px) + "\" y=\"" + fmt_svg(py) +
                "\" font-family=\"monospace\" font-size=\"14\">" + s + "</text>\n";
    }
    std::string finish() const {
        return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt_svg(w()) +
               "\" height=\"" + fmt_svg(h()) + "\" viewBox=\"0 0 " + fmt_svg(w()) + " " +
               fmt_svg(h()) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"#fafafa\"/>\n" +
               body + "</svg>\n";
    }
};

inline const char* arm_color(int i) {
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b",
                                    "#e377c2"};
    return palette[i % 6];
}

}  // namespace detail

inline void render_frame(const Scene& s, const Plan& plan, double t, const std::string& path) {
    double x0 = kInf, y0 = kInf, x1 = -kInf, y1 = -kInf;
    const auto grow = [&](double x, double y) {
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
    };
    for (const ArmModel& arm : s.arms) {
        grow(arm.base.x - arm.reach(), arm.base.y - arm.reach());
        grow(arm.base.x + arm.reach(), arm.base.y + arm.reach());
    }
    for (const Obstacle& o : s.obstacles) {
        if (o.kind == Obstacle::Kind::Circle) {
            grow(o.circle.center.x - o.circle.radius, o.circle.center.y - o.circle.radius);
            grow(o.circle.center.x + o.circle.radius, o.circle.center.y + o.circle.radius);
        } else {
            for (const Vec2& p : o.polygon.pts) grow(p.x, p.y);
        }
    }
    const double margin = 0.3;
    detail::SvgCanvas svg(x0 - margin, y0 - margin, x1 + margin, y1 + margin, 800.0);

    for (const Obstacle& o : s.obstacles) {
        if (o.kind == Obstacle::Kind::Circle)
            svg.circle(o.circle.center, o.circle.radius, "fill=\"#9e9e9e\"");
        else
            svg.polygon(o.polygon.pts, "fill=\"#9e9e9e\"");
    }
    for (const auto& [a, b] : s.surfaces)
        svg.line(a, b, "stroke=\"#bdbdbd\" stroke-width=\"2\"");

    // Goal outline, then object at its current pose.
    svg.polygon(s.object_shape.transformed(s.object_goal).pts,
                "fill=\"none\" stroke=\"#ff9800\" stroke-dasharray=\"6,4\" stroke-width=\"2\"");
    const Pose2 obj = object_pose_at(s, plan, t);
    svg.polygon(s.object_shape.transformed(obj).pts, "fill=\"#ffb74d\" stroke=\"#e65100\"");

    const CompositeConfig q = interpolate_plan(plan, t);
    std::vector<FkResult> fks;
    for (int a = 0; a < s.n_arms(); ++a) {
        fks.push_back(forward_kinematics(s.arms[a], q[a]));
        const std::string style = std::string("stroke=\"") + detail::arm_color(a) +
                                  "\" stroke-width=\"" +
                                  detail::fmt_svg(s.link_thickness * svg.scale) +
                                  "\" stroke-linecap=\"round\" fill=\"none\"";
        std::string pts = "<polyline points=\"";
        pts += detail::fmt_svg(svg.sx(s.arms[a].base.x)) + "," +
               detail::fmt_svg(svg.sy(s.arms[a].base.y)) + " ";
        for (const Segment& link : fks.back().links)
            pts += detail::fmt_svg(svg.sx(link.b.x)) + "," + detail::fmt_svg(svg.sy(link.b.y)) +
                   " ";
        svg.body += pts + "\" " + style + "/>\n";
        svg.circle({s.arms[a].base.x, s.arms[a].base.y}, s.link_thickness * 0.8,
                   "fill=\"#424242\"");
    }

    // Transition markers: ring the end effectors of the arms involved in any
    // transition that is current at this frame, and list past transitions.
    std::string history;
    for (const TransitionMark& m : plan.marks) {
        if (m.t > t + 1e-9) continue;
        history += std::string(history.empty() ? "" : "  ") + mode_kind_name(m.kind) + "@" +
                   detail::fmt_svg(m.t) + "s";
        if (std::abs(m.t - t) <= std::max(plan.duration() / 40.0, 1e-6)) {
            const auto ring = [&](int arm) {
                if (arm < 0) return;
                const Pose2 ee = fks[arm].ee;
                svg.circle({ee.x, ee.y}, s.link_thickness * 2.0,
                           "fill=\"none\" stroke=\"#000\" stroke-width=\"2\"");
            };
            ring(m.arm_a);
            ring(m.arm_b);
        }
    }
    svg.text(10, 20, "t=" + detail::fmt_svg(t) + "s");
    if (!history.empty()) svg.text(10, 40, history);

    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << svg.finish();
}

// One SVG per uniform time sample over [0, T], inclusive of both ends.
inline std::vector<std::string> render_plan(const Scene& s, const Plan& plan,
                                            const std::string& out_dir, int frames = 20) {
    std::filesystem::create_directories(out_dir);
    if (frames < 2) frames = 2;
    const double T = plan.duration();
    std::vector<std::string> paths;
    for (int k = 0; k < frames; ++k) {
        const double t = T * k / (frames - 1);
        char name[32];
        std::snprintf(name, sizeof name, "frame_%03d.svg", k);
        const std::string path = (std::filesystem::path(out_dir) / name).string();
        render_frame(s, plan, t, path);
        paths.push_back(path);
    }
    return paths;
}

}  // namespace mmdrrt
