#pragma once

// Analytic inverse kinematics for planar chains.
//
//  - 2 joints: position-only placement of the tip.
//  - 3 joints: full SE(2) end-effector pose via wrist-point reduction.
//  - more joints: the leading (dof - 3) joints are sampled uniformly within
//    their limits and the remaining 3R subchain is solved analytically;
//    repeated over a bounded number of restarts.
//
// Every returned configuration is verified by a forward-kinematics round
// trip against the requested pose and deduplicated.

#include <cmath>
#include <vector>

#include "arm.hpp"
#include "random.hpp"
#include "se2.hpp"

namespace mmdrrt {

struct IkParams {
    double tol_pos = 1e-6;   // meters
    double tol_ang = 1e-6;   // radians
    int max_restarts = 32;   // sampling restarts for redundant chains
};

namespace detail {

inline bool config_close(const ArmConfig& a, const ArmConfig& b, double tol) {
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::abs(a[i] - b[i]) > tol) return false;
    return true;
}

inline void push_unique(std::vector<ArmConfig>& out, const ArmConfig& q) {
    for (const ArmConfig& existing : out)
        if (config_close(existing, q, 1e-9)) return;
    out.push_back(q);
}

// Joint-angle candidates equal to `a` modulo 2*pi that respect [lo, hi].
inline void wrapped_candidates(double a, double lo, double hi, std::vector<double>& out) {
    out.clear();
    const double base = wrap_angle(a);
    for (int k = -1; k <= 1; ++k) {
        const double v = base + 2.0 * kPi * k;
        if (v >= lo && v <= hi) out.push_back(v);
    }
}

// Two-link reacher: places the tip of links (l1, l2) rooted at `root` onto
// point `p` (world frame). Appends up to two (q1, q2) candidate pairs,
// unwrapped into raw angles relative to the root heading.
inline void solve_2r(const Pose2& root, double l1, double l2, const Vec2& p,
                     std::vector<std::array<double, 2>>& out) {
    out.clear();
    const Pose2 inv = root.inverse();
    const Vec2 local = inv.apply(p);
    const double r2 = local.norm2();
    double c2 = (r2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
    if (c2 < -1.0 - 1e-9 || c2 > 1.0 + 1e-9) return;
    c2 = std::max(-1.0, std::min(1.0, c2));
    const double s2 = std::sqrt(std::max(0.0, 1.0 - c2 * c2));
    const double gamma = std::atan2(local.y, local.x);
    for (int sign = 0; sign < 2; ++sign) {
        const double q2 = sign == 0 ? std::atan2(s2, c2) : std::atan2(-s2, c2);
        const double q1 = gamma - std::atan2(l2 * std::sin(q2), l1 + l2 * std::cos(q2));
        out.push_back({q1, q2});
        if (s2 == 0.0) break;  // elbow-up and elbow-down coincide
    }
}

// Solves the trailing 3R subchain rooted at `root` (links la, lb, lc) for a
// full end-effector pose, appending joint-limit-respecting configurations
// prefixed by `lead`.
inline void solve_3r_pose(const ArmModel& arm, const Pose2& root, std::size_t first_joint,
                          const Pose2& target, const ArmConfig& lead,
                          std::vector<ArmConfig>& out) {
    const double la = arm.link_lengths[first_joint];
    const double lb = arm.link_lengths[first_joint + 1];
    const double lc = arm.link_lengths[first_joint + 2];
    const Vec2 wrist = target.xy() - lc * target.heading();

    std::vector<std::array<double, 2>> pairs;
    solve_2r(root, la, lb, wrist, pairs);

    std::vector<double> q1s, q2s, q3s;
    for (const auto& pr : pairs) {
        wrapped_candidates(pr[0], arm.joint_limits[first_joint][0],
                           arm.joint_limits[first_joint][1], q1s);
        wrapped_candidates(pr[1], arm.joint_limits[first_joint + 1][0],
                           arm.joint_limits[first_joint + 1][1], q2s);
        for (double q1 : q1s)
            for (double q2 : q2s) {
                const double q3_raw = target.theta - root.theta - q1 - q2;
                wrapped_candidates(q3_raw, arm.joint_limits[first_joint + 2][0],
                                   arm.joint_limits[first_joint + 2][1], q3s);
                for (double q3 : q3s) {
                    ArmConfig q = lead;
                    q.push_back(q1);
                    q.push_back(q2);
                    q.push_back(q3);
                    out.push_back(std::move(q));
                }
            }
    }
}

inline Pose2 advance_base(const ArmModel& arm, const ArmConfig& lead) {
    Vec2 p = arm.base.xy();
    double theta = arm.base.theta;
    for (std::size_t i = 0; i < lead.size(); ++i) {
        theta += lead[i];
        p = p + arm.link_lengths[i] * Vec2{std::cos(theta), std::sin(theta)};
    }
    return {p.x, p.y, theta};
}

}  // namespace detail

// Configurations placing the end effector at `target`. For 2-dof arms only
// the target position is matched; from 3 dof upward the full pose is matched.
// Results respect joint limits, pass a forward-kinematics round trip within
// the given tolerances, and contain no duplicates. Deterministic given `rng`
// (which is consulted only for redundant arms). Arms with fewer than 2
// joints yield no solutions.
inline std::vector<ArmConfig> inverse_kinematics(const ArmModel& arm, const Pose2& target,
                                                 Rng& rng, const IkParams& params = {}) {
    std::vector<ArmConfig> verified;
    const int d = arm.dof();
    if (d < 2) return verified;

    std::vector<ArmConfig> raw;
    if (d == 2) {
        std::vector<std::array<double, 2>> pairs;
        detail::solve_2r(arm.base, arm.link_lengths[0], arm.link_lengths[1], target.xy(), pairs);
        std::vector<double> q1s, q2s;
        for (const auto& pr : pairs) {
            detail::wrapped_candidates(pr[0], arm.joint_limits[0][0], arm.joint_limits[0][1], q1s);
            detail::wrapped_candidates(pr[1], arm.joint_limits[1][0], arm.joint_limits[1][1], q2s);
            for (double q1 : q1s)
                for (double q2 : q2s) raw.push_back({q1, q2});
        }
    } else if (d == 3) {
        detail::solve_3r_pose(arm, arm.base, 0, target, {}, raw);
    } else {
        const std::size_t lead_n = static_cast<std::size_t>(d - 3);
        for (int restart = 0; restart < params.max_restarts; ++restart) {
            ArmConfig lead(lead_n);
            for (std::size_t i = 0; i < lead_n; ++i)
                lead[i] = rng.uniform(arm.joint_limits[i][0], arm.joint_limits[i][1]);
            const Pose2 root = detail::advance_base(arm, lead);
            detail::solve_3r_pose(arm, root, lead_n, target, lead, raw);
        }
    }

    for (const ArmConfig& q : raw) {
        if (!arm.within_limits(q)) continue;
        const Pose2 ee = end_effector_pose(arm, q);
        if ((ee.xy() - target.xy()).norm() > params.tol_pos) continue;
        if (d >= 3 && std::abs(angle_diff(ee.theta, target.theta)) > params.tol_ang) continue;
        detail::push_unique(verified, q);
    }
    return verified;
}

}  // namespace mmdrrt
