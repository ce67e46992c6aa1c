#pragma once

// Planar serial kinematic chains: model description, forward kinematics, and
// the joint-space travel-time metric used throughout the planners.

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "se2.hpp"
#include "shapes.hpp"

namespace mmdrrt {

// One joint angle per entry, length = arm dof.
using ArmConfig = std::vector<double>;

// One ArmConfig per arm, index i refers to arm i of the scene.
using CompositeConfig = std::vector<ArmConfig>;

struct ArmModel {
    Pose2 base;                                     // base frame in the world
    std::vector<double> link_lengths;               // meters, one per joint
    std::vector<std::array<double, 2>> joint_limits;  // [lo, hi] radians
    double max_joint_velocity = 1.0;                // rad/s, shared by joints

    int dof() const { return static_cast<int>(link_lengths.size()); }

    double reach() const {
        double r = 0.0;
        for (double l : link_lengths) r += l;
        return r;
    }

    void validate() const {
        if (link_lengths.empty())
            throw std::invalid_argument("arm must have at least one link");
        if (joint_limits.size() != link_lengths.size())
            throw std::invalid_argument("joint_limits size must match link count");
        for (double l : link_lengths)
            if (!(l > 0.0)) throw std::invalid_argument("link lengths must be positive");
        for (const auto& lim : joint_limits)
            if (!(lim[0] < lim[1]))
                throw std::invalid_argument("joint limit lower bound must be below upper");
        if (!(max_joint_velocity > 0.0))
            throw std::invalid_argument("max joint velocity must be positive");
    }

    bool within_limits(const ArmConfig& q) const {
        if (q.size() != link_lengths.size()) return false;
        for (std::size_t i = 0; i < q.size(); ++i)
            if (q[i] < joint_limits[i][0] || q[i] > joint_limits[i][1]) return false;
        return true;
    }
};

struct FkResult {
    std::vector<Segment> links;  // world-frame link segments, base to tip
    Pose2 ee;                    // end-effector pose (tip position, cumulative heading)
};

// Forward kinematics. Throws std::domain_error when q violates joint limits
// or has the wrong length.
inline FkResult forward_kinematics(const ArmModel& arm, const ArmConfig& q) {
    if (!arm.within_limits(q))
        throw std::domain_error("configuration outside joint limits");
    FkResult out;
    out.links.reserve(arm.link_lengths.size());
    Vec2 p = arm.base.xy();
    double theta = arm.base.theta;
    for (std::size_t i = 0; i < arm.link_lengths.size(); ++i) {
        theta += q[i];
        const Vec2 next = p + arm.link_lengths[i] * Vec2{std::cos(theta), std::sin(theta)};
        out.links.push_back({p, next});
        p = next;
    }
    out.ee = {p.x, p.y, theta};
    return out;
}

inline Pose2 end_effector_pose(const ArmModel& arm, const ArmConfig& q) {
    return forward_kinematics(arm, q).ee;
}

// Travel time between two configurations of one arm: largest per-joint
// displacement divided by the velocity bound (synchronized joint motion).
inline double arm_travel_time(const ArmConfig& a, const ArmConfig& b, double vmax) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst / vmax;
}

inline double max_joint_displacement(const ArmConfig& a, const ArmConfig& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

}  // namespace mmdrrt
