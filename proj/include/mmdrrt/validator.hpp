#pragma once

// Independent plan validator. Re-derives everything from the scene and the
// plan document alone: transition ordering (one pick, at least one hand-off,
// one place, strictly increasing in time, strictly inside the plan), grasp
// consistency along the transfer chain, object-pose agreement at every
// transition, timing consistency under the makespan metric, and a full
// collision re-check of every segment at half the scene's interpolation
// resolution.

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "collision.hpp"
#include "plan.hpp"
#include "scene.hpp"

namespace mmdrrt {

struct ValidationReport {
    bool ok = true;
    std::vector<std::string> errors;

    void fail(const std::string& msg) {
        ok = false;
        errors.push_back(msg);
    }
};

namespace detail {

inline std::string fmt_time(double t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", t);
    return buf;
}

inline bool config_matches(const CompositeConfig& a, const CompositeConfig& b, double tol) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].size() != b[i].size()) return false;
        for (std::size_t j = 0; j < a[i].size(); ++j)
            if (std::abs(a[i][j] - b[i][j]) > tol) return false;
    }
    return true;
}

}  // namespace detail

inline ValidationReport validate_plan(const Scene& s, const Plan& p) {
    ValidationReport rep;
    constexpr double kTimeTol = 1e-9;
    constexpr double kConfigTol = 1e-9;
    constexpr double kPoseTol = 1e-5;

    if (p.waypoints.size() < 2) {
        rep.fail("plan needs at least two waypoints");
        return rep;
    }
    for (const TimedWaypoint& w : p.waypoints) {
        if (static_cast<int>(w.q.size()) != s.n_arms()) {
            rep.fail("waypoint arm count does not match the scene");
            return rep;
        }
        for (int a = 0; a < s.n_arms(); ++a)
            if (!s.arms[a].within_limits(w.q[a])) {
                rep.fail("waypoint violates joint limits for arm " + std::to_string(a));
                return rep;
            }
    }

    if (std::abs(p.waypoints.front().t) > kTimeTol)
        rep.fail("plan must start at t = 0");
    for (std::size_t k = 0; k + 1 < p.waypoints.size(); ++k)
        if (!(p.waypoints[k + 1].t > p.waypoints[k].t))
            rep.fail("waypoint times must be strictly increasing at index " + std::to_string(k));
    if (std::abs(p.cost - p.waypoints.back().t) > kTimeTol)
        rep.fail("plan cost does not equal its end time");

    if (!detail::config_matches(p.waypoints.front().q, s.q_init, kConfigTol))
        rep.fail("plan does not start at the scene's initial configuration");
    if (!detail::config_matches(p.waypoints.back().q, s.q_goal, kConfigTol))
        rep.fail("plan does not end at the scene's goal configuration");

    // Segment durations must agree with the makespan metric.
    for (std::size_t k = 0; k + 1 < p.waypoints.size(); ++k) {
        double expected = 0.0;
        for (int a = 0; a < s.n_arms(); ++a)
            expected = std::max(expected,
                                arm_travel_time(p.waypoints[k].q[a], p.waypoints[k + 1].q[a],
                                                s.arms[a].max_joint_velocity));
        const double dt = p.waypoints[k + 1].t - p.waypoints[k].t;
        if (std::abs(dt - expected) > kTimeTol) {
            rep.fail("segment " + std::to_string(k) + " duration " + detail::fmt_time(dt) +
                     " does not match makespan " + detail::fmt_time(expected));
            break;
        }
    }

    // Transition structure: pick, one or more hand-offs, place, strictly
    // ordered and strictly inside (0, T).
    const double T = p.waypoints.back().t;
    std::vector<const TransitionMark*> picks, handoffs, places;
    for (const TransitionMark& m : p.marks) {
        if (m.waypoint < 0 || m.waypoint >= static_cast<int>(p.waypoints.size())) {
            rep.fail("transition mark references a missing waypoint");
            return rep;
        }
        if (std::abs(m.t - p.waypoints[m.waypoint].t) > kTimeTol)
            rep.fail("transition mark time disagrees with its waypoint");
        switch (m.kind) {
            case ModeKind::Pick: picks.push_back(&m); break;
            case ModeKind::Handoff: handoffs.push_back(&m); break;
            case ModeKind::Place: places.push_back(&m); break;
            default: rep.fail("unexpected transition kind in plan"); break;
        }
    }
    if (picks.size() != 1 || places.size() != 1 || handoffs.empty()) {
        rep.fail("plan must contain exactly one pick, at least one hand-off, and one place");
        return rep;
    }
    const TransitionMark& pick = *picks.front();
    const TransitionMark& place = *places.front();
    if (!(pick.t > 0.0)) rep.fail("pick must happen strictly after the start");
    if (!(place.t < T)) rep.fail("place must happen strictly before the end");
    double prev_t = pick.t;
    for (const TransitionMark* h : handoffs) {
        if (!(h->t > prev_t)) rep.fail("hand-offs must strictly follow the pick in time");
        prev_t = h->t;
    }
    if (!(place.t > prev_t)) rep.fail("place must strictly follow the last hand-off");

    const auto grasp_ok = [&](int g) { return g >= 0 && g < static_cast<int>(s.grasps.size()); };
    const auto arm_ok = [&](int a) { return a >= 0 && a < s.n_arms(); };

    if (!arm_ok(pick.arm_a) || !grasp_ok(pick.grasp_a)) {
        rep.fail("pick mark has invalid arm or grasp");
        return rep;
    }
    if (!arm_ok(place.arm_a) || !grasp_ok(place.grasp_a)) {
        rep.fail("place mark has invalid arm or grasp");
        return rep;
    }

    // Grasp chain: the carrier and grasp entering each hand-off must match
    // what the previous transition established, and each hand-off must swap
    // between opposite faces.
    int carrier = pick.arm_a;
    int carried_grasp = pick.grasp_a;
    for (std::size_t i = 0; i < handoffs.size(); ++i) {
        const TransitionMark& h = *handoffs[i];
        if (!arm_ok(h.arm_a) || !arm_ok(h.arm_b) || !grasp_ok(h.grasp_a) || !grasp_ok(h.grasp_b)) {
            rep.fail("hand-off mark has invalid arms or grasps");
            return rep;
        }
        if (h.arm_a != carrier || h.grasp_a != carried_grasp)
            rep.fail("hand-off " + std::to_string(i) + " giver does not match the current carrier");
        if (s.grasps[h.grasp_a].face == s.grasps[h.grasp_b].face)
            rep.fail("hand-off " + std::to_string(i) + " grasps are not on opposite faces");
        carrier = h.arm_b;
        carried_grasp = h.grasp_b;
    }
    if (place.arm_a != carrier || place.grasp_a != carried_grasp)
        rep.fail("place does not match the final carrier's grasp");

    // Object-pose agreement at the transitions.
    const auto ee_object_pose = [&](const TransitionMark& m, int arm, int grasp) {
        const CompositeConfig& q = p.waypoints[m.waypoint].q;
        return held_object_pose(s, forward_kinematics(s.arms[arm], q[arm]), grasp);
    };
    if (!poses_close(ee_object_pose(pick, pick.arm_a, pick.grasp_a), s.object_init, kPoseTol,
                     kPoseTol))
        rep.fail("pick does not grasp the object at its initial pose");
    if (!poses_close(ee_object_pose(place, place.arm_a, place.grasp_a), s.object_goal, kPoseTol,
                     kPoseTol))
        rep.fail("place does not release the object at its goal pose");
    for (std::size_t i = 0; i < handoffs.size(); ++i) {
        const TransitionMark& h = *handoffs[i];
        const Pose2 giver_pose = ee_object_pose(h, h.arm_a, h.grasp_a);
        const Pose2 receiver_pose = ee_object_pose(h, h.arm_b, h.grasp_b);
        if (!poses_close(giver_pose, receiver_pose, kPoseTol, kPoseTol))
            rep.fail("hand-off " + std::to_string(i) +
                     " giver and receiver disagree on the object pose");
    }

    if (!rep.ok) return rep;

    // Full collision re-check at half resolution, including endpoints.
    const double step = 0.5 * s.collision_step;
    for (std::size_t k = 0; k + 1 < p.waypoints.size(); ++k) {
        const auto held = held_at_segment(p, static_cast<int>(k));
        if (!is_composite_config_valid(s, p.waypoints[k].q, held)) {
            rep.fail("waypoint " + std::to_string(k) + " is in collision");
            return rep;
        }
        if (!is_composite_edge_valid(s, p.waypoints[k].q, p.waypoints[k + 1].q, held, nullptr,
                                     step)) {
            rep.fail("segment " + std::to_string(k) + " is in collision at half resolution");
            return rep;
        }
    }
    const auto final_held = held_at_segment(p, static_cast<int>(p.waypoints.size()) - 1);
    if (!is_composite_config_valid(s, p.waypoints.back().q, final_held))
        rep.fail("final waypoint is in collision");

    return rep;
}

}  // namespace mmdrrt
