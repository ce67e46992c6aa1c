#pragma once

// Executable plan: a timed sequence of composite waypoints with transition
// marks (pick, hand-offs, place) pinned to waypoints. Transitions are
// instantaneous; the grasp state switches exactly at the marked waypoint.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "collision.hpp"
#include "modegraph.hpp"
#include "scene.hpp"

namespace mmdrrt {

struct TransitionMark {
    double t = 0.0;
    int waypoint = -1;  // index of the waypoint where the transition fires
    ModeKind kind = ModeKind::Pick;
    int arm_a = -1;     // Pick/Place: acting arm; Handoff: giver
    int arm_b = -1;     // Handoff: receiver
    int grasp_a = -1;
    int grasp_b = -1;
};

struct TimedWaypoint {
    double t = 0.0;
    CompositeConfig q;
};

struct Plan {
    std::vector<TimedWaypoint> waypoints;
    std::vector<TransitionMark> marks;
    double cost = 0.0;  // equals the last waypoint time
    std::string planner;
    std::uint64_t seed = 0;
    std::string scene_hash;

    double duration() const { return waypoints.empty() ? 0.0 : waypoints.back().t; }
};

// Grasp state while traversing segment [k, k+1]: the state after every
// transition fired at waypoint index <= k.
inline std::optional<HeldObject> held_at_segment(const Plan& p, int k) {
    std::optional<HeldObject> held;
    for (const TransitionMark& m : p.marks) {
        if (m.waypoint > k) break;
        switch (m.kind) {
            case ModeKind::Pick: held = HeldObject{m.arm_a, m.grasp_a}; break;
            case ModeKind::Handoff: held = HeldObject{m.arm_b, m.grasp_b}; break;
            case ModeKind::Place: held.reset(); break;
            default: break;
        }
    }
    return held;
}

// Collision re-check of every motion segment at the given interpolation step
// (0 = the scene's own step). Planners run this at half the scene step before
// accepting a candidate solution, so an emitted plan always survives the
// validator's finer re-check; work is charged to `clock` when one is given.
inline bool plan_motion_valid(const Scene& s, const Plan& p, double step,
                              WorkClock* clock = nullptr) {
    for (std::size_t k = 0; k + 1 < p.waypoints.size(); ++k) {
        const auto held = held_at_segment(p, static_cast<int>(k));
        if (!is_composite_edge_valid(s, p.waypoints[k].q, p.waypoints[k + 1].q, held, clock,
                                     step))
            return false;
    }
    return true;
}

// Composite configuration at time t by per-joint linear interpolation.
inline CompositeConfig interpolate_plan(const Plan& p, double t, int* segment_out = nullptr) {
    const auto& wps = p.waypoints;
    if (t <= wps.front().t) {
        if (segment_out) *segment_out = 0;
        return wps.front().q;
    }
    if (t >= wps.back().t) {
        if (segment_out) *segment_out = static_cast<int>(wps.size()) - 2;
        return wps.back().q;
    }
    std::size_t k = 0;
    while (k + 2 < wps.size() && wps[k + 1].t <= t) ++k;
    if (segment_out) *segment_out = static_cast<int>(k);
    const double span = wps[k + 1].t - wps[k].t;
    const double u = span > 0.0 ? (t - wps[k].t) / span : 0.0;
    CompositeConfig q = wps[k].q;
    for (std::size_t a = 0; a < q.size(); ++a)
        for (std::size_t j = 0; j < q[a].size(); ++j)
            q[a][j] = wps[k].q[a][j] * (1.0 - u) + wps[k + 1].q[a][j] * u;
    return q;
}

// Object pose at time t: resting at its initial pose until the pick fires,
// attached to the current carrier during transfer, and resting at the goal
// pose after the place.
inline Pose2 object_pose_at(const Scene& s, const Plan& p, double t) {
    int segment = 0;
    const CompositeConfig q = interpolate_plan(p, t, &segment);
    std::optional<HeldObject> held;
    for (const TransitionMark& m : p.marks) {
        if (m.t > t) break;
        switch (m.kind) {
            case ModeKind::Pick: held = HeldObject{m.arm_a, m.grasp_a}; break;
            case ModeKind::Handoff: held = HeldObject{m.arm_b, m.grasp_b}; break;
            case ModeKind::Place: held.reset(); break;
            default: break;
        }
    }
    if (held) return held_object_pose(s, q, *held);
    bool placed = false;
    for (const TransitionMark& m : p.marks)
        if (m.kind == ModeKind::Place && m.t <= t) placed = true;
    return placed ? s.object_goal : s.object_init;
}

inline json plan_to_json(const Plan& p) {
    json doc;
    doc["schema"] = 1;
    doc["planner"] = p.planner;
    doc["seed"] = p.seed;
    doc["scene_hash"] = p.scene_hash;
    doc["cost"] = p.cost;
    doc["waypoints"] = json::array();
    for (const TimedWaypoint& w : p.waypoints) {
        json wj;
        wj["t"] = w.t;
        wj["q"] = w.q;
        doc["waypoints"].push_back(std::move(wj));
    }
    doc["marks"] = json::array();
    for (const TransitionMark& m : p.marks) {
        json mj;
        mj["t"] = m.t;
        mj["waypoint"] = m.waypoint;
        mj["kind"] = mode_kind_name(m.kind);
        mj["arm_a"] = m.arm_a;
        mj["arm_b"] = m.arm_b;
        mj["grasp_a"] = m.grasp_a;
        mj["grasp_b"] = m.grasp_b;
        doc["marks"].push_back(std::move(mj));
    }
    return doc;
}

inline Plan plan_from_json(const json& doc) {
    Plan p;
    if (!doc.contains("schema") || doc["schema"].get<int>() != 1)
        throw std::runtime_error("unsupported plan schema");
    p.planner = doc.value("planner", std::string());
    p.seed = doc.value("seed", std::uint64_t{0});
    p.scene_hash = doc.value("scene_hash", std::string());
    p.cost = doc["cost"].get<double>();
    for (const auto& wj : doc["waypoints"]) {
        TimedWaypoint w;
        w.t = wj["t"].get<double>();
        w.q = wj["q"].get<CompositeConfig>();
        p.waypoints.push_back(std::move(w));
    }
    for (const auto& mj : doc["marks"]) {
        TransitionMark m;
        m.t = mj["t"].get<double>();
        m.waypoint = mj["waypoint"].get<int>();
        const std::string kind = mj["kind"].get<std::string>();
        if (kind == "pick") m.kind = ModeKind::Pick;
        else if (kind == "handoff") m.kind = ModeKind::Handoff;
        else if (kind == "place") m.kind = ModeKind::Place;
        else throw std::runtime_error("unknown transition kind in plan: " + kind);
        m.arm_a = mj["arm_a"].get<int>();
        m.arm_b = mj["arm_b"].get<int>();
        m.grasp_a = mj["grasp_a"].get<int>();
        m.grasp_b = mj["grasp_b"].get<int>();
        p.marks.push_back(m);
    }
    return p;
}

}  // namespace mmdrrt
