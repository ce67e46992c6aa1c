#pragma once

// Validity checking for composite (multi-arm) configurations and straight
// joint-space motions, plus the collision-aware part of scene loading.
//
// Arm links are capsules of diameter scene.link_thickness. The movable
// object, when held, is excluded from collision against the holding arm's
// end-effector link only; every other pairing is checked.

#include <cstdint>
#include <optional>
#include <vector>

#include "ik.hpp"
#include "scene.hpp"
#include "shapes.hpp"
#include "workclock.hpp"

namespace mmdrrt {

// The object rigidly attached to an arm through one of the scene's grasps.
struct HeldObject {
    int arm = -1;
    int grasp = -1;

    bool operator==(const HeldObject& o) const { return arm == o.arm && grasp == o.grasp; }
};

inline Pose2 held_object_pose(const Scene& s, const FkResult& holder_fk, int grasp) {
    return holder_fk.ee * s.grasps[grasp].offset;
}

inline Pose2 held_object_pose(const Scene& s, const CompositeConfig& q, const HeldObject& held) {
    return held_object_pose(s, forward_kinematics(s.arms[held.arm], q[held.arm]), held.grasp);
}

namespace detail {

inline bool capsule_hits_obstacle(const Segment& seg, double r, const Obstacle& ob) {
    return ob.kind == Obstacle::Kind::Polygon ? capsule_polygon_hit(seg, r, ob.polygon)
                                              : capsule_circle_hit(seg, r, ob.circle);
}

inline bool polygon_hits_obstacle(const ConvexPolygon& poly, const Obstacle& ob) {
    return ob.kind == Obstacle::Kind::Polygon ? polygons_overlap(poly, ob.polygon)
                                              : polygon_circle_hit(poly, ob.circle);
}

// Self-collision within one arm: capsules of non-adjacent links.
inline bool arm_self_collides(const std::vector<Segment>& links, double r) {
    for (std::size_t i = 0; i + 2 < links.size(); ++i)
        for (std::size_t j = i + 2; j < links.size(); ++j)
            if (capsules_hit(links[i], r, links[j], r)) return true;
    return false;
}

inline bool arm_hits_obstacles(const Scene& s, const std::vector<Segment>& links) {
    const double r = s.link_radius();
    for (const Segment& seg : links)
        for (const Obstacle& ob : s.obstacles)
            if (capsule_hits_obstacle(seg, r, ob)) return true;
    return false;
}

// Object polygon (world frame) against obstacles and against all arm links,
// excluding the end-effector link of each arm whose index appears in
// `ee_excluded` (the arms currently grasping it).
inline bool object_collides(const Scene& s, const ConvexPolygon& world_poly,
                            const std::vector<FkResult>& fks,
                            const std::vector<int>& ee_excluded) {
    for (const Obstacle& ob : s.obstacles)
        if (polygon_hits_obstacle(world_poly, ob)) return true;
    const double r = s.link_radius();
    for (std::size_t a = 0; a < fks.size(); ++a) {
        const auto& links = fks[a].links;
        bool skip_last = false;
        for (int e : ee_excluded)
            if (e == static_cast<int>(a)) { skip_last = true; break; }
        const std::size_t n = links.size() - (skip_last ? 1 : 0);
        for (std::size_t i = 0; i < n; ++i)
            if (capsule_polygon_hit(links[i], r, world_poly)) return true;
    }
    return false;
}

inline bool composite_valid_impl(const Scene& s, const std::vector<FkResult>& fks,
                                 const std::optional<Pose2>& object_pose,
                                 const std::vector<int>& ee_excluded) {
    const double r = s.link_radius();
    for (const FkResult& fk : fks) {
        if (arm_self_collides(fk.links, r)) return false;
        if (arm_hits_obstacles(s, fk.links)) return false;
    }
    for (std::size_t a = 0; a < fks.size(); ++a)
        for (std::size_t b = a + 1; b < fks.size(); ++b)
            for (const Segment& sa : fks[a].links)
                for (const Segment& sb : fks[b].links)
                    if (capsules_hit(sa, r, sb, r)) return false;
    if (object_pose) {
        const ConvexPolygon world_poly = s.object_shape.transformed(*object_pose);
        if (object_collides(s, world_poly, fks, ee_excluded)) return false;
    }
    return true;
}

}  // namespace detail

// Validity of a single arm's configuration against itself and the static
// obstacles (other arms and the object are ignored). Used while building
// per-arm roadmaps.
inline bool is_arm_config_valid(const Scene& s, int arm, const ArmConfig& q) {
    if (!s.arms[arm].within_limits(q)) return false;
    const FkResult fk = forward_kinematics(s.arms[arm], q);
    return !detail::arm_self_collides(fk.links, s.link_radius()) &&
           !detail::arm_hits_obstacles(s, fk.links);
}

// Full composite check: joint limits, per-arm self collision, arm/obstacle,
// arm/arm, and (when `held` is set) the object placed by the holder's grasp
// against obstacles and every link except the holder's end effector.
// Each call costs one work unit on the clock.
inline bool is_composite_config_valid(const Scene& s, const CompositeConfig& q,
                                      const std::optional<HeldObject>& held,
                                      WorkClock* clock = nullptr) {
    if (clock) clock->tick();
    std::vector<FkResult> fks;
    fks.reserve(q.size());
    for (int a = 0; a < s.n_arms(); ++a) {
        if (!s.arms[a].within_limits(q[a])) return false;
        fks.push_back(forward_kinematics(s.arms[a], q[a]));
    }
    std::optional<Pose2> object_pose;
    std::vector<int> excluded;
    if (held) {
        object_pose = held_object_pose(s, fks[held->arm], held->grasp);
        excluded.push_back(held->arm);
    }
    return detail::composite_valid_impl(s, fks, object_pose, excluded);
}

// Hand-off variant: both the giving and the receiving arm grasp the object
// simultaneously, so both end-effector links are excluded. The object pose
// is derived from the giver's grasp.
inline bool is_handoff_config_valid(const Scene& s, const CompositeConfig& q, int giver,
                                    int giver_grasp, int receiver, WorkClock* clock = nullptr) {
    if (clock) clock->tick();
    std::vector<FkResult> fks;
    fks.reserve(q.size());
    for (int a = 0; a < s.n_arms(); ++a) {
        if (!s.arms[a].within_limits(q[a])) return false;
        fks.push_back(forward_kinematics(s.arms[a], q[a]));
    }
    const Pose2 object_pose = held_object_pose(s, fks[giver], giver_grasp);
    return detail::composite_valid_impl(s, fks, object_pose, {giver, receiver});
}

// Number of interpolation intervals for a motion of joint-space extent
// `max_delta` at resolution `step`: the least power of two whose pieces are
// no longer than `step`. Powers of two make every finer dyadic resolution a
// superset of every coarser one, so validity is monotone under refinement.
inline int interpolation_steps(double max_delta, double step) {
    int n = 1;
    while (max_delta / n > step) n <<= 1;
    return n;
}

namespace detail {

template <typename Valid>
inline bool edge_valid_generic(double max_delta, double step, Valid&& valid_at) {
    const int steps = interpolation_steps(max_delta, step);
    for (int i = 1; i < steps; ++i) {
        const double wa = static_cast<double>(steps - i) / steps;
        const double wb = static_cast<double>(i) / steps;
        if (!valid_at(wa, wb)) return false;
    }
    return true;
}

}  // namespace detail

// Straight-line motion check for one arm at the scene's resolution;
// endpoints are assumed already validated.
inline bool is_arm_edge_valid(const Scene& s, int arm, const ArmConfig& qa, const ArmConfig& qb) {
    const double max_delta = max_joint_displacement(qa, qb);
    ArmConfig q(qa.size());
    return detail::edge_valid_generic(max_delta, s.collision_step, [&](double wa, double wb) {
        for (std::size_t j = 0; j < qa.size(); ++j) q[j] = qa[j] * wa + qb[j] * wb;
        return is_arm_config_valid(s, arm, q);
    });
}

// Straight-line motion check for a composite configuration; all arms
// interpolate simultaneously. Symmetric in its endpoints by construction
// (the interpolation weights are exchanged, not re-derived). A nonzero
// `step_override` replaces the scene resolution, e.g. for re-validation at
// half the step.
inline bool is_composite_edge_valid(const Scene& s, const CompositeConfig& qa,
                                    const CompositeConfig& qb,
                                    const std::optional<HeldObject>& held,
                                    WorkClock* clock = nullptr, double step_override = 0.0) {
    double max_delta = 0.0;
    for (std::size_t a = 0; a < qa.size(); ++a)
        max_delta = std::max(max_delta, max_joint_displacement(qa[a], qb[a]));
    const double step = step_override > 0.0 ? step_override : s.collision_step;
    CompositeConfig q(qa.size());
    for (std::size_t a = 0; a < qa.size(); ++a) q[a].resize(qa[a].size());
    return detail::edge_valid_generic(max_delta, step, [&](double wa, double wb) {
        for (std::size_t a = 0; a < qa.size(); ++a)
            for (std::size_t j = 0; j < qa[a].size(); ++j)
                q[a][j] = qa[a][j] * wa + qb[a][j] * wb;
        return is_composite_config_valid(s, q, held, clock);
    });
}

// End-effector pose that grasps the object at `object_pose` through grasp g.
inline Pose2 grasp_ee_pose(const Scene& s, const Pose2& object_pose, int grasp) {
    return object_pose * s.grasps[grasp].offset.inverse();
}

// Pick/place capability probe: configurations of `arm` grasping the object
// at `object_pose` that are valid for that arm in isolation (self, static
// obstacles, and the object against the arm's non-end-effector links).
inline std::vector<std::pair<ArmConfig, int>> grasping_configs(const Scene& s, int arm,
                                                               const Pose2& object_pose,
                                                               Rng& rng) {
    std::vector<std::pair<ArmConfig, int>> out;
    const ConvexPolygon world_poly = s.object_shape.transformed(object_pose);
    for (int g = 0; g < static_cast<int>(s.grasps.size()); ++g) {
        const Pose2 ee = grasp_ee_pose(s, object_pose, g);
        for (const ArmConfig& q : inverse_kinematics(s.arms[arm], ee, rng)) {
            if (!is_arm_config_valid(s, arm, q)) continue;
            const FkResult fk = forward_kinematics(s.arms[arm], q);
            bool hit = false;
            const double r = s.link_radius();
            for (std::size_t i = 0; i + 1 < fk.links.size(); ++i)
                if (capsule_polygon_hit(fk.links[i], r, world_poly)) { hit = true; break; }
            if (!hit) out.emplace_back(q, g);
        }
    }
    return out;
}

// Semantic validation: start/goal validity and unique pick/place roles.
// Fills scene.picker and scene.placer. Throws SceneError on violation.
inline void validate_scene(Scene& s) {
    if (s.n_arms() < 2)
        throw SceneError("hand-off planning needs at least two arms");

    bool two_faces = false;
    for (const Grasp& g : s.grasps)
        if (g.face != s.grasps[0].face) { two_faces = true; break; }
    if (!two_faces)
        throw SceneError("object needs grasps on at least two distinct faces for hand-offs");

    if (!is_composite_config_valid(s, s.q_init, std::nullopt))
        throw SceneError("initial arm configuration is in collision");
    if (!is_composite_config_valid(s, s.q_goal, std::nullopt))
        throw SceneError("goal arm configuration is in collision");

    // The resting object must be clear of obstacles and of the arms at the
    // matching rest configuration.
    for (int phase = 0; phase < 2; ++phase) {
        const Pose2& pose = phase == 0 ? s.object_init : s.object_goal;
        const std::vector<ArmConfig>& rest = phase == 0 ? s.q_init : s.q_goal;
        const ConvexPolygon world_poly = s.object_shape.transformed(pose);
        std::vector<FkResult> fks;
        for (int a = 0; a < s.n_arms(); ++a)
            fks.push_back(forward_kinematics(s.arms[a], rest[a]));
        if (detail::object_collides(s, world_poly, fks, {}))
            throw SceneError(phase == 0 ? "object initial pose is in collision"
                                        : "object goal pose is in collision");
    }

    Rng probe(hash_str(s.hash, 0x5ca1ab1eULL));
    s.picker = -1;
    s.placer = -1;
    for (int a = 0; a < s.n_arms(); ++a) {
        if (!grasping_configs(s, a, s.object_init, probe).empty()) {
            if (s.picker >= 0)
                throw SceneError("more than one arm can grasp the object at its initial pose");
            s.picker = a;
        }
        if (!grasping_configs(s, a, s.object_goal, probe).empty()) {
            if (s.placer >= 0)
                throw SceneError("more than one arm can grasp the object at its goal pose");
            s.placer = a;
        }
    }
    if (s.picker < 0) throw SceneError("no arm can grasp the object at its initial pose");
    if (s.placer < 0) throw SceneError("no arm can grasp the object at its goal pose");
    if (s.picker == s.placer)
        throw SceneError("the same arm reaches both object poses; no hand-off is needed");
}

inline Scene load_scene(const std::string& path) {
    Scene s = parse_scene(read_json_file(path));
    validate_scene(s);
    return s;
}

}  // namespace mmdrrt
