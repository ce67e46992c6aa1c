#pragma once

// Problem description: arms, static obstacles, the movable object with its
// grasp faces, and start/goal object poses. Includes strict JSON parsing
// (schema version 1) and canonical serialization.

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "arm.hpp"
#include "random.hpp"
#include "se2.hpp"
#include "shapes.hpp"

namespace mmdrrt {

using json = nlohmann::json;

class SceneError : public std::runtime_error {
  public:
    explicit SceneError(const std::string& msg) : std::runtime_error(msg) {}
};

// Rigid grasp: end-effector pose composed with `offset` gives the object
// pose. `face` identifies which side of the object the grasp approaches;
// hand-offs pair grasps on different faces.
struct Grasp {
    Pose2 offset;
    int face = 0;
};

struct Obstacle {
    enum class Kind { Polygon, Circle };
    Kind kind = Kind::Polygon;
    ConvexPolygon polygon;
    Circle circle;
};

struct Scene {
    std::string name;
    double link_thickness = 0.05;  // capsule diameter of every arm link, meters
    double collision_step = 0.05;  // joint-space interpolation resolution, radians

    std::vector<ArmModel> arms;
    std::vector<ArmConfig> q_init;  // start configuration per arm
    std::vector<ArmConfig> q_goal;  // goal configuration per arm

    std::vector<Obstacle> obstacles;

    ConvexPolygon object_shape;  // object-frame vertices, counter-clockwise
    Pose2 object_init;
    Pose2 object_goal;
    std::vector<Grasp> grasps;

    std::vector<Segment> surfaces;  // support surfaces, drawn but not collided

    // Derived during semantic validation: the unique arm that can pick the
    // object at its initial pose, and the unique arm that can place it at
    // the goal pose.
    int picker = -1;
    int placer = -1;

    std::string hash;  // canonical content hash, hex

    int n_arms() const { return static_cast<int>(arms.size()); }
    double link_radius() const { return 0.5 * link_thickness; }
};

namespace detail {

inline const json& require_key(const json& j, const char* key, const char* where) {
    auto it = j.find(key);
    if (it == j.end())
        throw SceneError(std::string("missing key '") + key + "' in " + where);
    return *it;
}

inline void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed,
                                const char* where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) { ok = true; break; }
        if (!ok)
            throw SceneError("unknown key '" + it.key() + "' in " + where);
    }
}

inline double as_number(const json& j, const char* where) {
    if (!j.is_number())
        throw SceneError(std::string("expected a number at ") + where);
    return j.get<double>();
}

inline Vec2 as_vec2(const json& j, const char* where) {
    if (!j.is_array() || j.size() != 2)
        throw SceneError(std::string("expected [x, y] at ") + where);
    return {as_number(j[0], where), as_number(j[1], where)};
}

inline Pose2 as_pose(const json& j, const char* where) {
    if (!j.is_array() || j.size() != 3)
        throw SceneError(std::string("expected [x, y, theta] at ") + where);
    return {as_number(j[0], where), as_number(j[1], where), as_number(j[2], where)};
}

inline std::vector<double> as_doubles(const json& j, const char* where) {
    if (!j.is_array())
        throw SceneError(std::string("expected an array at ") + where);
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& v : j) out.push_back(as_number(v, where));
    return out;
}

inline std::vector<Vec2> as_points(const json& j, const char* where) {
    if (!j.is_array())
        throw SceneError(std::string("expected an array of points at ") + where);
    std::vector<Vec2> out;
    out.reserve(j.size());
    for (const auto& v : j) out.push_back(as_vec2(v, where));
    return out;
}

}  // namespace detail

// Parses and structurally validates a scene document. Semantic checks that
// need collision queries (start validity, pick/place reachability) live in
// validate_scene() in collision.hpp.
inline Scene parse_scene(const json& doc) {
    using namespace detail;
    if (!doc.is_object()) throw SceneError("scene document must be a JSON object");
    reject_unknown_keys(doc,
                        {"schema", "name", "link_thickness", "collision_step", "arms",
                         "obstacles", "object", "surfaces"},
                        "scene");

    const json& schema = require_key(doc, "schema", "scene");
    if (!schema.is_number_integer() || schema.get<int>() != 1)
        throw SceneError("unsupported schema version (expected 1)");

    Scene s;
    if (doc.contains("name")) s.name = doc["name"].get<std::string>();
    if (doc.contains("link_thickness"))
        s.link_thickness = as_number(doc["link_thickness"], "link_thickness");
    if (doc.contains("collision_step"))
        s.collision_step = as_number(doc["collision_step"], "collision_step");
    if (!(s.link_thickness > 0.0)) throw SceneError("link_thickness must be positive");
    if (!(s.collision_step > 0.0)) throw SceneError("collision_step must be positive");

    const json& arms = require_key(doc, "arms", "scene");
    if (!arms.is_array() || arms.empty())
        throw SceneError("'arms' must be a non-empty array");
    for (std::size_t i = 0; i < arms.size(); ++i) {
        const json& a = arms[i];
        const std::string where = "arms[" + std::to_string(i) + "]";
        reject_unknown_keys(a, {"base", "links", "limits", "vmax", "q_init", "q_goal"},
                            where.c_str());
        ArmModel m;
        m.base = as_pose(require_key(a, "base", where.c_str()), where.c_str());
        m.link_lengths = as_doubles(require_key(a, "links", where.c_str()), where.c_str());
        const json& lims = require_key(a, "limits", where.c_str());
        if (!lims.is_array())
            throw SceneError(where + ".limits must be an array");
        for (const auto& lim : lims) {
            if (!lim.is_array() || lim.size() != 2)
                throw SceneError(where + ".limits entries must be [lo, hi]");
            m.joint_limits.push_back({as_number(lim[0], where.c_str()),
                                      as_number(lim[1], where.c_str())});
        }
        m.max_joint_velocity = as_number(require_key(a, "vmax", where.c_str()), where.c_str());
        try {
            m.validate();
        } catch (const std::invalid_argument& e) {
            throw SceneError(where + ": " + e.what());
        }

        ArmConfig init(m.link_lengths.size(), 0.0);
        ArmConfig goal(m.link_lengths.size(), 0.0);
        if (a.contains("q_init")) init = as_doubles(a["q_init"], where.c_str());
        if (a.contains("q_goal")) goal = as_doubles(a["q_goal"], where.c_str());
        if (!m.within_limits(init))
            throw SceneError(where + ".q_init violates joint limits or length");
        if (!m.within_limits(goal))
            throw SceneError(where + ".q_goal violates joint limits or length");

        s.arms.push_back(std::move(m));
        s.q_init.push_back(std::move(init));
        s.q_goal.push_back(std::move(goal));
    }

    if (doc.contains("obstacles")) {
        const json& obs = doc["obstacles"];
        if (!obs.is_array()) throw SceneError("'obstacles' must be an array");
        for (std::size_t i = 0; i < obs.size(); ++i) {
            const json& o = obs[i];
            const std::string where = "obstacles[" + std::to_string(i) + "]";
            const std::string type = require_key(o, "type", where.c_str()).get<std::string>();
            Obstacle ob;
            if (type == "polygon") {
                reject_unknown_keys(o, {"type", "points"}, where.c_str());
                ob.kind = Obstacle::Kind::Polygon;
                ob.polygon.pts = as_points(require_key(o, "points", where.c_str()), where.c_str());
                if (!is_convex_ccw(ob.polygon.pts))
                    throw SceneError(where + ": polygon must be convex counter-clockwise");
            } else if (type == "circle") {
                reject_unknown_keys(o, {"type", "center", "radius"}, where.c_str());
                ob.kind = Obstacle::Kind::Circle;
                ob.circle.center = as_vec2(require_key(o, "center", where.c_str()), where.c_str());
                ob.circle.radius = as_number(require_key(o, "radius", where.c_str()), where.c_str());
                if (!(ob.circle.radius > 0.0))
                    throw SceneError(where + ": radius must be positive");
            } else {
                throw SceneError(where + ": unknown obstacle type '" + type + "'");
            }
            s.obstacles.push_back(std::move(ob));
        }
    }

    const json& obj = require_key(doc, "object", "scene");
    reject_unknown_keys(obj, {"shape", "init", "goal", "grasps"}, "object");
    s.object_shape.pts = as_points(require_key(obj, "shape", "object"), "object.shape");
    if (!is_convex_ccw(s.object_shape.pts))
        throw SceneError("object.shape must be convex counter-clockwise");
    s.object_init = as_pose(require_key(obj, "init", "object"), "object.init");
    s.object_goal = as_pose(require_key(obj, "goal", "object"), "object.goal");
    const json& grasps = require_key(obj, "grasps", "object");
    if (!grasps.is_array() || grasps.empty())
        throw SceneError("object.grasps must be a non-empty array");
    for (std::size_t i = 0; i < grasps.size(); ++i) {
        const json& g = grasps[i];
        const std::string where = "object.grasps[" + std::to_string(i) + "]";
        reject_unknown_keys(g, {"offset", "face"}, where.c_str());
        Grasp gr;
        gr.offset = as_pose(require_key(g, "offset", where.c_str()), where.c_str());
        const json& face = require_key(g, "face", where.c_str());
        if (!face.is_number_integer())
            throw SceneError(where + ".face must be an integer");
        gr.face = face.get<int>();
        s.grasps.push_back(gr);
    }

    if (doc.contains("surfaces")) {
        const json& surf = doc["surfaces"];
        if (!surf.is_array()) throw SceneError("'surfaces' must be an array");
        for (std::size_t i = 0; i < surf.size(); ++i) {
            const std::string where = "surfaces[" + std::to_string(i) + "]";
            const auto pts = as_points(surf[i], where.c_str());
            if (pts.size() != 2)
                throw SceneError(where + " must be a pair of points");
            s.surfaces.push_back({pts[0], pts[1]});
        }
    }

    s.hash = [&doc] {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx",
                      static_cast<unsigned long long>(hash_str(doc.dump())));
        return std::string(buf);
    }();
    return s;
}

inline json scene_to_json(const Scene& s) {
    json doc;
    doc["schema"] = 1;
    doc["name"] = s.name;
    doc["link_thickness"] = s.link_thickness;
    doc["collision_step"] = s.collision_step;
    doc["arms"] = json::array();
    for (int i = 0; i < s.n_arms(); ++i) {
        const ArmModel& m = s.arms[i];
        json a;
        a["base"] = {m.base.x, m.base.y, m.base.theta};
        a["links"] = m.link_lengths;
        a["limits"] = json::array();
        for (const auto& lim : m.joint_limits) a["limits"].push_back({lim[0], lim[1]});
        a["vmax"] = m.max_joint_velocity;
        a["q_init"] = s.q_init[i];
        a["q_goal"] = s.q_goal[i];
        doc["arms"].push_back(std::move(a));
    }
    doc["obstacles"] = json::array();
    for (const Obstacle& o : s.obstacles) {
        json oj;
        if (o.kind == Obstacle::Kind::Polygon) {
            oj["type"] = "polygon";
            oj["points"] = json::array();
            for (const Vec2& p : o.polygon.pts) oj["points"].push_back({p.x, p.y});
        } else {
            oj["type"] = "circle";
            oj["center"] = {o.circle.center.x, o.circle.center.y};
            oj["radius"] = o.circle.radius;
        }
        doc["obstacles"].push_back(std::move(oj));
    }
    json obj;
    obj["shape"] = json::array();
    for (const Vec2& p : s.object_shape.pts) obj["shape"].push_back({p.x, p.y});
    obj["init"] = {s.object_init.x, s.object_init.y, s.object_init.theta};
    obj["goal"] = {s.object_goal.x, s.object_goal.y, s.object_goal.theta};
    obj["grasps"] = json::array();
    for (const Grasp& g : s.grasps) {
        json gj;
        gj["offset"] = {g.offset.x, g.offset.y, g.offset.theta};
        gj["face"] = g.face;
        obj["grasps"].push_back(std::move(gj));
    }
    doc["object"] = std::move(obj);
    doc["surfaces"] = json::array();
    for (const Segment& seg : s.surfaces)
        doc["surfaces"].push_back({{seg.a.x, seg.a.y}, {seg.b.x, seg.b.y}});
    return doc;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SceneError("cannot open file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw SceneError("JSON parse error in " + path + ": " + e.what());
    }
    return doc;
}

}  // namespace mmdrrt
