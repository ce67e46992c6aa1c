#pragma once

// Task structure for pick-and-place via hand-offs: sampled transition
// states (picks, hand-offs, places) and the directed acyclic mode graph
// connecting them through grasp-consistent edges.
//
// A mode names the last transition achieved. While a mode is active the
// object is either resting or attached through the grasp recorded by the
// transition; `held_after` captures that. For more than two arms the
// hand-offs form a chain from the picking arm to the placing arm.

#include <algorithm>
#include <optional>
#include <queue>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "collision.hpp"
#include "random.hpp"
#include "scene.hpp"

namespace mmdrrt {

class InfeasibleProblemError : public std::runtime_error {
  public:
    explicit InfeasibleProblemError(const std::string& msg) : std::runtime_error(msg) {}
};

class InfeasibleModeGraphError : public std::runtime_error {
  public:
    explicit InfeasibleModeGraphError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class ModeKind { Init, Pick, Handoff, Place, Goal };

inline const char* mode_kind_name(ModeKind k) {
    switch (k) {
        case ModeKind::Init: return "init";
        case ModeKind::Pick: return "pick";
        case ModeKind::Handoff: return "handoff";
        case ModeKind::Place: return "place";
        case ModeKind::Goal: return "goal";
    }
    return "?";
}

struct ModeSlot {
    ArmConfig q;
    int grasp = -1;  // index into scene.grasps; -1 for init/goal slots
};

struct ModeNode {
    ModeKind kind = ModeKind::Init;
    int arm_a = -1;  // Pick/Place: acting arm; Handoff: giver
    int arm_b = -1;  // Handoff: receiver
    int stage = -1;  // hand-off chain stage, -1 otherwise
    std::vector<std::optional<ModeSlot>> slots;  // one per arm
    Pose2 object_pose;                           // implied pose at the transition
    std::optional<HeldObject> held_after;        // who carries the object once fired
};

struct TransitionSamples {
    std::vector<ModeNode> picks;
    std::vector<std::vector<ModeNode>> handoff_stages;
    std::vector<ModeNode> places;
};

// Arms visited by the object on its way from picker to placer, inclusive.
inline std::vector<int> handoff_chain(const Scene& s) {
    std::vector<int> chain;
    const int step = s.picker < s.placer ? 1 : -1;
    for (int a = s.picker; a != s.placer; a += step) chain.push_back(a);
    chain.push_back(s.placer);
    return chain;
}

namespace detail {

inline bool same_config(const ArmConfig& a, const ArmConfig& b, double tol = 1e-9) {
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::abs(a[i] - b[i]) > tol) return false;
    return true;
}

// Validity of a two-arm grasp exchange state considered in isolation: the
// pair of arms, the static obstacles, and the object excluded against both
// end-effector links. Other arms are unconstrained by the node and are
// checked at planning time instead.
inline bool handoff_pair_valid(const Scene& s, int arm_a, const ArmConfig& qa, int arm_b,
                               const ArmConfig& qb, const Pose2& object_pose) {
    const double r = s.link_radius();
    const FkResult fa = forward_kinematics(s.arms[arm_a], qa);
    const FkResult fb = forward_kinematics(s.arms[arm_b], qb);
    if (arm_self_collides(fa.links, r) || arm_self_collides(fb.links, r)) return false;
    if (arm_hits_obstacles(s, fa.links) || arm_hits_obstacles(s, fb.links)) return false;
    for (const Segment& sa : fa.links)
        for (const Segment& sb : fb.links)
            if (capsules_hit(sa, r, sb, r)) return false;
    const ConvexPolygon poly = s.object_shape.transformed(object_pose);
    std::vector<FkResult> fks;
    fks.push_back(fa);
    fks.push_back(fb);
    return !object_collides(s, poly, fks, {0, 1});
}

}  // namespace detail

// Samples up to `s` transition states per category. Picks and places come
// from analytic IK at the resting object poses over the declared grasp
// faces; hand-offs sample the giving arm uniformly, derive the object pose
// through its grasp, and solve IK for the receiving arm on an opposite
// face. Every state is collision-validated in isolation. Throws
// InfeasibleProblemError when no valid pick or no valid place exists.
inline TransitionSamples sample_transitions(const Scene& s, int count, Rng& rng) {
    if (count < 1) throw std::invalid_argument("transition sample count must be >= 1");
    TransitionSamples out;
    const std::vector<int> chain = handoff_chain(s);

    const auto sample_grasp_states = [&](int arm, const Pose2& pose,
                                         std::vector<ModeNode>& dst, ModeKind kind) {
        const int max_calls = s.arms[arm].dof() <= 3 ? 1 : 8;
        for (int call = 0; call < max_calls && static_cast<int>(dst.size()) < count; ++call) {
            for (const auto& [q, g] : grasping_configs(s, arm, pose, rng)) {
                if (static_cast<int>(dst.size()) >= count) break;
                bool dup = false;
                for (const ModeNode& n : dst)
                    if (n.slots[arm]->grasp == g && detail::same_config(n.slots[arm]->q, q)) {
                        dup = true;
                        break;
                    }
                if (dup) continue;
                ModeNode node;
                node.kind = kind;
                node.arm_a = arm;
                node.slots.resize(s.n_arms());
                node.slots[arm] = ModeSlot{q, g};
                node.object_pose = held_object_pose(s, forward_kinematics(s.arms[arm], q), g);
                if (kind == ModeKind::Pick) node.held_after = HeldObject{arm, g};
                dst.push_back(std::move(node));
            }
        }
    };

    sample_grasp_states(s.picker, s.object_init, out.picks, ModeKind::Pick);
    sample_grasp_states(s.placer, s.object_goal, out.places, ModeKind::Place);
    if (out.picks.empty())
        throw InfeasibleProblemError("no valid pick state at the initial object pose");
    if (out.places.empty())
        throw InfeasibleProblemError("no valid place state at the goal object pose");

    out.handoff_stages.resize(chain.size() - 1);
    for (std::size_t stage = 0; stage + 1 < chain.size(); ++stage) {
        const int giver = chain[stage];
        const int receiver = chain[stage + 1];
        std::vector<ModeNode>& dst = out.handoff_stages[stage];
        const ArmModel& giver_model = s.arms[giver];
        const long max_attempts = 200L * count;
        ArmConfig qa(giver_model.dof());
        for (long attempt = 0; attempt < max_attempts && static_cast<int>(dst.size()) < count;
             ++attempt) {
            const int ga = static_cast<int>(rng.uniform_index(s.grasps.size()));
            for (int j = 0; j < giver_model.dof(); ++j)
                qa[j] = rng.uniform(giver_model.joint_limits[j][0], giver_model.joint_limits[j][1]);
            if (!is_arm_config_valid(s, giver, qa)) continue;
            const Pose2 pose = held_object_pose(s, forward_kinematics(giver_model, qa), ga);

            bool placed = false;
            for (int gb = 0; gb < static_cast<int>(s.grasps.size()) && !placed; ++gb) {
                if (s.grasps[gb].face == s.grasps[ga].face) continue;
                const Pose2 ee_b = grasp_ee_pose(s, pose, gb);
                for (const ArmConfig& qb : inverse_kinematics(s.arms[receiver], ee_b, rng)) {
                    if (!detail::handoff_pair_valid(s, giver, qa, receiver, qb, pose)) continue;
                    ModeNode node;
                    node.kind = ModeKind::Handoff;
                    node.arm_a = giver;
                    node.arm_b = receiver;
                    node.stage = static_cast<int>(stage);
                    node.slots.resize(s.n_arms());
                    node.slots[giver] = ModeSlot{qa, ga};
                    node.slots[receiver] = ModeSlot{qb, gb};
                    node.object_pose = pose;
                    node.held_after = HeldObject{receiver, gb};
                    dst.push_back(std::move(node));
                    placed = true;
                    break;
                }
            }
        }
    }
    return out;
}

struct ModeGraph {
    std::vector<ModeNode> nodes;
    std::vector<std::vector<int>> succ;
    std::vector<std::vector<int>> pred;
    int init = 0;
    int goal = -1;
    std::vector<double> h;      // makespan-to-goal lower bound over the DAG
    std::vector<int> depth;     // BFS depth from init, -1 when unreachable
};

// Makespan lower bound between two modes: slowest arm constrained in both.
inline double mode_pair_makespan(const Scene& s, const ModeNode& a, const ModeNode& b) {
    double worst = 0.0;
    for (int i = 0; i < s.n_arms(); ++i) {
        if (!a.slots[i] || !b.slots[i]) continue;
        worst = std::max(worst, arm_travel_time(a.slots[i]->q, b.slots[i]->q,
                                                s.arms[i].max_joint_velocity));
    }
    return worst;
}

// Makespan from an arbitrary composite configuration to a mode's slots.
inline double transition_makespan(const Scene& s, const CompositeConfig& q, const ModeNode& node) {
    double worst = 0.0;
    for (int i = 0; i < s.n_arms(); ++i) {
        if (!node.slots[i]) continue;
        worst = std::max(worst, arm_travel_time(q[i], node.slots[i]->q,
                                                s.arms[i].max_joint_velocity));
    }
    return worst;
}

// Assembles the mode graph. Edges require the carrying arm to keep an
// identical grasp across the transition. Throws InfeasibleModeGraphError
// when no Init -> Goal path exists (callers may resample transitions).
inline ModeGraph build_mode_graph(const Scene& s, const TransitionSamples& samples) {
    ModeGraph m;
    const std::vector<int> chain = handoff_chain(s);

    ModeNode init;
    init.kind = ModeKind::Init;
    init.slots.resize(s.n_arms());
    for (int i = 0; i < s.n_arms(); ++i) init.slots[i] = ModeSlot{s.q_init[i], -1};
    init.object_pose = s.object_init;
    m.nodes.push_back(std::move(init));

    std::vector<int> pick_ids, place_ids;
    std::vector<std::vector<int>> stage_ids(samples.handoff_stages.size());
    for (const ModeNode& n : samples.picks) {
        pick_ids.push_back(static_cast<int>(m.nodes.size()));
        m.nodes.push_back(n);
    }
    for (std::size_t k = 0; k < samples.handoff_stages.size(); ++k)
        for (const ModeNode& n : samples.handoff_stages[k]) {
            stage_ids[k].push_back(static_cast<int>(m.nodes.size()));
            m.nodes.push_back(n);
        }
    for (const ModeNode& n : samples.places) {
        place_ids.push_back(static_cast<int>(m.nodes.size()));
        m.nodes.push_back(n);
    }

    ModeNode goal;
    goal.kind = ModeKind::Goal;
    goal.slots.resize(s.n_arms());
    for (int i = 0; i < s.n_arms(); ++i) goal.slots[i] = ModeSlot{s.q_goal[i], -1};
    goal.object_pose = s.object_goal;
    m.goal = static_cast<int>(m.nodes.size());
    m.nodes.push_back(std::move(goal));

    m.succ.resize(m.nodes.size());
    m.pred.resize(m.nodes.size());
    const auto link = [&m](int u, int v) {
        m.succ[u].push_back(v);
        m.pred[v].push_back(u);
    };

    for (int p : pick_ids) link(m.init, p);
    if (!stage_ids.empty()) {
        for (int p : pick_ids)
            for (int h : stage_ids[0])
                if (m.nodes[h].slots[chain[0]]->grasp == m.nodes[p].slots[s.picker]->grasp)
                    link(p, h);
        for (std::size_t k = 0; k + 1 < stage_ids.size(); ++k) {
            const int carrier = chain[k + 1];
            for (int h1 : stage_ids[k])
                for (int h2 : stage_ids[k + 1])
                    if (m.nodes[h1].slots[carrier]->grasp == m.nodes[h2].slots[carrier]->grasp)
                        link(h1, h2);
        }
        for (int h : stage_ids.back())
            for (int pl : place_ids)
                if (m.nodes[pl].slots[s.placer]->grasp == m.nodes[h].slots[s.placer]->grasp)
                    link(h, pl);
    }
    for (int pl : place_ids) link(pl, m.goal);

    // Node order is topological by construction.
    m.h.assign(m.nodes.size(), kInf);
    m.h[m.goal] = 0.0;
    for (int v = static_cast<int>(m.nodes.size()) - 1; v >= 0; --v) {
        for (int w : m.succ[v]) {
            const double cand = mode_pair_makespan(s, m.nodes[v], m.nodes[w]) + m.h[w];
            m.h[v] = std::min(m.h[v], cand);
        }
    }

    m.depth.assign(m.nodes.size(), -1);
    std::queue<int> bfs;
    m.depth[m.init] = 0;
    bfs.push(m.init);
    while (!bfs.empty()) {
        const int v = bfs.front();
        bfs.pop();
        for (int w : m.succ[v])
            if (m.depth[w] < 0) {
                m.depth[w] = m.depth[v] + 1;
                bfs.push(w);
            }
    }

    if (!(m.h[m.init] < kInf))
        throw InfeasibleModeGraphError("mode graph has no init-to-goal path");
    return m;
}

// Exact per-slot satisfaction: transition configurations are injected as
// roadmap vertices, so equality is vertex identity, not a tolerance ball.
inline bool satisfies(const CompositeConfig& q, const ModeNode& node) {
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (!node.slots[i]) continue;
        if (q[i] != node.slots[i]->q) return false;
    }
    return true;
}

// Per-arm target configurations for progressing out of `mode`: slots of the
// best successor(s) under makespan-to-transition plus mode heuristic; arms
// unconstrained in every successor look ahead to their nearest constraining
// descendants (ties resolved toward smaller heuristic-to-goal). A mode
// without successors targets its own slots.
inline std::vector<std::vector<ArmConfig>> traverse_and_get_targets(int mode, const ModeGraph& m,
                                                                    const Scene& s) {
    std::vector<std::vector<ArmConfig>> targets(s.n_arms());
    const ModeNode& node = m.nodes[mode];
    if (m.succ[mode].empty()) {
        for (int i = 0; i < s.n_arms(); ++i)
            if (node.slots[i]) targets[i].push_back(node.slots[i]->q);
        return targets;
    }

    double best_score = kInf;
    std::vector<int> best;
    for (int w : m.succ[mode]) {
        const double score = mode_pair_makespan(s, node, m.nodes[w]) + m.h[w];
        if (score < best_score) {
            best_score = score;
            best.clear();
        }
        if (score == best_score) best.push_back(w);
    }
    if (best.empty()) best = m.succ[mode];  // all scores infinite

    for (int i = 0; i < s.n_arms(); ++i) {
        for (int w : best)
            if (m.nodes[w].slots[i]) {
                bool dup = false;
                for (const ArmConfig& q : targets[i])
                    if (q == m.nodes[w].slots[i]->q) { dup = true; break; }
                if (!dup) targets[i].push_back(m.nodes[w].slots[i]->q);
            }
        if (!targets[i].empty()) continue;

        // Breadth-first lookahead to the nearest constraining descendants.
        std::vector<int> frontier = best;
        std::vector<char> seen(m.nodes.size(), 0);
        for (int w : frontier) seen[w] = 1;
        while (!frontier.empty()) {
            std::vector<int> next;
            for (int u : frontier)
                for (int w : m.succ[u])
                    if (!seen[w]) {
                        seen[w] = 1;
                        next.push_back(w);
                    }
            std::sort(next.begin(), next.end());
            double best_h = kInf;
            for (int w : next)
                if (m.nodes[w].slots[i]) best_h = std::min(best_h, m.h[w]);
            if (best_h < kInf) {
                for (int w : next)
                    if (m.nodes[w].slots[i] && m.h[w] == best_h) {
                        bool dup = false;
                        for (const ArmConfig& q : targets[i])
                            if (q == m.nodes[w].slots[i]->q) { dup = true; break; }
                        if (!dup) targets[i].push_back(m.nodes[w].slots[i]->q);
                    }
                break;
            }
            frontier = std::move(next);
        }
    }
    return targets;
}

inline json mode_graph_to_json(const ModeGraph& m) {
    json doc;
    doc["schema"] = 1;
    doc["init"] = m.init;
    doc["goal"] = m.goal;
    doc["nodes"] = json::array();
    for (const ModeNode& n : m.nodes) {
        json nj;
        nj["kind"] = mode_kind_name(n.kind);
        if (n.arm_a >= 0) nj["arm_a"] = n.arm_a;
        if (n.arm_b >= 0) nj["arm_b"] = n.arm_b;
        if (n.stage >= 0) nj["stage"] = n.stage;
        nj["object_pose"] = {n.object_pose.x, n.object_pose.y, n.object_pose.theta};
        nj["slots"] = json::array();
        for (const auto& slot : n.slots) {
            if (!slot) {
                nj["slots"].push_back(nullptr);
            } else {
                json sj;
                sj["q"] = slot->q;
                if (slot->grasp >= 0) sj["grasp"] = slot->grasp;
                nj["slots"].push_back(std::move(sj));
            }
        }
        doc["nodes"].push_back(std::move(nj));
    }
    doc["edges"] = json::array();
    for (std::size_t u = 0; u < m.succ.size(); ++u)
        for (int v : m.succ[u]) doc["edges"].push_back({static_cast<int>(u), v});
    return doc;
}

}  // namespace mmdrrt
