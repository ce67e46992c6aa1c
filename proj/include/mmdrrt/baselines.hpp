#pragma once

// Comparison planners: sequential task-then-motion variants that commit to
// one mode at a time, and depth-first search over the mode graph with
// makespan-ordered successors and per-query budgets. Both come in two
// flavors distinguished by the underlying motion planner in the full
// composite configuration space: a lazily validated PRM* roadmap with
// memoized edge checks, or an RRT* rebuilt per query.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <unordered_set>
#include <vector>

#include "collision.hpp"
#include "modegraph.hpp"
#include "plan.hpp"
#include "random.hpp"
#include "roadmap.hpp"
#include "scene.hpp"
#include "workclock.hpp"

namespace mmdrrt {

inline constexpr const char* kPlannerTampPrmStar = "tamp-prmstar";
inline constexpr const char* kPlannerTampRrtStar = "tamp-rrtstar";
inline constexpr const char* kPlannerHordPrmStar = "hord-prmstar";
inline constexpr const char* kPlannerHordRrtStar = "hord-rrtstar";

enum class MotionPlannerKind { CompositePrmStar, CompositeRrtStar };

// Max-over-arms travel time between two composite configurations.
inline double composite_travel_time(const Scene& s, const CompositeConfig& a,
                                    const CompositeConfig& b) {
    double t = 0.0;
    for (int i = 0; i < s.n_arms(); ++i)
        t = std::max(t, arm_travel_time(a[i], b[i], s.arms[i].max_joint_velocity));
    return t;
}

// Largest single-joint displacement between two composite configurations,
// the distance the RRT* steering step is expressed in.
inline double composite_joint_span(const CompositeConfig& a, const CompositeConfig& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, max_joint_displacement(a[i], b[i]));
    return d;
}

inline int total_dof(const Scene& s) {
    int d = 0;
    for (const ArmModel& arm : s.arms) d += arm.dof();
    return d;
}

// ---------------------------------------------------------------------------
// Composite roadmap with lazy, per-held-state validity memoization.

struct CompositeRoadmap {
    std::vector<CompositeConfig> vertices;
    std::vector<std::vector<std::pair<int, double>>> adj;  // sorted by neighbor id
    std::uint64_t seed = 0;

    struct HeldMemo {
        std::vector<std::uint8_t> vertex_state;  // 0 unknown, 1 valid, 2 invalid
        std::unordered_set<std::uint64_t> dead_edges;
        std::unordered_set<std::uint64_t> ok_edges;
    };
    mutable std::map<int, HeldMemo> memo;

    int size() const { return static_cast<int>(vertices.size()); }

    static std::uint64_t edge_key(int u, int v) {
        if (u > v) std::swap(u, v);
        return (static_cast<std::uint64_t>(u) << 32) | static_cast<std::uint64_t>(v);
    }

    HeldMemo& memo_for(const std::optional<HeldObject>& held) const {
        const int key = held ? held->arm * 256 + held->grasp : -1;
        HeldMemo& m = memo[key];
        if (m.vertex_state.empty()) m.vertex_state.assign(vertices.size(), 0);
        return m;
    }
};

inline CompositeConfig sample_composite_config(const Scene& s, Rng& rng) {
    CompositeConfig q(s.n_arms());
    for (int a = 0; a < s.n_arms(); ++a) {
        q[a].resize(s.arms[a].dof());
        for (int j = 0; j < s.arms[a].dof(); ++j)
            q[a][j] = rng.uniform(s.arms[a].joint_limits[j][0], s.arms[a].joint_limits[j][1]);
    }
    return q;
}

// Vertices are drawn uniformly within joint limits with no collision
// filtering; all validity is deferred to query time and memoized.
inline CompositeRoadmap build_composite_roadmap(const Scene& s, int count, std::uint64_t seed) {
    CompositeRoadmap rm;
    rm.seed = seed;
    Rng rng(seed);
    rm.vertices.reserve(count);
    for (int i = 0; i < count; ++i) rm.vertices.push_back(sample_composite_config(s, rng));

    const int k = prm_star_k(count, total_dof(s));
    rm.adj.assign(count, {});
    std::vector<std::pair<double, int>> order(count);
    std::vector<std::vector<int>> knn(count);
    for (int i = 0; i < count; ++i) {
        for (int j = 0; j < count; ++j)
            order[j] = {i == j ? kInf : composite_travel_time(s, rm.vertices[i], rm.vertices[j]),
                        j};
        const int take = std::min(k, count - 1);
        std::partial_sort(order.begin(), order.begin() + take, order.end());
        knn[i].reserve(take);
        for (int j = 0; j < take; ++j) knn[i].push_back(order[j].second);
    }
    for (int i = 0; i < count; ++i)
        for (int j : knn[i]) {
            const double w = composite_travel_time(s, rm.vertices[i], rm.vertices[j]);
            auto& row = rm.adj[i];
            const auto pos = std::lower_bound(row.begin(), row.end(), std::make_pair(j, -kInf));
            if (pos == row.end() || pos->first != j) {
                row.insert(pos, {j, w});
                auto& back = rm.adj[j];
                back.insert(std::lower_bound(back.begin(), back.end(), std::make_pair(i, -kInf)),
                            {i, w});
            }
        }
    return rm;
}

struct CompositeQueryResult {
    bool success = false;
    int goal_index = -1;
    std::vector<CompositeConfig> path;  // start ... target inclusive
};

namespace detail {

// Lazy shortest-path query over the composite roadmap plus per-query
// injected start/target vertices. Candidate paths are validated lazily;
// failures knock out the offending vertex or edge (memoized per held state)
// and the search repeats until a fully validated path emerges or the graph
// or budget is exhausted. Settled heap pops advance the work clock so graph
// search consumes budget like collision checking does.
inline CompositeQueryResult lazy_prm_query(const Scene& s, const CompositeRoadmap& rm,
                                           const CompositeConfig& start,
                                           const std::vector<CompositeConfig>& targets,
                                           const std::optional<HeldObject>& held,
                                           WorkClock& clock, double deadline) {
    CompositeQueryResult out;
    if (!is_composite_config_valid(s, start, held, &clock)) return out;

    auto& memo = rm.memo_for(held);
    const int n_base = rm.size();
    const int n_total = n_base + 1 + static_cast<int>(targets.size());
    const int start_id = n_base;
    const auto target_id = [&](int t) { return n_base + 1 + t; };

    // Injected adjacency overlay: start and targets each link to their
    // k-nearest base vertices (and to each other when close enough).
    std::vector<std::vector<std::pair<int, double>>> extra(n_total);
    const int k = prm_star_k(n_total, total_dof(s));
    const auto inject = [&](int id, const CompositeConfig& q) {
        std::vector<std::pair<double, int>> order(n_base);
        for (int j = 0; j < n_base; ++j)
            order[j] = {composite_travel_time(s, q, rm.vertices[j]), j};
        const int take = std::min(k, n_base);
        std::partial_sort(order.begin(), order.begin() + take, order.end());
        for (int j = 0; j < take; ++j) {
            extra[id].push_back({order[j].second, order[j].first});
            extra[order[j].second].push_back({id, order[j].first});
        }
    };
    inject(start_id, start);
    for (int t = 0; t < static_cast<int>(targets.size()); ++t) {
        inject(target_id(t), targets[t]);
        const double w = composite_travel_time(s, start, targets[t]);
        extra[start_id].push_back({target_id(t), w});
        extra[target_id(t)].push_back({start_id, w});
    }

    const auto config_at = [&](int id) -> const CompositeConfig& {
        if (id < n_base) return rm.vertices[id];
        if (id == start_id) return start;
        return targets[id - n_base - 1];
    };

    // Per-query validity for injected vertices/edges (not memoized).
    std::vector<std::uint8_t> extra_vertex_state(n_total, 0);
    extra_vertex_state[start_id] = 1;
    std::unordered_set<std::uint64_t> extra_dead, extra_ok;

    const auto vertex_state = [&](int id) -> std::uint8_t {
        return id < n_base ? memo.vertex_state[id] : extra_vertex_state[id];
    };
    const auto set_vertex_state = [&](int id, std::uint8_t v) {
        (id < n_base ? memo.vertex_state[id] : extra_vertex_state[id]) = v;
    };
    const auto edge_dead = [&](int u, int v) {
        const std::uint64_t key = CompositeRoadmap::edge_key(u, v);
        return (u < n_base && v < n_base) ? memo.dead_edges.count(key) > 0
                                          : extra_dead.count(key) > 0;
    };
    const auto edge_known_ok = [&](int u, int v) {
        const std::uint64_t key = CompositeRoadmap::edge_key(u, v);
        return (u < n_base && v < n_base) ? memo.ok_edges.count(key) > 0
                                          : extra_ok.count(key) > 0;
    };
    const auto mark_edge = [&](int u, int v, bool ok) {
        const std::uint64_t key = CompositeRoadmap::edge_key(u, v);
        if (u < n_base && v < n_base)
            (ok ? memo.ok_edges : memo.dead_edges).insert(key);
        else
            (ok ? extra_ok : extra_dead).insert(key);
    };

    std::vector<double> dist(n_total);
    std::vector<int> prev(n_total);
    while (clock.seconds() < deadline) {
        // Dijkstra to the nearest target over the currently usable graph.
        std::fill(dist.begin(), dist.end(), kInf);
        std::fill(prev.begin(), prev.end(), -1);
        std::priority_queue<std::pair<double, int>, std::vector<std::pair<double, int>>,
                            std::greater<>> heap;
        dist[start_id] = 0.0;
        heap.push({0.0, start_id});
        int reached = -1;
        while (!heap.empty()) {
            const auto [d, u] = heap.top();
            heap.pop();
            if (d > dist[u]) continue;
            clock.tick();
            if (u >= n_base + 1) {
                reached = u;
                break;
            }
            const auto relax = [&](int v, double w) {
                if (vertex_state(v) == 2 || edge_dead(u, v)) return;
                if (d + w < dist[v]) {
                    dist[v] = d + w;
                    prev[v] = u;
                    heap.push({dist[v], v});
                }
            };
            if (u < n_base)
                for (const auto& [v, w] : rm.adj[u]) relax(v, w);
            for (const auto& [v, w] : extra[u]) relax(v, w);
        }
        if (reached < 0) return out;  // graph exhausted for this held state

        std::vector<int> path;
        for (int v = reached; v >= 0; v = prev[v]) path.push_back(v);
        std::reverse(path.begin(), path.end());

        // Validate lazily: vertices first, then edge interiors.
        bool repaired = false;
        for (int id : path) {
            if (vertex_state(id) != 0) continue;
            const bool ok = is_composite_config_valid(s, config_at(id), held, &clock);
            set_vertex_state(id, ok ? 1 : 2);
            if (!ok) {
                repaired = true;
                break;
            }
        }
        if (repaired) continue;
        // Edge interiors are certified at half the scene step, the resolution
        // the downstream validator re-checks, so returned paths survive it.
        for (std::size_t i = 0; i + 1 < path.size() && !repaired; ++i) {
            const int u = path[i], v = path[i + 1];
            if (edge_known_ok(u, v)) continue;
            const bool ok = is_composite_edge_valid(s, config_at(u), config_at(v), held, &clock,
                                                    0.5 * s.collision_step);
            mark_edge(u, v, ok);
            if (!ok) repaired = true;
        }
        if (repaired) continue;

        out.success = true;
        out.goal_index = reached - n_base - 1;
        for (int id : path) out.path.push_back(config_at(id));
        return out;
    }
    return out;  // budget exhausted
}

// RRT* in the composite space: steering step collision_step * total dof,
// k-nearest parent choice and rewiring under the makespan metric, direct
// target connection whenever a new node lands within one steering step.
// Returns on the first target reached (reruns provide the anytime behavior).
inline CompositeQueryResult rrt_query(const Scene& s, const CompositeConfig& start,
                                      const std::vector<CompositeConfig>& targets,
                                      const std::optional<HeldObject>& held, WorkClock& clock,
                                      double deadline, Rng& rng) {
    CompositeQueryResult out;
    if (!is_composite_config_valid(s, start, held, &clock)) return out;
    const double step = s.collision_step * total_dof(s);

    std::vector<CompositeConfig> nodes{start};
    std::vector<int> parent{-1};
    std::vector<double> cost{0.0};

    const auto steer = [&](const CompositeConfig& from, const CompositeConfig& to) {
        const double span = composite_joint_span(from, to);
        if (span <= step) return to;
        const double t = step / span;
        CompositeConfig q = from;
        for (std::size_t a = 0; a < q.size(); ++a)
            for (std::size_t j = 0; j < q[a].size(); ++j)
                q[a][j] = from[a][j] * (1.0 - t) + to[a][j] * t;
        return q;
    };

    while (clock.seconds() < deadline) {
        clock.tick();
        CompositeConfig sample;
        if (rng.bernoulli(0.1))
            sample = targets[rng.uniform_index(targets.size())];
        else
            sample = sample_composite_config(s, rng);

        int nearest = 0;
        double best_d = kInf;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const double d = composite_travel_time(s, nodes[i], sample);
            if (d < best_d) {
                best_d = d;
                nearest = static_cast<int>(i);
            }
        }
        const CompositeConfig q_new = steer(nodes[nearest], sample);
        if (composite_joint_span(nodes[nearest], q_new) == 0.0) continue;
        if (!is_composite_config_valid(s, q_new, held, &clock)) continue;

        // Parent choice among the k best candidates by cost-through-them;
        // the first with a valid connecting edge wins.
        const int k = prm_star_k(static_cast<int>(nodes.size()) + 1, total_dof(s));
        std::vector<std::pair<double, int>> order;
        order.reserve(nodes.size());
        for (std::size_t i = 0; i < nodes.size(); ++i)
            order.push_back({composite_travel_time(s, nodes[i], q_new), static_cast<int>(i)});
        const int take = std::min<int>(k, static_cast<int>(order.size()));
        std::partial_sort(order.begin(), order.begin() + take, order.end(),
                          [&](const auto& a, const auto& b) {
                              return std::make_pair(cost[a.second] + a.first, a.second) <
                                     std::make_pair(cost[b.second] + b.first, b.second);
                          });
        int chosen = -1;
        double chosen_cost = 0.0;
        for (int i = 0; i < take; ++i) {
            const auto& [dur, id] = order[i];
            if (is_composite_edge_valid(s, nodes[id], q_new, held, &clock)) {
                chosen = id;
                chosen_cost = cost[id] + dur;
                break;
            }
        }
        if (chosen < 0) continue;
        const int new_id = static_cast<int>(nodes.size());
        nodes.push_back(q_new);
        parent.push_back(chosen);
        cost.push_back(chosen_cost);

        // Rewire the same neighborhood through the new node.
        for (int i = 0; i < take; ++i) {
            const auto& [dur, id] = order[i];
            if (id == chosen) continue;
            if (cost[new_id] + dur >= cost[id]) continue;
            if (!is_composite_edge_valid(s, nodes[new_id], nodes[id], held, &clock)) continue;
            parent[id] = new_id;
            cost[id] = cost[new_id] + dur;
        }

        // Direct target connection from the new node. The assembled path is
        // re-certified at half the scene step (the validator's resolution)
        // before it is returned; on a grazing contact the search keeps
        // growing instead.
        for (std::size_t t = 0; t < targets.size(); ++t) {
            if (composite_joint_span(q_new, targets[t]) > step) continue;
            if (composite_joint_span(q_new, targets[t]) > 0.0 &&
                !is_composite_edge_valid(s, q_new, targets[t], held, &clock))
                continue;
            std::vector<int> chain;
            for (int v = new_id; v >= 0; v = parent[v]) chain.push_back(v);
            std::reverse(chain.begin(), chain.end());
            std::vector<CompositeConfig> path;
            for (int v : chain) path.push_back(nodes[v]);
            if (composite_joint_span(q_new, targets[t]) > 0.0) path.push_back(targets[t]);
            bool certified = true;
            for (std::size_t i = 0; i + 1 < path.size() && certified; ++i)
                certified = is_composite_edge_valid(s, path[i], path[i + 1], held, &clock,
                                                    0.5 * s.collision_step);
            if (!certified) continue;
            out.success = true;
            out.goal_index = static_cast<int>(t);
            out.path = std::move(path);
            return out;
        }
    }
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Shared baseline scaffolding.

struct BaselineConfig {
    MotionPlannerKind motion = MotionPlannerKind::CompositePrmStar;
    double time_limit = 30.0;
    double per_query_budget = 10.0;  // DFS variant only
    int composite_vertices = 5000;   // PRM* variant only
    // Return at the first solution instead of refining; latency probes only.
    bool stop_after_first = false;
};

namespace detail {

// Mirror of the tree planner's progress bookkeeping for uniform records.
struct BaselineRun {
    const Scene* scene = nullptr;
    const ModeGraph* modes = nullptr;
    WorkClock clock;
    double best_cost = kInf;
    double reported_cost = kInf;
    std::optional<Plan> best_plan;
    double initial_time = -1.0;
    std::vector<std::pair<double, double>> raw_progress;  // (t, best)
    double next_grid = 0.1;
    std::vector<char> mode_reached;
    int modes_expanded = 0;

    void init(const Scene& s, const ModeGraph& m) {
        scene = &s;
        modes = &m;
        mode_reached.assign(m.nodes.size(), 0);
        reach(m.init);
    }
    void reach(int mode) {
        if (!mode_reached[mode]) {
            mode_reached[mode] = 1;
            ++modes_expanded;
        }
    }
    void grid() {
        while (next_grid <= clock.seconds()) {
            if (reported_cost < kInf) raw_progress.push_back({next_grid, reported_cost});
            next_grid += 0.1;
        }
    }
    void improved() {
        if (initial_time < 0.0) initial_time = clock.seconds();
        // Flush grid stamps due before this improvement at the cost that
        // held then, so the log stays time-ordered.
        grid();
        raw_progress.push_back({clock.seconds(), best_cost});
        reported_cost = best_cost;
    }
};

// Stage target: constrained arms at their slot configurations, every
// underspecified arm parked at its home (initial) configuration.
inline CompositeConfig stage_target(const Scene& s, const ModeNode& node) {
    CompositeConfig q(s.n_arms());
    for (int a = 0; a < s.n_arms(); ++a)
        q[a] = node.slots[a] ? node.slots[a]->q : s.q_init[a];
    return q;
}

inline void append_stage(Plan& plan, const Scene& s, const ModeGraph& m, int mode,
                         const std::vector<CompositeConfig>& path) {
    double t = plan.waypoints.empty() ? 0.0 : plan.waypoints.back().t;
    if (plan.waypoints.empty()) plan.waypoints.push_back({0.0, path.front()});
    for (std::size_t i = 1; i < path.size(); ++i) {
        const double dur = composite_travel_time(s, path[i - 1], path[i]);
        if (dur == 0.0) continue;
        t += dur;
        plan.waypoints.push_back({t, path[i]});
    }
    const ModeNode& node = m.nodes[mode];
    if (node.kind == ModeKind::Init || node.kind == ModeKind::Goal) return;
    TransitionMark mark;
    mark.t = t;
    mark.waypoint = static_cast<int>(plan.waypoints.size()) - 1;
    mark.kind = node.kind;
    mark.arm_a = node.arm_a;
    mark.arm_b = node.arm_b;
    if (node.arm_a >= 0 && node.slots[node.arm_a]) mark.grasp_a = node.slots[node.arm_a]->grasp;
    if (node.arm_b >= 0 && node.slots[node.arm_b]) mark.grasp_b = node.slots[node.arm_b]->grasp;
    plan.marks.push_back(mark);
}

inline CompositeQueryResult motion_query(const Scene& s, const CompositeRoadmap* rm,
                                         MotionPlannerKind kind, const CompositeConfig& start,
                                         const std::vector<CompositeConfig>& targets,
                                         const std::optional<HeldObject>& held, WorkClock& clock,
                                         double deadline, Rng& rng) {
    if (kind == MotionPlannerKind::CompositePrmStar)
        return lazy_prm_query(s, *rm, start, targets, held, clock, deadline);
    return rrt_query(s, start, targets, held, clock, deadline, rng);
}

}  // namespace detail

struct BaselineResult {
    std::optional<Plan> plan;
    std::vector<std::pair<double, double>> progress;  // (t, best cost)
    double initial_solution_time = -1.0;
    int modes_expanded = 0;
    double elapsed = 0.0;
};

// Sequential task-then-motion planning: from the current mode, plan one
// composite motion to the nearest reachable adjacent mode's stage target,
// commit, and repeat until the goal. No backtracking across stages. The
// RRT* flavor reruns the whole pipeline while time remains, keeping the
// best plan found.
inline BaselineResult run_tamp_sequential(const Scene& s, const ModeGraph& m,
                                          const CompositeRoadmap* rm, const BaselineConfig& cfg,
                                          std::uint64_t seed) {
    detail::BaselineRun run;
    run.init(s, m);
    Rng rng(seed);
    const char* name = cfg.motion == MotionPlannerKind::CompositePrmStar ? kPlannerTampPrmStar
                                                                         : kPlannerTampRrtStar;

    int attempt = 0;
    do {
        Plan plan;
        plan.planner = name;
        plan.seed = seed;
        plan.scene_hash = s.hash;
        CompositeConfig current = s.q_init;
        int mode = m.init;
        plan.waypoints.push_back({0.0, current});
        Rng attempt_rng = rng.fork(0xa77e0000 + attempt);
        bool failed = false;

        while (mode != m.goal) {
            const auto& succ = m.succ[mode];
            if (succ.empty()) {
                failed = true;
                break;
            }
            std::vector<CompositeConfig> targets;
            targets.reserve(succ.size());
            for (int w : succ) targets.push_back(detail::stage_target(s, m.nodes[w]));
            const auto held = m.nodes[mode].held_after;
            const auto res =
                detail::motion_query(s, rm, cfg.motion, current, targets, held, run.clock,
                                     cfg.time_limit, attempt_rng);
            run.grid();
            if (!res.success) {
                failed = true;
                break;
            }
            const int w = succ[res.goal_index];
            run.reach(w);
            detail::append_stage(plan, s, m, w, res.path);
            current = res.path.back();
            mode = w;
        }

        if (!failed && mode == m.goal) {
            plan.cost = plan.waypoints.back().t;
            if (plan.cost < run.best_cost) {
                run.best_cost = plan.cost;
                run.best_plan = std::move(plan);
                run.improved();
            }
        }
        ++attempt;
        run.grid();
        // The roadmap variant is a single deterministic pass; the sampling
        // variant is rerun from scratch while budget remains.
    } while (cfg.motion == MotionPlannerKind::CompositeRrtStar &&
             !run.clock.expired(cfg.time_limit) && !(cfg.stop_after_first && run.best_plan));

    BaselineResult out;
    out.plan = std::move(run.best_plan);
    out.progress = std::move(run.raw_progress);
    out.initial_solution_time = run.initial_time;
    out.modes_expanded = run.modes_expanded;
    out.elapsed = run.clock.seconds();
    return out;
}

// Depth-first search over the mode graph with successors ordered by the
// pairwise makespan to their stage targets. Each motion query gets its own
// budget; failures backtrack; the search keeps running (and improving) until
// the overall time limit.
inline BaselineResult run_hord_dfs(const Scene& s, const ModeGraph& m, const CompositeRoadmap* rm,
                                   const BaselineConfig& cfg, std::uint64_t seed) {
    detail::BaselineRun run;
    run.init(s, m);
    Rng rng(seed);
    const char* name = cfg.motion == MotionPlannerKind::CompositePrmStar ? kPlannerHordPrmStar
                                                                         : kPlannerHordRrtStar;
    BaselineResult out;
    if (cfg.per_query_budget <= 0.0) {
        out.modes_expanded = run.modes_expanded;
        return out;
    }

    struct Frame {
        int mode;
        CompositeConfig config;
        std::vector<std::pair<double, int>> ordered;  // (makespan, successor)
        std::size_t next = 0;
        std::vector<CompositeConfig> stage_path;  // path that reached this frame
    };

    std::uint64_t query_counter = 0;
    std::vector<Frame> stack;
    const auto make_frame = [&](int mode, CompositeConfig config,
                                std::vector<CompositeConfig> path) {
        Frame f;
        f.mode = mode;
        f.config = std::move(config);
        f.stage_path = std::move(path);
        for (int w : m.succ[mode])
            f.ordered.push_back(
                {composite_travel_time(s, f.config, detail::stage_target(s, m.nodes[w])), w});
        std::sort(f.ordered.begin(), f.ordered.end());
        return f;
    };
    stack.push_back(make_frame(m.init, s.q_init, {}));

    while (!stack.empty() && !run.clock.expired(cfg.time_limit)) {
        Frame& top = stack.back();
        if (top.mode == m.goal || top.next >= top.ordered.size()) {
            if (top.mode == m.goal) {
                Plan plan;
                plan.planner = name;
                plan.seed = seed;
                plan.scene_hash = s.hash;
                for (std::size_t i = 1; i < stack.size(); ++i)
                    detail::append_stage(plan, s, m, stack[i].mode, stack[i].stage_path);
                plan.cost = plan.waypoints.back().t;
                if (plan.cost < run.best_cost) {
                    run.best_cost = plan.cost;
                    run.best_plan = std::move(plan);
                    run.improved();
                }
                if (cfg.stop_after_first) break;
            }
            stack.pop_back();  // backtrack; DFS keeps exploring for improvements
            continue;
        }
        const int w = top.ordered[top.next++].second;
        const auto held = m.nodes[top.mode].held_after;
        const std::vector<CompositeConfig> targets{detail::stage_target(s, m.nodes[w])};
        Rng query_rng = rng.fork(0xd5f50000 + query_counter++);
        const double deadline =
            std::min(cfg.time_limit, run.clock.seconds() + cfg.per_query_budget);
        const auto res = detail::motion_query(s, rm, cfg.motion, top.config, targets, held,
                                              run.clock, deadline, query_rng);
        run.grid();
        if (!res.success) continue;
        run.reach(w);
        stack.push_back(make_frame(w, res.path.back(), res.path));
    }

    out.plan = std::move(run.best_plan);
    out.progress = std::move(run.raw_progress);
    out.initial_solution_time = run.initial_time;
    out.modes_expanded = run.modes_expanded;
    out.elapsed = run.clock.seconds();
    return out;
}

}  // namespace mmdrrt
