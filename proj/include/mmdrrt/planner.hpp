#pragma once

// Anytime multi-modal search over the implicit tensor-product roadmap and
// the mode graph. The tree grows over <tensor vertex, mode> pairs: uniform
// random neighbors seed exploration, a greedy oracle sustains progress
// toward the best transitions, rewiring keeps the tree asymptotically
// optimal within each mode, and zero-duration transition edges advance
// modes at satisfying configurations. Plans improve monotonically until the
// (virtual) time limit.

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <functional>
#include <optional>
#include <queue>
#include <unordered_map>
#include <vector>

#include "collision.hpp"
#include "modegraph.hpp"
#include "plan.hpp"
#include "random.hpp"
#include "roadmap.hpp"
#include "scene.hpp"
#include "workclock.hpp"

namespace mmdrrt {

inline constexpr const char* kPlannerMmDrrtStar = "mm-drrtstar";

// Builds the mode graph, resampling transitions (with derived seeds) when a
// sampled set happens to admit no init-to-goal path.
inline ModeGraph build_mode_graph_with_retries(const Scene& s, int count, std::uint64_t seed,
                                               int retries = 5) {
    for (int attempt = 0;; ++attempt) {
        Rng rng(hash_combine(seed, 0x6d6f6465 + attempt));
        try {
            const TransitionSamples samples = sample_transitions(s, count, rng);
            return build_mode_graph(s, samples);
        } catch (const InfeasibleModeGraphError&) {
            if (attempt + 1 >= retries) throw;
        }
    }
}

// Everything the tree search needs, precomputed: per-arm roadmaps with all
// transition configurations injected, slot configurations resolved to
// vertex ids, and per-mode oracle target sets.
struct PlanningProblem {
    const Scene* scene = nullptr;
    ModeGraph modes;
    std::vector<ArmRoadmap> roadmaps;
    TensorVertex v_init;
    TensorVertex v_goal;
    std::vector<std::vector<int>> slot_vertex;                // [mode][arm] -> id or -1
    std::vector<std::vector<std::vector<int>>> mode_targets;  // [mode][arm] -> target ids
    std::vector<char> goal_adjacent;                          // mode -> has goal successor
};

inline PlanningProblem build_planning_problem(const Scene& s, ModeGraph modes,
                                              int roadmap_vertices, std::uint64_t seed) {
    PlanningProblem p;
    p.scene = &s;
    p.modes = std::move(modes);
    for (int a = 0; a < s.n_arms(); ++a)
        p.roadmaps.push_back(
            build_arm_roadmap(s, a, roadmap_vertices, hash_combine(seed, 0x726d00 + a)));

    // Exact-config lookup so identical slot configurations share a vertex.
    std::vector<std::unordered_map<std::uint64_t, std::vector<int>>> lookup(s.n_arms());
    const auto config_hash = [](const ArmConfig& q) {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (double v : q) {
            std::uint64_t bits;
            static_assert(sizeof bits == sizeof v);
            std::memcpy(&bits, &v, sizeof bits);
            h = mix64(h ^ bits);
        }
        return h;
    };
    const auto resolve = [&](int arm, const ArmConfig& q) {
        auto& bucket = lookup[arm][config_hash(q)];
        for (int id : bucket)
            if (p.roadmaps[arm].vertices[id] == q) return id;
        const int id = inject_vertex(s, p.roadmaps[arm], q);
        bucket.push_back(id);
        return id;
    };

    p.v_init.resize(s.n_arms());
    p.v_goal.resize(s.n_arms());
    for (int a = 0; a < s.n_arms(); ++a) p.v_init[a] = resolve(a, s.q_init[a]);
    for (int a = 0; a < s.n_arms(); ++a) p.v_goal[a] = resolve(a, s.q_goal[a]);

    const int n_modes = static_cast<int>(p.modes.nodes.size());
    p.slot_vertex.assign(n_modes, std::vector<int>(s.n_arms(), -1));
    for (int m = 0; m < n_modes; ++m)
        for (int a = 0; a < s.n_arms(); ++a)
            if (p.modes.nodes[m].slots[a])
                p.slot_vertex[m][a] = resolve(a, p.modes.nodes[m].slots[a]->q);

    p.mode_targets.resize(n_modes);
    for (int m = 0; m < n_modes; ++m) {
        const auto target_cfgs = traverse_and_get_targets(m, p.modes, s);
        p.mode_targets[m].resize(s.n_arms());
        for (int a = 0; a < s.n_arms(); ++a)
            for (const ArmConfig& q : target_cfgs[a])
                p.mode_targets[m][a].push_back(resolve(a, q));
    }

    p.goal_adjacent.assign(n_modes, 0);
    for (int m = 0; m < n_modes; ++m)
        for (int w : p.modes.succ[m])
            if (w == p.modes.goal) p.goal_adjacent[m] = 1;
    return p;
}

struct TreeNode {
    TensorVertex v;
    int mode = 0;
    int parent = -1;
    double edge_dur = 0.0;   // duration of the edge from the parent
    double cost = 0.0;       // cost-to-come
    bool transition = false; // edge from parent is a zero-duration mode switch
    double h_bound = 0.0;    // static admissible bound to goal from (v, mode)
};

struct SearchTree {
    std::vector<TreeNode> nodes;
    std::vector<std::vector<int>> children;
    std::unordered_map<std::uint64_t, std::vector<int>> index;    // (v, mode) uniqueness
    std::unordered_map<std::uint64_t, std::vector<int>> buckets;  // (mode, v[0]) -> ids
    std::vector<std::vector<int>> by_depth;                       // mode depth -> ids
    int max_depth = 0;
    std::vector<char> mode_present;
    int modes_expanded = 0;

    int size() const { return static_cast<int>(nodes.size()); }
};

struct ProgressPoint {
    double t = 0.0;
    double cost = 0.0;
    int tree_size = 0;
    int modes_expanded = 0;
};

struct PlanResult {
    std::optional<Plan> plan;
    std::vector<ProgressPoint> progress;
    double initial_solution_time = -1.0;
    int tree_size = 0;
    int modes_expanded = 0;
    std::uint64_t iterations = 0;
    double elapsed = 0.0;
};

struct PlannerConfig {
    double time_limit = 30.0;
    double goal_bias = 0.1;
    bool branch_and_bound = true;
    // Return as soon as the first solution lands instead of refining it for
    // the rest of the budget. Off everywhere except latency measurements.
    bool stop_after_first = false;
    // Test instrumentation: called after every successful node addition.
    std::function<void(const SearchTree&, int)> post_add;
};

class MmDrrtStar {
  public:
    MmDrrtStar(const PlanningProblem& problem, const PlannerConfig& config, std::uint64_t seed)
        : p_(problem), s_(*problem.scene), cfg_(config), rng_(seed), seed_(seed) {}

    PlanResult run() {
        init_tree();
        PlanResult result;
        if (cfg_.time_limit > 0.0) {
            while (!clock_.expired(cfg_.time_limit)) {
                ++iterations_;
                clock_.tick();  // floor cost per iteration; keeps idle iterations finite
                const std::optional<int> grown = expand(v_last_);
                v_last_ = grown;
                connect_to_target();
                emit_progress();
                if (cfg_.stop_after_first && best_plan_) break;
            }
        }
        result.plan = best_plan_;
        result.progress = std::move(progress_);
        result.initial_solution_time = initial_time_;
        result.tree_size = tree_.size();
        result.modes_expanded = tree_.modes_expanded;
        result.iterations = iterations_;
        result.elapsed = clock_.seconds();
        return result;
    }

    const SearchTree& tree() const { return tree_; }
    WorkClock& clock() { return clock_; }

  private:
    const PlanningProblem& p_;
    const Scene& s_;
    PlannerConfig cfg_;
    Rng rng_;
    std::uint64_t seed_;
    WorkClock clock_;

    SearchTree tree_;
    std::optional<int> v_last_;
    std::uint64_t iterations_ = 0;

    std::optional<Plan> best_plan_;
    double best_cost_ = kInf;
    int goal_node_ = -1;
    int audited_node_ = -1;      // last goal node whose path failed the audit
    double audited_cost_ = kInf;  // ... at this cost-to-come
    double initial_time_ = -1.0;

    // Direct goal-connection bookkeeping (lazy min-heap over place nodes).
    std::priority_queue<std::pair<double, int>, std::vector<std::pair<double, int>>,
                        std::greater<>> connect_heap_;
    int last_attempt_node_ = -1;
    double last_attempt_cost_ = kInf;
    struct WalkSuffix {
        bool feasible = false;
        std::vector<TensorVertex> steps;
        std::vector<double> durations;
        double total = 0.0;
    };
    std::unordered_map<int, WalkSuffix> walk_cache_;

    std::vector<ProgressPoint> progress_;
    double next_grid_ = 0.1;
    double reported_cost_ = kInf;

    // ---- bookkeeping ----------------------------------------------------

    static std::uint64_t key_of(const TensorVertex& v, int mode) {
        std::uint64_t h = mix64(0x746b6579ULL + static_cast<std::uint64_t>(mode));
        for (int x : v) h = hash_combine(h, static_cast<std::uint64_t>(x));
        return h;
    }

    std::uint64_t bucket_key(int mode, int v0) const {
        return mix64((static_cast<std::uint64_t>(mode) << 32) ^ static_cast<std::uint64_t>(v0));
    }

    int find_node(const TensorVertex& v, int mode) const {
        const auto it = tree_.index.find(key_of(v, mode));
        if (it == tree_.index.end()) return -1;
        for (int id : it->second)
            if (tree_.nodes[id].mode == mode && tree_.nodes[id].v == v) return id;
        return -1;
    }

    CompositeConfig config_of(const TensorVertex& v) const {
        CompositeConfig q(v.size());
        for (std::size_t a = 0; a < v.size(); ++a) q[a] = p_.roadmaps[a].vertices[v[a]];
        return q;
    }

    std::optional<HeldObject> held_of(int mode) const {
        return p_.modes.nodes[mode].held_after;
    }

    // Admissible remaining-cost bound from a grounded state.
    double bound_of(const TensorVertex& v, int mode) const {
        if (mode == p_.modes.goal) return 0.0;
        double best = kInf;
        for (int w : p_.modes.succ[mode]) {
            double d = 0.0;
            for (int a = 0; a < s_.n_arms(); ++a) {
                const auto& slot = p_.modes.nodes[w].slots[a];
                if (!slot) continue;
                d = std::max(d, arm_travel_time(p_.roadmaps[a].vertices[v[a]], slot->q,
                                                s_.arms[a].max_joint_velocity));
            }
            best = std::min(best, d + p_.modes.h[w]);
        }
        return best;
    }

    int insert_node(TreeNode node) {
        const int id = tree_.size();
        const int mode = node.mode;
        tree_.nodes.push_back(std::move(node));
        tree_.children.emplace_back();
        if (tree_.nodes[id].parent >= 0) tree_.children[tree_.nodes[id].parent].push_back(id);
        tree_.index[key_of(tree_.nodes[id].v, mode)].push_back(id);
        tree_.buckets[bucket_key(mode, tree_.nodes[id].v[0])].push_back(id);
        const int depth = p_.modes.depth[mode];
        if (depth >= static_cast<int>(tree_.by_depth.size())) tree_.by_depth.resize(depth + 1);
        tree_.by_depth[depth].push_back(id);
        tree_.max_depth = std::max(tree_.max_depth, depth);
        if (tree_.mode_present.empty()) tree_.mode_present.assign(p_.modes.nodes.size(), 0);
        if (!tree_.mode_present[mode]) {
            tree_.mode_present[mode] = 1;
            ++tree_.modes_expanded;
        }
        if (mode == p_.modes.goal) goal_node_ = id;
        if (p_.goal_adjacent[mode])
            connect_heap_.push({tree_.nodes[id].cost + tree_.nodes[id].h_bound, id});
        return id;
    }

    void init_tree() {
        TreeNode root;
        root.v = p_.v_init;
        root.mode = p_.modes.init;
        root.h_bound = bound_of(root.v, root.mode);
        insert_node(std::move(root));
        if (cfg_.post_add) cfg_.post_add(tree_, 0);
    }

    // ---- expansion ------------------------------------------------------

    // Node selection policy, exposed as a static so the distribution is
    // testable on a hand-built tree.
  public:
    static int select_index(const SearchTree& tree, double goal_bias, Rng& rng) {
        if (goal_bias > 0.0 && rng.bernoulli(goal_bias)) {
            const auto& pool = tree.by_depth[tree.max_depth];
            return pool[rng.uniform_index(pool.size())];
        }
        return static_cast<int>(rng.uniform_index(tree.nodes.size()));
    }

  private:
    int select() { return select_index(tree_, cfg_.goal_bias, rng_); }

    // Greedy oracle step: per arm, the adjacent-or-stay vertex minimizing
    // the roadmap heuristic to that arm's target set; stay wins ties.
    TensorVertex oracle_neighbor(int src) const {
        const TreeNode& node = tree_.nodes[src];
        const auto& targets = p_.mode_targets[node.mode];
        TensorVertex out(node.v.size());
        for (int a = 0; a < s_.n_arms(); ++a) {
            const ArmRoadmap& rm = p_.roadmaps[a];
            int best = node.v[a];
            double best_h = target_heuristic(rm, node.v[a], targets[a]);
            for (const auto& [nb, w] : rm.adj[node.v[a]]) {
                (void)w;
                const double h = target_heuristic(rm, nb, targets[a]);
                if (h < best_h) {
                    best_h = h;
                    best = nb;
                }
            }
            out[a] = best;
        }
        return out;
    }

    static double target_heuristic(const ArmRoadmap& rm, int v, const std::vector<int>& targets) {
        if (targets.empty()) return 0.0;
        double best = kInf;
        for (int t : targets) best = std::min(best, heuristic_time(rm, v, t));
        return best;
    }

    // Composite heuristic: worst arm against its target set.
    double composite_heuristic(const TensorVertex& v, int mode) const {
        double worst = 0.0;
        for (int a = 0; a < s_.n_arms(); ++a) {
            const auto& targets = p_.mode_targets[mode][a];
            if (targets.empty()) continue;
            worst = std::max(worst, target_heuristic(p_.roadmaps[a], v[a], targets));
        }
        return worst;
    }

    std::optional<int> expand(const std::optional<int>& v_last) {
        int src;
        TensorVertex proposal;
        if (!v_last) {
            src = select();
            proposal = random_tensor_neighbor(p_.roadmaps, tree_.nodes[src].v, rng_);
            if (proposal.empty()) return std::nullopt;
        } else {
            src = *v_last;
            proposal = oracle_neighbor(src);
            if (proposal == tree_.nodes[src].v) return std::nullopt;
        }
        const int mode = tree_.nodes[src].mode;
        const int existing = find_node(proposal, mode);
        if (existing >= 0) {
            // Re-proposals of explored states relax edges through them, so
            // repeated sampling drives costs toward the graph optimum even
            // once the reachable state set is saturated.
            improve_node(existing);
            // Greedy chains may traverse already-explored states toward the
            // targets; progress is still gated on the heuristic improving.
            if (composite_heuristic(proposal, mode) <
                composite_heuristic(tree_.nodes[src].v, mode))
                return existing;
            return std::nullopt;
        }

        const int id = add_and_rewire(proposal, mode);
        if (id < 0) return std::nullopt;

        // Mode advance: a newly added node satisfying an adjacent mode's
        // constrained vertices spawns a zero-duration transition copy.
        for (int w : p_.modes.succ[mode]) {
            if (!satisfies_vertex(proposal, w)) continue;
            const int advanced = add_transition(id, w);
            if (advanced >= 0) return advanced;
        }

        if (composite_heuristic(proposal, mode) <
            composite_heuristic(tree_.nodes[src].v, mode))
            return id;
        return std::nullopt;
    }

    bool satisfies_vertex(const TensorVertex& v, int mode) const {
        for (int a = 0; a < s_.n_arms(); ++a) {
            const int want = p_.slot_vertex[mode][a];
            if (want >= 0 && v[a] != want) return false;
        }
        return true;
    }

    // Same-mode tensor-adjacent tree nodes, via the (mode, first-arm vertex)
    // buckets: a tensor-adjacent node's first component is the vertex itself
    // or one of its roadmap neighbors.
    void gather_candidates(const TensorVertex& v, int mode, std::vector<int>& out) const {
        out.clear();
        const auto scan = [&](int v0) {
            const auto it = tree_.buckets.find(bucket_key(mode, v0));
            if (it == tree_.buckets.end()) return;
            for (int id : it->second) {
                const TreeNode& n = tree_.nodes[id];
                if (n.mode != mode || n.v[0] != v0) continue;
                if (tensor_adjacent(p_.roadmaps, n.v, v)) out.push_back(id);
            }
        };
        scan(v[0]);
        for (const auto& [nb, w] : p_.roadmaps[0].adj[v[0]]) {
            (void)w;
            scan(nb);
        }
    }

    // Parent choice + rewiring at a fixed mode, returns the new node id or
    // -1 when no valid parent exists or the bound prunes the addition.
    int add_and_rewire(const TensorVertex& v, int mode) {
        std::vector<int> cand;
        gather_candidates(v, mode, cand);
        if (cand.empty()) return -1;

        std::vector<std::pair<double, int>> order;
        order.reserve(cand.size());
        for (int id : cand)
            order.emplace_back(tree_.nodes[id].cost +
                                   tensor_move_duration(p_.roadmaps, tree_.nodes[id].v, v),
                               id);
        std::sort(order.begin(), order.end());

        const double h = bound_of(v, mode);
        if (cfg_.branch_and_bound && best_cost_ < kInf && order.front().first + h >= best_cost_)
            return -1;  // even the cheapest attachment cannot beat the incumbent
        const auto held = held_of(mode);
        const CompositeConfig vq = config_of(v);
        if (!is_composite_config_valid(s_, vq, held, &clock_)) return -1;

        int parent = -1;
        for (const auto& [total, id] : order) {
            if (cfg_.branch_and_bound && best_cost_ < kInf && total + h >= best_cost_)
                return -1;  // every later candidate is costlier
            if (is_composite_edge_valid(s_, config_of(tree_.nodes[id].v), vq, held, &clock_)) {
                parent = id;
                break;
            }
        }
        if (parent < 0) return -1;

        TreeNode node;
        node.v = v;
        node.mode = mode;
        node.parent = parent;
        node.edge_dur = tensor_move_duration(p_.roadmaps, tree_.nodes[parent].v, v);
        node.cost = tree_.nodes[parent].cost + node.edge_dur;
        node.h_bound = h;
        const int id = insert_node(std::move(node));
        rewire_through(id, cand);
        if (cfg_.post_add) cfg_.post_add(tree_, id);
        return id;
    }

    // Zero-duration mode switch at a satisfying configuration. The new node
    // may alternatively adopt a cheaper same-mode tensor-adjacent parent.
    int add_transition(int base, int mode) {
        const TensorVertex& v = tree_.nodes[base].v;
        if (find_node(v, mode) >= 0) return -1;
        const double h = bound_of(v, mode);
        if (cfg_.branch_and_bound && best_cost_ < kInf && tree_.nodes[base].cost + h >= best_cost_)
            return -1;
        const auto held = held_of(mode);
        const CompositeConfig vq = config_of(v);
        if (!is_composite_config_valid(s_, vq, held, &clock_)) return -1;

        std::vector<int> cand;
        gather_candidates(v, mode, cand);

        int parent = base;
        double cost = tree_.nodes[base].cost;
        double dur = 0.0;
        bool transition = true;
        std::vector<std::pair<double, int>> order;
        for (int id : cand)
            order.emplace_back(tree_.nodes[id].cost +
                                   tensor_move_duration(p_.roadmaps, tree_.nodes[id].v, v),
                               id);
        std::sort(order.begin(), order.end());
        for (const auto& [total, id] : order) {
            if (total >= cost) break;
            if (is_composite_edge_valid(s_, config_of(tree_.nodes[id].v), vq, held, &clock_)) {
                parent = id;
                cost = total;
                dur = tensor_move_duration(p_.roadmaps, tree_.nodes[id].v, v);
                transition = false;
                break;
            }
        }

        TreeNode node;
        node.v = v;
        node.mode = mode;
        node.parent = parent;
        node.edge_dur = dur;
        node.cost = cost;
        node.transition = transition;
        node.h_bound = h;
        const int id = insert_node(std::move(node));
        rewire_through(id, cand);
        if (cfg_.post_add) cfg_.post_add(tree_, id);
        return id;
    }

    // Re-runs the choose-parent and rewire steps on an existing node. The
    // strict improvement guards make cycles impossible: a descendant's cost
    // already includes this node's, so adopting one can never improve.
    void improve_node(int id) {
        TreeNode& node = tree_.nodes[id];
        std::vector<int> cand;
        gather_candidates(node.v, node.mode, cand);
        if (cand.empty()) return;
        const auto held = held_of(node.mode);
        const CompositeConfig vq = config_of(node.v);

        std::vector<std::pair<double, int>> order;
        order.reserve(cand.size());
        for (int c : cand)
            order.emplace_back(tree_.nodes[c].cost +
                                   tensor_move_duration(p_.roadmaps, tree_.nodes[c].v, node.v),
                               c);
        std::sort(order.begin(), order.end());
        for (const auto& [total, c] : order) {
            if (total >= node.cost) break;
            if (!is_composite_edge_valid(s_, config_of(tree_.nodes[c].v), vq, held, &clock_))
                continue;
            auto& siblings = tree_.children[node.parent];
            siblings.erase(std::find(siblings.begin(), siblings.end(), id));
            node.parent = c;
            node.edge_dur = tensor_move_duration(p_.roadmaps, tree_.nodes[c].v, node.v);
            node.transition = false;
            tree_.children[c].push_back(id);
            cascade_costs(id);
            break;
        }
        rewire_through(id, cand);
        if (cfg_.post_add) cfg_.post_add(tree_, id);
    }

    void rewire_through(int id, const std::vector<int>& cand) {
        const TreeNode& node = tree_.nodes[id];
        const auto held = held_of(node.mode);
        for (int other : cand) {
            if (other == node.parent) continue;
            TreeNode& o = tree_.nodes[other];
            const double dur = tensor_move_duration(p_.roadmaps, node.v, o.v);
            const double new_cost = node.cost + dur;
            if (new_cost >= o.cost) continue;
            if (!is_composite_edge_valid(s_, config_of(node.v), config_of(o.v), held, &clock_))
                continue;
            auto& siblings = tree_.children[o.parent];
            siblings.erase(std::find(siblings.begin(), siblings.end(), other));
            o.parent = id;
            o.edge_dur = dur;
            o.transition = false;
            tree_.children[id].push_back(other);
            cascade_costs(other);
        }
    }

    // Recomputes cost-to-come through a reparented subtree so that every
    // node's cost is exactly its parent's cost plus the stored edge duration.
    void cascade_costs(int start) {
        std::vector<int> stack{start};
        while (!stack.empty()) {
            const int id = stack.back();
            stack.pop_back();
            TreeNode& n = tree_.nodes[id];
            n.cost = tree_.nodes[n.parent].cost + n.edge_dur;
            if (p_.goal_adjacent[n.mode]) connect_heap_.push({n.cost + n.h_bound, id});
            for (int c : tree_.children[id]) stack.push_back(c);
        }
    }

    // ---- goal connection and plan extraction -----------------------------

    // A candidate solution is accepted only if its whole motion re-validates
    // at half the scene's interpolation step, the resolution the downstream
    // validator checks. Tree edges stay at the scene step; auditing only the
    // few goal-reaching paths keeps grazing contacts out of emitted plans
    // without re-checking the entire tree.
    bool audit_plan(const Plan& candidate) {
        return plan_motion_valid(s_, candidate, 0.5 * s_.collision_step, &clock_);
    }

    void connect_to_target() {
        if (goal_node_ >= 0 && tree_.nodes[goal_node_].cost < best_cost_ &&
            !(goal_node_ == audited_node_ && tree_.nodes[goal_node_].cost == audited_cost_)) {
            Plan candidate = trace_path(goal_node_);
            if (audit_plan(candidate)) {
                best_cost_ = candidate.cost;
                best_plan_ = std::move(candidate);
                note_improvement();
            } else {
                // Remember the rejected (node, cost) pair; re-audit only if
                // rewiring later changes this node's path.
                audited_node_ = goal_node_;
                audited_cost_ = tree_.nodes[goal_node_].cost;
            }
        }

        while (!connect_heap_.empty()) {
            const auto [score, id] = connect_heap_.top();
            const double true_score = tree_.nodes[id].cost + tree_.nodes[id].h_bound;
            if (score != true_score) {
                connect_heap_.pop();  // stale entry
                continue;
            }
            if (score >= best_cost_) return;  // cannot improve
            if (id == last_attempt_node_ && tree_.nodes[id].cost == last_attempt_cost_) return;
            last_attempt_node_ = id;
            last_attempt_cost_ = tree_.nodes[id].cost;

            auto it = walk_cache_.find(id);
            if (it == walk_cache_.end())
                it = walk_cache_.emplace(id, walk_to_goal(id)).first;
            const WalkSuffix& suffix = it->second;
            if (suffix.feasible &&
                tree_.nodes[id].cost + suffix.total < best_cost_ + 1e-12) {
                Plan candidate = trace_path_with_suffix(id, suffix);
                if (candidate.cost < best_cost_ && audit_plan(candidate)) {
                    best_cost_ = candidate.cost;
                    best_plan_ = std::move(candidate);
                    note_improvement();
                }
            }
            return;
        }
    }

    // Greedy simultaneous shortest-path descent from a place-done node to
    // the goal vertices; read-only with respect to the tree.
    WalkSuffix walk_to_goal(int id) {
        WalkSuffix suffix;
        const int mode = tree_.nodes[id].mode;
        const auto held = held_of(mode);
        TensorVertex cur = tree_.nodes[id].v;
        for (int a = 0; a < s_.n_arms(); ++a)
            if (!(roadmap_shortest_time(p_.roadmaps[a], cur[a], p_.v_goal[a]) < kInf))
                return suffix;
        int steps = 0;
        while (cur != p_.v_goal) {
            if (++steps > 1024) return suffix;
            TensorVertex next(cur.size());
            for (int a = 0; a < s_.n_arms(); ++a) {
                const ArmRoadmap& rm = p_.roadmaps[a];
                if (cur[a] == p_.v_goal[a]) {
                    next[a] = cur[a];
                    continue;
                }
                int best = -1;
                double best_total = kInf, best_rem = kInf;
                for (const auto& [nb, w] : rm.adj[cur[a]]) {
                    const double rem = roadmap_shortest_time(rm, nb, p_.v_goal[a]);
                    const double total = w + rem;
                    if (total < best_total || (total == best_total && rem < best_rem)) {
                        best_total = total;
                        best_rem = rem;
                        best = nb;
                    }
                }
                if (best < 0 || !(best_total < kInf)) return suffix;
                next[a] = best;
            }
            if (next == cur) return suffix;
            if (!is_composite_edge_valid(s_, config_of(cur), config_of(next), held, &clock_))
                return suffix;
            suffix.durations.push_back(tensor_move_duration(p_.roadmaps, cur, next));
            suffix.steps.push_back(next);
            suffix.total += suffix.durations.back();
            cur = next;
        }
        suffix.feasible = true;
        return suffix;
    }

    void append_mark(Plan& plan, int mode, double t, int waypoint) const {
        const ModeNode& n = p_.modes.nodes[mode];
        if (n.kind == ModeKind::Init || n.kind == ModeKind::Goal) return;
        TransitionMark mark;
        mark.t = t;
        mark.waypoint = waypoint;
        mark.kind = n.kind;
        mark.arm_a = n.arm_a;
        mark.arm_b = n.arm_b;
        if (n.arm_a >= 0 && n.slots[n.arm_a]) mark.grasp_a = n.slots[n.arm_a]->grasp;
        if (n.arm_b >= 0 && n.slots[n.arm_b]) mark.grasp_b = n.slots[n.arm_b]->grasp;
        plan.marks.push_back(mark);
    }

    Plan trace_path(int goal_id) const { return trace_path_with_suffix(goal_id, {}); }

    Plan trace_path_with_suffix(int tip, const WalkSuffix& suffix) const {
        std::vector<int> chain;
        for (int id = tip; id >= 0; id = tree_.nodes[id].parent) chain.push_back(id);
        std::reverse(chain.begin(), chain.end());

        Plan plan;
        plan.planner = kPlannerMmDrrtStar;
        plan.seed = seed_;
        plan.scene_hash = s_.hash;
        double t = 0.0;
        plan.waypoints.push_back({0.0, config_of(tree_.nodes[chain[0]].v)});
        for (std::size_t i = 1; i < chain.size(); ++i) {
            const TreeNode& n = tree_.nodes[chain[i]];
            if (n.transition) {
                append_mark(plan, n.mode, t, static_cast<int>(plan.waypoints.size()) - 1);
                continue;
            }
            if (n.edge_dur == 0.0) continue;  // duplicate-vertex hop, identical configuration
            t += n.edge_dur;
            plan.waypoints.push_back({t, config_of(n.v)});
        }
        for (std::size_t k = 0; k < suffix.steps.size(); ++k) {
            if (suffix.durations[k] == 0.0) continue;
            t += suffix.durations[k];
            plan.waypoints.push_back({t, config_of(suffix.steps[k])});
        }
        plan.cost = t;

        // Def-PHP ordering is a structural invariant of traced plans.
        double prev = 0.0;
        bool saw_pick = false, saw_place = false;
        for (const TransitionMark& m : plan.marks) {
            if (m.t < prev) throw std::logic_error("trace produced unordered transitions");
            prev = m.t;
            if (m.kind == ModeKind::Pick) saw_pick = true;
            if (m.kind == ModeKind::Place) saw_place = true;
        }
        if (!saw_pick || !saw_place)
            throw std::logic_error("trace produced a plan without pick/place transitions");
        return plan;
    }

    // ---- progress stream --------------------------------------------------

    void note_improvement() {
        if (initial_time_ < 0.0) initial_time_ = clock_.seconds();
        // Grid stamps due before this improvement carry the cost that
        // actually held at those times, keeping the log time-ordered.
        emit_progress();
        progress_.push_back({clock_.seconds(), best_cost_, tree_.size(), tree_.modes_expanded});
        reported_cost_ = best_cost_;
    }

    void emit_progress() {
        while (next_grid_ <= clock_.seconds()) {
            if (reported_cost_ < kInf)
                progress_.push_back({next_grid_, reported_cost_, tree_.size(),
                                     tree_.modes_expanded});
            next_grid_ += 0.1;
        }
    }
};

// Convenience wrapper matching the planning entry point: build, run, return.
inline PlanResult plan_mmdrrt(const PlanningProblem& problem, const PlannerConfig& config,
                              std::uint64_t seed) {
    MmDrrtStar planner(problem, config, seed);
    return planner.run();
}

}  // namespace mmdrrt
