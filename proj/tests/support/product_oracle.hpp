#pragma once

// Exhaustive optimum for small planning problems: shortest path over the
// fully materialized product of the tensor roadmap and the mode graph.
// Edge pricing and mode-switch semantics mirror the tree planner exactly,
// and motion edges are priced at the half-step certification the planner
// applies before adopting a solution, so the returned cost is the true
// optimum over the plans the planner can actually emit. Feasible only for
// instances whose composite vertex count is a few hundred.

#include <cstdint>
#include <map>
#include <queue>
#include <utility>
#include <vector>

#include <mmdrrt/planner.hpp>

namespace mmdrrt::testsupport {

struct ProductOptimum {
    double cost = kInf;
    long long expanded = 0;  // A* pops, for reporting
};

namespace detail {

struct ProductSearch {
    const PlanningProblem& p;
    const Scene& s;
    int n_modes;
    std::vector<long long> stride;
    long long tuple_count = 1;

    // held-state key: -1 free hand, otherwise arm * 256 + grasp
    std::map<std::pair<long long, int>, bool> config_memo;
    std::map<std::tuple<long long, long long, int>, bool> edge_memo;

    explicit ProductSearch(const PlanningProblem& problem)
        : p(problem), s(*problem.scene), n_modes(static_cast<int>(problem.modes.nodes.size())) {
        stride.resize(p.roadmaps.size());
        for (std::size_t a = 0; a < p.roadmaps.size(); ++a) {
            stride[a] = tuple_count;
            tuple_count *= p.roadmaps[a].size();
        }
    }

    long long tuple_id(const TensorVertex& v) const {
        long long id = 0;
        for (std::size_t a = 0; a < v.size(); ++a) id += stride[a] * v[a];
        return id;
    }

    static int held_key(const std::optional<HeldObject>& h) {
        return h ? h->arm * 256 + h->grasp : -1;
    }

    CompositeConfig config_of(const TensorVertex& v) const {
        CompositeConfig q(v.size());
        for (std::size_t a = 0; a < v.size(); ++a) q[a] = p.roadmaps[a].vertices[v[a]];
        return q;
    }

    bool config_valid(const TensorVertex& v, const std::optional<HeldObject>& held) {
        const auto key = std::make_pair(tuple_id(v), held_key(held));
        auto it = config_memo.find(key);
        if (it == config_memo.end())
            it = config_memo.emplace(key, is_composite_config_valid(s, config_of(v), held)).first;
        return it->second;
    }

    bool edge_valid(const TensorVertex& u, const TensorVertex& v,
                    const std::optional<HeldObject>& held) {
        long long a = tuple_id(u), b = tuple_id(v);
        if (a > b) std::swap(a, b);
        const auto key = std::make_tuple(a, b, held_key(held));
        auto it = edge_memo.find(key);
        if (it == edge_memo.end())
            it = edge_memo
                     .emplace(key, is_composite_edge_valid(s, config_of(u), config_of(v), held,
                                                           nullptr, 0.5 * s.collision_step))
                     .first;
        return it->second;
    }

    bool satisfies_slots(const TensorVertex& v, int mode) const {
        for (std::size_t a = 0; a < v.size(); ++a) {
            const int want = p.slot_vertex[mode][a];
            if (want >= 0 && v[a] != want) return false;
        }
        return true;
    }

    // Consistent admissible bound: any remaining motion must at least carry
    // every arm from its current vertex to its goal vertex.
    double bound(const TensorVertex& v) const {
        double h = 0.0;
        for (std::size_t a = 0; a < v.size(); ++a) {
            const double d = roadmap_shortest_time(p.roadmaps[a], v[a], p.v_goal[a]);
            if (!(d < kInf)) return kInf;
            h = std::max(h, d);
        }
        return h;
    }
};

}  // namespace detail

inline ProductOptimum product_graph_optimum(const PlanningProblem& p) {
    detail::ProductSearch ps(p);
    ProductOptimum out;

    const long long start = ps.tuple_id(p.v_init) * ps.n_modes + p.modes.init;
    const long long target = ps.tuple_id(p.v_goal) * ps.n_modes + p.modes.goal;

    std::map<long long, double> dist;
    std::map<long long, TensorVertex> tuples;
    using Item = std::pair<double, long long>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;

    const auto held_of = [&](int mode) { return p.modes.nodes[mode].held_after; };
    if (!ps.config_valid(p.v_init, held_of(p.modes.init))) return out;

    dist[start] = 0.0;
    tuples[start] = p.v_init;
    heap.push({ps.bound(p.v_init), start});

    while (!heap.empty()) {
        const auto [f, u] = heap.top();
        heap.pop();
        const int mode = static_cast<int>(u % ps.n_modes);
        const TensorVertex v = tuples[u];
        const double du = dist[u];
        if (f > du + ps.bound(v) + 1e-15) continue;  // stale heap entry
        if (u == target) {
            out.cost = du;
            return out;
        }
        ++out.expanded;
        const auto held = held_of(mode);

        const auto relax = [&](long long key, const TensorVertex& vertex, double nd) {
            auto it = dist.find(key);
            if (it != dist.end() && it->second <= nd) return;
            dist[key] = nd;
            tuples[key] = vertex;
            heap.push({nd + ps.bound(vertex), key});
        };

        // Zero-cost mode switches at satisfying vertices.
        for (int w : p.modes.succ[mode])
            if (ps.satisfies_slots(v, w) && ps.config_valid(v, held_of(w)))
                relax(ps.tuple_id(v) * ps.n_modes + w, v, du);

        // Same-mode tensor moves.
        for (const TensorVertex& nb : tensor_neighbors(p.roadmaps, v)) {
            if (!ps.config_valid(nb, held)) continue;
            if (!ps.edge_valid(v, nb, held)) continue;
            const double nd = du + tensor_move_duration(p.roadmaps, v, nb);
            relax(ps.tuple_id(nb) * ps.n_modes + mode, nb, nd);
        }
    }
    return out;
}

}  // namespace mmdrrt::testsupport
