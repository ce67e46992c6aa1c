#pragma once

// Per-arm PRM* roadmaps and the implicit tensor product over them.
//
// Each arm gets its own roadmap: uniformly sampled valid configurations
// wired with the PRM* k-nearest rule under the joint travel-time metric.
// All-pairs shortest paths over the as-built graph are cached up front
// (tables are kept for up to 1000 base vertices); vertices injected later
// (transition configurations, start/goal) get lazily computed single-source
// rows, and injections invalidate that row cache because they change the
// graph. The tensor product of the roadmaps is never materialized: adjacency
// is answered by per-arm predicates, enumeration, or uniform sampling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "collision.hpp"
#include "random.hpp"
#include "scene.hpp"

namespace mmdrrt {

class RoadmapError : public std::runtime_error {
  public:
    explicit RoadmapError(const std::string& msg) : std::runtime_error(msg) {}
};

inline constexpr int kMaxApspTableVertices = 1000;

// PRM* connection count: ceil(e * (1 + 1/d) * ln n).
inline int prm_star_k(int n, int dof) {
    if (n <= 1) return 0;
    const double e = 2.718281828459045;
    return static_cast<int>(std::ceil(e * (1.0 + 1.0 / dof) * std::log(static_cast<double>(n))));
}

struct ArmRoadmap {
    int arm = -1;
    double vmax = 1.0;
    std::uint64_t seed = 0;
    std::string scene_hash;

    std::vector<ArmConfig> vertices;
    std::vector<std::vector<std::pair<int, double>>> adj;  // (neighbor, seconds), sorted

    int base_count = 0;                      // vertices present when the table was built
    std::vector<std::vector<double>> apsp;   // base_count x base_count, or empty
    mutable std::unordered_map<int, std::vector<double>> row_cache;  // source -> distances

    int size() const { return static_cast<int>(vertices.size()); }
    int degree(int v) const { return static_cast<int>(adj[v].size()); }

    double edge_weight(int u, int v) const {
        const auto& row = adj[u];
        auto it = std::lower_bound(row.begin(), row.end(), v,
                                   [](const std::pair<int, double>& e, int key) {
                                       return e.first < key;
                                   });
        if (it != row.end() && it->first == v) return it->second;
        return kInf;
    }

    bool has_edge(int u, int v) const { return edge_weight(u, v) < kInf; }
};

namespace detail {

inline std::vector<double> dijkstra_row(const ArmRoadmap& rm, int src) {
    std::vector<double> dist(rm.vertices.size(), kInf);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
    dist[src] = 0.0;
    heap.push({0.0, src});
    while (!heap.empty()) {
        auto [d, u] = heap.top();
        heap.pop();
        if (d > dist[u]) continue;
        for (const auto& [v, w] : rm.adj[u]) {
            const double nd = d + w;
            if (nd < dist[v]) {
                dist[v] = nd;
                heap.push({nd, v});
            }
        }
    }
    return dist;
}

inline const std::vector<double>& cached_row(const ArmRoadmap& rm, int src) {
    auto it = rm.row_cache.find(src);
    if (it == rm.row_cache.end())
        it = rm.row_cache.emplace(src, dijkstra_row(rm, src)).first;
    return it->second;
}

// k nearest existing vertices to `q` by travel time, ties broken by index.
inline std::vector<int> k_nearest(const ArmRoadmap& rm, const ArmConfig& q, int k, int skip = -1) {
    std::vector<std::pair<double, int>> order;
    order.reserve(rm.vertices.size());
    for (int v = 0; v < rm.size(); ++v) {
        if (v == skip) continue;
        order.emplace_back(arm_travel_time(q, rm.vertices[v], rm.vmax), v);
    }
    const std::size_t kk = std::min<std::size_t>(k, order.size());
    std::partial_sort(order.begin(), order.begin() + kk, order.end());
    std::vector<int> out;
    out.reserve(kk);
    for (std::size_t i = 0; i < kk; ++i) out.push_back(order[i].second);
    return out;
}

inline void add_edge_sorted(ArmRoadmap& rm, int u, int v, double w) {
    auto& row = rm.adj[u];
    auto it = std::lower_bound(row.begin(), row.end(), v,
                               [](const std::pair<int, double>& e, int key) {
                                   return e.first < key;
                               });
    if (it != row.end() && it->first == v) return;
    row.insert(it, {v, w});
}

}  // namespace detail

// Builds a PRM* roadmap for one arm: `n_vertices` uniform valid samples,
// k-nearest candidate edges validated at the scene's interpolation
// resolution against the static environment and the arm itself, then the
// all-pairs table. Throws RoadmapError when valid samples cannot be found
// within 100 * n_vertices attempts. Deterministic given the seed.
inline ArmRoadmap build_arm_roadmap(const Scene& s, int arm, int n_vertices, std::uint64_t seed) {
    if (n_vertices < 1) throw RoadmapError("roadmap needs at least one vertex");
    const ArmModel& model = s.arms[arm];
    ArmRoadmap rm;
    rm.arm = arm;
    rm.vmax = model.max_joint_velocity;
    rm.seed = seed;
    rm.scene_hash = s.hash;

    Rng rng(seed);
    const long max_attempts = 100L * n_vertices;
    long attempts = 0;
    ArmConfig q(model.dof());
    while (rm.size() < n_vertices) {
        if (attempts++ >= max_attempts)
            throw RoadmapError("could not sample enough valid configurations for arm " +
                               std::to_string(arm));
        for (int j = 0; j < model.dof(); ++j)
            q[j] = rng.uniform(model.joint_limits[j][0], model.joint_limits[j][1]);
        if (is_arm_config_valid(s, arm, q)) rm.vertices.push_back(q);
    }
    rm.adj.resize(rm.vertices.size());

    const int k = prm_star_k(n_vertices, model.dof());
    std::vector<std::pair<int, int>> candidates;
    for (int u = 0; u < rm.size(); ++u)
        for (int v : detail::k_nearest(rm, rm.vertices[u], k, u))
            candidates.emplace_back(std::min(u, v), std::max(u, v));
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    for (const auto& [u, v] : candidates) {
        if (!is_arm_edge_valid(s, arm, rm.vertices[u], rm.vertices[v])) continue;
        const double w = arm_travel_time(rm.vertices[u], rm.vertices[v], rm.vmax);
        detail::add_edge_sorted(rm, u, v, w);
        detail::add_edge_sorted(rm, v, u, w);
    }

    rm.base_count = rm.size();
    if (rm.base_count <= kMaxApspTableVertices) {
        rm.apsp.reserve(rm.base_count);
        for (int v = 0; v < rm.base_count; ++v)
            rm.apsp.push_back(detail::dijkstra_row(rm, v));
    }
    return rm;
}

// Injects one configuration as a new vertex, wiring it with the PRM* rule
// evaluated at the post-injection vertex count. The as-built table is left
// untouched; cached lazy rows are dropped because the graph changed.
// Returns the new vertex id. Throws std::invalid_argument for configurations
// that are invalid for this arm.
inline int inject_vertex(const Scene& s, ArmRoadmap& rm, const ArmConfig& q) {
    if (!is_arm_config_valid(s, rm.arm, q))
        throw std::invalid_argument("injected configuration is invalid for arm " +
                                    std::to_string(rm.arm));
    const int id = rm.size();
    const int k = prm_star_k(rm.size() + 1, s.arms[rm.arm].dof());
    const std::vector<int> nearest = detail::k_nearest(rm, q, k);
    rm.vertices.push_back(q);
    rm.adj.emplace_back();
    for (int v : nearest) {
        if (!is_arm_edge_valid(s, rm.arm, q, rm.vertices[v])) continue;
        const double w = arm_travel_time(q, rm.vertices[v], rm.vmax);
        detail::add_edge_sorted(rm, id, v, w);
        detail::add_edge_sorted(rm, v, id, w);
    }
    rm.row_cache.clear();
    return id;
}

// Shortest travel time between two roadmap vertices over the graph:
// base-to-base pairs read the as-built table; pairs involving injected
// vertices use the lazily cached single-source rows (computed over the
// current graph). Infinity when no path exists.
inline double roadmap_shortest_time(const ArmRoadmap& rm, int u, int v) {
    if (u == v) return 0.0;
    if (!rm.apsp.empty() && u < rm.base_count && v < rm.base_count) return rm.apsp[u][v];
    const int src = u >= rm.base_count ? u : v;
    const int dst = src == u ? v : u;
    return detail::cached_row(rm, src)[dst];
}

// Admissible-in-practice heuristic between vertices. Falls back to routing
// through the connected vertex nearest to a disconnected endpoint (plus the
// direct metric from there); two isolated endpoints use the direct metric.
// Infinity only when both endpoints lie in different non-trivial components.
inline double heuristic_time(const ArmRoadmap& rm, int u, int v) {
    const double sp = roadmap_shortest_time(rm, u, v);
    if (sp < kInf) return sp;
    const bool u_isolated = rm.degree(u) == 0;
    const bool v_isolated = rm.degree(v) == 0;
    if (u_isolated && v_isolated) return arm_travel_time(rm.vertices[u], rm.vertices[v], rm.vmax);
    if (u_isolated || v_isolated) {
        const int iso = u_isolated ? u : v;
        const int other = u_isolated ? v : u;
        double best_metric = kInf;
        int best = -1;
        for (int w = 0; w < rm.size(); ++w) {
            if (w == iso || rm.degree(w) == 0) continue;
            const double m = arm_travel_time(rm.vertices[iso], rm.vertices[w], rm.vmax);
            if (m < best_metric) {
                best_metric = m;
                best = w;
            }
        }
        if (best < 0) return kInf;
        return roadmap_shortest_time(rm, other, best) + best_metric;
    }
    return kInf;
}

// Travel-time estimate from a vertex to an arbitrary configuration that may
// not be a roadmap vertex: the direct joint metric.
inline double heuristic_time_to_config(const ArmRoadmap& rm, int u, const ArmConfig& c) {
    return arm_travel_time(rm.vertices[u], c, rm.vmax);
}

inline json roadmap_to_json(const ArmRoadmap& rm) {
    json doc;
    doc["schema"] = 1;
    doc["arm"] = rm.arm;
    doc["vmax"] = rm.vmax;
    doc["seed"] = rm.seed;
    doc["scene_hash"] = rm.scene_hash;
    doc["base_count"] = rm.base_count;
    doc["vertices"] = json::array();
    for (const ArmConfig& v : rm.vertices) doc["vertices"].push_back(v);
    json edges = json::array();
    for (int u = 0; u < rm.size(); ++u)
        for (const auto& [v, w] : rm.adj[u])
            if (u < v) edges.push_back({u, v, w});
    doc["edges"] = std::move(edges);
    return doc;
}

// Rebuilds a roadmap from its serialized form; shortest-path tables are
// recomputed (they are a deterministic function of the graph).
inline ArmRoadmap roadmap_from_json(const json& doc) {
    ArmRoadmap rm;
    if (!doc.contains("schema") || doc["schema"].get<int>() != 1)
        throw RoadmapError("unsupported roadmap schema");
    rm.arm = doc["arm"].get<int>();
    rm.vmax = doc["vmax"].get<double>();
    rm.seed = doc["seed"].get<std::uint64_t>();
    rm.scene_hash = doc["scene_hash"].get<std::string>();
    rm.base_count = doc["base_count"].get<int>();
    for (const auto& v : doc["vertices"]) rm.vertices.push_back(v.get<ArmConfig>());
    rm.adj.resize(rm.vertices.size());
    for (const auto& e : doc["edges"]) {
        const int u = e[0].get<int>();
        const int v = e[1].get<int>();
        const double w = e[2].get<double>();
        detail::add_edge_sorted(rm, u, v, w);
        detail::add_edge_sorted(rm, v, u, w);
    }
    if (rm.base_count <= kMaxApspTableVertices) {
        // Reproduce the as-built table: it covered only base vertices and
        // base edges, so injected vertices (id >= base_count) are masked out.
        ArmRoadmap base = rm;
        base.vertices.resize(rm.base_count);
        base.adj.assign(rm.adj.begin(), rm.adj.begin() + rm.base_count);
        for (auto& row : base.adj) {
            row.erase(std::remove_if(row.begin(), row.end(),
                                     [&](const std::pair<int, double>& e) {
                                         return e.first >= rm.base_count;
                                     }),
                      row.end());
        }
        rm.apsp.reserve(rm.base_count);
        for (int v = 0; v < rm.base_count; ++v)
            rm.apsp.push_back(detail::dijkstra_row(base, v));
    }
    return rm;
}

// ---- Implicit tensor product --------------------------------------------

// One vertex of the tensor-product roadmap: a roadmap vertex id per arm.
using TensorVertex = std::vector<int>;

// Adjacency in the tensor product: every arm stays or crosses one of its
// roadmap edges, and at least one arm moves.
inline bool tensor_adjacent(const std::vector<ArmRoadmap>& rms, const TensorVertex& a,
                            const TensorVertex& b) {
    bool moved = false;
    for (std::size_t i = 0; i < rms.size(); ++i) {
        if (a[i] == b[i]) continue;
        if (!rms[i].has_edge(a[i], b[i])) return false;
        moved = true;
    }
    return moved;
}

// Duration of one tensor move under the makespan metric: slowest arm's
// travel time; staying arms contribute zero.
inline double tensor_move_duration(const std::vector<ArmRoadmap>& rms, const TensorVertex& a,
                                   const TensorVertex& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < rms.size(); ++i) {
        if (a[i] == b[i]) continue;
        worst = std::max(worst, arm_travel_time(rms[i].vertices[a[i]], rms[i].vertices[b[i]],
                                                rms[i].vmax));
    }
    return worst;
}

// Explicit neighbor enumeration; exponential in the number of arms, meant
// for small roadmaps and for cross-checking the implicit representation.
inline std::vector<TensorVertex> tensor_neighbors(const std::vector<ArmRoadmap>& rms,
                                                  const TensorVertex& v) {
    std::vector<TensorVertex> out;
    const std::size_t n = rms.size();
    std::vector<std::size_t> choice(n, 0);  // 0 = stay, i > 0 = adj[i-1]
    for (;;) {
        std::size_t arm = 0;
        while (arm < n && choice[arm] == rms[arm].adj[v[arm]].size()) {
            choice[arm] = 0;
            ++arm;
        }
        if (arm == n) break;
        ++choice[arm];
        bool all_stay = true;
        TensorVertex nb(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (choice[i] == 0) {
                nb[i] = v[i];
            } else {
                nb[i] = rms[i].adj[v[i]][choice[i] - 1].first;
                all_stay = false;
            }
        }
        if (!all_stay) out.push_back(std::move(nb));
    }
    return out;
}

// Uniform draw from the tensor neighbors of `v` without enumerating them:
// each arm independently picks stay-or-edge, rejecting the all-stay outcome.
// Returns an empty vertex when `v` has no neighbors at all.
inline TensorVertex random_tensor_neighbor(const std::vector<ArmRoadmap>& rms,
                                           const TensorVertex& v, Rng& rng) {
    bool any = false;
    for (std::size_t i = 0; i < rms.size(); ++i)
        if (!rms[i].adj[v[i]].empty()) { any = true; break; }
    if (!any) return {};
    TensorVertex nb(rms.size());
    for (;;) {
        bool moved = false;
        for (std::size_t i = 0; i < rms.size(); ++i) {
            const auto& edges = rms[i].adj[v[i]];
            const std::size_t pick = rng.uniform_index(edges.size() + 1);
            if (pick == 0) {
                nb[i] = v[i];
            } else {
                nb[i] = edges[pick - 1].first;
                moved = true;
            }
        }
        if (moved) return nb;
    }
}

}  // namespace mmdrrt
