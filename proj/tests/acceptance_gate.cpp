// Release gate: ten end-to-end checks covering optimality, anytime behavior,
// plan validity, product-graph equivalence, benchmark-scale success rates,
// rewiring soundness, bounding safety, and determinism. Each check prints a
// single PASS/FAIL line; the process exits nonzero if any check fails.
// Progress chatter goes to stderr, verdicts to stdout.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include <mmdrrt/bench.hpp>
#include <mmdrrt/render.hpp>
#include <mmdrrt/validator.hpp>

#include "support/fixtures.hpp"
#include "support/product_oracle.hpp"

using namespace mmdrrt;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

void note(const char* f, ...) {
    va_list ap;
    va_start(ap, f);
    std::vfprintf(stderr, f, ap);
    va_end(ap);
    std::fputc('\n', stderr);
}

const Scene& tabletop() {
    static Scene s = testsupport::load_fixture("tabletop.json");
    return s;
}

const Scene& narrow_passage() {
    static Scene s = testsupport::load_fixture("narrow_passage.json");
    return s;
}

// Every plan produced anywhere in the gate lands here; the validity check
// replays all of them through the independent validator.
std::vector<std::pair<const Scene*, Plan>> plan_pool;

double median(std::vector<double> xs) {
    if (xs.empty()) return kInf;
    std::sort(xs.begin(), xs.end());
    return xs[xs.size() / 2];
}

// ---------------------------------------------------------------- check 1
// Exhaustive optimum on a small instance: 10-vertex per-arm roadmaps, two
// transition samples. Dijkstra over the fully materialized product graph
// gives the true optimum of the search space; the tree planner must land
// within 5% on at least 45 of 50 seeds given a 60 s budget.
Verdict small_instance_optimality() {
    const Scene& s = tabletop();
    const int trials = 50;
    int within = 0, solved = 0, no_oracle = 0;
    double worst = 0.0;

    for (int t = 0; t < trials; ++t) {
        const std::uint64_t setup = trial_setup_seed(101, s.hash, 2, s.n_arms(), t);
        PlanningProblem p;
        try {
            ModeGraph m = build_mode_graph_with_retries(s, 2, setup);
            p = build_planning_problem(s, std::move(m), 10, setup);
        } catch (const std::exception& e) {
            note("  [optimality] trial %d: setup failed (%s)", t, e.what());
            continue;
        }
        const auto opt = testsupport::product_graph_optimum(p);
        if (!(opt.cost < kInf)) {
            ++no_oracle;
            note("  [optimality] trial %d: product graph has no path", t);
            continue;
        }
        PlannerConfig cfg;
        cfg.time_limit = 60.0;
        const PlanResult r = plan_mmdrrt(p, cfg, hash_combine(setup, 0x706c616e));
        if (!r.plan) {
            note("  [optimality] trial %d: no plan (optimum %.4f)", t, opt.cost);
            continue;
        }
        ++solved;
        plan_pool.push_back({&s, *r.plan});
        const double ratio = r.plan->cost / opt.cost;
        worst = std::max(worst, ratio);
        if (r.plan->cost <= opt.cost * 1.05 + 1e-9) ++within;
        if (t % 10 == 0)
            note("  [optimality] trial %d: optimum %.4f planner %.4f", t, opt.cost, r.plan->cost);
    }
    Verdict v;
    v.pass = within >= 45;
    v.detail = fmt("%d/%d seeds within 5%% of the exhaustive optimum; %d solved, "
                   "%d had no feasible oracle path, worst ratio %.4f",
                   within, trials, solved, no_oracle, worst);
    return v;
}

// ---------------------------------------------------------------- check 2
// Anytime monotonicity: every reported cost-over-time curve, from every
// planner, is non-increasing. Exact comparison, no tolerance.
Verdict anytime_monotonicity() {
    const Scene& s = tabletop();
    BenchmarkSpec spec;
    spec.scene = "tabletop.json";
    spec.roadmap_vertices = 60;
    spec.composite_vertices = 1000;
    spec.per_query_budget_s = 3.0;

    int curves = 0;
    long long points = 0, violations = 0;
    std::string first_bad;
    for (const std::string& planner : kAllPlanners) {
        int successes = 0;
        for (int t = 0; t < 50; ++t) {
            const std::uint64_t setup = trial_setup_seed(202, s.hash, 10, s.n_arms(), t);
            TrialOutput out = run_single_trial(s, planner, 10, 3.0, setup, spec);
            ++curves;
            const auto& c = out.record.cost_over_time;
            points += static_cast<long long>(c.size());
            for (std::size_t i = 1; i < c.size(); ++i)
                if (c[i].second > c[i - 1].second) {
                    ++violations;
                    if (first_bad.empty())
                        first_bad = fmt(" (first: %s trial %d, %.17g -> %.17g)", planner.c_str(),
                                        t, c[i - 1].second, c[i].second);
                }
            if (out.record.success) ++successes;
            if (out.plan) plan_pool.push_back({&s, *out.plan});
        }
        note("  [anytime] %s: %d/50 solved", planner.c_str(), successes);
    }
    Verdict v;
    v.pass = violations == 0 && curves == 250;
    v.detail = fmt("%lld cost increases across %d curves (%lld points)%s", violations, curves,
                   points, first_bad.c_str());
    return v;
}

// ---------------------------------------------------------------- check 3
// Independent validation of every plan the other checks produced.
Verdict all_plans_valid() {
    int ok = 0;
    std::string first_bad;
    for (const auto& [scene, plan] : plan_pool) {
        const ValidationReport rep = validate_plan(*scene, plan);
        if (rep.ok)
            ++ok;
        else if (first_bad.empty())
            first_bad = fmt(" (first: %s seed %llu: %s)", plan.planner.c_str(),
                            static_cast<unsigned long long>(plan.seed),
                            rep.errors.empty() ? "?" : rep.errors.front().c_str());
    }
    Verdict v;
    v.pass = !plan_pool.empty() && ok == static_cast<int>(plan_pool.size());
    v.detail = fmt("%d/%zu collected plans pass independent validation%s", ok, plan_pool.size(),
                   first_bad.c_str());
    return v;
}

// ---------------------------------------------------------------- check 4
// The implicit tensor adjacency must equal brute-force adjacency over the
// fully enumerated product, for 2-arm and 3-arm stacks of structurally
// different 5-vertex roadmaps. Durations must match the max-over-arms rule.
Verdict tensor_product_equivalence() {
    // Abstract roadmaps place vertex i at configuration [i] with unit vmax,
    // so an edge's travel time is |i - j| and edges span 1 to 4 seconds.
    using testsupport::make_abstract_roadmap;
    const ArmRoadmap cycle = make_abstract_roadmap(
        5, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}, {3, 4, 1.0}, {4, 0, 4.0}});
    const ArmRoadmap path =
        make_abstract_roadmap(5, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}, {3, 4, 1.0}});
    const ArmRoadmap star =
        make_abstract_roadmap(5, {{0, 1, 1.0}, {0, 2, 2.0}, {0, 3, 3.0}, {0, 4, 4.0}});

    const auto edge_seconds = [](const ArmRoadmap& rm, int u, int w) -> double {
        for (const auto& [n, sec] : rm.adj[u])
            if (n == w) return sec;
        return -1.0;
    };

    long long checked = 0, mismatches = 0;
    const auto audit = [&](const std::vector<ArmRoadmap>& rms) {
        const int n = static_cast<int>(rms.size());
        std::vector<TensorVertex> all;
        TensorVertex cur(n, 0);
        while (true) {
            all.push_back(cur);
            int a = 0;
            while (a < n && ++cur[a] == 5) cur[a++] = 0;
            if (a == n) break;
        }
        for (const TensorVertex& u : all) {
            std::set<TensorVertex> expect;
            for (const TensorVertex& w : all) {
                if (w == u) continue;
                bool adj = true;
                for (int a = 0; a < n && adj; ++a)
                    if (w[a] != u[a] && edge_seconds(rms[a], u[a], w[a]) < 0.0) adj = false;
                if (adj) expect.insert(w);
            }
            const auto got_list = tensor_neighbors(rms, u);
            const std::set<TensorVertex> got(got_list.begin(), got_list.end());
            ++checked;
            if (got != expect || got.size() != got_list.size()) {
                ++mismatches;
                continue;
            }
            for (const TensorVertex& w : got) {
                double want = 0.0;  // slowest moving arm; stationary arms are free
                for (int a = 0; a < n; ++a)
                    if (w[a] != u[a])
                        want = std::max(want, std::abs(static_cast<double>(w[a] - u[a])));
                if (tensor_move_duration(rms, u, w) != want) ++mismatches;
            }
        }
    };
    audit({cycle, star});
    audit({cycle, path, star});

    Verdict v;
    v.pass = mismatches == 0 && checked == 25 + 125;
    v.detail = fmt("%lld mismatches over %lld composite vertices (2-arm and 3-arm products)",
                   mismatches, checked);
    return v;
}

// ---------------------------------------------------------------- check 5
// Benchmark-scale success on the two-arm fixture: 45/50 seeds solved within
// 30 s for every transition sample count, with a sub-5 s median first
// solution.
Verdict tabletop_success_rates() {
    const Scene& s = tabletop();
    BenchmarkSpec spec;
    spec.scene = "tabletop.json";

    Verdict v;
    v.pass = true;
    for (const int sv : {10, 20, 30, 50}) {
        int succ = 0;
        std::vector<double> firsts;
        for (int t = 0; t < 50; ++t) {
            const std::uint64_t setup = trial_setup_seed(303, s.hash, sv, s.n_arms(), t);
            TrialOutput out = run_single_trial(s, kPlannerMmDrrtStar, sv, 30.0, setup, spec);
            if (out.record.success) {
                ++succ;
                firsts.push_back(out.record.initial_solution_time_s);
            }
            if (out.plan) plan_pool.push_back({&s, *out.plan});
        }
        const double med = median(firsts);
        note("  [success] s=%d: %d/50, median first solution %.2f s", sv, succ, med);
        v.pass = v.pass && succ >= 45 && med < 5.0;
        v.detail += fmt("%ss=%d: %d/50 median %.2fs", v.detail.empty() ? "" : "; ", sv, succ, med);
    }
    return v;
}

// ---------------------------------------------------------------- check 6
// The slit fixture: coordinated tree search must beat both composite-PRM*
// baselines on success ratio, strictly.
Verdict narrow_passage_comparison() {
    const Scene& s = narrow_passage();
    BenchmarkSpec spec;
    spec.scene = "narrow_passage.json";
    spec.composite_vertices = 2000;  // keeps the serial gate under an hour

    int counts[3] = {0, 0, 0};
    const std::string planners[3] = {kPlannerMmDrrtStar, kPlannerTampPrmStar,
                                     kPlannerHordPrmStar};
    for (int pi = 0; pi < 3; ++pi) {
        for (int t = 0; t < 50; ++t) {
            const std::uint64_t setup = trial_setup_seed(404, s.hash, 10, s.n_arms(), t);
            TrialOutput out = run_single_trial(s, planners[pi], 10, 30.0, setup, spec);
            if (out.record.success) ++counts[pi];
            if (out.plan) plan_pool.push_back({&s, *out.plan});
        }
        note("  [slit] %s: %d/50", planners[pi].c_str(), counts[pi]);
    }
    Verdict v;
    v.pass = counts[0] > counts[1] && counts[0] > counts[2];
    v.detail = fmt("mm-drrtstar %d/50 vs tamp-prmstar %d/50 and hord-prmstar %d/50", counts[0],
                   counts[1], counts[2]);
    return v;
}

// ---------------------------------------------------------------- check 7
// Hand-off chains with 2, 3, and 4 arms: at least 16/20 seeds find a first
// solution within 60 s, and the median wall-clock latency grows
// sub-quadratically from 2 arms to 4.
Verdict handoff_chain_scaling() {
    static std::vector<Scene> chains;  // outlives the plan pool
    Verdict v;
    v.pass = true;
    double med2 = 0.0, med4 = 0.0;
    for (const int n : {2, 3, 4}) {
        chains.reserve(3);
        chains.push_back(testsupport::load_fixture(fmt("chain_%d.json", n)));
        const Scene& s = chains.back();
        int succ = 0;
        std::vector<double> walls;
        for (int t = 0; t < 20; ++t) {
            const std::uint64_t setup = trial_setup_seed(505, s.hash, 10, n, t);
            try {
                ModeGraph m = build_mode_graph_with_retries(s, 10, setup);
                PlanningProblem p = build_planning_problem(s, std::move(m), 200, setup);
                PlannerConfig cfg;
                cfg.time_limit = 60.0;
                cfg.stop_after_first = true;
                const auto t0 = std::chrono::steady_clock::now();
                const PlanResult r = plan_mmdrrt(p, cfg, hash_combine(setup, 0x636861));
                const auto t1 = std::chrono::steady_clock::now();
                if (r.plan) {
                    ++succ;
                    walls.push_back(std::chrono::duration<double>(t1 - t0).count());
                    plan_pool.push_back({&s, *r.plan});
                }
            } catch (const std::exception& e) {
                note("  [chain] n=%d trial %d failed in setup: %s", n, t, e.what());
            }
        }
        const double med = median(walls);
        if (n == 2) med2 = med;
        if (n == 4) med4 = med;
        note("  [chain] n=%d: %d/20 first solutions, median wall %.3f s", n, succ, med);
        v.pass = v.pass && succ >= 16;
        v.detail += fmt("%sn=%d: %d/20 median %.3fs", v.detail.empty() ? "" : "; ", n, succ, med);
    }
    // Sub-quadratic growth: doubling the arm count may not quadruple the
    // median latency. A 1 ms floor keeps the bound meaningful when the
    // 2-arm instance is effectively instant.
    const bool growth_ok = med4 < 4.0 * std::max(med2, 1e-3);
    v.pass = v.pass && growth_ok;
    v.detail += fmt("; growth x%.2f (bound x4)", med4 / std::max(med2, 1e-3));
    return v;
}

// ---------------------------------------------------------------- check 8
// Rewiring fuzz: grow a tree past one thousand nodes auditing the full
// cost/parent structure after every single addition. Every stored
// cost-to-come must equal the parent cost plus the stored edge duration,
// bit for bit, and mode switches must be zero-duration self-vertex edges.
Verdict rewiring_soundness() {
    const Scene& s = tabletop();
    const std::uint64_t setup = trial_setup_seed(808, s.hash, 3, s.n_arms(), 0);
    ModeGraph m = build_mode_graph_with_retries(s, 3, setup);
    PlanningProblem p = build_planning_problem(s, std::move(m), 80, setup);

    struct Done {};
    long long audits = 0, violations = 0;
    int peak = 0;
    PlannerConfig cfg;
    cfg.time_limit = 600.0;
    cfg.branch_and_bound = false;  // keep the tree growing past convergence
    cfg.post_add = [&](const SearchTree& tree, int) {
        peak = tree.size();
        ++audits;
        for (int i = 0; i < tree.size(); ++i) {
            const TreeNode& nd = tree.nodes[i];
            if (i == 0) {
                if (nd.parent != -1 || nd.cost != 0.0) ++violations;
                continue;
            }
            if (nd.parent < 0 || nd.parent >= tree.size()) {
                ++violations;
                continue;
            }
            const TreeNode& par = tree.nodes[nd.parent];
            if (nd.cost != par.cost + nd.edge_dur) ++violations;
            if (nd.transition) {
                if (nd.mode == par.mode || nd.edge_dur != 0.0 || nd.v != par.v) ++violations;
            } else if (nd.mode != par.mode) {
                ++violations;
            }
        }
        if (tree.size() >= 1000) throw Done{};
    };
    try {
        plan_mmdrrt(p, cfg, 8080);
    } catch (const Done&) {
    }
    Verdict v;
    v.pass = violations == 0 && peak >= 1000;
    v.detail = fmt("%lld violations over %lld full-tree audits, final tree %d nodes", violations,
                   audits, peak);
    return v;
}

// ---------------------------------------------------------------- check 9
// Bounding safety: with the admissible heuristic, enabling branch-and-bound
// must never end with a worse (or missing) solution than the unbounded run.
Verdict bounding_safety() {
    const Scene& s = tabletop();
    int ok = 0, both = 0, lost = 0;
    double worst_gap = 0.0;
    for (int t = 0; t < 20; ++t) {
        const std::uint64_t setup = trial_setup_seed(909, s.hash, 2, s.n_arms(), t);
        ModeGraph m = build_mode_graph_with_retries(s, 2, setup);
        const PlanningProblem p = build_planning_problem(s, std::move(m), 10, setup);
        const std::uint64_t run_seed = hash_combine(setup, 0x6262);

        PlannerConfig cfg;
        cfg.time_limit = 10.0;
        cfg.branch_and_bound = true;
        const PlanResult with_bb = plan_mmdrrt(p, cfg, run_seed);
        cfg.branch_and_bound = false;
        const PlanResult without = plan_mmdrrt(p, cfg, run_seed);

        if (with_bb.plan) plan_pool.push_back({&s, *with_bb.plan});
        if (without.plan && !with_bb.plan) {
            ++lost;
            note("  [bounding] trial %d: bounding lost the solution", t);
            continue;
        }
        if (with_bb.plan && without.plan) {
            ++both;
            worst_gap = std::max(worst_gap, with_bb.plan->cost - without.plan->cost);
            if (with_bb.plan->cost <= without.plan->cost + 1e-9) ++ok;
            continue;
        }
        ++ok;  // neither found, or only the bounded run found one
    }
    Verdict v;
    v.pass = lost == 0 && ok == 20;
    v.detail = fmt("%d/20 seeds safe (%d solved by both, %d lost by bounding, worst gap %.2e)",
                   ok, both, lost, worst_gap);
    return v;
}

// ---------------------------------------------------------------- check 10
// Byte determinism: re-running any (planner, scene, seed) cell reproduces
// the identical serialized trial record.
Verdict record_determinism() {
    BenchmarkSpec spec;
    spec.scene = "tabletop.json";
    spec.roadmap_vertices = 100;
    spec.composite_vertices = 1500;
    spec.per_query_budget_s = 2.0;

    int cells = 0, equal = 0;
    std::string first_bad;
    const auto probe = [&](const Scene& s, const std::string& planner) {
        const std::uint64_t setup = trial_setup_seed(1010, s.hash, 8, s.n_arms(), 0);
        TrialOutput a = run_single_trial(s, planner, 8, 2.0, setup, spec);
        TrialOutput b = run_single_trial(s, planner, 8, 2.0, setup, spec);
        ++cells;
        const std::string da = trial_record_to_json(a.record).dump();
        const std::string db = trial_record_to_json(b.record).dump();
        if (da == db)
            ++equal;
        else if (first_bad.empty())
            first_bad = " (first: " + planner + ")";
        if (a.plan) plan_pool.push_back({&s, *a.plan});
    };
    for (const std::string& planner : kAllPlanners) probe(tabletop(), planner);
    probe(narrow_passage(), kPlannerMmDrrtStar);

    Verdict v;
    v.pass = cells == 6 && equal == 6;
    v.detail = fmt("%d/%d cells byte-identical across repeat runs%s", equal, cells,
                   first_bad.c_str());
    return v;
}

}  // namespace

int main() {
    Verdict verdicts[11];
    const auto timed = [](const char* name, auto&& f) {
        note("[gate] running %s ...", name);
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v = f();
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                              .count();
        note("[gate] %s: %s (%.1f s)", name, v.pass ? "pass" : "FAIL", dt);
        return v;
    };

    verdicts[1] = timed("small-instance optimality", small_instance_optimality);
    verdicts[2] = timed("anytime monotonicity", anytime_monotonicity);
    verdicts[4] = timed("tensor product equivalence", tensor_product_equivalence);
    verdicts[5] = timed("tabletop success rates", tabletop_success_rates);
    verdicts[6] = timed("narrow passage comparison", narrow_passage_comparison);
    verdicts[7] = timed("handoff chain scaling", handoff_chain_scaling);
    verdicts[8] = timed("rewiring soundness", rewiring_soundness);
    verdicts[9] = timed("bounding safety", bounding_safety);
    verdicts[10] = timed("record determinism", record_determinism);
    verdicts[3] = timed("plan validity", all_plans_valid);

    bool all = true;
    for (int i = 1; i <= 10; ++i) {
        std::printf("criterion %d: %s (%s)\n", i, verdicts[i].pass ? "PASS" : "FAIL",
                    verdicts[i].detail.c_str());
        all = all && verdicts[i].pass;
    }
    return all ? 0 : 1;
}
