#pragma once

// Benchmark orchestration: sweeps (planner, s, n, seed) cells, runs each
// trial with deterministically derived seeds, collects per-trial records,
// and persists newline-delimited JSON plus aggregate CSV tables. Records
// are sorted by (planner, s, n, seed) so worker parallelism never affects
// output bytes.

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "baselines.hpp"
#include "collision.hpp"
#include "modegraph.hpp"
#include "plan.hpp"
#include "planner.hpp"
#include "scene.hpp"

namespace mmdrrt {

inline const std::vector<std::string> kAllPlanners = {
    kPlannerMmDrrtStar, kPlannerTampPrmStar, kPlannerTampRrtStar, kPlannerHordPrmStar,
    kPlannerHordRrtStar};

struct BenchmarkSpec {
    std::string scene;                       // path; "{n}" expands over n_arms
    std::vector<std::string> planners = kAllPlanners;
    std::vector<int> s_values = {10, 20, 30, 50};
    std::vector<int> n_arms = {2, 3, 4, 5};
    int trials = 50;
    double time_limit_s = 30.0;
    std::uint64_t seed = 1;
    int roadmap_vertices = 200;      // per-arm roadmap size for the tree planner
    int composite_vertices = 5000;   // composite roadmap size for PRM* baselines
    double per_query_budget_s = 10.0;
    bool keep_plans = false;
};

struct TrialRecord {
    std::string planner;
    int s = 0;
    int n = 0;
    std::uint64_t seed = 0;
    bool success = false;
    double initial_solution_time_s = -1.0;
    std::vector<std::pair<double, double>> cost_over_time;
    int modes_expanded = 0;
    int tree_size = 0;
};

inline BenchmarkSpec parse_benchmark_spec(const nlohmann::json& j) {
    BenchmarkSpec spec;
    if (!j.is_object()) throw SceneError("benchmark spec: expected a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (key == "schema") {
            if (value != 1) throw SceneError("benchmark spec: unsupported schema");
        } else if (key == "scene")
            spec.scene = value.get<std::string>();
        else if (key == "planners")
            spec.planners = value.get<std::vector<std::string>>();
        else if (key == "s_values")
            spec.s_values = value.get<std::vector<int>>();
        else if (key == "n_arms")
            spec.n_arms = value.get<std::vector<int>>();
        else if (key == "trials")
            spec.trials = value.get<int>();
        else if (key == "time_limit_s")
            spec.time_limit_s = value.get<double>();
        else if (key == "seed")
            spec.seed = value.get<std::uint64_t>();
        else if (key == "roadmap_vertices")
            spec.roadmap_vertices = value.get<int>();
        else if (key == "composite_vertices")
            spec.composite_vertices = value.get<int>();
        else if (key == "per_query_budget_s")
            spec.per_query_budget_s = value.get<double>();
        else if (key == "keep_plans")
            spec.keep_plans = value.get<bool>();
        else
            throw SceneError("benchmark spec: unknown key '" + key + "'");
    }
    if (spec.scene.empty()) throw SceneError("benchmark spec: missing scene");
    if (spec.trials < 1) throw SceneError("benchmark spec: trials must be >= 1");
    if (!(spec.time_limit_s > 0.0)) throw SceneError("benchmark spec: time_limit_s must be > 0");
    for (const std::string& p : spec.planners)
        if (std::find(kAllPlanners.begin(), kAllPlanners.end(), p) == kAllPlanners.end())
            throw SceneError("benchmark spec: unknown planner '" + p + "'");
    return spec;
}

inline std::string scene_path_for_n(const std::string& pattern, int n) {
    const auto pos = pattern.find("{n}");
    if (pos == std::string::npos) return pattern;
    return pattern.substr(0, pos) + std::to_string(n) + pattern.substr(pos + 3);
}

// Seed discipline: the setup seed (mode sampling, roadmap construction) is
// shared by every planner in a cell so they compete on identical task
// structure; the run seed is additionally salted by the planner id.
inline std::uint64_t trial_setup_seed(std::uint64_t base, const std::string& scene_hash, int s,
                                      int n, int trial) {
    std::uint64_t h = hash_combine(base, hash_str(scene_hash));
    h = hash_combine(h, static_cast<std::uint64_t>(s));
    h = hash_combine(h, static_cast<std::uint64_t>(n));
    return hash_combine(h, static_cast<std::uint64_t>(trial));
}

struct TrialOutput {
    TrialRecord record;
    std::optional<Plan> plan;
};

// One (planner, s, n, seed) cell. Any exception is recorded as a failed
// trial so a crash never aborts the sweep.
inline TrialOutput run_single_trial(const Scene& scene, const std::string& planner, int s,
                                    double time_limit, std::uint64_t setup_seed,
                                    const BenchmarkSpec& spec) {
    TrialOutput out;
    out.record.planner = planner;
    out.record.s = s;
    out.record.n = scene.n_arms();
    out.record.seed = setup_seed;
    try {
        const ModeGraph modes = build_mode_graph_with_retries(scene, s, setup_seed);
        const std::uint64_t run_seed = hash_combine(setup_seed, hash_str(planner));

        if (planner == kPlannerMmDrrtStar) {
            const PlanningProblem problem =
                build_planning_problem(scene, modes, spec.roadmap_vertices, setup_seed);
            PlannerConfig cfg;
            cfg.time_limit = time_limit;
            const PlanResult res = plan_mmdrrt(problem, cfg, run_seed);
            out.record.success = res.plan.has_value();
            out.record.initial_solution_time_s = res.initial_solution_time;
            out.record.modes_expanded = res.modes_expanded;
            out.record.tree_size = res.tree_size;
            for (const ProgressPoint& p : res.progress)
                out.record.cost_over_time.push_back({p.t, p.cost});
            out.plan = res.plan;
        } else {
            BaselineConfig cfg;
            cfg.time_limit = time_limit;
            cfg.per_query_budget = spec.per_query_budget_s;
            cfg.composite_vertices = spec.composite_vertices;
            const bool prm = planner == kPlannerTampPrmStar || planner == kPlannerHordPrmStar;
            cfg.motion =
                prm ? MotionPlannerKind::CompositePrmStar : MotionPlannerKind::CompositeRrtStar;
            std::optional<CompositeRoadmap> crm;
            if (prm)
                crm = build_composite_roadmap(scene, spec.composite_vertices,
                                              hash_combine(setup_seed, 0x636f6d70));
            const bool tamp = planner == kPlannerTampPrmStar || planner == kPlannerTampRrtStar;
            const BaselineResult res =
                tamp ? run_tamp_sequential(scene, modes, crm ? &*crm : nullptr, cfg, run_seed)
                     : run_hord_dfs(scene, modes, crm ? &*crm : nullptr, cfg, run_seed);
            out.record.success = res.plan.has_value();
            out.record.initial_solution_time_s = res.initial_solution_time;
            out.record.modes_expanded = res.modes_expanded;
            out.record.cost_over_time = res.progress;
            out.plan = res.plan;
        }
    } catch (const std::exception&) {
        out.record.success = false;
        out.record.cost_over_time.clear();
        out.plan.reset();
    }
    return out;
}

inline nlohmann::json trial_record_to_json(const TrialRecord& r) {
    nlohmann::json j;
    j["planner"] = r.planner;
    j["s"] = r.s;
    j["n"] = r.n;
    j["seed"] = r.seed;
    j["success"] = r.success;
    j["initial_solution_time_s"] = r.initial_solution_time_s;
    j["modes_expanded"] = r.modes_expanded;
    j["tree_size"] = r.tree_size;
    nlohmann::json curve = nlohmann::json::array();
    for (const auto& [t, c] : r.cost_over_time) curve.push_back({t, c});
    j["cost_over_time"] = std::move(curve);
    return j;
}

inline TrialRecord trial_record_from_json(const nlohmann::json& j) {
    TrialRecord r;
    r.planner = j.at("planner").get<std::string>();
    r.s = j.at("s").get<int>();
    r.n = j.at("n").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.success = j.at("success").get<bool>();
    r.initial_solution_time_s = j.at("initial_solution_time_s").get<double>();
    r.modes_expanded = j.at("modes_expanded").get<int>();
    r.tree_size = j.at("tree_size").get<int>();
    for (const auto& p : j.at("cost_over_time"))
        r.cost_over_time.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    return r;
}

namespace detail {

inline std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Last observed cost at or before time t, if the trial had one by then.
inline std::optional<double> cost_at(const TrialRecord& r, double t) {
    std::optional<double> best;
    for (const auto& [pt, pc] : r.cost_over_time) {
        if (pt <= t + 1e-12)
            best = pc;
        else
            break;
    }
    return best;
}

}  // namespace detail

// Aggregate CSVs, one file per metric, keyed by (planner, s, n).
inline void write_aggregates(const std::vector<TrialRecord>& records, double time_limit,
                             const std::filesystem::path& dir) {
    std::map<std::tuple<std::string, int, int>, std::vector<const TrialRecord*>> cells;
    for (const TrialRecord& r : records) cells[{r.planner, r.s, r.n}].push_back(&r);

    std::ofstream ratio(dir / "success_ratio.csv");
    ratio << "planner,s,n,successes,trials,success_ratio\n";
    std::ofstream initial(dir / "initial_time.csv");
    initial << "planner,s,n,successes,mean_initial_time_s\n";
    std::ofstream modes(dir / "modes_expanded.csv");
    modes << "planner,s,n,trials,mean_modes_expanded\n";
    std::ofstream curve(dir / "cost_over_time.csv");
    curve << "planner,s,n,t,successes_at_t,mean_cost\n";

    for (const auto& [key, cell] : cells) {
        const auto& [planner, s, n] = key;
        const std::string prefix =
            planner + "," + std::to_string(s) + "," + std::to_string(n) + ",";
        int successes = 0;
        double initial_sum = 0.0;
        double modes_sum = 0.0;
        for (const TrialRecord* r : cell) {
            modes_sum += r->modes_expanded;
            if (r->success) {
                ++successes;
                initial_sum += r->initial_solution_time_s;
            }
        }
        ratio << prefix << successes << "," << cell.size() << ","
              << detail::fmt_double(static_cast<double>(successes) / cell.size()) << "\n";
        initial << prefix << successes << ","
                << (successes ? detail::fmt_double(initial_sum / successes) : "") << "\n";
        modes << prefix << cell.size() << ","
              << detail::fmt_double(modes_sum / cell.size()) << "\n";

        // Carry-forward cost curve on a 100 ms grid, averaged over the
        // trials that already have a solution at each grid time.
        for (int i = 1; i * 0.1 <= time_limit + 1e-9; ++i) {
            const double t = i / 10.0;
            int count = 0;
            double sum = 0.0;
            for (const TrialRecord* r : cell) {
                const auto c = detail::cost_at(*r, t);
                if (c) {
                    ++count;
                    sum += *c;
                }
            }
            curve << prefix << detail::fmt_double(t) << "," << count << ","
                  << (count ? detail::fmt_double(sum / count) : "") << "\n";
        }
    }
}

inline void write_records(const std::vector<TrialRecord>& records,
                          const std::filesystem::path& dir) {
    std::map<std::tuple<std::string, int, int>, std::ofstream> files;
    for (const TrialRecord& r : records) {
        const auto key = std::make_tuple(r.planner, r.s, r.n);
        auto it = files.find(key);
        if (it == files.end()) {
            const std::string name = "records_" + r.planner + "_s" + std::to_string(r.s) + "_n" +
                                     std::to_string(r.n) + ".ndjson";
            it = files.emplace(key, std::ofstream(dir / name)).first;
        }
        it->second << trial_record_to_json(r).dump() << "\n";
    }
}

// Runs the full sweep. When out_dir is non-empty, persists NDJSON records,
// aggregate CSVs, and (optionally) every successful plan. `jobs` threads
// share the trial list; records are sorted afterwards so output bytes are
// independent of scheduling.
inline std::vector<TrialRecord> run_benchmark(const BenchmarkSpec& spec,
                                              const std::string& out_dir = "", int jobs = 1,
                                              const std::string& spec_dir = "") {
    struct Task {
        const Scene* scene;
        std::string planner;
        int s;
        std::uint64_t setup_seed;
    };

    std::map<int, Scene> scenes;
    for (int n : spec.n_arms) {
        std::string path = scene_path_for_n(spec.scene, n);
        if (!spec_dir.empty() && !std::filesystem::exists(path))
            path = (std::filesystem::path(spec_dir) / path).string();
        Scene scene = load_scene(path);
        if (scene.n_arms() != n && spec.scene.find("{n}") != std::string::npos)
            throw SceneError("scene " + path + " does not have " + std::to_string(n) + " arms");
        scenes.emplace(scene.n_arms(), std::move(scene));
        if (spec.scene.find("{n}") == std::string::npos) break;  // single fixed-n scene
    }

    std::vector<Task> tasks;
    for (const std::string& planner : spec.planners)
        for (const auto& [n, scene] : scenes)
            for (int s : spec.s_values)
                for (int trial = 0; trial < spec.trials; ++trial)
                    tasks.push_back({&scene, planner, s,
                                     trial_setup_seed(spec.seed, scene.hash, s, n, trial)});

    std::vector<TrialOutput> outputs(tasks.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            const Task& t = tasks[i];
            outputs[i] = run_single_trial(*t.scene, t.planner, t.s, spec.time_limit_s,
                                          t.setup_seed, spec);
        }
    };
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
        for (std::thread& th : pool) th.join();
    }

    std::vector<TrialRecord> records;
    records.reserve(outputs.size());
    for (const TrialOutput& o : outputs) records.push_back(o.record);
    std::sort(records.begin(), records.end(), [](const TrialRecord& a, const TrialRecord& b) {
        return std::tie(a.planner, a.s, a.n, a.seed) < std::tie(b.planner, b.s, b.n, b.seed);
    });

    if (!out_dir.empty()) {
        const std::filesystem::path dir(out_dir);
        std::filesystem::create_directories(dir);
        write_records(records, dir);
        write_aggregates(records, spec.time_limit_s, dir);
        if (spec.keep_plans) {
            for (const TrialOutput& o : outputs) {
                if (!o.plan) continue;
                const std::string name = "plan_" + o.record.planner + "_s" +
                                         std::to_string(o.record.s) + "_n" +
                                         std::to_string(o.record.n) + "_" +
                                         std::to_string(o.record.seed) + ".json";
                std::ofstream f(dir / name);
                f << plan_to_json(*o.plan).dump(2) << "\n";
            }
        }
    }
    return records;
}

}  // namespace mmdrrt
