// Command-line front end: plan a single scene, sweep a benchmark spec,
// render a plan to SVG frames, or validate a plan against a scene.
// Exit codes: 0 success, 1 infeasible / no solution / failed validation,
// 2 invalid input.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "CLI11.hpp"
#include "mmdrrt/bench.hpp"
#include "mmdrrt/render.hpp"
#include "mmdrrt/validator.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 1;
constexpr int kExitBadInput = 2;

int cmd_plan(const std::string& scene_path, const std::string& planner, int s, double time_limit,
             std::uint64_t seed, const std::string& out_dir, int roadmap_vertices,
             int composite_vertices, double query_budget) {
    mmdrrt::Scene scene;
    try {
        scene = mmdrrt::load_scene(scene_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitBadInput;
    }

    mmdrrt::BenchmarkSpec knobs;
    knobs.roadmap_vertices = roadmap_vertices;
    knobs.composite_vertices = composite_vertices;
    knobs.per_query_budget_s = query_budget;
    const std::uint64_t setup_seed =
        mmdrrt::trial_setup_seed(seed, scene.hash, s, scene.n_arms(), 0);

    try {
        // Surface infeasibility directly instead of a bare failure record.
        mmdrrt::build_mode_graph_with_retries(scene, s, setup_seed);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "infeasible: %s\n", e.what());
        return kExitInfeasible;
    }

    const mmdrrt::TrialOutput out =
        mmdrrt::run_single_trial(scene, planner, s, time_limit, setup_seed, knobs);
    if (!out.plan) {
        std::fprintf(stderr, "no plan found within %.3f s\n", time_limit);
        return kExitInfeasible;
    }

    std::printf("plan found: cost=%.6f s, initial at t=%.3f s, %d transitions, %zu waypoints\n",
                out.plan->cost, out.record.initial_solution_time_s,
                static_cast<int>(out.plan->marks.size()), out.plan->waypoints.size());
    for (const mmdrrt::TransitionMark& m : out.plan->marks)
        std::printf("  %-7s t=%.6f arms(%d,%d)\n", mmdrrt::mode_kind_name(m.kind), m.t, m.arm_a,
                    m.arm_b);
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::ofstream pf(std::filesystem::path(out_dir) / "plan.json");
        pf << mmdrrt::plan_to_json(*out.plan).dump(2) << "\n";
        std::ofstream cf(std::filesystem::path(out_dir) / "progress.csv");
        cf << "t,cost\n";
        for (const auto& [t, c] : out.record.cost_over_time)
            cf << t << "," << c << "\n";
        std::printf("wrote %s/plan.json\n", out_dir.c_str());
    }
    return kExitOk;
}

int cmd_bench(const std::string& spec_path, const std::string& out_dir, int jobs) {
    mmdrrt::BenchmarkSpec spec;
    std::string spec_dir;
    try {
        spec = mmdrrt::parse_benchmark_spec(mmdrrt::read_json_file(spec_path));
        spec_dir = std::filesystem::path(spec_path).parent_path().string();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitBadInput;
    }
    try {
        const auto records = mmdrrt::run_benchmark(spec, out_dir, jobs, spec_dir);
        int successes = 0;
        for (const auto& r : records) successes += r.success ? 1 : 0;
        std::printf("%zu trials, %d successful; results in %s\n", records.size(), successes,
                    out_dir.c_str());
        return kExitOk;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitBadInput;
    }
}

int cmd_render(const std::string& scene_path, const std::string& plan_path,
               const std::string& out_dir, int frames) {
    try {
        const mmdrrt::Scene scene = mmdrrt::load_scene(scene_path);
        const mmdrrt::Plan plan = mmdrrt::plan_from_json(mmdrrt::read_json_file(plan_path));
        const auto report = mmdrrt::validate_plan(scene, plan);
        if (!report.ok) {
            std::fprintf(stderr, "plan does not validate against scene:\n");
            for (const std::string& e : report.errors) std::fprintf(stderr, "  %s\n", e.c_str());
            return kExitInfeasible;
        }
        const auto paths = mmdrrt::render_plan(scene, plan, out_dir, frames);
        std::printf("wrote %zu frames to %s\n", paths.size(), out_dir.c_str());
        return kExitOk;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitBadInput;
    }
}

int cmd_validate(const std::string& scene_path, const std::string& plan_path) {
    mmdrrt::Scene scene;
    mmdrrt::Plan plan;
    try {
        scene = mmdrrt::load_scene(scene_path);
        plan = mmdrrt::plan_from_json(mmdrrt::read_json_file(plan_path));
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitBadInput;
    }
    const auto report = mmdrrt::validate_plan(scene, plan);
    if (report.ok) {
        std::printf("plan valid: cost=%.6f s, %zu waypoints, %zu transitions\n", plan.cost,
                    plan.waypoints.size(), plan.marks.size());
        return kExitOk;
    }
    std::fprintf(stderr, "plan INVALID (%zu errors):\n", report.errors.size());
    for (const std::string& e : report.errors) std::fprintf(stderr, "  %s\n", e.c_str());
    return kExitInfeasible;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-arm pick, handoff, and place planning"};
    app.require_subcommand(1);

    std::string scene_path, plan_path, spec_path, out_dir, planner = mmdrrt::kPlannerMmDrrtStar;
    int s = 10, frames = 20, jobs = 1, roadmap_vertices = 200, composite_vertices = 5000;
    double time_limit = 30.0, query_budget = 10.0;
    std::uint64_t seed = 1;

    CLI::App* plan = app.add_subcommand("plan", "plan one scene and write the result");
    plan->add_option("--scene", scene_path, "scene JSON file")->required();
    plan->add_option("--planner", planner,
                     "mm-drrtstar | tamp-prmstar | tamp-rrtstar | hord-prmstar | hord-rrtstar");
    plan->add_option("--s", s, "transition samples per family");
    plan->add_option("--time", time_limit, "time limit in (virtual) seconds");
    plan->add_option("--seed", seed, "random seed");
    plan->add_option("--out", out_dir, "output directory for plan.json and progress.csv");
    plan->add_option("--roadmap", roadmap_vertices, "per-arm roadmap vertices");
    plan->add_option("--composite", composite_vertices, "composite roadmap vertices");
    plan->add_option("--query-budget", query_budget, "per-query budget for the DFS baselines");

    CLI::App* bench = app.add_subcommand("bench", "run a benchmark spec");
    bench->add_option("--spec", spec_path, "benchmark spec JSON file")->required();
    bench->add_option("--out", out_dir, "output directory")->required();
    bench->add_option("--jobs", jobs, "worker threads");

    CLI::App* render = app.add_subcommand("render", "render a plan to SVG frames");
    render->add_option("--scene", scene_path, "scene JSON file")->required();
    render->add_option("--plan", plan_path, "plan JSON file")->required();
    render->add_option("--out", out_dir, "output directory")->required();
    render->add_option("--frames", frames, "frame count");

    CLI::App* validate = app.add_subcommand("validate", "validate a plan against a scene");
    validate->add_option("--scene", scene_path, "scene JSON file")->required();
    validate->add_option("--plan", plan_path, "plan JSON file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitBadInput;
    }

    if (plan->parsed())
        return cmd_plan(scene_path, planner, s, time_limit, seed, out_dir, roadmap_vertices,
                        composite_vertices, query_budget);
    if (bench->parsed()) return cmd_bench(spec_path, out_dir, jobs);
    if (render->parsed()) return cmd_render(scene_path, plan_path, out_dir, frames);
    return cmd_validate(scene_path, plan_path);
}
