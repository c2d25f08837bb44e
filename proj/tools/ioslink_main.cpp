// Command-line front end: scheme runs and sweeps, the validation suite, and
// config template generation.

#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "ioslink/config_io.hpp"
#include "ioslink/run_plan.hpp"
#include "ioslink/schemes.hpp"
#include "ioslink/validation.hpp"

namespace {

std::vector<ioslink::SchemeId> parse_schemes(const std::vector<std::string>& names) {
    std::vector<ioslink::SchemeId> out;
    for (const std::string& n : names) out.push_back(ioslink::scheme_from_name(n));
    return out;
}

int cmd_run(const std::string& config_path, const std::string& profile,
            const std::string& out_dir, std::uint64_t seed, int mc_draws,
            const std::vector<double>& sweep_t, const std::vector<double>& sweep_m,
            const std::vector<std::string>& schemes, bool dump_phases) {
    ioslink::ExperimentPlan plan;
    if (!config_path.empty())
        plan.base = ioslink::config::parse_file(config_path);
    else if (profile == "paper")
        plan.base = ioslink::paper_profile();
    else
        plan.base = ioslink::desk_profile();

    if (!sweep_t.empty() && !sweep_m.empty()) {
        std::cerr << "error: choose a single sweep axis (--sweep-t or --sweep-m)\n";
        return 2;
    }
    if (!sweep_t.empty()) {
        plan.axis = ioslink::SweepAxis::T;
        plan.sweep = sweep_t;
    } else if (!sweep_m.empty()) {
        plan.axis = ioslink::SweepAxis::M;
        plan.sweep = sweep_m;
    }
    plan.seed = seed;
    plan.mc_draws = mc_draws;
    plan.out_dir = out_dir;
    plan.dump_phases = dump_phases;
    if (!schemes.empty()) plan.schemes = parse_schemes(schemes);

    const ioslink::PlanOutcome outcome = ioslink::run_plan(plan);
    return outcome.all_ok ? 0 : 1;
}

int cmd_validate(const std::string& level) {
    const bool full = level == "full";
    const auto results = ioslink::validation::run_suite(full);
    bool ok = true;
    for (const auto& r : results) {
        std::cout << (r.pass ? "PASS" : "FAIL") << "  " << r.name << "  (" << r.detail << ")\n";
        ok = ok && r.pass;
    }
    std::cout << (ok ? "all checks passed" : "some checks FAILED") << "\n";
    return ok ? 0 : 1;
}

int cmd_init_config(const std::string& path, bool force) {
    if (!force && std::filesystem::exists(path)) {
        std::cerr << "error: '" << path << "' exists; pass --force to overwrite\n";
        return 1;
    }
    std::ofstream out(path);
    if (!out) {
        std::cerr << "error: cannot write '" << path << "'\n";
        return 1;
    }
    out << ioslink::config::template_text();
    std::cout << "wrote " << path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"IOS-assisted UAV downlink rate optimizer"};
    app.require_subcommand(1);

    // run
    std::string config_path, out_dir = "out", profile = "desk";
    std::uint64_t seed = 1;
    int mc_draws = 500;
    std::vector<double> sweep_t, sweep_m;
    std::vector<std::string> schemes;
    bool dump_phases = false;
    auto* run = app.add_subcommand("run", "run schemes and write result files");
    run->add_option("--config", config_path, "scene config file (overrides --profile)");
    run->add_option("--profile", profile, "built-in scene: desk or paper")
        ->check(CLI::IsMember({"desk", "paper"}));
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--seed", seed, "master RNG seed");
    run->add_option("--mc-draws", mc_draws, "Monte-Carlo fading draws per rate estimate");
    run->add_option("--sweep-t", sweep_t, "mission durations T (s), comma separated")
        ->delimiter(',');
    run->add_option("--sweep-m", sweep_m, "element counts M, comma separated")->delimiter(',');
    run->add_option("--schemes", schemes, "subset of IA,RA,IA-FT,CUC")->delimiter(',');
    run->add_flag("--dump-phases", dump_phases, "also write per-slot phase schedules");

    // validate
    std::string level = "fast";
    auto* val = app.add_subcommand("validate", "run the oracle/validation suite");
    val->add_option("--level", level, "fast or full")->check(CLI::IsMember({"fast", "full"}));

    // init-config
    std::string init_path = "scene.cfg";
    bool force = false;
    auto* init = app.add_subcommand("init-config", "write a commented scene template");
    init->add_option("path", init_path, "destination file");
    init->add_flag("--force", force, "overwrite an existing file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return cmd_run(config_path, profile, out_dir, seed, mc_draws, sweep_t, sweep_m,
                           schemes, dump_phases);
        if (val->parsed()) return cmd_validate(level);
        if (init->parsed()) return cmd_init_config(init_path, force);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
