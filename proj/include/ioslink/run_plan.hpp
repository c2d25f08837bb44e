#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ioslink/config_io.hpp"
#include "ioslink/schemes.hpp"

namespace ioslink {

/// Built-in scene profiles. The desk profile keeps the reference geometry
/// and RF constants but shrinks the instance to N=50 slots and M=64
/// elements whose per-element gain carries the aggregate aperture of the
/// full 6000-element surface ((6000/64)^2), so desk runs sit in the same
/// operating regime as full-scale ones.
inline SceneConfig desk_profile() {
    SceneConfig c;
    c.n_slots = 50;
    c.n_elements = 64;
    c.elem_gain = 8789.0625;  // (6000/64)^2
    c.t_tiles = 0;
    return c;
}

/// Full-scale profile: N=150, M=6000, per-element gain 1, tiled optimizer
/// model. Noticeably slower than the desk profile.
inline SceneConfig paper_profile() {
    SceneConfig c;
    c.t_tiles = 96;
    return c;
}

enum class SweepAxis { None, T, M };

struct ExperimentPlan {
    SceneConfig base;
    std::vector<SchemeId> schemes{SchemeId::IA, SchemeId::RA, SchemeId::IAFT, SchemeId::CUC};
    SweepAxis axis = SweepAxis::None;
    std::vector<double> sweep;  // T values (seconds) or M values
    std::uint64_t seed = 1;
    int mc_draws = 500;
    std::string out_dir = "out";
    bool dump_phases = false;
};

inline void validate_plan(const ExperimentPlan& plan) {
    if (plan.schemes.empty()) throw ConfigError("plan needs at least one scheme");
    if (plan.axis == SweepAxis::None && !plan.sweep.empty())
        throw ConfigError("sweep values given without a sweep axis");
    if (plan.axis != SweepAxis::None && plan.sweep.empty())
        throw ConfigError("sweep axis given without values");
    for (std::size_t i = 0; i < plan.sweep.size(); ++i) {
        if (!(plan.sweep[i] > 0.0)) throw ConfigError("sweep values must be positive");
        if (i > 0 && !(plan.sweep[i] > plan.sweep[i - 1]))
            throw ConfigError("sweep values must be strictly increasing");
    }
    if (plan.mc_draws < 1) throw ConfigError("mc_draws must be at least 1");
}

namespace detail {

/// Locale-independent shortest round-trip decimal formatting.
inline std::string fmt(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string fmt(int v) { return std::to_string(v); }

inline SceneConfig cell_config(const ExperimentPlan& plan, double sweep_value) {
    SceneConfig cfg = plan.base;
    if (plan.axis == SweepAxis::T)
        cfg.n_slots = static_cast<int>(std::lround(sweep_value / cfg.slot_len));
    else if (plan.axis == SweepAxis::M)
        cfg.n_elements = static_cast<int>(std::lround(sweep_value));
    return cfg;
}

inline int log_level() {
    const char* env = std::getenv("IOSLINK_LOG");
    if (!env) return 1;
    const std::string v = env;
    if (v == "quiet") return 0;
    if (v == "debug") return 2;
    return 1;
}

}  // namespace detail

struct CellResult {
    double sweep_value = 0.0;
    SchemeResult result;
    bool ok = false;
    std::string error;
};

struct PlanOutcome {
    std::vector<CellResult> cells;  // sweep-major, scheme-minor order
    bool all_ok = true;
};

/// Runs every (sweep value, scheme) cell in a worker pool and writes the
/// result files. Output bytes are independent of the worker count.
inline PlanOutcome run_plan(const ExperimentPlan& plan) {
    validate_plan(plan);
    namespace fs = std::filesystem;
    fs::create_directories(plan.out_dir);

    std::vector<double> sweep = plan.sweep;
    if (plan.axis == SweepAxis::None)
        sweep = {plan.base.n_slots * plan.base.slot_len};  // report total T

    const int verbosity = detail::log_level();
    PlanOutcome outcome;
    std::vector<std::future<CellResult>> tasks;
    for (double value : sweep)
        for (SchemeId id : plan.schemes)
            tasks.push_back(std::async(std::launch::async, [&, value, id]() {
                CellResult cell;
                cell.sweep_value = value;
                try {
                    const Scene sc = make_scene(detail::cell_config(plan, value));
                    EvalOptions opts{plan.mc_draws, plan.seed};
                    cell.result = run_scheme(id, sc, opts);
                    cell.ok = true;
                } catch (const std::exception& e) {
                    cell.result.scheme = scheme_name(id);
                    cell.error = e.what();
                }
                return cell;
            }));
    for (auto& t : tasks) {
        outcome.cells.push_back(t.get());
        const CellResult& cell = outcome.cells.back();
        if (!cell.ok) {
            outcome.all_ok = false;
            std::cerr << "[ioslink] " << cell.result.scheme << " @ " << cell.sweep_value
                      << " failed: " << cell.error << "\n";
        } else if (verbosity >= 1) {
            std::cerr << "[ioslink] " << cell.result.scheme << " @ " << cell.sweep_value
                      << ": det " << cell.result.det_rate << " bps/Hz, mc "
                      << cell.result.mc.mean << " +/- " << cell.result.mc.halfwidth95 << "\n";
        }
    }

    const std::string seed_line = "# seed=" + std::to_string(plan.seed) + "\n";
    using detail::fmt;

    {
        std::ofstream rates(fs::path(plan.out_dir) / "rates.csv");
        rates << seed_line << "scheme,sweep_value,det_rate,mc_rate,mc_halfwidth\n";
        for (const CellResult& c : outcome.cells) {
            if (!c.ok) continue;
            rates << c.result.scheme << "," << fmt(c.sweep_value) << "," << fmt(c.result.det_rate)
                  << "," << fmt(c.result.mc.mean) << "," << fmt(c.result.mc.halfwidth95) << "\n";
        }
    }
    {
        std::ofstream conv(fs::path(plan.out_dir) / "convergence.csv");
        conv << seed_line << "scheme,sweep_value,iteration,objective,step_norm,solver_iters\n";
        for (const CellResult& c : outcome.cells) {
            if (!c.ok) continue;
            for (const auto& row : c.result.trace.rows)
                conv << c.result.scheme << "," << fmt(c.sweep_value) << "," << row.iteration << ","
                     << fmt(row.objective) << "," << fmt(row.step_norm) << ","
                     << row.solver_iters << "\n";
        }
    }

    auto cell_tag = [&](double value) {
        if (plan.axis == SweepAxis::None) return std::string{};
        std::string tag = plan.axis == SweepAxis::T ? "_T" : "_M";
        return tag + std::to_string(static_cast<long long>(std::llround(value)));
    };

    for (double value : sweep) {
        std::ofstream traj(fs::path(plan.out_dir) / ("trajectories" + cell_tag(value) + ".csv"));
        traj << seed_line << "scheme,n,x,y\n";
        for (const CellResult& c : outcome.cells) {
            if (!c.ok || c.sweep_value != value) continue;
            for (int n = 0; n < c.result.trajectory.n_slots(); ++n)
                traj << c.result.scheme << "," << (n + 1) << ","
                     << fmt(c.result.trajectory.q[n].x()) << ","
                     << fmt(c.result.trajectory.q[n].y()) << "\n";
        }
    }

    for (const CellResult& c : outcome.cells) {
        if (!c.ok) continue;
        nlohmann::json doc;
        doc["scheme"] = c.result.scheme;
        doc["seed"] = plan.seed;
        doc["mc_draws"] = plan.mc_draws;
        doc["sweep"] = {{"axis", plan.axis == SweepAxis::None
                                     ? "none"
                                     : (plan.axis == SweepAxis::T ? "T" : "M")},
                        {"value", c.sweep_value}};
        const SceneConfig cell_cfg = detail::cell_config(plan, c.sweep_value);
        doc["params"] = {{"n_slots", cell_cfg.n_slots},
                         {"n_elements", cell_cfg.n_elements},
                         {"elem_gain", cell_cfg.elem_gain},
                         {"epsilon", cell_cfg.epsilon},
                         {"rician_k", cell_cfg.rician_k},
                         {"tx_power", cell_cfg.tx_power},
                         {"noise_power", cell_cfg.noise_power},
                         {"path_loss_exp", cell_cfg.path_loss_exp},
                         {"wavelength", cell_cfg.wavelength},
                         {"v_max", cell_cfg.v_max},
                         {"uav_altitude", cell_cfg.uav_altitude}};
        doc["det_rate"] = c.result.det_rate;
        doc["mc_rate"] = c.result.mc.mean;
        doc["mc_halfwidth"] = c.result.mc.halfwidth95;
        doc["converged"] = c.result.trace.converged;
        auto traj = nlohmann::json::array();
        for (const Vec2& q : c.result.trajectory.q) traj.push_back({q.x(), q.y()});
        doc["trajectory"] = std::move(traj);

        std::string fname = "result_" + c.result.scheme + cell_tag(c.sweep_value) + ".json";
        std::ofstream out(fs::path(plan.out_dir) / fname);
        out << doc.dump(2) << "\n";

        if (plan.dump_phases && !c.result.phases.empty()) {
            std::ofstream ph(fs::path(plan.out_dir) /
                             ("phases_" + c.result.scheme + cell_tag(c.sweep_value) + ".csv"));
            ph << seed_line << "n,m,psi\n";
            for (int n = 0; n < c.result.phases.n_slots; ++n)
                for (int m = 0; m < c.result.phases.n_elements; ++m)
                    ph << (n + 1) << "," << (m + 1) << "," << fmt(c.result.phases.at(n, m))
                       << "\n";
        }
    }
    return outcome;
}

}  // namespace ioslink
