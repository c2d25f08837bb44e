#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ioslink/barrier_solver.hpp"
#include "ioslink/channel.hpp"
#include "ioslink/phase_design.hpp"
#include "ioslink/sca.hpp"
#include "ioslink/schemes.hpp"
#include "ioslink/scene.hpp"

namespace ioslink::validation {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

namespace detail {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Small random scene with the surface plane at x = 0, healthy SNR, and a
/// short mission; m_count elements. Positions vary enough to exercise both
/// surface sides.
inline Scene random_scene(std::mt19937_64& rng, int m_count, int n_slots = 6) {
    SceneConfig c;
    c.n_slots = n_slots;
    c.n_elements = m_count;
    c.ios_center = Vec3(0.0, uniform(rng, -10.0, 10.0), uniform(rng, 20.0, 45.0));
    c.uav_altitude = c.ios_center.z() + uniform(rng, 5.0, 30.0);
    c.ground_node = Vec2(uniform(rng, -180.0, 180.0), uniform(rng, -60.0, 60.0));
    const double reach = 0.6 * (n_slots - 1) * c.v_max;
    c.uav_start = Vec2(uniform(rng, -reach, 0.0), uniform(rng, -40.0, 40.0));
    c.uav_end = c.uav_start + Vec2(uniform(rng, 0.0, reach), uniform(rng, -10.0, 10.0));
    c.elem_gain = 8789.0625;  // aggregate-aperture desk convention
    c.rician_k = 3.0;
    c.t_tiles = 0;
    return make_scene(c);
}

/// Random feasible trajectory for a scene: straight line plus bounded
/// per-waypoint jitter that keeps every step strictly inside the limit.
inline Trajectory random_feasible_trajectory(const Scene& sc, std::mt19937_64& rng) {
    Trajectory t = init_trajectory(sc.cfg);
    const double d = sc.cfg.max_step();
    const double room = 0.45 * (d - std::sqrt(t.max_step_sq()));
    if (room <= 0.0) return t;
    for (int n = 1; n + 1 < t.n_slots(); ++n)
        t.q[n] += Vec2(uniform(rng, -room, room), uniform(rng, -room, room));
    return t;
}

}  // namespace detail

/// Coherent-sum identity: under the closed-form phases the LoS composite
/// magnitude equals the sum of the component magnitudes.
inline CheckResult coherent_sum_check(int n_instances, std::uint64_t seed, double rel_tol = 1e-9) {
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    for (int i = 0; i < n_instances; ++i) {
        const int m_count = static_cast<int>(detail::uniform(rng, 0.0, 4.999));
        const Scene sc = detail::random_scene(rng, m_count);
        const Vec2 q(detail::uniform(rng, -300.0, 300.0), detail::uniform(rng, -80.0, 80.0));
        std::vector<double> psi(m_count);
        for (int m = 0; m < m_count; ++m) psi[m] = optimal_phase(q, sc, m);
        const SlotChannelTerms t = slot_channel_terms(q, psi, sc);
        const double gap = std::abs(std::abs(t.los_sum) - t.nlos_mag_sum) / t.nlos_mag_sum;
        worst = std::max(worst, gap);
    }
    std::ostringstream det;
    det << "max relative gap " << worst;
    return {"coherent-sum identity", worst <= rel_tol, det.str()};
}

/// Closed-form phases dominate random schedules on LoS power.
inline CheckResult phase_dominance_check(int n_instances, int n_schedules, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (int i = 0; i < n_instances; ++i) {
        const int m_count = 1 + static_cast<int>(detail::uniform(rng, 0.0, 3.999));
        const Scene sc = detail::random_scene(rng, m_count);
        const Vec2 q(detail::uniform(rng, -300.0, 300.0), detail::uniform(rng, -80.0, 80.0));
        std::vector<double> best(m_count);
        for (int m = 0; m < m_count; ++m) best[m] = optimal_phase(q, sc, m);
        const double p_opt = los_power(q, best, sc);
        std::vector<double> psi(m_count);
        for (int s = 0; s < n_schedules; ++s) {
            for (int m = 0; m < m_count; ++m) psi[m] = detail::uniform(rng, 0.0, 2.0 * M_PI);
            if (los_power(q, psi, sc) > p_opt * (1.0 + 1e-12)) {
                std::ostringstream det;
                det << "random schedule beat closed form on instance " << i;
                return {"phase dominance", false, det.str()};
            }
        }
    }
    return {"phase dominance", true,
            std::to_string(n_instances) + " instances x " + std::to_string(n_schedules) +
                " schedules"};
}

/// Exhaustive quantized search agrees with the closed form: the oracle
/// never exceeds it, and its best power is within the quantization bound.
inline CheckResult brute_force_phase_check(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (const int m_count : {1, 2}) {
        const int grid = m_count == 1 ? 32 : 16;
        const Scene sc = detail::random_scene(rng, m_count);
        const Vec2 q(detail::uniform(rng, -200.0, 200.0), detail::uniform(rng, -50.0, 50.0));
        const PhaseOracleResult oracle = brute_force_phase_oracle(q, sc, grid);
        std::vector<double> best(m_count);
        for (int m = 0; m < m_count; ++m) best[m] = optimal_phase(q, sc, m);
        const double p_opt = los_power(q, best, sc);
        if (oracle.power > p_opt * (1.0 + 1e-12))
            return {"phase brute force", false, "oracle beat the closed form"};
        // One grid step of phase error on each element keeps the coherent sum
        // within cos(pi/grid) of optimal; power within cos^2.
        const double c = std::cos(M_PI / grid);
        if (oracle.power < p_opt * c * c * (1.0 - 1e-9))
            return {"phase brute force", false, "oracle fell below the quantization bound"};
        for (int m = 0; m < m_count; ++m) {
            double diff = std::abs(wrap_2pi(oracle.psi[m] - best[m]));
            diff = std::min(diff, 2.0 * M_PI - diff);
            if (diff > 2.0 * M_PI / grid * (1.0 + 1e-9) && m_count == 1)
                return {"phase brute force", false, "oracle phase more than one step away"};
        }
    }
    return {"phase brute force", true, "M=1 grid 32, M=2 grid 16"};
}

/// Analytic objective weights vs central finite differences of the
/// substituted log-rate, per slot. `mutate` lets tests corrupt the spec to
/// confirm the check has teeth.
inline CheckResult finite_difference_check(
    int n_iterates, std::uint64_t seed, double rel_tol = 1e-5,
    const std::function<void(SubproblemSpec&)>& mutate = nullptr) {
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    int done = 0;
    while (done < n_iterates) {
        const int m_count = 1 + static_cast<int>(detail::uniform(rng, 0.0, 5.999));
        const Scene sc = detail::random_scene(rng, m_count);
        const OptModel model = make_opt_model(sc);
        const Trajectory traj = detail::random_feasible_trajectory(sc, rng);
        const SCAIterate it = substitute(traj, model, sc.cfg);
        SubproblemSpec sp = taylor_coefficients(it, model, sc.cfg);
        if (mutate) mutate(sp);

        const int n_elems = static_cast<int>(model.elems.size());
        // Per-slot objective of the substituted problem (times 1/N to match
        // the assembled weights).
        auto f = [&](int n, const std::vector<double>& s, const std::vector<double>& u,
                     const std::vector<double>& v) {
            double g = model.direct_coeff * std::exp(v[n]);
            for (int e = 0; e < n_elems; ++e)
                g += model.elems[e].jbeta *
                     std::exp(s[n] - u[static_cast<std::size_t>(n) * n_elems + e]);
            return std::log2(1.0 + model.eta * g * g) / sp.n_slots;
        };
        const double h = 1e-5;
        auto check = [&](double analytic, double fd) {
            const double err = std::abs(analytic - fd) /
                               std::max({std::abs(analytic), std::abs(fd), 1e-9});
            worst = std::max(worst, err);
        };
        for (int n = 0; n < sp.n_slots && done < n_iterates; ++n, ++done) {
            std::vector<double> s = it.s, u = it.u, v = it.v;
            s[n] += h;
            const double fp = f(n, s, u, v);
            s[n] -= 2 * h;
            const double fm = f(n, s, u, v);
            s[n] += h;
            check(sp.w_s[n], (fp - fm) / (2 * h));

            v[n] += h;
            const double gp = f(n, s, u, v);
            v[n] -= 2 * h;
            const double gm = f(n, s, u, v);
            v[n] += h;
            check(sp.w_v[n], (gp - gm) / (2 * h));

            for (int e = 0; e < n_elems; ++e) {
                const std::size_t i = static_cast<std::size_t>(n) * n_elems + e;
                u[i] += h;
                const double up = f(n, s, u, v);
                u[i] -= 2 * h;
                const double um = f(n, s, u, v);
                u[i] += h;
                check(sp.w_u[i], (up - um) / (2 * h));
            }
        }
    }
    std::ostringstream det;
    det << "max relative error " << worst << " over " << done << " slot iterates";
    return {"finite-difference weights", worst <= rel_tol, det.str()};
}

/// Sampled global-underestimator checks for the four surrogate families.
inline CheckResult surrogate_bound_check(int samples_per_family, std::uint64_t seed,
                                         double tol = 1e-10) {
    std::mt19937_64 rng(seed);
    using detail::uniform;
    double worst = 0.0;

    for (int i = 0; i < samples_per_family; ++i) {
        // (17): tangent of |x|^3 within the sign-consistent half-line.
        const double sgn = uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
        const double xl = sgn * uniform(rng, 1e-3, 400.0);
        const double x = sgn * uniform(rng, 0.0, 400.0);
        const double tangent17 =
            std::abs(xl * xl * xl) + 3.0 * xl * xl * (xl >= 0 ? 1.0 : -1.0) * (x - xl);
        worst = std::max(worst, (tangent17 - std::abs(x * x * x)) /
                                    std::max(1.0, std::abs(x * x * x)));

        // (18): tangent of e^{u/2} from below.
        const double ul = uniform(rng, 4.0, 30.0), uu = uniform(rng, 4.0, 30.0);
        const double tangent18 = std::exp(0.5 * ul) * (1.0 + 0.5 * (uu - ul));
        worst = std::max(worst, (tangent18 - std::exp(0.5 * uu)) / std::exp(0.5 * uu));

        // (19): tangent of e^{-4v/alpha} from below.
        const double alpha = uniform(rng, 2.0, 6.0);
        const double vl = -uniform(rng, 2.0, 18.0), vv = -uniform(rng, 2.0, 18.0);
        const double evl = std::exp(-4.0 * vl / alpha);
        const double tangent19 = evl - 4.0 / alpha * evl * (vv - vl);
        const double ev = std::exp(-4.0 * vv / alpha);
        worst = std::max(worst, (tangent19 - ev) / ev);
    }

    // (16): the linear expansion under-estimates the substituted log-rate.
    std::mt19937_64 rng2(seed + 1);
    for (int i = 0; i < samples_per_family; ++i) {
        const int m_count = 1 + static_cast<int>(uniform(rng2, 0.0, 3.999));
        const Scene sc = detail::random_scene(rng2, m_count);
        const OptModel model = make_opt_model(sc);
        const Trajectory traj = detail::random_feasible_trajectory(sc, rng2);
        const SCAIterate it = substitute(traj, model, sc.cfg);
        const SubproblemSpec sp = taylor_coefficients(it, model, sc.cfg);
        const int n_elems = static_cast<int>(model.elems.size());

        std::vector<double> s = it.s, u = it.u, v = it.v;
        const int n = static_cast<int>(uniform(rng2, 0.0, sp.n_slots - 1e-9));
        s[n] += uniform(rng2, -4.0, 4.0);
        v[n] += uniform(rng2, -4.0, 4.0);
        for (int e = 0; e < n_elems; ++e)
            u[static_cast<std::size_t>(n) * n_elems + e] += uniform(rng2, -4.0, 4.0);

        double g = model.direct_coeff * std::exp(v[n]);
        double g0 = model.direct_coeff * std::exp(it.v[n]);
        double lin = sp.w_v[n] * (v[n] - it.v[n]);
        for (int e = 0; e < n_elems; ++e) {
            const std::size_t i2 = static_cast<std::size_t>(n) * n_elems + e;
            g += model.elems[e].jbeta * std::exp(s[n] - u[i2]);
            g0 += model.elems[e].jbeta * std::exp(it.s[n] - it.u[i2]);
            lin += sp.w_u[i2] * (u[i2] - it.u[i2]);
        }
        lin += sp.w_s[n] * (s[n] - it.s[n]);
        const double f_true = std::log2(1.0 + model.eta * g * g) / sp.n_slots;
        const double f_exp = std::log2(1.0 + model.eta * g0 * g0) / sp.n_slots + lin;
        worst = std::max(worst, (f_exp - f_true) / std::max(1.0, std::abs(f_true)));
    }

    std::ostringstream det;
    det << "max bound violation " << worst;
    return {"surrogate soundness", worst <= tol, det.str()};
}

/// Reduced objective of a subproblem given the interior waypoint(s): every
/// scalar sits on its active bound in closed form. Mirrors the assembly
/// inclusion rule so values are comparable with the solver's objective.
inline double reduced_subproblem_objective(const SubproblemSpec& sp,
                                           const std::vector<Vec2>& q) {
    double cmax = 0.0;
    for (double w : sp.w_s) cmax = std::max(cmax, std::abs(w));
    for (double w : sp.w_u) cmax = std::max(cmax, std::abs(w));
    for (double w : sp.w_v) cmax = std::max(cmax, std::abs(w));
    const double floor = 1e-12 * cmax;
    const double inf = std::numeric_limits<double>::infinity();

    for (int n = 1; n < sp.n_slots; ++n)
        if ((q[n] - q[n - 1]).squaredNorm() > sp.step_limit_sq) return -inf;

    double obj = 0.0;
    for (int n = 0; n < sp.n_slots; ++n) {
        if (sp.n_elems > 0 && sp.w_s[n] > floor) {
            const double t17 = sp.a17[n] + sp.b17[n] * q[n].x();
            if (!(t17 > 0.0)) return -inf;
            obj += sp.w_s[n] * std::log(t17);
        }
        for (int e = 0; e < sp.n_elems; ++e) {
            const std::size_t i = static_cast<std::size_t>(n) * sp.n_elems + e;
            if (!(sp.w_u[i] < -floor)) continue;
            const double dz = sp.model->uav_altitude - sp.model->elems[e].height;
            const double d2 = (q[n] - sp.model->elems[e].horiz).squaredNorm() + dz * dz;
            obj += sp.w_u[i] * (d2 - sp.a18[i]) / sp.b18[i];
        }
        if (sp.w_v[n] > floor) {
            const double zu = sp.model->uav_altitude;
            const double d2 = (q[n] - sp.model->ground_node).squaredNorm() + zu * zu;
            obj += sp.w_v[n] * (d2 - sp.a19[n]) / sp.b19[n];
        }
    }
    return obj;
}

/// Dense grid search over the single interior waypoint of an N=3
/// subproblem, with one refinement pass.
inline double grid_search_oracle(const SubproblemSpec& sp, int coarse = 161, int fine = 41) {
    std::vector<Vec2> q = sp.expansion.traj.q;
    const double d = std::sqrt(sp.step_limit_sq);
    const Vec2 lo(std::max(sp.q_start.x(), sp.q_end.x()) - d,
                  std::max(sp.q_start.y(), sp.q_end.y()) - d);
    const Vec2 hi(std::min(sp.q_start.x(), sp.q_end.x()) + d,
                  std::min(sp.q_start.y(), sp.q_end.y()) + d);

    double best = -std::numeric_limits<double>::infinity();
    Vec2 best_q = q[1];
    auto scan = [&](const Vec2& a, const Vec2& b, int steps) {
        for (int i = 0; i < steps; ++i)
            for (int j = 0; j < steps; ++j) {
                q[1] = Vec2(a.x() + (b.x() - a.x()) * i / (steps - 1),
                            a.y() + (b.y() - a.y()) * j / (steps - 1));
                const double obj = reduced_subproblem_objective(sp, q);
                if (obj > best) {
                    best = obj;
                    best_q = q[1];
                }
            }
    };
    scan(lo, hi, coarse);
    const Vec2 cell((hi.x() - lo.x()) / (coarse - 1), (hi.y() - lo.y()) / (coarse - 1));
    scan(best_q - 1.5 * cell, best_q + 1.5 * cell, fine);
    return best;
}

/// Tiny-instance agreement between the barrier solver and the grid oracle.
inline CheckResult tiny_grid_oracle_check(int n_instances, std::uint64_t seed,
                                          double rel_tol = 1e-3) {
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    for (int i = 0; i < n_instances; ++i) {
        const int m_count = static_cast<int>(detail::uniform(rng, 0.0, 2.999));
        Scene sc = detail::random_scene(rng, m_count, 3);
        const OptModel model = make_opt_model(sc);
        const Trajectory traj = detail::random_feasible_trajectory(sc, rng);
        const SCAIterate it = substitute(traj, model, sc.cfg);
        const SubproblemSpec sp = taylor_coefficients(it, model, sc.cfg);
        AssembledSubproblem sub = assemble_subproblem(sp);
        if (sub.degenerate) continue;
        auto [sol, status] = solve(sub.prog, std::move(sub.warm));
        const double solver_obj = objective_value(sub.prog, sol);
        const double oracle_obj = grid_search_oracle(sp);
        const double err =
            std::abs(solver_obj - oracle_obj) / std::max(std::abs(oracle_obj), 1e-9);
        worst = std::max(worst, err);
    }
    std::ostringstream det;
    det << "max relative objective gap " << worst;
    return {"tiny grid oracle", worst <= rel_tol, det.str()};
}

/// E[|h_SS|^2] = 1 on the unit complex Gaussian sampler.
inline CheckResult nlos_unit_power_check(int n_draws, std::uint64_t seed, double tol = 0.01) {
    std::mt19937_64 rng(seed);
    double acc = 0.0;
    for (int i = 0; i < n_draws; ++i) acc += std::norm(sample_cscg(rng));
    const double mean = acc / n_draws;
    std::ostringstream det;
    det << "E[|h_ss|^2] = " << mean << " over " << n_draws << " draws";
    return {"unit scatter power", std::abs(mean - 1.0) <= tol, det.str()};
}

/// E[|h|^2] converges to zeta^2 under optimal phases.
inline CheckResult channel_power_identity_check(const Scene& sc, int n_draws, std::uint64_t seed,
                                                double tol = 0.02) {
    const Trajectory traj = init_trajectory(sc.cfg);
    const PhaseSchedule phases = optimal_phases(traj, sc);
    const int n = traj.n_slots();
    std::vector<SlotChannelTerms> terms;
    for (int i = 0; i < n; ++i)
        terms.push_back(
            slot_channel_terms(traj.q[i], {phases.slot(i), sc.layout.size()}, sc));

    const double k = sc.cfg.rician_k;
    const double a = std::sqrt(k / (1.0 + k)), b = std::sqrt(1.0 / (1.0 + k));
    std::vector<double> acc(n, 0.0);
    for (int d = 0; d < n_draws; ++d) {
        std::mt19937_64 rng = rng_for_draw(seed, d);
        for (int i = 0; i < n; ++i)
            acc[i] += std::norm(a * terms[i].los_sum + b * terms[i].nlos_mag_sum * sample_cscg(rng));
    }
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = zeta(traj.q[i], sc);
        worst = std::max(worst, std::abs(acc[i] / n_draws - z * z) / (z * z));
    }
    std::ostringstream det;
    det << "max per-slot relative error " << worst << " over " << n_draws << " draws";
    return {"channel power identity", worst <= tol, det.str()};
}

/// The named suite behind the `validate` CLI command.
inline std::vector<CheckResult> run_suite(bool full) {
    std::vector<CheckResult> out;
    out.push_back(coherent_sum_check(full ? 200 : 50, 11));
    out.push_back(brute_force_phase_check(12));
    out.push_back(phase_dominance_check(full ? 40 : 10, full ? 10000 : 1000, 13));
    out.push_back(finite_difference_check(full ? 1000 : 100, 14));
    out.push_back(surrogate_bound_check(full ? 1000 : 200, 15));
    out.push_back(tiny_grid_oracle_check(full ? 20 : 3, 16));
    out.push_back(nlos_unit_power_check(full ? 100000 : 10000, 17));
    {
        SceneConfig c;
        c.n_slots = 10;
        c.n_elements = 16;
        c.elem_gain = 8789.0625;
        out.push_back(channel_power_identity_check(make_scene(c), full ? 100000 : 10000, 18));
    }
    return out;
}

}  // namespace ioslink::validation
