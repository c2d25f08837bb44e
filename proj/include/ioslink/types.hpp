#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "ioslink/scene.hpp"

namespace ioslink {

/// Horizontal UAV waypoints q[n], n = 0..N-1 (slot n+1 in 1-based terms).
struct Trajectory {
    std::vector<Vec2> q;

    int n_slots() const { return static_cast<int>(q.size()); }

    /// Largest squared step length between consecutive waypoints.
    double max_step_sq() const {
        double worst = 0.0;
        for (std::size_t n = 1; n < q.size(); ++n)
            worst = std::max(worst, (q[n] - q[n - 1]).squaredNorm());
        return worst;
    }

    /// Endpoint pinning plus per-step speed limit, with absolute slack on
    /// the squared step length.
    bool feasible(const SceneConfig& cfg, double tol = 1e-9) const {
        if (n_slots() != cfg.n_slots) return false;
        if ((q.front() - cfg.uav_start).norm() > tol) return false;
        if ((q.back() - cfg.uav_end).norm() > tol) return false;
        const double d2 = cfg.max_step() * cfg.max_step();
        return max_step_sq() <= d2 + tol;
    }
};

/// Per-slot, per-element surface phase shifts, all wrapped to [0, 2pi).
struct PhaseSchedule {
    int n_slots = 0;
    int n_elements = 0;
    std::vector<double> psi;  // slot-major

    PhaseSchedule() = default;
    PhaseSchedule(int slots, int elems)
        : n_slots(slots), n_elements(elems),
          psi(static_cast<std::size_t>(slots) * elems, 0.0) {}

    double& at(int n, int m) { return psi[static_cast<std::size_t>(n) * n_elements + m]; }
    double at(int n, int m) const { return psi[static_cast<std::size_t>(n) * n_elements + m]; }
    const double* slot(int n) const { return psi.data() + static_cast<std::size_t>(n) * n_elements; }
    bool empty() const { return psi.empty(); }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace detail

/// Independent, reproducible RNG stream for one Monte-Carlo draw. Streams
/// depend only on (seed, draw), so draws can be evaluated in any order or
/// in parallel without changing results.
inline std::mt19937_64 rng_for_draw(std::uint64_t seed, std::uint64_t draw) {
    std::uint64_t state = seed ^ (0xD1B54A32D192ED03ULL * (draw + 1));
    const std::uint64_t a = detail::splitmix64(state);
    const std::uint64_t b = detail::splitmix64(state);
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return std::mt19937_64(seq);
}

}  // namespace ioslink
