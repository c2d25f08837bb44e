#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "ioslink/channel.hpp"
#include "ioslink/errors.hpp"
#include "ioslink/scene.hpp"
#include "ioslink/types.hpp"

namespace ioslink {

/// Wraps an angle to [0, 2pi).
inline double wrap_2pi(double x) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double w = std::fmod(x, two_pi);
    if (w < 0.0) w += two_pi;
    if (w >= two_pi) w = 0.0;
    return w;
}

/// Closed-form optimal phase for element m at UAV position q: the phase
/// that cancels the path-length difference against the direct link, making
/// all LoS components add coherently.
inline double optimal_phase(const Vec2& q, const Scene& sc, std::size_t m) {
    const double diff = dist_uav_gn(q, sc.cfg) - dist_uav_elem(q, sc, m) - dist_elem_gn(sc, m);
    return wrap_2pi(2.0 * std::numbers::pi / sc.cfg.wavelength * diff);
}

/// Optimal phase schedule for a whole trajectory.
inline PhaseSchedule optimal_phases(const Trajectory& traj, const Scene& sc) {
    PhaseSchedule ps(traj.n_slots(), static_cast<int>(sc.layout.size()));
    for (int n = 0; n < ps.n_slots; ++n)
        for (int m = 0; m < ps.n_elements; ++m)
            ps.at(n, m) = optimal_phase(traj.q[n], sc, static_cast<std::size_t>(m));
    return ps;
}

/// |sum_m h_m_LoS + h_D_LoS|^2 for one slot; the quantity the phase design
/// maximizes.
inline double los_power(const Vec2& q, std::span<const double> psi_slot, const Scene& sc) {
    ComplexGain h = direct_channel(q, sc, nullptr);
    for (std::size_t m = 0; m < sc.layout.size(); ++m)
        h += ios_element_channel(q, psi_slot[m], sc, m, nullptr);
    return std::norm(h);
}

struct PhaseOracleResult {
    std::vector<double> psi;  // best quantized phase per element
    double power = 0.0;       // achieved LoS power
};

/// Exhaustive search over grid_size^M quantized phase vectors for one slot.
/// Validation-only; throws InstanceTooLarge beyond M = 4 or grid_size = 64.
inline PhaseOracleResult brute_force_phase_oracle(const Vec2& q, const Scene& sc, int grid_size) {
    const std::size_t m_count = sc.layout.size();
    if (m_count > 4 || grid_size > 64 || grid_size < 1)
        throw InstanceTooLarge("phase oracle limited to M <= 4, grid_size <= 64");

    PhaseOracleResult best;
    best.psi.assign(m_count, 0.0);
    best.power = los_power(q, best.psi, sc);
    if (m_count == 0) return best;

    const double step = 2.0 * std::numbers::pi / grid_size;
    std::vector<int> idx(m_count, 0);
    std::vector<double> psi(m_count, 0.0);
    while (true) {
        for (std::size_t m = 0; m < m_count; ++m) psi[m] = idx[m] * step;
        const double p = los_power(q, psi, sc);
        if (p > best.power) {
            best.power = p;
            best.psi = psi;
        }
        std::size_t carry = 0;
        while (carry < m_count && ++idx[carry] == grid_size) {
            idx[carry] = 0;
            ++carry;
        }
        if (carry == m_count) break;
    }
    return best;
}

}  // namespace ioslink
