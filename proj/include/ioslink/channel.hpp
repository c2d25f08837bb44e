#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "ioslink/scene.hpp"
#include "ioslink/types.hpp"

namespace ioslink {

using ComplexGain = std::complex<double>;

/// Normalized arrival power pattern |cos^3(theta_A)| of element m for a UAV
/// at horizontal position q; always in [0, 1].
inline double arrival_pattern(const Vec2& q, const Scene& sc, std::size_t m) {
    const double dx = q.x() - sc.layout.horiz[m].x();
    const double c = dx / dist_uav_elem(q, sc, m);
    return std::abs(c * c * c);
}

/// Normalized departure power pattern of element m toward the ground node:
/// |cos^3(theta_D)| on the reflective side, epsilon times that on the
/// transmissive side.
inline double departure_pattern(const Scene& sc, std::size_t m) {
    const double dx = sc.cfg.ground_node.x() - sc.layout.horiz[m].x();
    const double c = dx / dist_elem_gn(sc, m);
    const double side = sc.cfg.facing == SurfaceFacing::PlusX ? c : -c;
    const double mag = std::abs(c * c * c);
    return side > 0.0 ? mag : sc.cfg.epsilon * mag;
}

/// Reflective/transmissive field gain of element m under phase shift psi.
/// The magnitude is independent of psi.
inline ComplexGain element_gain(const Vec2& q, double psi, const Scene& sc, std::size_t m) {
    const SceneConfig& c = sc.cfg;
    const double mag2 = c.elem_gain * arrival_pattern(q, sc, m) * departure_pattern(sc, m) *
                        c.elem_dy * c.elem_dz * c.power_ratio;
    return std::sqrt(mag2) * std::polar(1.0, -psi);
}

namespace detail {

constexpr double four_pi_pow_3_2() {
    return 44.546623974653663;  // (4*pi)^1.5
}

/// lambda * sqrt(G_tx G_rx G_m dy dz |gamma|^2) / (4 pi)^(3/2); the
/// slot-independent element magnitude factor.
inline double element_mag_coeff(const SceneConfig& c) {
    return c.wavelength *
           std::sqrt(c.tx_gain * c.rx_gain * c.elem_gain * c.elem_dy * c.elem_dz *
                     c.power_ratio) /
           four_pi_pow_3_2();
}

/// sqrt(G_tx G_rx); the direct-path magnitude factor.
inline double direct_mag_coeff(const SceneConfig& c) { return std::sqrt(c.tx_gain * c.rx_gain); }

inline double direct_los_mag(const Vec2& q, const SceneConfig& c) {
    return direct_mag_coeff(c) * std::pow(dist_uav_gn(q, c), -0.5 * c.path_loss_exp);
}

inline double element_los_mag(const Vec2& q, const Scene& sc, std::size_t m) {
    const double d1 = dist_uav_elem(q, sc, m);
    const double d2 = dist_elem_gn(sc, m);
    return element_mag_coeff(sc.cfg) * arrival_pattern(q, sc, m) * departure_pattern(sc, m) /
           (d1 * d2);
}

}  // namespace detail

/// Per-slot small-scale fading samples: one unit circularly-symmetric
/// complex Gaussian shared by the direct path and all surface elements, so
/// that the expected channel power gain under aligned phases equals zeta^2.
struct NlosDraw {
    std::vector<ComplexGain> h_ss;
};

inline ComplexGain sample_cscg(std::mt19937_64& rng) {
    std::normal_distribution<double> n01(0.0, std::numbers::sqrt2 / 2.0);
    const double re = n01(rng);
    const double im = n01(rng);
    return {re, im};
}

inline NlosDraw make_nlos_draw(int n_slots, std::mt19937_64& rng) {
    NlosDraw d;
    d.h_ss.reserve(n_slots);
    for (int n = 0; n < n_slots; ++n) d.h_ss.push_back(sample_cscg(rng));
    return d;
}

/// Rician direct channel h_D for a UAV at q. Passing hss = nullptr returns
/// the LoS component alone, scaled by sqrt(kappa/(1+kappa)).
inline ComplexGain direct_channel(const Vec2& q, const Scene& sc, const ComplexGain* hss) {
    const SceneConfig& c = sc.cfg;
    const double d = dist_uav_gn(q, c);
    const double mag = detail::direct_los_mag(q, c);
    const ComplexGain los = mag * std::polar(1.0, -2.0 * std::numbers::pi * d / c.wavelength);
    const double k = c.rician_k;
    const ComplexGain scaled_los = std::sqrt(k / (1.0 + k)) * los;
    if (!hss) return scaled_los;
    return scaled_los + std::sqrt(1.0 / (1.0 + k)) * mag * (*hss);
}

/// Rician channel through element m under phase shift psi. The LoS phase is
/// exp(-j(2 pi (d_Um + d_mG)/lambda + psi)) so that the closed-form optimal
/// phases align every path with the direct one; the NLoS component carries
/// the same magnitude and no phase shift.
inline ComplexGain ios_element_channel(const Vec2& q, double psi, const Scene& sc, std::size_t m,
                                       const ComplexGain* hss) {
    const SceneConfig& c = sc.cfg;
    const double mag = detail::element_los_mag(q, sc, m);
    const double path = dist_uav_elem(q, sc, m) + dist_elem_gn(sc, m);
    const ComplexGain los =
        mag * std::polar(1.0, -(2.0 * std::numbers::pi * path / c.wavelength + psi));
    const double k = c.rician_k;
    const ComplexGain scaled_los = std::sqrt(k / (1.0 + k)) * los;
    if (!hss) return scaled_los;
    return scaled_los + std::sqrt(1.0 / (1.0 + k)) * mag * (*hss);
}

/// h[n]: sum of the M element channels plus the direct channel.
inline ComplexGain composite_channel(const Vec2& q, std::span<const double> psi_slot,
                                     const Scene& sc, const ComplexGain* hss) {
    ComplexGain h = direct_channel(q, sc, hss);
    for (std::size_t m = 0; m < sc.layout.size(); ++m)
        h += ios_element_channel(q, psi_slot[m], sc, m, hss);
    return h;
}

/// Slot-level factorization of the composite channel: h = sqrt(k/(1+k)) *
/// los_sum + sqrt(1/(1+k)) * nlos_mag_sum * h_ss. Lets Monte-Carlo draws be
/// applied in O(1) per slot.
struct SlotChannelTerms {
    ComplexGain los_sum{0.0, 0.0};
    double nlos_mag_sum = 0.0;
};

inline SlotChannelTerms slot_channel_terms(const Vec2& q, std::span<const double> psi_slot,
                                           const Scene& sc) {
    const SceneConfig& c = sc.cfg;
    SlotChannelTerms t;
    const double dmag = detail::direct_los_mag(q, c);
    t.los_sum = dmag * std::polar(1.0, -2.0 * std::numbers::pi * dist_uav_gn(q, c) / c.wavelength);
    t.nlos_mag_sum = dmag;
    const double coeff = detail::element_mag_coeff(c);
    for (std::size_t m = 0; m < sc.layout.size(); ++m) {
        const double d1 = dist_uav_elem(q, sc, m);
        const double mag = coeff * arrival_pattern(q, sc, m) * departure_pattern(sc, m) /
                           (d1 * dist_elem_gn(sc, m));
        const double path = d1 + dist_elem_gn(sc, m);
        t.los_sum +=
            mag * std::polar(1.0, -(2.0 * std::numbers::pi * path / c.wavelength + psi_slot[m]));
        t.nlos_mag_sum += mag;
    }
    return t;
}

/// zeta: deterministic channel-amplitude surrogate. Under aligned phases,
/// |h_LoS| = zeta and E[|h|^2] = zeta^2.
inline double zeta(const Vec2& q, const Scene& sc) {
    const SceneConfig& c = sc.cfg;
    const double coeff = detail::element_mag_coeff(c);
    double z = detail::direct_mag_coeff(c) * std::pow(dist_uav_gn(q, c), -0.5 * c.path_loss_exp);
    for (std::size_t m = 0; m < sc.layout.size(); ++m) {
        const double dx = std::abs(q.x() - sc.layout.horiz[m].x());
        const double d1 = dist_uav_elem(q, sc, m);
        const double beta = departure_pattern(sc, m) / dist_elem_gn(sc, m);
        z += coeff * beta * dx * dx * dx / (d1 * d1 * d1 * d1);
    }
    return z;
}

/// (1/N) sum_n log2(1 + eta * zeta[n]^2); the trajectory optimizer's
/// objective and the large-kappa limit of the average rate.
inline double deterministic_rate(const Trajectory& traj, const Scene& sc) {
    const double eta = sc.cfg.snr_scale();
    double acc = 0.0;
    for (const Vec2& q : traj.q) {
        const double z = zeta(q, sc);
        acc += std::log2(1.0 + eta * z * z);
    }
    return acc / static_cast<double>(traj.n_slots());
}

struct RateEstimate {
    double mean = 0.0;
    double halfwidth95 = 0.0;
};

/// Monte-Carlo average achievable rate over seeded fading draws.
/// Deterministic for a given (seed, n_draws); draw d uses stream
/// rng_for_draw(seed, d) regardless of evaluation order.
inline RateEstimate average_rate(const Trajectory& traj, const PhaseSchedule& phases,
                                 const Scene& sc, int n_draws, std::uint64_t seed) {
    const int n = traj.n_slots();
    std::vector<SlotChannelTerms> terms;
    terms.reserve(n);
    const std::vector<double> zeros(sc.layout.size(), 0.0);  // empty schedule = zero phases
    for (int i = 0; i < n; ++i) {
        std::span<const double> slot =
            phases.empty() ? std::span<const double>(zeros)
                           : std::span<const double>(phases.slot(i), sc.layout.size());
        terms.push_back(slot_channel_terms(traj.q[i], slot, sc));
    }

    const double k = sc.cfg.rician_k;
    const double w_los = std::sqrt(k / (1.0 + k));
    const double w_nlos = std::sqrt(1.0 / (1.0 + k));
    const double eta = sc.cfg.snr_scale();

    double sum = 0.0, sum_sq = 0.0;
    for (int d = 0; d < n_draws; ++d) {
        std::mt19937_64 rng = rng_for_draw(seed, static_cast<std::uint64_t>(d));
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            const ComplexGain h =
                w_los * terms[i].los_sum + w_nlos * terms[i].nlos_mag_sum * sample_cscg(rng);
            acc += std::log2(1.0 + eta * std::norm(h));
        }
        const double rate = acc / static_cast<double>(n);
        sum += rate;
        sum_sq += rate * rate;
    }

    RateEstimate est;
    est.mean = sum / n_draws;
    if (n_draws > 1) {
        const double var = std::max(0.0, (sum_sq - sum * sum / n_draws) / (n_draws - 1));
        est.halfwidth95 = 1.96 * std::sqrt(var / n_draws);
    }
    return est;
}

}  // namespace ioslink
