#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "ioslink/errors.hpp"

namespace ioslink {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// Which side of the surface (along the x axis) acts as the reflective side.
/// The opposite side is transmissive and carries the epsilon pattern scale.
enum class SurfaceFacing { PlusX, MinusX };

/// Full physical scene: geometry, element grid, RF constants, mission limits.
///
/// All quantities are SI. Angles are radians, powers are watts. The config
/// reader additionally accepts *_dbm variants for the power fields and
/// converts at parse time.
struct SceneConfig {
    double uav_altitude = 50.0;        // z_U
    Vec2 uav_start{-400.0, 20.0};      // q_0
    Vec2 uav_end{400.0, 20.0};         // q_F
    double v_max = 25.0;               // m/s
    double slot_len = 1.0;             // s
    int n_slots = 150;                 // N
    Vec2 ground_node{-100.0, -20.0};   // w_G, ground altitude 0
    Vec3 ios_center{0.0, 0.0, 40.0};
    int n_elements = 6000;             // M
    double elem_dy = 0.025;            // element size along y
    double elem_dz = 0.025;            // element size along z
    double elem_gain = 1.0;            // G_m
    double power_ratio = 1.0;          // |gamma_m|^2
    double epsilon = 3.55;             // transmissive-side pattern scale
    double tx_gain = 1.0;
    double rx_gain = 1.0;
    double tx_power = 0.1;             // W
    double noise_power = 1e-11;        // W
    double rician_k = 3.0;             // kappa
    double path_loss_exp = 5.0;        // alpha
    double wavelength = 0.05;          // m
    double sca_tol = 1e-4;             // mu
    int sca_max_iters = 40;
    int t_tiles = 0;                   // 0 = exact per-element optimizer model
    SurfaceFacing facing = SurfaceFacing::PlusX;

    double snr_scale() const { return tx_power / noise_power; }          // eta
    double max_step() const { return v_max * slot_len; }                 // D
    double mission_len() const { return (uav_end - uav_start).norm(); }
};

/// Element positions: horizontal coordinate w_m = [x_m, y_m] and height z_m.
struct ElementLayout {
    std::vector<Vec2> horiz;
    std::vector<double> height;
    int rows = 0;  // along z
    int cols = 0;  // along y

    std::size_t size() const { return horiz.size(); }
};

namespace detail {

inline void require_positive(double v, const char* field) {
    if (!(v > 0.0) || !std::isfinite(v))
        throw NonPositiveParam(field, "must be strictly positive");
}

inline void require_nonnegative(double v, const char* field) {
    if (!(v >= 0.0) || !std::isfinite(v))
        throw NonPositiveParam(field, "must be non-negative");
}

/// Largest divisor of m not exceeding sqrt(m); gives the most-square
/// exact factor pair (r, m/r).
inline int most_square_divisor(int m) {
    int best = 1;
    for (int r = 1; r * static_cast<long long>(r) <= m; ++r)
        if (m % r == 0) best = r;
    return best;
}

}  // namespace detail

/// Checks every scene invariant and returns the config unchanged.
/// Throws NonPositiveParam naming the offending field, or InfeasibleMission
/// when the endpoints are not reachable in N slots at v_max.
inline const SceneConfig& validate(const SceneConfig& cfg) {
    using detail::require_nonnegative;
    using detail::require_positive;

    require_positive(cfg.uav_altitude, "uav_altitude");
    require_positive(cfg.v_max, "v_max");
    require_positive(cfg.slot_len, "slot_len");
    if (cfg.n_slots < 2) throw NonPositiveParam("n_slots", "must be at least 2");
    if (cfg.n_elements < 0) throw NonPositiveParam("n_elements", "must be non-negative");
    require_positive(cfg.elem_dy, "elem_dy");
    require_positive(cfg.elem_dz, "elem_dz");
    require_positive(cfg.elem_gain, "elem_gain");
    require_positive(cfg.power_ratio, "power_ratio");
    require_nonnegative(cfg.epsilon, "epsilon");
    require_positive(cfg.tx_gain, "tx_gain");
    require_positive(cfg.rx_gain, "rx_gain");
    require_positive(cfg.tx_power, "tx_power");
    require_positive(cfg.noise_power, "noise_power");
    require_nonnegative(cfg.rician_k, "rician_k");
    if (!(cfg.path_loss_exp >= 2.0))
        throw NonPositiveParam("path_loss_exp", "must be at least 2");
    require_positive(cfg.wavelength, "wavelength");
    require_positive(cfg.sca_tol, "sca_tol");
    if (cfg.sca_max_iters < 1) throw NonPositiveParam("sca_max_iters", "must be at least 1");
    if (cfg.t_tiles < 0) throw NonPositiveParam("t_tiles", "must be non-negative");

    if (!(cfg.ios_center.z() > 0.0))
        throw NonPositiveParam("ios_center", "height must be strictly positive");
    if (!(cfg.uav_altitude > cfg.ios_center.z()))
        throw NonPositiveParam("uav_altitude", "must exceed the surface height");
    if (cfg.n_elements > 0) {
        const int rows = cfg.n_elements / detail::most_square_divisor(cfg.n_elements);
        const double z_lo = cfg.ios_center.z() - 0.5 * (rows - 1) * cfg.elem_dz;
        if (!(z_lo > 0.0))
            throw NonPositiveParam("ios_center", "element grid extends below ground");
    }

    const double reach = cfg.n_slots * cfg.v_max * cfg.slot_len;
    if (cfg.mission_len() > reach)
        throw InfeasibleMission("endpoint distance " + std::to_string(cfg.mission_len()) +
                                " m exceeds reach " + std::to_string(reach) + " m");
    return cfg;
}

/// Places the M elements on the most-square rows x cols grid in the y-z
/// plane at the surface's x coordinate, centered on ios_center with pitch
/// (elem_dy, elem_dz).
inline ElementLayout layout_elements(const SceneConfig& cfg) {
    ElementLayout out;
    const int m = cfg.n_elements;
    if (m == 0) return out;

    out.cols = detail::most_square_divisor(m);  // along y
    out.rows = m / out.cols;                    // along z
    if (out.rows < out.cols) std::swap(out.rows, out.cols);

    out.horiz.reserve(m);
    out.height.reserve(m);
    const double y0 = cfg.ios_center.y() - 0.5 * (out.cols - 1) * cfg.elem_dy;
    const double z0 = cfg.ios_center.z() - 0.5 * (out.rows - 1) * cfg.elem_dz;
    for (int r = 0; r < out.rows; ++r)
        for (int c = 0; c < out.cols; ++c) {
            out.horiz.emplace_back(cfg.ios_center.x(), y0 + c * cfg.elem_dy);
            out.height.push_back(z0 + r * cfg.elem_dz);
        }
    return out;
}

/// Validated config plus the element grid; the unit every channel
/// computation works on.
struct Scene {
    SceneConfig cfg;
    ElementLayout layout;
};

inline Scene make_scene(SceneConfig cfg) {
    validate(cfg);
    ElementLayout layout = layout_elements(cfg);
    return Scene{std::move(cfg), std::move(layout)};
}

/// d_{U,m}: UAV at horizontal q, altitude z_U, to element m.
inline double dist_uav_elem(const Vec2& q, const Scene& sc, std::size_t m) {
    const double dz = sc.cfg.uav_altitude - sc.layout.height[m];
    return std::sqrt((q - sc.layout.horiz[m]).squaredNorm() + dz * dz);
}

/// d_{m,G}: element m to the ground node (ground altitude 0).
inline double dist_elem_gn(const Scene& sc, std::size_t m) {
    const double zm = sc.layout.height[m];
    return std::sqrt((sc.cfg.ground_node - sc.layout.horiz[m]).squaredNorm() + zm * zm);
}

/// d_{U,G}: UAV at horizontal q to the ground node.
inline double dist_uav_gn(const Vec2& q, const SceneConfig& cfg) {
    return std::sqrt((q - cfg.ground_node).squaredNorm() +
                     cfg.uav_altitude * cfg.uav_altitude);
}

}  // namespace ioslink
