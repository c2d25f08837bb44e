#pragma once

#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ioslink/errors.hpp"
#include "ioslink/scene.hpp"

namespace ioslink {

/// Key-value scene document reader/writer.
///
/// Format: one `key = value` pair per line, `#` starts a comment, blank
/// lines ignored. Vectors are whitespace-separated numbers. Unknown keys are
/// rejected. Power fields accept a *_dbm alternative key that is converted
/// to watts at parse time.
namespace config {

inline double dbm_to_watt(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::vector<double> parse_numbers(const std::string& key, const std::string& text,
                                         std::size_t count) {
    std::istringstream in(text);
    std::vector<double> vals;
    double v;
    while (in >> v) vals.push_back(v);
    if (!in.eof() || vals.size() != count)
        throw ConfigError("key '" + key + "': expected " + std::to_string(count) +
                          " number(s), got '" + text + "'");
    return vals;
}

struct RawDoc {
    std::map<std::string, std::string> kv;

    bool has(const std::string& k) const { return kv.count(k) != 0; }

    double num(const std::string& k) { return take(k, 1)[0]; }
    Vec2 vec2(const std::string& k) {
        auto v = take(k, 2);
        return Vec2(v[0], v[1]);
    }
    Vec3 vec3(const std::string& k) {
        auto v = take(k, 3);
        return Vec3(v[0], v[1], v[2]);
    }

    std::vector<double> take(const std::string& k, std::size_t count) {
        auto it = kv.find(k);
        auto vals = parse_numbers(k, it->second, count);
        kv.erase(it);
        return vals;
    }
};

}  // namespace detail

inline SceneConfig parse(std::istream& in) {
    detail::RawDoc doc;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");
        if (!doc.kv.emplace(key, val).second)
            throw ConfigError("duplicate key '" + key + "'");
    }

    SceneConfig cfg;
    if (doc.has("uav_altitude")) cfg.uav_altitude = doc.num("uav_altitude");
    if (doc.has("uav_start")) cfg.uav_start = doc.vec2("uav_start");
    if (doc.has("uav_end")) cfg.uav_end = doc.vec2("uav_end");
    if (doc.has("v_max")) cfg.v_max = doc.num("v_max");
    if (doc.has("slot_len")) cfg.slot_len = doc.num("slot_len");
    if (doc.has("n_slots")) cfg.n_slots = static_cast<int>(doc.num("n_slots"));
    if (doc.has("ground_node")) cfg.ground_node = doc.vec2("ground_node");
    if (doc.has("ios_center")) cfg.ios_center = doc.vec3("ios_center");
    if (doc.has("n_elements")) cfg.n_elements = static_cast<int>(doc.num("n_elements"));
    if (doc.has("elem_dy")) cfg.elem_dy = doc.num("elem_dy");
    if (doc.has("elem_dz")) cfg.elem_dz = doc.num("elem_dz");
    if (doc.has("elem_gain")) cfg.elem_gain = doc.num("elem_gain");
    if (doc.has("power_ratio")) cfg.power_ratio = doc.num("power_ratio");
    if (doc.has("epsilon")) cfg.epsilon = doc.num("epsilon");
    if (doc.has("tx_gain")) cfg.tx_gain = doc.num("tx_gain");
    if (doc.has("rx_gain")) cfg.rx_gain = doc.num("rx_gain");

    if (doc.has("tx_power") && doc.has("tx_power_dbm"))
        throw ConfigError("give either tx_power or tx_power_dbm, not both");
    if (doc.has("tx_power")) cfg.tx_power = doc.num("tx_power");
    if (doc.has("tx_power_dbm")) cfg.tx_power = dbm_to_watt(doc.num("tx_power_dbm"));

    if (doc.has("noise_power") && doc.has("noise_power_dbm"))
        throw ConfigError("give either noise_power or noise_power_dbm, not both");
    if (doc.has("noise_power")) cfg.noise_power = doc.num("noise_power");
    if (doc.has("noise_power_dbm")) cfg.noise_power = dbm_to_watt(doc.num("noise_power_dbm"));

    if (doc.has("rician_k")) cfg.rician_k = doc.num("rician_k");
    if (doc.has("path_loss_exp")) cfg.path_loss_exp = doc.num("path_loss_exp");
    if (doc.has("wavelength")) cfg.wavelength = doc.num("wavelength");
    if (doc.has("sca_tol")) cfg.sca_tol = doc.num("sca_tol");
    if (doc.has("sca_max_iters")) cfg.sca_max_iters = static_cast<int>(doc.num("sca_max_iters"));
    if (doc.has("t_tiles")) cfg.t_tiles = static_cast<int>(doc.num("t_tiles"));

    if (doc.has("surface_facing")) {
        auto it = doc.kv.find("surface_facing");
        const std::string v = it->second;
        doc.kv.erase(it);
        if (v == "+x")
            cfg.facing = SurfaceFacing::PlusX;
        else if (v == "-x")
            cfg.facing = SurfaceFacing::MinusX;
        else
            throw ConfigError("surface_facing must be '+x' or '-x', got '" + v + "'");
    }

    if (!doc.kv.empty())
        throw ConfigError("unknown key '" + doc.kv.begin()->first + "'");
    validate(cfg);
    return cfg;
}

inline SceneConfig parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse(in);
}

/// Commented template carrying the reference simulation constants.
inline std::string template_text() {
    return R"(# IOS-assisted UAV downlink scene
# Distances in meters, times in seconds, powers in watts unless noted.

# Mission
uav_altitude   = 50          # fixed flight altitude z_U (convention; see README)
uav_start      = -400 20     # q_0
uav_end        = 400 20      # q_F
v_max          = 25          # maximum horizontal airspeed, m/s
slot_len       = 1           # slot length delta_t, s
n_slots        = 150         # N; mission duration T = N * slot_len

# Ground node (altitude 0)
ground_node    = -100 -20

# Omni-surface
ios_center     = 0 0 40      # the optimizer requires x = 0 (surface plane)
n_elements     = 6000        # M, laid out on a near-square y-z grid
elem_dy        = 0.025       # element size along y (half wavelength)
elem_dz        = 0.025       # element size along z
elem_gain      = 1           # per-element antenna power gain G_m
power_ratio    = 1           # |gamma_m|^2, scattered vs incident power
epsilon        = 3.55        # transmissive-side pattern scale (0 = reflect-only)
surface_facing = +x          # which side reflects; the other side transmits

# RF link
tx_gain         = 1
rx_gain         = 1
tx_power        = 0.1        # P, watts (tx_power_dbm also accepted)
noise_power_dbm = -80        # sigma^2; converted to watts at parse time
rician_k        = 3          # kappa
path_loss_exp   = 5          # alpha
wavelength      = 0.05       # lambda, m

# Optimizer
sca_tol       = 0.0001       # mu, relative rate-change stopping threshold
sca_max_iters = 40
t_tiles       = 96           # aggregate elements into tiles for the optimizer
                             # (0 = exact per-element model; recommended for M <= 256)
)";
}

inline std::string to_text(const SceneConfig& c) {
    std::ostringstream out;
    out.precision(17);
    out << "uav_altitude = " << c.uav_altitude << "\n";
    out << "uav_start = " << c.uav_start.x() << " " << c.uav_start.y() << "\n";
    out << "uav_end = " << c.uav_end.x() << " " << c.uav_end.y() << "\n";
    out << "v_max = " << c.v_max << "\n";
    out << "slot_len = " << c.slot_len << "\n";
    out << "n_slots = " << c.n_slots << "\n";
    out << "ground_node = " << c.ground_node.x() << " " << c.ground_node.y() << "\n";
    out << "ios_center = " << c.ios_center.x() << " " << c.ios_center.y() << " "
        << c.ios_center.z() << "\n";
    out << "n_elements = " << c.n_elements << "\n";
    out << "elem_dy = " << c.elem_dy << "\n";
    out << "elem_dz = " << c.elem_dz << "\n";
    out << "elem_gain = " << c.elem_gain << "\n";
    out << "power_ratio = " << c.power_ratio << "\n";
    out << "epsilon = " << c.epsilon << "\n";
    out << "surface_facing = " << (c.facing == SurfaceFacing::PlusX ? "+x" : "-x") << "\n";
    out << "tx_gain = " << c.tx_gain << "\n";
    out << "rx_gain = " << c.rx_gain << "\n";
    out << "tx_power = " << c.tx_power << "\n";
    out << "noise_power = " << c.noise_power << "\n";
    out << "rician_k = " << c.rician_k << "\n";
    out << "path_loss_exp = " << c.path_loss_exp << "\n";
    out << "wavelength = " << c.wavelength << "\n";
    out << "sca_tol = " << c.sca_tol << "\n";
    out << "sca_max_iters = " << c.sca_max_iters << "\n";
    out << "t_tiles = " << c.t_tiles << "\n";
    return out.str();
}

}  // namespace config
}  // namespace ioslink
