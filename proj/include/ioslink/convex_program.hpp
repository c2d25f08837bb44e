#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "ioslink/scene.hpp"

namespace ioslink {

/// Linearized trajectory subproblem in solver form.
///
/// Variables are the free waypoints q[n] (pinned slots are data, not
/// variables) and a flat block of scalar variables holding the s/u/v
/// substitutions. The objective is linear in the scalars; waypoints enter
/// only through constraints. Four constraint families:
///
///   exp-affine    e^{z}                      <= a + b * x[slot]
///   quad-affine   ||q[slot] - w||^2 + z2     <= a + b * z
///   ball          ||q[sb] - q[sa]||^2        <= limit_sq
///   pin           q[slot] fixed (substituted out)
///
/// Every scalar variable appears in exactly one constraint; this is what
/// makes the Newton systems reducible to the waypoint chain.
struct ConvexProgram {
    struct ExpAffine {
        int slot = 0;
        int var = 0;  // scalar index
        double a = 0.0, b = 0.0;
    };
    struct QuadAffine {
        int slot = 0;
        int var = 0;
        Vec2 w{0.0, 0.0};
        double z2 = 0.0;  // fixed squared vertical offset
        double a = 0.0, b = 0.0;
    };
    struct Ball {
        int slot_a = 0, slot_b = 0;
        double limit_sq = 0.0;
    };

    int n_slots = 0;
    std::vector<bool> pinned;       // per slot
    std::vector<Vec2> pin_value;    // valid where pinned
    int n_scalars = 0;
    std::vector<double> obj_scalar;  // objective coefficient per scalar

    std::vector<ExpAffine> exp_cons;
    std::vector<QuadAffine> quad_cons;
    std::vector<Ball> ball_cons;

    std::size_t n_constraints() const {
        return exp_cons.size() + quad_cons.size() + ball_cons.size();
    }
};

/// Candidate point: q for every slot (pinned slots hold their fixed value)
/// plus all scalar values.
struct SolverPoint {
    std::vector<Vec2> q;
    std::vector<double> scalar;
};

inline double objective_value(const ConvexProgram& prog, const SolverPoint& pt) {
    double obj = 0.0;
    for (int i = 0; i < prog.n_scalars; ++i) obj += prog.obj_scalar[i] * pt.scalar[i];
    return obj;
}

namespace residuals {

inline double exp_affine(const ConvexProgram::ExpAffine& c, const SolverPoint& pt) {
    return std::exp(pt.scalar[c.var]) - (c.a + c.b * pt.q[c.slot].x());
}

inline double quad_affine(const ConvexProgram::QuadAffine& c, const SolverPoint& pt) {
    return (pt.q[c.slot] - c.w).squaredNorm() + c.z2 - (c.a + c.b * pt.scalar[c.var]);
}

inline double ball(const ConvexProgram::Ball& c, const SolverPoint& pt) {
    return (pt.q[c.slot_b] - pt.q[c.slot_a]).squaredNorm() - c.limit_sq;
}

}  // namespace residuals

/// Largest residual per constraint family (<= 0 everywhere means feasible).
struct FamilyResiduals {
    double exp_affine = 0.0;
    double quad_affine = 0.0;
    double ball = 0.0;
    double pin = 0.0;

    double worst() const {
        return std::max(std::max(exp_affine, quad_affine), std::max(ball, pin));
    }
};

inline FamilyResiduals check_feasibility(const ConvexProgram& prog, const SolverPoint& pt) {
    FamilyResiduals r;
    r.exp_affine = -std::numeric_limits<double>::infinity();
    r.quad_affine = r.exp_affine;
    r.ball = r.exp_affine;
    r.pin = r.exp_affine;
    for (const auto& c : prog.exp_cons)
        r.exp_affine = std::max(r.exp_affine, residuals::exp_affine(c, pt));
    for (const auto& c : prog.quad_cons)
        r.quad_affine = std::max(r.quad_affine, residuals::quad_affine(c, pt));
    for (const auto& c : prog.ball_cons) r.ball = std::max(r.ball, residuals::ball(c, pt));
    for (int n = 0; n < prog.n_slots; ++n)
        if (prog.pinned[n])
            r.pin = std::max(r.pin, (pt.q[n] - prog.pin_value[n]).norm());
    if (prog.exp_cons.empty()) r.exp_affine = 0.0;
    if (prog.quad_cons.empty()) r.quad_affine = 0.0;
    if (prog.ball_cons.empty()) r.ball = 0.0;
    if (std::none_of(prog.pinned.begin(), prog.pinned.end(), [](bool b) { return b; }))
        r.pin = 0.0;
    return r;
}

/// Portable text dump, one record per constraint, for external
/// cross-checking of a subproblem instance.
inline void dump_program(const ConvexProgram& prog, std::ostream& out) {
    out.precision(17);
    out << "ioslink-subproblem v1\n";
    out << "slots " << prog.n_slots << " scalars " << prog.n_scalars << "\n";
    for (int n = 0; n < prog.n_slots; ++n)
        if (prog.pinned[n])
            out << "pin " << n << " " << prog.pin_value[n].x() << " " << prog.pin_value[n].y()
                << "\n";
    for (int i = 0; i < prog.n_scalars; ++i)
        if (prog.obj_scalar[i] != 0.0) out << "obj " << i << " " << prog.obj_scalar[i] << "\n";
    for (const auto& c : prog.exp_cons)
        out << "expaffine " << c.slot << " " << c.var << " " << c.a << " " << c.b << "\n";
    for (const auto& c : prog.quad_cons)
        out << "quadaffine " << c.slot << " " << c.var << " " << c.w.x() << " " << c.w.y() << " "
            << c.z2 << " " << c.a << " " << c.b << "\n";
    for (const auto& c : prog.ball_cons)
        out << "ball " << c.slot_a << " " << c.slot_b << " " << c.limit_sq << "\n";
}

}  // namespace ioslink
