#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "ioslink/convex_program.hpp"
#include "ioslink/errors.hpp"

namespace ioslink {

struct SolveStatus {
    bool converged = false;
    int barrier_rounds = 0;
    int newton_steps = 0;
    double gap_estimate = 0.0;    // m / t at exit; suboptimality surrogate
    double max_violation = 0.0;   // positive residual of the returned point
    double t_final = 1.0;
};

struct SolveOptions {
    double tol = 1e-8;            // target m/t duality-gap surrogate
    double interior_slack = 1e-6; // warm-start push off active constraints
    double t_init = 1.0;
    double t_growth = 10.0;
    int max_rounds = 48;
    int max_newton_per_round = 60;
    int max_newton_total = 4000;
};

namespace solver_detail {

using Mat2 = Eigen::Matrix2d;

enum class Family { Exp, Quad };

struct ScalarOwner {
    Family fam;
    int idx = -1;
};

/// Static shape checks: the solver relies on each scalar appearing in
/// exactly one constraint and balls linking consecutive slots.
struct Structure {
    std::vector<ScalarOwner> owner;
    std::vector<int> free_pos;  // slot -> index among free slots, or -1
    std::vector<int> free_slots;

    explicit Structure(const ConvexProgram& p) {
        owner.assign(p.n_scalars, ScalarOwner{Family::Exp, -1});
        auto claim = [&](int var, Family fam, int idx) {
            if (var < 0 || var >= p.n_scalars)
                throw IllConditioned("scalar variable index out of range");
            if (owner[var].idx != -1)
                throw IllConditioned("scalar variable appears in more than one constraint");
            owner[var] = ScalarOwner{fam, idx};
        };
        for (std::size_t i = 0; i < p.exp_cons.size(); ++i)
            claim(p.exp_cons[i].var, Family::Exp, static_cast<int>(i));
        for (std::size_t i = 0; i < p.quad_cons.size(); ++i) {
            if (p.quad_cons[i].b == 0.0)
                throw IllConditioned("quad-affine constraint without scalar slope");
            claim(p.quad_cons[i].var, Family::Quad, static_cast<int>(i));
        }
        for (int v = 0; v < p.n_scalars; ++v)
            if (owner[v].idx == -1)
                throw IllConditioned("scalar variable not referenced by any constraint");
        for (const auto& c : p.ball_cons)
            if (c.slot_b != c.slot_a + 1)
                throw IllConditioned("ball constraints must link consecutive slots");

        free_pos.assign(p.n_slots, -1);
        for (int n = 0; n < p.n_slots; ++n)
            if (!p.pinned[n]) {
                free_pos[n] = static_cast<int>(free_slots.size());
                free_slots.push_back(n);
            }
    }
};

/// Inverts a nominally-PD 2x2 pivot. Extreme barrier parameters can leave
/// cancellation noise that breaks positive definiteness; a ridge restores
/// it, which only damps the Newton direction (it stays an ascent direction).
inline Mat2 inv2x2_pd(Mat2 m) {
    m = 0.5 * (m + m.transpose().eval());
    const double scale = std::abs(m(0, 0)) + std::abs(m(1, 1)) + 1e-300;
    for (double ridge : {0.0, 1e-12, 1e-8, 1e-4, 1.0, 1e4}) {
        const Mat2 c = m + (ridge * scale) * Mat2::Identity();
        const double det = c(0, 0) * c(1, 1) - c(0, 1) * c(1, 0);
        if (c(0, 0) > 0.0 && det > 0.0 && std::isfinite(det)) {
            Mat2 r;
            r << c(1, 1) / det, -c(0, 1) / det, -c(1, 0) / det, c(0, 0) / det;
            return r;
        }
    }
    throw IllConditioned("waypoint Newton block lost positive definiteness");
}

}  // namespace solver_detail

/// Log-barrier interior-point solver for the linearized trajectory
/// subproblem (maximization). Newton systems are solved exactly by
/// eliminating the scalar block onto the waypoints and factoring the
/// remaining 2x2-block tridiagonal chain, so a step costs O(#constraints).
class BarrierSolver {
  public:
    explicit BarrierSolver(const ConvexProgram& prog, SolveOptions opts = {})
        : prog_(prog), opts_(opts), shape_(prog) {}

    std::pair<SolverPoint, SolveStatus> solve(SolverPoint warm) {
        push_interior(warm);
        if (!strictly_feasible(warm))
            throw IllConditioned("warm start is not strictly feasible");

        SolverPoint cur = std::move(warm);
        SolveStatus status;
        const double m = static_cast<double>(prog_.n_constraints());
        double t = opts_.t_init;
        if (m == 0.0 || prog_.n_scalars + shape_.free_slots.size() == 0) {
            status.converged = true;
            return {cur, status};
        }

        while (status.barrier_rounds < opts_.max_rounds) {
            center(cur, t, status);
            ++status.barrier_rounds;
            status.t_final = t;
            status.gap_estimate = m / t;
            if (m / t < opts_.tol) {
                status.converged = true;
                break;
            }
            if (status.newton_steps >= opts_.max_newton_total) break;
            t *= opts_.t_growth;
        }
        status.max_violation = std::max(0.0, check_feasibility(prog_, cur).worst());
        return {cur, status};
    }

    /// Scaled KKT stationarity residual at a solved point: with barrier
    /// multipliers lambda_i = 1/(t w_i), the residual is |grad phi| / t.
    double kkt_residual(const SolverPoint& pt, double t) {
        grad_hess(pt, t);
        double worst = 0.0;
        for (int v = 0; v < prog_.n_scalars; ++v) worst = std::max(worst, std::abs(gs_[v]));
        for (std::size_t k = 0; k < shape_.free_slots.size(); ++k)
            worst = std::max(worst, gq_[k].lpNorm<Eigen::Infinity>());
        return worst / t;
    }

  private:
    using Mat2 = solver_detail::Mat2;

    /// Moves scalars a fixed slack inside their constraint; waypoints are
    /// left untouched (the tangent trajectory is strictly ball-feasible for
    /// every subproblem the optimizer emits).
    void push_interior(SolverPoint& pt) const {
        const double slack = opts_.interior_slack;
        for (const auto& c : prog_.exp_cons) {
            const double affine = c.a + c.b * pt.q[c.slot].x();
            if (!(affine > 0.0))
                throw IllConditioned("exp-affine domain empty at warm start");
            pt.scalar[c.var] = std::min(pt.scalar[c.var], std::log(affine) - slack);
        }
        for (const auto& c : prog_.quad_cons) {
            const double bound = ((pt.q[c.slot] - c.w).squaredNorm() + c.z2 - c.a) / c.b;
            if (c.b > 0.0)
                pt.scalar[c.var] = std::max(pt.scalar[c.var], bound + slack);
            else
                pt.scalar[c.var] = std::min(pt.scalar[c.var], bound - slack);
        }
    }

    bool strictly_feasible(const SolverPoint& pt) const {
        for (const auto& c : prog_.exp_cons)
            if (!(residuals::exp_affine(c, pt) < 0.0)) return false;
        for (const auto& c : prog_.quad_cons)
            if (!(residuals::quad_affine(c, pt) < 0.0)) return false;
        for (const auto& c : prog_.ball_cons)
            if (!(residuals::ball(c, pt) < 0.0)) return false;
        return true;
    }

    double barrier_value(const SolverPoint& pt, double t) const {
        double phi = t * objective_value(prog_, pt);
        for (const auto& c : prog_.exp_cons) {
            const double w = -residuals::exp_affine(c, pt);
            if (!(w > 0.0)) return -std::numeric_limits<double>::infinity();
            phi += std::log(w);
        }
        for (const auto& c : prog_.quad_cons) {
            const double w = -residuals::quad_affine(c, pt);
            if (!(w > 0.0)) return -std::numeric_limits<double>::infinity();
            phi += std::log(w);
        }
        for (const auto& c : prog_.ball_cons) {
            const double w = -residuals::ball(c, pt);
            if (!(w > 0.0)) return -std::numeric_limits<double>::infinity();
            phi += std::log(w);
        }
        return phi;
    }

    /// Gradient of the barrier objective and the blocks of its (negated)
    /// Hessian: per-scalar diagonal hs_, scalar-to-waypoint coupling cross_,
    /// waypoint diagonal Hq_ and chain off-diagonal Eoff_.
    void grad_hess(const SolverPoint& pt, double t) {
        const std::size_t nf = shape_.free_slots.size();
        gs_.assign(prog_.n_scalars, 0.0);
        hs_.assign(prog_.n_scalars, 0.0);
        cross_.assign(prog_.n_scalars, Vec2::Zero());
        gq_.assign(nf, Vec2::Zero());
        Hq_.assign(nf, Mat2::Zero());
        Eoff_.assign(nf, Mat2::Zero());
        coupled_.assign(nf, false);

        for (int v = 0; v < prog_.n_scalars; ++v) gs_[v] = t * prog_.obj_scalar[v];

        for (const auto& c : prog_.exp_cons) {
            const double ez = std::exp(pt.scalar[c.var]);
            const double w = (c.a + c.b * pt.q[c.slot].x()) - ez;
            const double inv_w = 1.0 / w;
            gs_[c.var] -= ez * inv_w;
            hs_[c.var] += ez * inv_w + ez * ez * inv_w * inv_w;
            const int pos = shape_.free_pos[c.slot];
            if (pos >= 0) {
                gq_[pos].x() += c.b * inv_w;
                Hq_[pos](0, 0) += c.b * c.b * inv_w * inv_w;
                cross_[c.var].x() -= c.b * ez * inv_w * inv_w;
            }
        }
        for (const auto& c : prog_.quad_cons) {
            const Vec2 d = pt.q[c.slot] - c.w;
            const double w = (c.a + c.b * pt.scalar[c.var]) - (d.squaredNorm() + c.z2);
            const double inv_w = 1.0 / w;
            gs_[c.var] += c.b * inv_w;
            hs_[c.var] += c.b * c.b * inv_w * inv_w;
            const int pos = shape_.free_pos[c.slot];
            if (pos >= 0) {
                gq_[pos] -= 2.0 * d * inv_w;
                Hq_[pos] += (2.0 * inv_w) * Mat2::Identity() +
                            (4.0 * inv_w * inv_w) * (d * d.transpose());
                cross_[c.var] -= 2.0 * c.b * inv_w * inv_w * d;
            }
        }
        for (const auto& c : prog_.ball_cons) {
            const Vec2 d = pt.q[c.slot_b] - pt.q[c.slot_a];
            const double w = c.limit_sq - d.squaredNorm();
            const double inv_w = 1.0 / w;
            const Mat2 blk =
                (2.0 * inv_w) * Mat2::Identity() + (4.0 * inv_w * inv_w) * (d * d.transpose());
            const int pa = shape_.free_pos[c.slot_a];
            const int pb = shape_.free_pos[c.slot_b];
            if (pa >= 0) {
                gq_[pa] += 2.0 * d * inv_w;
                Hq_[pa] += blk;
            }
            if (pb >= 0) {
                gq_[pb] -= 2.0 * d * inv_w;
                Hq_[pb] += blk;
            }
            if (pa >= 0 && pb >= 0) {
                Eoff_[pa] -= blk;  // pb == pa + 1 by the structure check
                coupled_[pa] = true;
            }
        }
    }

    /// One exact Newton direction via scalar elimination and a block
    /// tridiagonal LDL^T over the waypoint chain. Returns the decrement
    /// lambda^2 = grad^T * delta.
    double newton_direction(const SolverPoint& pt, double t) {
        grad_hess(pt, t);
        const std::size_t nf = shape_.free_slots.size();

        rq_ = gq_;
        for (int v = 0; v < prog_.n_scalars; ++v) {
            if (!(hs_[v] > 0.0) || !std::isfinite(hs_[v]))
                throw IllConditioned("scalar Newton pivot lost positivity");
            const int slot = owner_slot(v);
            const int pos = shape_.free_pos[slot];
            if (pos >= 0) {
                Hq_[pos] -= cross_[v] * cross_[v].transpose() / hs_[v];
                rq_[pos] -= cross_[v] * (gs_[v] / hs_[v]);
            }
        }

        dq_.assign(nf, Vec2::Zero());
        if (nf > 0) {
            fact_.assign(nf, Mat2::Zero());
            yv_.assign(nf, Vec2::Zero());
            for (std::size_t k = 0; k < nf; ++k) {
                Mat2 dk = Hq_[k];
                Vec2 yk = rq_[k];
                if (k > 0 && coupled_[k - 1]) {
                    const Mat2 w = Eoff_[k - 1].transpose() * fact_[k - 1];
                    dk -= w * Eoff_[k - 1];
                    yk -= w * yv_[k - 1];
                }
                fact_[k] = solver_detail::inv2x2_pd(dk);  // store inverse of pivot
                yv_[k] = yk;
            }
            dq_[nf - 1] = fact_[nf - 1] * yv_[nf - 1];
            for (std::size_t k = nf - 1; k-- > 0;) {
                Vec2 rhs = yv_[k];
                if (coupled_[k]) rhs -= Eoff_[k] * dq_[k + 1];
                dq_[k] = fact_[k] * rhs;
            }
        }

        ds_.assign(prog_.n_scalars, 0.0);
        double decrement = 0.0;
        for (int v = 0; v < prog_.n_scalars; ++v) {
            const int pos = shape_.free_pos[owner_slot(v)];
            double num = gs_[v];
            if (pos >= 0) num -= cross_[v].dot(dq_[pos]);
            ds_[v] = num / hs_[v];
            decrement += gs_[v] * ds_[v];
        }
        for (std::size_t k = 0; k < nf; ++k) decrement += gq_[k].dot(dq_[k]);
        return decrement;
    }

    int owner_slot(int var) const {
        const auto& o = shape_.owner[var];
        return o.fam == solver_detail::Family::Exp ? prog_.exp_cons[o.idx].slot
                                                   : prog_.quad_cons[o.idx].slot;
    }

    void apply_step(const SolverPoint& from, double alpha, SolverPoint& out) const {
        out = from;
        for (std::size_t k = 0; k < shape_.free_slots.size(); ++k)
            out.q[shape_.free_slots[k]] += alpha * dq_[k];
        for (int v = 0; v < prog_.n_scalars; ++v) out.scalar[v] += alpha * ds_[v];
    }

    void center(SolverPoint& cur, double t, SolveStatus& status) {
        double phi = barrier_value(cur, t);
        int stalls = 0;
        for (int it = 0; it < opts_.max_newton_per_round &&
                         status.newton_steps < opts_.max_newton_total;
             ++it) {
            const double dec = newton_direction(cur, t);
            if (!(dec >= 0.0) || !std::isfinite(dec))
                throw IllConditioned("Newton decrement not finite");
            if (0.5 * dec < 1e-11 * (1.0 + std::abs(phi))) return;

            double alpha = 1.0;
            SolverPoint trial;
            bool accepted = false;
            for (int bt = 0; bt < 80; ++bt) {
                apply_step(cur, alpha, trial);
                const double phi_trial = barrier_value(trial, t);
                if (phi_trial > -std::numeric_limits<double>::infinity() &&
                    phi_trial >= phi + 0.25 * alpha * dec) {
                    const double gain = phi_trial - phi;
                    cur = std::move(trial);
                    phi = phi_trial;
                    accepted = true;
                    ++status.newton_steps;
                    if (gain <= 1e-14 * (1.0 + std::abs(phi)))
                        ++stalls;
                    else
                        stalls = 0;
                    break;
                }
                alpha *= 0.5;
            }
            if (!accepted || stalls >= 3) {
                if (0.5 * dec < 1e-5 * (1.0 + std::abs(phi))) return;  // near-centered
                if (!accepted) throw IllConditioned("line search failed far from centrality");
                return;
            }
        }
    }

    const ConvexProgram& prog_;
    SolveOptions opts_;
    solver_detail::Structure shape_;

    // per-step workspace
    std::vector<double> gs_, hs_, ds_;
    std::vector<Vec2> cross_, gq_, rq_, dq_, yv_;
    std::vector<Mat2> Hq_, Eoff_, fact_;
    std::vector<bool> coupled_;
};

/// Convenience wrapper matching the module contract.
inline std::pair<SolverPoint, SolveStatus> solve(const ConvexProgram& prog, SolverPoint warm,
                                                 double tol = 1e-8) {
    SolveOptions opts;
    opts.tol = tol;
    BarrierSolver solver(prog, opts);
    return solver.solve(std::move(warm));
}

}  // namespace ioslink
