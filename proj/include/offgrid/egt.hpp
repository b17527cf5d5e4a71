#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "offgrid/array_model.hpp"
#include "offgrid/prox.hpp"
#include "offgrid/signal.hpp"
#include "offgrid/types.hpp"

namespace offgrid {

struct EgtConfig {
    double eta = 0.1;
    int max_iters = 500;
    double tol_gap = 1e-6;  // relative duality-gap stop
    double s_max = 0.0;     // primal box radius; 0 = trace of the sample covariance
    // Safety factor on the initial mu1, mu2. At 1.0 (mu1*mu2 = ||E||^2) the
    // sufficient excessive-gap maintenance condition tau^2/(1-tau) <= mu1/L1
    // is not met for tau = 2/(k+3); the gap inequality still holds on typical
    // instances and is asserted every iteration. 2.0 restores the guarantee
    // (mu1*mu2 = 4||E||^2) at the cost of heavier smoothing.
    double mu_scale = 1.0;
    double egc_slack = 1e-9;
    double op_norm_g = 0.0; // ||G|| if already known; 0 = compute
    IterObserver observer;
};

// Dual variable of the surrogate problem min ||y - G x||_2 + eta ||x||_{2,1}:
// u1 lives in the complex l2 unit ball, u2 in the product of group l2 balls.
struct EgtDual {
    CVector u1;
    RVector u2;
};

// Problem data shared by the smoothed primal/dual evaluations. X is the
// feasible cone intersected with {s <= s_max} so that the primal diameter
// D1 is finite, as the excessive-gap bounds require.
struct EgtProblem {
    const CMatrix& G;
    const CVector& y;
    double eta;
    double r;
    double s_max;
    double op_norm; // || [G; eta I] ||

    Eigen::Index groups() const { return G.cols() / 2; }

    RVector project_x(const RVector& v) const { return project_feasible_boxed(v, r, s_max); }

    // c = Re(G^H u1) + eta u2, the linear coefficient of x in the Lagrangian
    RVector coeff(const EgtDual& u) const {
        return (G.adjoint() * u.u1).real() + eta * u.u2;
    }
};

struct EgtPrimalEval {
    double value;
    RVector grad;      // Re(G^H u1) + eta u2 at the maximizer
    EgtDual maximizer; // u_{mu2}(x)
};

struct EgtDualEval {
    double value;
    CVector grad_u1;    // -y + G x_{mu1}(u)
    RVector grad_u2;    // eta x_{mu1}(u)
    RVector minimizer_x;
};

// F_{mu2}(x) = max_u <G x - y, u1> + eta <x, u2> - mu2/2 ||u||^2 with the
// closed-form maximizer (ball projections of the scaled arguments).
inline EgtPrimalEval egt_smoothed_primal(const EgtProblem& pb, const RVector& x, double mu2) {
    if (!(mu2 > 0.0)) throw std::invalid_argument("egt_smoothed_primal: mu2 must be positive");
    const CVector resid = pb.G * x - pb.y;
    EgtPrimalEval out;
    out.maximizer.u1 = proj_l2_ball(resid / mu2);
    out.maximizer.u2 = proj_group_l2_ball((pb.eta / mu2) * x);
    out.value = resid.dot(out.maximizer.u1).real() + pb.eta * x.dot(out.maximizer.u2)
              - 0.5 * mu2 * (out.maximizer.u1.squaredNorm() + out.maximizer.u2.squaredNorm());
    out.grad = (pb.G.adjoint() * out.maximizer.u1).real() + pb.eta * out.maximizer.u2;
    return out;
}

// Phi_{mu1}(u) = -<y, u1> + min_{x in X} <G x, u1> + eta <x, u2> + mu1/2 ||x||^2,
// minimizer x_{mu1}(u) = Proj_X(-c / mu1).
inline EgtDualEval egt_smoothed_dual(const EgtProblem& pb, const EgtDual& u, double mu1) {
    if (!(mu1 > 0.0)) throw std::invalid_argument("egt_smoothed_dual: mu1 must be positive");
    if (u.u1.norm() > 1.0 + 1e-9) throw std::invalid_argument("egt_smoothed_dual: u1 outside unit ball");
    const Eigen::Index n = u.u2.size() / 2;
    for (Eigen::Index i = 0; i < n; ++i)
        if (std::hypot(u.u2[i], u.u2[i + n]) > 1.0 + 1e-9)
            throw std::invalid_argument("egt_smoothed_dual: u2 outside group ball");

    const RVector c = pb.coeff(u);
    EgtDualEval out;
    out.minimizer_x = pb.project_x(-c / mu1);
    out.value = -pb.y.dot(u.u1).real() + c.dot(out.minimizer_x)
              + 0.5 * mu1 * out.minimizer_x.squaredNorm();
    out.grad_u1 = -pb.y + pb.G * out.minimizer_x;
    out.grad_u2 = pb.eta * out.minimizer_x;
    return out;
}

inline double egt_primal_value(const EgtProblem& pb, const RVector& x) {
    return (pb.y - pb.G * x).norm() + pb.eta * group_l21_norm(x);
}

// Unsmoothed dual: the inner min of c^T x over the boxed cone is, per group,
// s_max * min(0, c_s - r |c_p|).
inline double egt_dual_value(const EgtProblem& pb, const EgtDual& u) {
    const RVector c = pb.coeff(u);
    const Eigen::Index n = c.size() / 2;
    double inner = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        inner += pb.s_max * std::min(0.0, c[i] - pb.r * std::abs(c[i + n]));
    return -pb.y.dot(u.u1).real() + inner;
}

inline SolverResult solve_egt(const Measurement& meas, const Dictionary& dict,
                              const EgtConfig& cfg) {
    if (!(cfg.eta > 0.0)) throw std::invalid_argument("solve_egt: eta must be positive");

    const Eigen::Index dim = dict.G.cols();
    const double n_groups = static_cast<double>(dim) / 2.0;
    const double r = dict.grid.half_width;
    const double s_max = cfg.s_max > 0.0 ? cfg.s_max : meas.sample_cov.trace().real();
    const double norm_g = cfg.op_norm_g > 0.0 ? cfg.op_norm_g : operator_norm(dict.G);
    const double norm_e = std::sqrt(norm_g * norm_g + cfg.eta * cfg.eta);

    const EgtProblem pb{dict.G, meas.y, cfg.eta, r, s_max, norm_e};

    const double d1 = n_groups * s_max * s_max * (1.0 + r * r);
    const double d2 = 1.0;
    const double d3 = n_groups;
    double mu1 = cfg.mu_scale * norm_e * std::sqrt((d2 + d3) / d1);
    double mu2 = cfg.mu_scale * norm_e * std::sqrt(d1 / (d2 + d3));

    const auto proj_dual = [&](const EgtDual& u) {
        return EgtDual{proj_l2_ball(u.u1), proj_group_l2_ball(u.u2)};
    };

    // Starting pair x_bar = T_{mu2}(x0), u_bar = u_{mu2}(x0) at x0 = 0;
    // mu1 = L1(F_{mu2}) makes the initial pair satisfy the gap condition.
    // It is recorded as the first iterate; update steps produce the rest.
    const RVector x0 = RVector::Zero(dim);
    EgtPrimalEval init = egt_smoothed_primal(pb, x0, mu2);
    EgtDual u_bar = init.maximizer;
    RVector x_bar = pb.project_x(x0 - (mu2 / (norm_e * norm_e)) * init.grad);

    SolverResult res;
    const auto record = [&](int iter) {
        const double f_sm = egt_smoothed_primal(pb, x_bar, mu2).value;
        const double phi_sm = egt_smoothed_dual(pb, u_bar, mu1).value;
        const double f_un = egt_primal_value(pb, x_bar);
        const double gap = f_un - egt_dual_value(pb, u_bar);

        res.objective_trace.push_back(f_un);
        res.gap_trace.push_back(gap);
        res.mu1_trace.push_back(mu1);
        res.mu2_trace.push_back(mu2);
        res.max_infeasibility = std::max(res.max_infeasibility, feasibility_violation(x_bar, r));
        res.iterations = iter;
        if (cfg.observer) cfg.observer(iter, x_bar);

        if (f_sm > phi_sm + cfg.egc_slack) {
            res.aborted = true;
            res.diagnostic = "solve_egt: excessive gap condition violated at iteration " +
                             std::to_string(iter) + " (F_mu2 - Phi_mu1 = " +
                             std::to_string(f_sm - phi_sm) + ")";
        } else if (!std::isfinite(f_un)) {
            res.aborted = true;
            res.diagnostic = "solve_egt: non-finite objective at iteration " + std::to_string(iter);
        } else if (gap <= cfg.tol_gap * std::max(1.0, std::abs(f_un))) {
            res.converged = true;
        }
        return res.aborted || res.converged;
    };

    if (record(1)) {
        res.x_hat = x_bar;
        return res;
    }
    for (int k = 0; k + 1 < cfg.max_iters; ++k) {
        const double tau = 2.0 / (k + 3.0);
        if (k % 2 == 0) {
            // primal-side step, shrink mu1
            const EgtDualEval at_ubar = egt_smoothed_dual(pb, u_bar, mu1);
            const RVector x_hat = (1.0 - tau) * x_bar + tau * at_ubar.minimizer_x;
            const EgtPrimalEval at_xhat = egt_smoothed_primal(pb, x_hat, mu2);
            u_bar.u1 = (1.0 - tau) * u_bar.u1 + tau * at_xhat.maximizer.u1;
            u_bar.u2 = (1.0 - tau) * u_bar.u2 + tau * at_xhat.maximizer.u2;
            x_bar = pb.project_x(x_hat - (mu2 / (norm_e * norm_e)) * at_xhat.grad);
            mu1 *= (1.0 - tau);
        } else {
            // dual-side step, shrink mu2
            const EgtPrimalEval at_xbar = egt_smoothed_primal(pb, x_bar, mu2);
            EgtDual u_hat;
            u_hat.u1 = (1.0 - tau) * u_bar.u1 + tau * at_xbar.maximizer.u1;
            u_hat.u2 = (1.0 - tau) * u_bar.u2 + tau * at_xbar.maximizer.u2;
            const EgtDualEval at_uhat = egt_smoothed_dual(pb, u_hat, mu1);
            x_bar = (1.0 - tau) * x_bar + tau * at_uhat.minimizer_x;
            // ascent step on the concave smoothed dual, then back into the balls
            const double step = mu1 / (norm_e * norm_e);
            u_bar = proj_dual(EgtDual{u_hat.u1 + step * at_uhat.grad_u1,
                                      u_hat.u2 + step * at_uhat.grad_u2});
            mu2 *= (1.0 - tau);
        }
        if (record(k + 2)) break;
    }
    res.x_hat = x_bar;
    return res;
}

} // namespace offgrid
