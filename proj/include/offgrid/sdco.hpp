#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "offgrid/array_model.hpp"
#include "offgrid/prox.hpp"
#include "offgrid/signal.hpp"
#include "offgrid/types.hpp"

namespace offgrid {

enum class ShrinkRule {
    Paper,     // z threshold 2 eps / L, as printed
    ProxExact, // eps / L, the prox constant of eps ||z||_2
};

struct SdcoConfig {
    double epsilon = -1.0; // must be set; default_sdco_epsilon gives the natural scale
    double mu0 = 1.0;
    double gamma = 0.5;    // backtracking: L grows by 1/gamma
    int max_iters = 1000;  // per continuation round
    double tol = 1e-8;     // relative dual-objective change
    ShrinkRule shrink_rule = ShrinkRule::Paper;
    int continuation_rounds = 8;
    double continuation_alpha = 0.5;
    IterObserver observer;
};

// Finite-sample covariance error scale: entries of the sample covariance
// deviate from the ensemble one at order 1/sqrt(T).
inline double default_sdco_epsilon(const Measurement& meas, int snapshots) {
    return meas.sample_cov.trace().real() / std::sqrt(static_cast<double>(snapshots));
}

struct SdcoProblem {
    const CMatrix& G;
    const CVector& y;
    const Eigen::SparseMatrix<double>& C;
    double epsilon;
    double mu;
    RVector x0; // prox center
    ShrinkRule rule;
};

struct SdcoState {
    CVector z;
    RVector w;
    CVector s_z; // averaged dual pair
    RVector s_w;
    double c = 1.0;
    double L = 1.0;
};

// x(z, w) = GST(x0 - (1/mu)(Re(G^H z) + C^T w), 1/mu), the unique minimizer of
// the smoothed Lagrangian inner problem.
inline RVector sdco_inner_argmin(const SdcoProblem& pb, const CVector& z, const RVector& w) {
    if (!(pb.mu > 0.0)) throw std::invalid_argument("sdco_inner_argmin: mu must be positive");
    const RVector lin = (pb.G.adjoint() * z).real() + pb.C.transpose() * w;
    return group_soft_threshold(pb.x0 - lin / pb.mu, 1.0 / pb.mu);
}

inline double sdco_gsm(const SdcoProblem& pb, const CVector& z, const RVector& w,
                       const RVector& x) {
    return -group_l21_norm(x) - 0.5 * pb.mu * (x - pb.x0).squaredNorm()
         + z.dot(pb.y - pb.G * x).real() - w.dot(pb.C * x);
}

// Smoothed dual value g_mu(z, w) = -(g_sm + eps ||z||), the quantity the
// solver drives upward.
inline double sdco_dual_value(const SdcoProblem& pb, const CVector& z, const RVector& w,
                              const RVector& x) {
    return -(sdco_gsm(pb, z, w, x) + pb.epsilon * z.norm());
}

struct SdcoStepInfo {
    bool ok = true;
    std::string diagnostic;
    double dual_value = 0.0;
    double feas_residual = 0.0; // ||y - G x(z,w)|| at the accepted pair
    RVector x;                  // x(z,w) at the accepted pair
};

// One accelerated generalized-gradient-projection step in the
// Auslender-Teboulle form: evaluate the gradient at the interpolation of the
// averaged pair with the point pair, move the point pair by the Shrink /
// nonnegative-clamp closed forms at step 1/(c L), then fold it back into the
// average. At c = 1 (the start of every round) this is exactly one plain
// proximal-gradient step. L grows until the quadratic upper bound holds at
// the new averaged pair.
inline SdcoStepInfo sdco_step(const SdcoProblem& pb, SdcoState& st) {
    SdcoStepInfo info;

    const CVector z_md = (1.0 - st.c) * st.s_z + st.c * st.z;
    const RVector w_md = (1.0 - st.c) * st.s_w + st.c * st.w;

    const RVector x_md = sdco_inner_argmin(pb, z_md, w_md);
    const double gsm_md = sdco_gsm(pb, z_md, w_md, x_md);
    const CVector grad_z = pb.y - pb.G * x_md;
    const RVector cx = pb.C * x_md;

    const double thr_scale = pb.rule == ShrinkRule::Paper ? 2.0 : 1.0;
    CVector z_next, s_z_next;
    RVector w_next, s_w_next, x_next;
    while (true) {
        const double step = 1.0 / (st.c * st.L);
        z_next = l2_shrink<Complex>(st.z - step * grad_z, thr_scale * pb.epsilon * step);
        w_next = (st.w + step * cx).cwiseMax(0.0);
        s_z_next = (1.0 - st.c) * st.s_z + st.c * z_next;
        s_w_next = (1.0 - st.c) * st.s_w + st.c * w_next;
        x_next = sdco_inner_argmin(pb, s_z_next, s_w_next);
        const double gsm_next = sdco_gsm(pb, s_z_next, s_w_next, x_next);
        const double upper = gsm_md + grad_z.dot(s_z_next - z_md).real() - cx.dot(s_w_next - w_md)
                           + 0.5 * st.L * ((s_z_next - z_md).squaredNorm() +
                                           (s_w_next - w_md).squaredNorm());
        if (gsm_next <= upper + 1e-12 * std::max(1.0, std::abs(upper))) break;
        st.L /= 0.5; // gamma = 0.5
        if (st.L > 1e16) {
            info.ok = false;
            info.diagnostic = "sdco_step: backtracking L overflow";
            return info;
        }
    }

    st.s_z = s_z_next;
    st.s_w = s_w_next;
    st.c = 2.0 / (1.0 + std::sqrt(1.0 + 4.0 / (st.c * st.c)));
    st.z = z_next;
    st.w = w_next;

    info.x = x_next;
    info.dual_value = sdco_dual_value(pb, s_z_next, s_w_next, x_next);
    info.feas_residual = (pb.y - pb.G * x_next).norm();
    return info;
}

namespace detail {

inline void sdco_run_round(const SdcoProblem& pb, SdcoState& st, const SdcoConfig& cfg,
                           SolverResult& res, int& iter_base) {
    double prev_dual = std::nan("");
    for (int k = 0; k < cfg.max_iters; ++k) {
        SdcoStepInfo info = sdco_step(pb, st);
        if (!info.ok) {
            res.aborted = true;
            res.diagnostic = info.diagnostic + " at iteration " + std::to_string(iter_base + k + 1);
            return;
        }
        res.objective_trace.push_back(info.dual_value);
        res.residual_primal_trace.push_back(info.feas_residual);
        res.step_trace.push_back(1.0 / st.L);
        res.mu1_trace.push_back(pb.mu); // smoothing parameter of the owning round
        res.iterations = iter_base + k + 1;
        res.x_hat = info.x;
        if (cfg.observer) cfg.observer(res.iterations, info.x);

        if (!std::isfinite(info.dual_value)) {
            res.aborted = true;
            res.diagnostic = "solve_sdco: non-finite dual objective at iteration " +
                             std::to_string(res.iterations);
            return;
        }
        if (k > 0 && std::abs(info.dual_value - prev_dual) <=
                         cfg.tol * std::max(1.0, std::abs(prev_dual))) {
            res.converged = true;
            iter_base = res.iterations;
            return;
        }
        prev_dual = info.dual_value;
    }
    iter_base = res.iterations;
}

} // namespace detail

inline SolverResult solve_sdco(const Measurement& meas, const Dictionary& dict,
                               const ConstraintMatrix& cm, const SdcoConfig& cfg) {
    if (cfg.epsilon < 0.0)
        throw std::invalid_argument("solve_sdco: epsilon must be set (see default_sdco_epsilon)");

    SdcoProblem pb{dict.G, meas.y, cm.C, cfg.epsilon, cfg.mu0,
                   RVector::Zero(dict.G.cols()), cfg.shrink_rule};
    SdcoState st;
    st.z = CVector::Zero(dict.G.rows());
    st.w = RVector::Zero(cm.C.rows());
    st.s_z = st.z;
    st.s_w = st.w;

    SolverResult res;
    res.x_hat = pb.x0;
    int iter_base = 0;
    detail::sdco_run_round(pb, st, cfg, res, iter_base);
    return res;
}

// Standard continuation: mu halves each round, each round warm-starts the
// dual pair and moves the prox center to the previous round's solution.
inline SolverResult solve_sdco_continuation(const Measurement& meas, const Dictionary& dict,
                                            const ConstraintMatrix& cm, const SdcoConfig& cfg) {
    if (cfg.epsilon < 0.0)
        throw std::invalid_argument("solve_sdco_continuation: epsilon must be set");
    if (cfg.continuation_rounds < 1)
        throw std::invalid_argument("solve_sdco_continuation: need at least one round");

    SdcoProblem pb{dict.G, meas.y, cm.C, cfg.epsilon, cfg.mu0,
                   RVector::Zero(dict.G.cols()), cfg.shrink_rule};
    SdcoState st;
    st.z = CVector::Zero(dict.G.rows());
    st.w = RVector::Zero(cm.C.rows());
    st.s_z = st.z;
    st.s_w = st.w;

    SolverResult res;
    res.x_hat = pb.x0;
    int iter_base = 0;
    for (int round = 0; round < cfg.continuation_rounds; ++round) {
        if (round > 0) {
            pb.mu *= cfg.continuation_alpha;
            pb.x0 = res.x_hat;
            st.c = 1.0; // restart the acceleration; the inner objective changed
            st.s_z = st.z;
            st.s_w = st.w;
        }
        res.converged = false;
        detail::sdco_run_round(pb, st, cfg, res, iter_base);
        if (res.aborted) break;
    }
    return res;
}

} // namespace offgrid
