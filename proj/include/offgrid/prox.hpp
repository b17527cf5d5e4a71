#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "offgrid/types.hpp"

namespace offgrid {

// Projection of one (s, p) pair onto K = {s >= 0, |p| <= r s}: inside stays,
// polar cone (s <= -r|p|) collapses to the origin, otherwise land on the
// nearer boundary ray (1, r sign(p)) / sqrt(1 + r^2).
inline void project_cone_pair(double vs, double vp, double r, double& os, double& op) {
    const double ap = std::abs(vp);
    if (vs >= 0.0 && ap <= r * vs) {
        os = vs;
        op = vp;
        return;
    }
    if (vs <= -r * ap) {
        os = 0.0;
        op = 0.0;
        return;
    }
    const double s = std::max(0.0, (vs + r * ap) / (1.0 + r * r));
    os = s;
    op = (vp >= 0.0 ? r : -r) * s;
}

inline RVector project_feasible(const RVector& v, double r) {
    if (!(r > 0.0)) throw std::invalid_argument("project_feasible: r must be positive");
    const Eigen::Index n = group_count(v);
    RVector out(v.size());
    for (Eigen::Index i = 0; i < n; ++i)
        project_cone_pair(v[i], v[i + n], r, out[i], out[i + n]);
    return out;
}

// Projection onto K intersected with {s <= s_max}. If the plain cone
// projection respects the cap it is already the answer; otherwise the
// projection sits on the s = s_max face with p clamped to +-r s_max.
inline RVector project_feasible_boxed(const RVector& v, double r, double s_max) {
    if (!(r > 0.0)) throw std::invalid_argument("project_feasible_boxed: r must be positive");
    if (!(s_max > 0.0)) throw std::invalid_argument("project_feasible_boxed: s_max must be positive");
    const Eigen::Index n = group_count(v);
    RVector out(v.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        double os, op;
        project_cone_pair(v[i], v[i + n], r, os, op);
        if (os > s_max) {
            os = s_max;
            op = std::clamp(v[i + n], -r * s_max, r * s_max);
        }
        out[i] = os;
        out[i + n] = op;
    }
    return out;
}

// S2 applied per group: each (x_i, x_{i+N}) scaled onto the l2 unit ball.
inline RVector proj_group_l2_ball(const RVector& a) {
    const Eigen::Index n = group_count(a);
    RVector out = a;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double nrm = std::hypot(a[i], a[i + n]);
        if (nrm > 1.0) {
            out[i] /= nrm;
            out[i + n] /= nrm;
        }
    }
    return out;
}

// S1: element-wise clamp onto the l-infinity unit ball.
inline RVector proj_linf_ball(const RVector& a) {
    return a.cwiseMax(-1.0).cwiseMin(1.0);
}

inline CVector proj_l2_ball(const CVector& a) {
    const double nrm = a.norm();
    return nrm > 1.0 ? CVector(a / nrm) : a;
}

// Group soft-thresholding, the proximal operator of t ||.||_{2,1}. A zero
// group stays zero (0/0 := 0).
inline RVector group_soft_threshold(const RVector& x, double t) {
    if (t < 0.0) throw std::invalid_argument("group_soft_threshold: t must be nonnegative");
    const Eigen::Index n = group_count(x);
    RVector out(x.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        const double nrm = std::hypot(x[i], x[i + n]);
        const double scale = nrm > t ? (nrm - t) / nrm : 0.0;
        out[i] = scale * x[i];
        out[i + n] = scale * x[i + n];
    }
    return out;
}

// Shrink(x, t) = max(1 - t/||x||, 0) x, the prox of t ||.||_2.
template <typename Scalar>
inline Eigen::Vector<Scalar, Eigen::Dynamic> l2_shrink(const Eigen::Vector<Scalar, Eigen::Dynamic>& x,
                                                       double t) {
    if (t < 0.0) throw std::invalid_argument("l2_shrink: t must be nonnegative");
    const double nrm = x.norm();
    if (nrm <= t || nrm == 0.0) return Eigen::Vector<Scalar, Eigen::Dynamic>::Zero(x.size());
    return ((nrm - t) / nrm) * x;
}

// Largest violation of {s >= 0, |p| <= r s} across groups; 0 for feasible x.
inline double feasibility_violation(const RVector& x, double r) {
    const Eigen::Index n = group_count(x);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        worst = std::max({worst, -x[i], std::abs(x[i + n]) - r * x[i]});
    return worst;
}

enum class PenaltyVariant { L1, L2 };

struct SmoothedPenalty {
    double eta = 1.0; // regularization weight, >= 0
    double mu = 1e-8; // smoothing parameter, > 0
    PenaltyVariant variant = PenaltyVariant::L2;
};

struct ValueGrad {
    double value = 0.0;
    RVector grad;
};

// Nesterov smoothing of eta ||x||_{2,1} with prox-function d(u) = ||u||^2 / 2.
// L2 variant maximizes over the product of group l2 balls; L1 variant works on
// the group-norm vector nu over the l-infinity ball, gradient zero-padded onto
// the p block. Either gradient is (1/mu)-Lipschitz.
inline ValueGrad smoothed_penalty_value_grad(const RVector& x, const SmoothedPenalty& pen) {
    if (!(pen.mu > 0.0)) throw std::invalid_argument("smoothed_penalty: mu must be positive");
    const Eigen::Index n = group_count(x);
    ValueGrad out;
    out.grad = RVector::Zero(x.size());
    if (pen.variant == PenaltyVariant::L2) {
        const RVector u = proj_group_l2_ball((pen.eta / pen.mu) * x);
        out.value = pen.eta * x.dot(u) - 0.5 * pen.mu * u.squaredNorm();
        out.grad = pen.eta * u;
    } else {
        RVector nu(n);
        for (Eigen::Index i = 0; i < n; ++i) nu[i] = std::hypot(x[i], x[i + n]);
        const RVector u = proj_linf_ball((pen.eta / pen.mu) * nu);
        out.value = pen.eta * nu.dot(u) - 0.5 * pen.mu * u.squaredNorm();
        out.grad.head(n) = pen.eta * u;
    }
    return out;
}

// Largest singular value by power iteration on A^H A. Deterministic start,
// relative tolerance on successive estimates.
template <typename Derived>
inline double operator_norm(const Eigen::MatrixBase<Derived>& a, double tol = 1e-6,
                            int max_iters = 500) {
    using Scalar = typename Derived::Scalar;
    using Vec = Eigen::Vector<Scalar, Eigen::Dynamic>;
    if (a.size() == 0) throw std::invalid_argument("operator_norm: empty matrix");

    Vec v(a.cols());
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        h = h * 6364136223846793005ULL + 1442695040888963407ULL;
        v[i] = Scalar(1.0 + 1e-3 * static_cast<double>(h >> 40) / static_cast<double>(1 << 24));
    }
    v /= v.norm();

    // Successive estimates converge geometrically at the (sigma2/sigma1)^2
    // rate; the Aitken extrapolation of the last two increments bounds the
    // remaining error, which a bare increment test underestimates when the
    // spectrum has a small gap.
    double sigma = 0.0;
    double delta_prev = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        Vec w = a * v;
        const double next = w.norm();
        if (next == 0.0) return 0.0;
        v = a.adjoint() * w;
        const double vn = v.norm();
        if (vn == 0.0) return next;
        v /= vn;
        const double delta = std::abs(next - sigma);
        if (it > 0) {
            if (delta <= 1e-15 * next) return next;
            if (delta_prev > 0.0 && delta < delta_prev) {
                const double rate = delta / delta_prev;
                if (delta * rate / (1.0 - rate) <= tol * next) return next;
            }
        }
        delta_prev = delta;
        sigma = next;
    }
    throw std::runtime_error("operator_norm: power iteration did not converge");
}

} // namespace offgrid
