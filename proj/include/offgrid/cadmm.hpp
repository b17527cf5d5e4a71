#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "offgrid/array_model.hpp"
#include "offgrid/prox.hpp"
#include "offgrid/signal.hpp"
#include "offgrid/types.hpp"

namespace offgrid {

struct CadmmConfig {
    double rho = 1.0;
    double eta = 0.1;
    int max_iters = 5000;
    double tol_primal = 1e-6;
    double tol_dual = 1e-6;
    IterObserver observer;
};

// Factorization of Re(G^H G) + rho I; it only depends on the dictionary, so
// Monte-Carlo runs share one across trials.
struct CadmmCache {
    double rho = 0.0;
    Eigen::LDLT<RMatrix> ridge;
};

inline CadmmCache build_cadmm_cache(const Dictionary& dict, double rho) {
    if (!(rho > 0.0)) throw std::invalid_argument("build_cadmm_cache: rho must be positive");
    const Eigen::Index dim = dict.G.cols();
    const RMatrix h = (dict.G.adjoint() * dict.G).real();
    CadmmCache cache;
    cache.rho = rho;
    cache.ridge.compute(h + rho * RMatrix::Identity(dim, dim));
    if (cache.ridge.info() != Eigen::Success)
        throw std::runtime_error("build_cadmm_cache: ridge factorization failed");
    return cache;
}

// Consensus ADMM on 1/2 ||y - G z1||^2 + eta ||z2||_{2,1} + indicator_X(z3),
// z_i = x. The decision variable is real, so the ridge system uses the real
// parts of G^H G and G^H y; the factorization is computed once.
inline SolverResult solve_cadmm(const Measurement& meas, const Dictionary& dict,
                                const CadmmConfig& cfg, const CadmmCache* shared = nullptr) {
    if (!(cfg.rho > 0.0)) throw std::invalid_argument("solve_cadmm: rho must be positive");
    if (!(cfg.eta > 0.0)) throw std::invalid_argument("solve_cadmm: eta must be positive");

    const Eigen::Index dim = dict.G.cols();
    const double rho = cfg.rho;
    const double r = dict.grid.half_width;

    CadmmCache local;
    if (shared == nullptr || shared->rho != rho) {
        local = build_cadmm_cache(dict, rho);
        shared = &local;
    }
    const Eigen::LDLT<RMatrix>& ridge = shared->ridge;
    const RVector b = (dict.G.adjoint() * meas.y).real();

    RVector x = RVector::Zero(dim);
    RVector z1 = x, z2 = x, z3 = x;
    RVector u1 = x, u2 = x, u3 = x;

    SolverResult res;
    for (int k = 0; k < cfg.max_iters; ++k) {
        z1 = ridge.solve(b + rho * x - u1);
        z2 = group_soft_threshold(x - u2 / rho, cfg.eta / rho);
        z3 = project_feasible(x - u3 / rho, r);

        const RVector x_new = ((z1 + u1 / rho) + (z2 + u2 / rho) + (z3 + u3 / rho)) / 3.0;
        u1 += rho * (z1 - x_new);
        u2 += rho * (z2 - x_new);
        u3 += rho * (z3 - x_new);

        const double rp = std::max({(z1 - x_new).norm(), (z2 - x_new).norm(), (z3 - x_new).norm()});
        const double rd = rho * (x_new - x).norm();
        x = x_new;

        const double obj = 0.5 * (meas.y - dict.G * x).squaredNorm() + cfg.eta * group_l21_norm(x);
        res.objective_trace.push_back(obj);
        res.residual_primal_trace.push_back(rp);
        res.residual_dual_trace.push_back(rd);
        res.max_infeasibility = std::max(res.max_infeasibility, feasibility_violation(z3, r));
        res.iterations = k + 1;
        if (cfg.observer) cfg.observer(k + 1, x);

        if (!std::isfinite(obj)) {
            res.aborted = true;
            res.diagnostic = "solve_cadmm: non-finite objective at iteration " + std::to_string(k + 1);
            break;
        }
        if (rp <= cfg.tol_primal && rd <= cfg.tol_dual) {
            res.converged = true;
            break;
        }
    }
    res.x_hat = x;
    return res;
}

} // namespace offgrid
