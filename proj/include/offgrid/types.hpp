#pragma once

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace offgrid {

using Complex = std::complex<double>;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

// Unknowns are real 2N-vectors x = (s, p); group i pairs (x[i], x[i+N]).
inline Eigen::Index group_count(const RVector& x) { return x.size() / 2; }

inline double group_norm(const RVector& x, Eigen::Index i) {
    const Eigen::Index n = group_count(x);
    return std::hypot(x[i], x[i + n]);
}

/// Sum of per-group l2 norms, ||x||_{2,1}.
inline double group_l21_norm(const RVector& x) {
    const Eigen::Index n = group_count(x);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) acc += std::hypot(x[i], x[i + n]);
    return acc;
}

/// Invoked once per accepted iterate; used by the bench harness to record
/// per-iteration error curves without the solver knowing about metrics.
using IterObserver = std::function<void(int iter, const RVector& x)>;

struct SolverResult {
    RVector x_hat;
    std::vector<double> objective_trace;
    std::vector<double> residual_primal_trace;
    std::vector<double> residual_dual_trace;
    std::vector<double> gap_trace;
    std::vector<double> mu1_trace;
    std::vector<double> mu2_trace;
    std::vector<double> step_trace;
    int iterations = 0;
    bool converged = false;
    bool aborted = false;
    std::string diagnostic;
    // worst constraint violation seen across iterations at the point the
    // solver keeps feasible (z3 for the consensus solver, the iterate itself
    // for the projected ones)
    double max_infeasibility = 0.0;
};

} // namespace offgrid
