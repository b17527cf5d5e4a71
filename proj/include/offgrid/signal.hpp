#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "offgrid/array_model.hpp"
#include "offgrid/rng.hpp"
#include "offgrid/types.hpp"

namespace offgrid {

struct Scenario {
    std::vector<double> true_thetas_deg;
    std::vector<double> source_variances; // sigma_k^2
    double noise_variance = 1.0;          // sigma_n^2
    int snapshots = 100;
    std::uint64_t seed = 0;

    void validate() const {
        if (true_thetas_deg.empty()) throw std::invalid_argument("Scenario: need at least one source");
        if (source_variances.size() != true_thetas_deg.size())
            throw std::invalid_argument("Scenario: one variance per source");
        for (double v : source_variances)
            if (!(v > 0.0)) throw std::invalid_argument("Scenario: source variances must be positive");
        if (!(noise_variance > 0.0)) throw std::invalid_argument("Scenario: noise variance must be positive");
        if (snapshots < 1) throw std::invalid_argument("Scenario: need at least one snapshot");
    }

    // Per-source SNR; equal powers by default.
    static Scenario at_snr(std::vector<double> thetas, double snr_db, double noise_var,
                           int snapshots, std::uint64_t seed) {
        Scenario sc;
        const double sigma_s2 = noise_var * std::pow(10.0, snr_db / 10.0);
        sc.source_variances.assign(thetas.size(), sigma_s2);
        sc.true_thetas_deg = std::move(thetas);
        sc.noise_variance = noise_var;
        sc.snapshots = snapshots;
        sc.seed = seed;
        return sc;
    }
};

struct Measurement {
    CVector y;               // vec(R) with the estimated noise floor removed
    double noise_floor = 0;  // smallest eigenvalue of the sample covariance
    CMatrix sample_cov;      // kept for MUSIC
};

// v(t) = sum_k s_k(t) a(theta_k) + n(t), sources and noise i.i.d. circular
// complex Gaussian. Column t is snapshot t.
inline CMatrix simulate_snapshots(const Scenario& sc, const ArrayGeometry& geom) {
    sc.validate();
    const int m = geom.size();
    const int k = static_cast<int>(sc.true_thetas_deg.size());
    const int t = sc.snapshots;

    CMatrix steering(m, k);
    for (int q = 0; q < k; ++q) steering.col(q) = steering_vector(geom, sc.true_thetas_deg[q]);

    GaussianRng rng(sc.seed);
    CMatrix snaps(m, t);
    CVector src(k);
    for (int col = 0; col < t; ++col) {
        for (int q = 0; q < k; ++q) src[q] = rng.circular(sc.source_variances[q]);
        snaps.col(col) = steering * src;
        for (int row = 0; row < m; ++row) snaps(row, col) += rng.circular(sc.noise_variance);
    }
    return snaps;
}

inline CMatrix sample_covariance(const CMatrix& snapshots) {
    if (snapshots.cols() < 1) throw std::invalid_argument("sample_covariance: empty snapshot set");
    CMatrix r = (snapshots * snapshots.adjoint()) / static_cast<double>(snapshots.cols());
    r = ((r + r.adjoint()) / 2.0).eval(); // exact Hermitian symmetry
    return r;
}

// Closed-form covariance sum_k sigma_k^2 a a^H + sigma_n^2 I, for oracle runs.
inline CMatrix exact_covariance(const Scenario& sc, const ArrayGeometry& geom) {
    const int m = geom.size();
    CMatrix r = sc.noise_variance * CMatrix::Identity(m, m);
    for (std::size_t q = 0; q < sc.true_thetas_deg.size(); ++q) {
        const CVector a = steering_vector(geom, sc.true_thetas_deg[q]);
        r += sc.source_variances[q] * (a * a.adjoint());
    }
    return r;
}

// y = vec(R) - sigma_hat_n^2 vec(I); the noise-floor estimate is the smallest
// eigenvalue, so the solvers see the model without the sigma_n 1_n term.
inline Measurement assemble_measurement(const CMatrix& r) {
    if (r.rows() != r.cols()) throw std::invalid_argument("assemble_measurement: matrix must be square");
    const double herm_err = (r - r.adjoint()).norm();
    if (herm_err > 1e-10 * std::max(1.0, r.norm()))
        throw std::invalid_argument("assemble_measurement: input not Hermitian");

    Eigen::SelfAdjointEigenSolver<CMatrix> eig(r, Eigen::EigenvaluesOnly);
    const double floor = std::max(0.0, eig.eigenvalues().minCoeff());

    Measurement meas;
    meas.sample_cov = r;
    meas.noise_floor = floor;
    meas.y = vectorize_covariance(r) - floor * vectorize_covariance(CMatrix::Identity(r.rows(), r.cols()));
    return meas;
}

} // namespace offgrid
