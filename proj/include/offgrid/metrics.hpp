#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "offgrid/array_model.hpp"
#include "offgrid/types.hpp"

namespace offgrid {

struct DoAEstimate {
    std::vector<double> thetas;      // phi[index] + beta, ascending
    std::vector<double> betas;
    std::vector<double> powers;
    std::vector<int> grid_indices;
    bool padded = false; // fewer local maxima than sources; filled from largest groups
};

namespace detail {

// K largest local maxima of a nonnegative sequence, peaks at least
// `min_separation` bins apart; pads from the largest remaining entries when
// the sequence has too few peaks.
inline std::pair<std::vector<int>, bool> pick_peaks(const RVector& val, int k, int min_separation) {
    const int n = static_cast<int>(val.size());
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) { return val[a] > val[b]; });

    const auto is_local_max = [&](int i) {
        const bool left = i == 0 || val[i] >= val[i - 1];
        const bool right = i == n - 1 || val[i] >= val[i + 1];
        return left && right;
    };
    const auto far_enough = [&](const std::vector<int>& picked, int i) {
        for (int p : picked)
            if (std::abs(p - i) < min_separation) return false;
        return true;
    };

    std::vector<int> picked;
    for (int i : order) {
        if (static_cast<int>(picked.size()) == k) break;
        if (val[i] > 0.0 && is_local_max(i) && far_enough(picked, i)) picked.push_back(i);
    }
    bool padded = false;
    for (int i : order) {
        if (static_cast<int>(picked.size()) == k) break;
        if (std::find(picked.begin(), picked.end(), i) == picked.end()) {
            picked.push_back(i);
            padded = true;
        }
    }
    return {picked, padded};
}

} // namespace detail

// Invert p = beta .* s on the K strongest groups. The group-lasso optimum is
// free to carry an off-grid offset either in the p block or by splitting the
// s-mass across the bracketing atoms, so a single-atom p/s read-off misses
// it. Matching the zeroth and first moments of the Taylor model over a small
// window around each peak gives a representation-independent estimate:
//   sigma^2 = sum_j s_j,   sigma^2 (theta - phi_peak) = sum_j [s_j (phi_j -
//   phi_peak) + p_j].
// For a solution concentrated on one atom this reduces to the plain
// beta = p_i/s_i inversion. The offset is clamped to the grid half-width.
inline DoAEstimate recover_doas(const RVector& x_hat, const AngularGrid& grid, int k,
                                int window = 2) {
    if (k < 1) throw std::invalid_argument("recover_doas: need k >= 1");
    const int n = grid.size();
    if (x_hat.size() != 2 * n) throw std::invalid_argument("recover_doas: size mismatch with grid");

    RVector norms(n);
    for (int i = 0; i < n; ++i) norms[i] = std::hypot(x_hat[i], x_hat[i + n]);
    auto [picked, padded] = detail::pick_peaks(norms, k, 2);

    const double s_floor = 1e-8 * x_hat.head(n).cwiseAbs().maxCoeff();

    struct Source {
        double theta, beta, power;
        int index;
    };
    std::vector<Source> sources;
    std::sort(picked.begin(), picked.end());
    for (int idx : picked) {
        double mass = 0.0, moment = 0.0;
        double lo = grid.phi[idx], hi = grid.phi[idx];
        for (int j = std::max(0, idx - window); j <= std::min(n - 1, idx + window); ++j) {
            mass += x_hat[j];
            moment += x_hat[j] * (grid.phi[j] - grid.phi[idx]) + x_hat[j + n];
            if (x_hat[j] > s_floor) {
                lo = std::min(lo, grid.phi[j]);
                hi = std::max(hi, grid.phi[j]);
            }
        }
        // the estimate cannot leave the angular support of the window's mass
        const double theta =
            mass > s_floor
                ? std::clamp(grid.phi[idx] + moment / mass, lo - grid.half_width,
                             hi + grid.half_width)
                : grid.phi[idx];
        const int index = grid.nearest_atom(theta);
        sources.push_back({theta, theta - grid.phi[index], mass, index});
    }
    std::sort(sources.begin(), sources.end(),
              [](const Source& a, const Source& b) { return a.theta < b.theta; });

    DoAEstimate est;
    est.padded = padded;
    for (const Source& s : sources) {
        est.thetas.push_back(s.theta);
        est.betas.push_back(s.beta);
        est.powers.push_back(s.power);
        est.grid_indices.push_back(s.index);
    }
    return est;
}

struct MusicResult {
    RVector spectrum; // pseudospectrum over the grid atoms
    DoAEstimate estimate;
};

// Noise-subspace pseudospectrum 1 / ||E_n^H a(phi)||^2; estimates are grid
// atoms only (beta = 0), which is exactly the baseline's resolution limit.
inline MusicResult music_spectrum(const CMatrix& sample_cov, const ArrayGeometry& geom,
                                  const AngularGrid& grid, int k) {
    const int m = geom.size();
    if (k >= m) throw std::invalid_argument("music_spectrum: need k < M");
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(sample_cov);
    if (eig.info() != Eigen::Success) throw std::runtime_error("music_spectrum: eigensolver failed");
    const CMatrix noise = eig.eigenvectors().leftCols(m - k); // ascending eigenvalues

    MusicResult out;
    out.spectrum.resize(grid.size());
    for (int i = 0; i < grid.size(); ++i) {
        const CVector a = steering_vector(geom, grid.phi[i]);
        out.spectrum[i] = 1.0 / (noise.adjoint() * a).squaredNorm();
    }

    auto [picked, padded] = detail::pick_peaks(out.spectrum, k, 2);
    std::sort(picked.begin(), picked.end());
    out.estimate.padded = padded;
    for (int idx : picked) {
        out.estimate.grid_indices.push_back(idx);
        out.estimate.betas.push_back(0.0);
        out.estimate.thetas.push_back(grid.phi[idx]);
        out.estimate.powers.push_back(out.spectrum[idx]);
    }
    return out;
}

// RMSE over trials with ascending-angle pairing:
// sqrt( mean over trials of (1/K) ||theta_hat - theta||^2 ), in degrees.
inline double rmse(const std::vector<DoAEstimate>& estimates, std::vector<double> truths) {
    if (estimates.empty()) throw std::invalid_argument("rmse: no trials");
    std::sort(truths.begin(), truths.end());
    const std::size_t k = truths.size();
    double acc = 0.0;
    for (const auto& est : estimates) {
        if (est.thetas.size() != k) throw std::invalid_argument("rmse: estimate size mismatch");
        std::vector<double> hat = est.thetas;
        std::sort(hat.begin(), hat.end());
        double mse = 0.0;
        for (std::size_t i = 0; i < k; ++i) mse += (hat[i] - truths[i]) * (hat[i] - truths[i]);
        acc += mse / static_cast<double>(k);
    }
    return std::sqrt(acc / static_cast<double>(estimates.size()));
}

inline double reconstruction_error_single(const DoAEstimate& est, std::vector<double> truths) {
    std::sort(truths.begin(), truths.end());
    if (est.thetas.size() != truths.size())
        throw std::invalid_argument("reconstruction_error: estimate size mismatch");
    std::vector<double> hat = est.thetas;
    std::sort(hat.begin(), hat.end());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        num += (hat[i] - truths[i]) * (hat[i] - truths[i]);
        den += truths[i] * truths[i];
    }
    return std::sqrt(num) / std::sqrt(den);
}

// E[ ||theta_hat - theta|| / ||theta|| ] over trials.
inline double reconstruction_error(const std::vector<DoAEstimate>& estimates,
                                   const std::vector<double>& truths) {
    if (estimates.empty()) throw std::invalid_argument("reconstruction_error: no trials");
    double acc = 0.0;
    for (const auto& est : estimates) acc += reconstruction_error_single(est, truths);
    return acc / static_cast<double>(estimates.size());
}

} // namespace offgrid
