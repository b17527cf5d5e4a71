#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "offgrid/types.hpp"

namespace offgrid {

inline constexpr double deg2rad = std::numbers::pi / 180.0;

struct ArrayGeometry {
    // Sensor positions d_m in wavelengths, strictly increasing.
    std::vector<double> sensor_positions;

    int size() const { return static_cast<int>(sensor_positions.size()); }

    static ArrayGeometry ula(int sensors, double spacing_wavelengths = 0.5) {
        if (sensors < 2) throw std::invalid_argument("ArrayGeometry: need at least 2 sensors");
        ArrayGeometry g;
        g.sensor_positions.resize(sensors);
        for (int m = 0; m < sensors; ++m) g.sensor_positions[m] = m * spacing_wavelengths;
        return g;
    }

    void validate() const {
        if (size() < 2) throw std::invalid_argument("ArrayGeometry: need at least 2 sensors");
        for (int m = 1; m < size(); ++m)
            if (!(sensor_positions[m] > sensor_positions[m - 1]))
                throw std::invalid_argument("ArrayGeometry: positions must be strictly increasing");
    }
};

struct AngularGrid {
    RVector phi;          // grid atoms, degrees, ascending, uniform
    double spacing = 0.0; // degrees
    double half_width = 0.0; // r = spacing / 2, bounds the off-grid offset

    int size() const { return static_cast<int>(phi.size()); }

    static AngularGrid uniform(double lo_deg, double hi_deg, double spacing_deg) {
        if (!(spacing_deg > 0.0)) throw std::invalid_argument("AngularGrid: spacing must be positive");
        const int n = static_cast<int>(std::round((hi_deg - lo_deg) / spacing_deg));
        if (n < 2) throw std::invalid_argument("AngularGrid: need at least 2 atoms");
        AngularGrid g;
        g.phi.resize(n);
        for (int i = 0; i < n; ++i) g.phi[i] = lo_deg + i * spacing_deg; // [lo, hi)
        g.spacing = spacing_deg;
        g.half_width = spacing_deg / 2.0;
        return g;
    }

    int nearest_atom(double theta_deg) const {
        int best = 0;
        double dist = std::abs(theta_deg - phi[0]);
        for (int i = 1; i < size(); ++i) {
            const double d = std::abs(theta_deg - phi[i]);
            if (d < dist) { dist = d; best = i; }
        }
        return best;
    }
};

// Entry m of the steering vector is exp(-j 2 pi d_m sin(theta)).
inline CVector steering_vector(const ArrayGeometry& geom, double theta_deg) {
    const double s = std::sin(theta_deg * deg2rad);
    CVector a(geom.size());
    for (int m = 0; m < geom.size(); ++m)
        a[m] = std::polar(1.0, -2.0 * std::numbers::pi * geom.sensor_positions[m] * s);
    return a;
}

// d a / d theta with theta in degrees (chain-rule factor pi/180), so the
// recovered offsets beta = p / s come out directly in degrees.
inline CVector steering_derivative(const ArrayGeometry& geom, double theta_deg) {
    const double t = theta_deg * deg2rad;
    const double c = std::cos(t);
    CVector d(geom.size());
    for (int m = 0; m < geom.size(); ++m) {
        const double dm = geom.sensor_positions[m];
        const Complex phase = std::polar(1.0, -2.0 * std::numbers::pi * dm * std::sin(t));
        d[m] = Complex(0.0, -2.0 * std::numbers::pi * dm * c * deg2rad) * phase;
    }
    return d;
}

inline CVector kron(const CVector& u, const CVector& v) {
    CVector out(u.size() * v.size());
    for (Eigen::Index j = 0; j < u.size(); ++j)
        out.segment(j * v.size(), v.size()) = u[j] * v;
    return out;
}

enum class DerivativeModel {
    PaperKron,   // B column = da x da (as printed)
    ProductRule, // B column = conj(da) x a + conj(a) x da, d/dphi of vec(a a^H)
};

struct Dictionary {
    CMatrix A; // M^2 x N, column i = conj(a(phi_i)) x a(phi_i) = vec(a a^H)
    CMatrix B; // M^2 x N, off-grid perturbation columns
    CMatrix G; // M^2 x 2N = [A, B]
    AngularGrid grid;
    ArrayGeometry geometry;

    int rows() const { return static_cast<int>(G.rows()); }
    int atoms() const { return grid.size(); }
};

inline Dictionary build_dictionary(const ArrayGeometry& geom, const AngularGrid& grid,
                                   DerivativeModel model = DerivativeModel::PaperKron) {
    geom.validate();
    const int m = geom.size();
    const int n = grid.size();
    Dictionary dict;
    dict.A.resize(m * m, n);
    dict.B.resize(m * m, n);
    for (int i = 0; i < n; ++i) {
        const CVector a = steering_vector(geom, grid.phi[i]);
        const CVector da = steering_derivative(geom, grid.phi[i]);
        dict.A.col(i) = kron(a.conjugate(), a);
        if (model == DerivativeModel::PaperKron)
            dict.B.col(i) = kron(da, da);
        else
            dict.B.col(i) = kron(da.conjugate(), a) + kron(a.conjugate(), da);
    }
    dict.G.resize(m * m, 2 * n);
    dict.G << dict.A, dict.B;
    dict.grid = grid;
    dict.geometry = geom;
    return dict;
}

// Column-major stacking: vec(R)[i + M j] = R(i, j).
inline CVector vectorize_covariance(const CMatrix& r) {
    if (r.rows() != r.cols()) throw std::invalid_argument("vectorize_covariance: matrix must be square");
    return Eigen::Map<const CVector>(r.data(), r.size());
}

// C x <= 0 encodes the feasible cone {s >= 0, |p| <= r s}, three rows per group:
//   -s_i <= 0,   p_i - r s_i <= 0,   -p_i - r s_i <= 0.
struct ConstraintMatrix {
    Eigen::SparseMatrix<double> C; // 3N x 2N
    int groups = 0;
    double r = 0.0;
};

inline ConstraintMatrix constraint_matrix(const AngularGrid& grid) {
    const int n = grid.size();
    const double r = grid.half_width;
    if (n < 1 || !(r > 0.0)) throw std::invalid_argument("constraint_matrix: invalid grid");
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(5 * n);
    for (int i = 0; i < n; ++i) {
        trip.emplace_back(i, i, -1.0);
        trip.emplace_back(n + i, n + i, 1.0);
        trip.emplace_back(n + i, i, -r);
        trip.emplace_back(2 * n + i, n + i, -1.0);
        trip.emplace_back(2 * n + i, i, -r);
    }
    ConstraintMatrix cm;
    cm.C.resize(3 * n, 2 * n);
    cm.C.setFromTriplets(trip.begin(), trip.end());
    cm.groups = n;
    cm.r = r;
    return cm;
}

} // namespace offgrid
