#include <doctest.h>

#include <numbers>

#include "offgrid/array_model.hpp"
#include "offgrid/rng.hpp"
#include "oracles.hpp"

using namespace offgrid;

TEST_CASE("steering vector basics") {
    const auto ula8 = ArrayGeometry::ula(8);

    SUBCASE("theta = 0 gives all ones") {
        const CVector a = steering_vector(ula8, 0.0);
        for (int m = 0; m < 8; ++m) CHECK(std::abs(a[m] - Complex(1.0, 0.0)) < 1e-15);
    }

    SUBCASE("M=2 at 90 degrees") {
        const CVector a = steering_vector(ArrayGeometry::ula(2), 90.0);
        CHECK(std::abs(a[0] - Complex(1.0, 0.0)) < 1e-15);
        CHECK(std::abs(a[1] - Complex(-1.0, 0.0)) < 1e-12); // exp(-j pi)
    }

    SUBCASE("matches entry-by-entry re-evaluation at 13.2220 degrees") {
        const double theta = 13.2220;
        const CVector a = steering_vector(ula8, theta);
        for (int m = 0; m < 8; ++m) {
            const double d = 0.5 * m;
            const double arg = -2.0 * std::numbers::pi * d * std::sin(theta * std::numbers::pi / 180.0);
            const Complex expect(std::cos(arg), std::sin(arg));
            CHECK(std::abs(a[m] - expect) < 1e-14);
        }
    }

    SUBCASE("unit modulus and conjugate symmetry") {
        GaussianRng rng(7);
        for (int rep = 0; rep < 50; ++rep) {
            const double theta = 180.0 * rng.uniform01() - 90.0;
            const CVector a = steering_vector(ula8, theta);
            const CVector am = steering_vector(ula8, -theta);
            for (int m = 0; m < 8; ++m) {
                CHECK(std::abs(std::abs(a[m]) - 1.0) < 1e-14);
                CHECK(std::abs(am[m] - std::conj(a[m])) < 1e-12);
            }
        }
    }
}

TEST_CASE("dictionary columns") {
    const auto ula8 = ArrayGeometry::ula(8);
    const auto grid = AngularGrid::uniform(-90.0, 90.0, 0.5);
    REQUIRE(grid.size() == 360);
    CHECK(grid.half_width == 0.25);
    const Dictionary dict = build_dictionary(ula8, grid);

    SUBCASE("A column at phi = 0 is all ones") {
        const int i0 = grid.nearest_atom(0.0);
        REQUIRE(grid.phi[i0] == 0.0);
        for (int q = 0; q < 64; ++q) CHECK(std::abs(dict.A(q, i0) - Complex(1, 0)) < 1e-14);
    }

    SUBCASE("B column at phi = 0 is k kron k with k_m = -j 2 pi d_m (pi/180)") {
        const int i0 = grid.nearest_atom(0.0);
        CVector k(8);
        for (int m = 0; m < 8; ++m)
            k[m] = Complex(0.0, -2.0 * std::numbers::pi * (0.5 * m) * std::numbers::pi / 180.0);
        const CVector expect = oracle::kron_naive(k, k);
        CHECK((dict.B.col(i0) - expect).norm() < 1e-14);
    }

    SUBCASE("G is the column concatenation [A, B]") {
        CHECK((dict.G.leftCols(360) - dict.A).norm() == 0.0);
        CHECK((dict.G.rightCols(360) - dict.B).norm() == 0.0);
    }

    SUBCASE("M=2 N=3 matches brute-force Kronecker products") {
        const auto g2 = ArrayGeometry::ula(2);
        const auto grid3 = AngularGrid::uniform(-45.0, 45.0, 30.0);
        REQUIRE(grid3.size() == 3);
        const Dictionary d3 = build_dictionary(g2, grid3);
        for (int i = 0; i < 3; ++i) {
            const CVector a = steering_vector(g2, grid3.phi[i]);
            const CVector da = steering_derivative(g2, grid3.phi[i]);
            CHECK((d3.A.col(i) - oracle::kron_naive(a.conjugate(), a)).norm() < 1e-14);
            CHECK((d3.B.col(i) - oracle::kron_naive(da, da)).norm() < 1e-14);
        }
    }

    SUBCASE("steering derivative matches central differences") {
        for (double theta : {-41.0, 3.5, 13.222, 62.0}) {
            const double h = 1e-6;
            const CVector fp = steering_vector(ula8, theta + h);
            const CVector fm = steering_vector(ula8, theta - h);
            const CVector fd = (fp - fm) / (2.0 * h);
            CHECK((steering_derivative(ula8, theta) - fd).norm() < 1e-7);
        }
    }

    SUBCASE("product-rule variant differentiates vec(a a^H)") {
        const Dictionary alt = build_dictionary(ula8, grid, DerivativeModel::ProductRule);
        const double h = 1e-5;
        const int i = 100;
        const CVector ap = steering_vector(ula8, grid.phi[i] + h);
        const CVector am = steering_vector(ula8, grid.phi[i] - h);
        const CVector fd = (oracle::kron_naive(ap.conjugate(), ap) -
                            oracle::kron_naive(am.conjugate(), am)) /
                           (2.0 * h);
        CHECK((alt.B.col(i) - fd).norm() < 1e-6);
    }
}

TEST_CASE("vectorize_covariance") {
    SUBCASE("identity stacks to 1_n") {
        const CVector v = vectorize_covariance(CMatrix::Identity(2, 2));
        CHECK(v[0] == Complex(1, 0));
        CHECK(v[1] == Complex(0, 0));
        CHECK(v[2] == Complex(0, 0));
        CHECK(v[3] == Complex(1, 0));
    }

    SUBCASE("rank-one all-ones steering gives all twos") {
        const CVector a = steering_vector(ArrayGeometry::ula(2), 0.0);
        const CMatrix r = 2.0 * (a * a.adjoint());
        const CVector v = vectorize_covariance(r);
        for (int q = 0; q < 4; ++q) CHECK(std::abs(v[q] - Complex(2, 0)) < 1e-15);
    }

    SUBCASE("random Hermitian matches index-by-index stacking") {
        GaussianRng rng(11);
        CMatrix r(3, 3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r(i, j) = rng.circular(1.0);
        r = ((r + r.adjoint()) / 2.0).eval();
        const CVector v = vectorize_covariance(r);
        for (int j = 0; j < 3; ++j)
            for (int i = 0; i < 3; ++i) CHECK(v[i + 3 * j] == r(i, j));
    }

    SUBCASE("non-square input rejected") {
        CHECK_THROWS_AS(vectorize_covariance(CMatrix::Zero(2, 3)), std::invalid_argument);
    }
}

TEST_CASE("on-grid covariance column identity") {
    // vec(sigma^2 a a^H) equals sigma^2 times the A column at a grid atom
    const auto ula8 = ArrayGeometry::ula(8);
    const auto grid = AngularGrid::uniform(-90.0, 90.0, 0.5);
    const Dictionary dict = build_dictionary(ula8, grid);
    for (int i : {0, 57, 233, 359}) {
        const CVector a = steering_vector(ula8, grid.phi[i]);
        const CVector lhs = vectorize_covariance(3.7 * (a * a.adjoint()));
        CHECK((lhs - 3.7 * dict.A.col(i)).norm() < 1e-12);
    }
}

TEST_CASE("constraint matrix") {
    const auto grid1 = AngularGrid::uniform(0.0, 1.0, 0.5);
    REQUIRE(grid1.size() == 2);

    SUBCASE("single-group rows") {
        const ConstraintMatrix cm = constraint_matrix(grid1);
        RVector x(4);
        x << 1.0, 0.0, 0.1, 0.0; // group 0 = (1, 0.1)
        const RVector cx = cm.C * x;
        CHECK(cx[0] == doctest::Approx(-1.0));
        CHECK(cx[2] == doctest::Approx(0.1 - 0.25));
        CHECK(cx[4] == doctest::Approx(-0.1 - 0.25));
        CHECK((cx.array() <= 1e-15).all());

        x << 1.0, 0.0, 0.5, 0.0; // violated: p > r s
        const RVector cv = cm.C * x;
        CHECK(cv[2] == doctest::Approx(0.25));
    }

    SUBCASE("membership agrees with direct inequalities on random vectors") {
        const auto grid = AngularGrid::uniform(-90.0, 90.0, 0.5);
        const ConstraintMatrix cm = constraint_matrix(grid);
        const int n = grid.size();
        GaussianRng rng(101);
        int feasible_seen = 0;
        for (int rep = 0; rep < 10000; ++rep) {
            RVector x(2 * n);
            for (int i = 0; i < 2 * n; ++i) x[i] = rng.normal();
            if (rep % 3 == 0) { // mix in feasible points by construction
                for (int i = 0; i < n; ++i) {
                    x[i] = std::abs(x[i]);
                    x[i + n] = cm.r * x[i] * (2.0 * rng.uniform01() - 1.0);
                }
            }
            const bool via_matrix = ((cm.C * x).array() <= 1e-12).all();
            bool direct = true;
            for (int i = 0; i < n; ++i)
                direct = direct && x[i] >= -1e-12 && std::abs(x[i + n]) <= cm.r * x[i] + 1e-12;
            CHECK(via_matrix == direct);
            feasible_seen += direct ? 1 : 0;
        }
        CHECK(feasible_seen > 0);
    }
}
