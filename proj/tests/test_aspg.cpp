#include <doctest.h>

#include "offgrid/aspg.hpp"
#include "offgrid/cadmm.hpp"
#include "oracles.hpp"

using namespace offgrid;

TEST_CASE("aspg zero data") {
    const auto geom = ArrayGeometry::ula(4);
    const auto grid = AngularGrid::uniform(-90.0, 90.0, 22.5);
    const Dictionary dict = build_dictionary(geom, grid);
    Measurement meas;
    meas.y = CVector::Zero(16);
    meas.sample_cov = CMatrix::Identity(4, 4);

    for (auto variant : {PenaltyVariant::L1, PenaltyVariant::L2}) {
        AspgConfig cfg;
        cfg.variant = variant;
        cfg.eta = 0.3;
        SolverResult res = solve_aspg(meas, dict, cfg);
        CHECK(res.converged);
        CHECK(res.iterations == 1);
        CHECK(res.x_hat.norm() == 0.0);
    }
}

TEST_CASE("aspg recovers two noiseless on-grid sources") {
    // zero-padded L1 gradient needs a small half-width; sector grid at the
    // production r = 0.25
    const auto geom = ArrayGeometry::ula(8);
    const auto grid = AngularGrid::uniform(5.0, 40.0, 0.5);
    const Dictionary dict = build_dictionary(geom, grid);
    const int i1 = grid.nearest_atom(13.0);
    const int i2 = grid.nearest_atom(28.5);

    Scenario sc;
    sc.true_thetas_deg = {grid.phi[i1], grid.phi[i2]};
    sc.source_variances = {1.0, 1.0};
    sc.noise_variance = 1.0;
    sc.snapshots = 1;
    const Measurement meas = assemble_measurement(exact_covariance(sc, geom));

    for (auto variant : {PenaltyVariant::L1, PenaltyVariant::L2}) {
        AspgConfig cfg;
        cfg.variant = variant;
        cfg.eta = 0.01;
        // the L2 run oscillates in and out of the band before settling
        cfg.max_iters = variant == PenaltyVariant::L1 ? 20000 : 40000;
        cfg.tol = 1e-12;
        SolverResult res = solve_aspg(meas, dict, cfg);
        REQUIRE_FALSE(res.aborted);

        // dominant groups are the planted atoms, per-source power within 1%
        CHECK(std::abs(res.x_hat[i1] - 1.0) <= 1e-2);
        CHECK(std::abs(res.x_hat[i2] - 1.0) <= 1e-2);
        int argmax = 0;
        for (int i = 1; i < grid.size(); ++i)
            if (group_norm(res.x_hat, i) > group_norm(res.x_hat, argmax)) argmax = i;
        CHECK((argmax == i1 || argmax == i2));
        CHECK(res.max_infeasibility == 0.0);
    }
}

TEST_CASE("lemma2 envelope arithmetic") {
    SUBCASE("limit is eps/2") {
        CHECK(lemma2_envelope(1e12, 1e-2, 8.0, 100.0, 3.0) ==
              doctest::Approx(5e-3).epsilon(1e-6));
    }

    SUBCASE("equal-terms point reproduces the iteration bound") {
        const double eps = 1e-2, d = 8.0, l_f = 250.0, dist0 = 2.5;
        // Number-of-iterations bound: sqrt(4 dist0^2 / eps (L_f + 2 D / eps)) - 1
        const double k_star =
            std::sqrt(4.0 * dist0 * dist0 / eps * (l_f + 2.0 * d / (eps * 1.0))) - 1.0;
        CHECK(lemma2_envelope(k_star, eps, d, l_f, dist0) == doctest::Approx(eps).epsilon(1e-12));
    }

    SUBCASE("hand-computed value at N = 16") {
        // D = N/2 = 8, eps = 0.01, L_f = 100, dist0 = 1, k = 9:
        // 0.005 + 2 (100 + 1600) * 1 / 100 = 0.005 + 34 = 34.005
        CHECK(lemma2_envelope(9.0, 0.01, 8.0, 100.0, 1.0) ==
              doctest::Approx(34.005).epsilon(1e-12));
    }

    SUBCASE("rejects bad arguments") {
        CHECK_THROWS_AS(lemma2_envelope(1.0, -1e-2, 8.0, 1.0, 1.0), std::invalid_argument);
    }
}

TEST_CASE("aspg satisfies the lemma2 envelope against a cadmm oracle") {
    const auto geom = ArrayGeometry::ula(4);
    const auto grid = AngularGrid::uniform(-4.0, 4.0, 0.5);
    const Dictionary dict = build_dictionary(geom, grid);
    REQUIRE(grid.size() == 16);

    Scenario sc = Scenario::at_snr({-2.3, 1.6}, 5.0, 1.0, 200, 99);
    const Measurement meas = assemble_measurement(sample_covariance(simulate_snapshots(sc, geom)));
    const double eta = 0.2;

    // high-accuracy reference for F* and x*; the dual residual tail is slow on
    // this coherent sector grid, the objective itself is stable to ~1e-6 rel
    CadmmConfig oracle_cfg;
    oracle_cfg.eta = eta;
    oracle_cfg.tol_primal = 1e-13;
    oracle_cfg.tol_dual = 1e-13;
    oracle_cfg.max_iters = 200000;
    const SolverResult ref = solve_cadmm(meas, dict, oracle_cfg);
    REQUIRE(ref.residual_primal_trace.back() < 1e-9);
    const double f_star = ref.objective_trace.back();

    const double eps = 1e-2;
    const double d = grid.size() / 2.0; // max of ||u||^2/2 over either dual ball
    const double l_f = std::pow(operator_norm(dict.G), 2);
    const double dist0 = ref.x_hat.norm(); // x^0 = 0

    for (auto variant : {PenaltyVariant::L1, PenaltyVariant::L2}) {
        AspgConfig cfg;
        cfg.variant = variant;
        cfg.eta = eta;
        cfg.mu = eps / (2.0 * d);
        cfg.max_iters = 200;
        cfg.tol = 0.0;
        SolverResult res = solve_aspg(meas, dict, cfg);
        REQUIRE_FALSE(res.aborted);
        for (int k = 1; k <= res.iterations; ++k) {
            const double bound = lemma2_envelope(k, eps, d, l_f, dist0);
            CHECK(res.objective_trace[k - 1] - f_star <= bound + 1e-9);
        }
    }
}

TEST_CASE("aspg backtracking floor") {
    const auto geom = ArrayGeometry::ula(4);
    const auto grid = AngularGrid::uniform(-20.0, 20.0, 0.5); // r = 0.25
    const Dictionary dict = build_dictionary(geom, grid);
    Scenario sc = Scenario::at_snr({-5.0, 6.0}, 4.0, 1.0, 150, 8);
    const Measurement meas = assemble_measurement(sample_covariance(simulate_snapshots(sc, geom)));

    const double l_f = std::pow(operator_norm(dict.G), 2);
    // The sufficient-decrease argument behind the floor needs the true
    // smoothed gradient, which only the L2 variant has; the zero-padded L1
    // pseudo-gradient can push the step below it, so there the check is just
    // that the run survives.
    {
        AspgConfig cfg;
        cfg.variant = PenaltyVariant::L2;
        cfg.eta = 0.2;
        cfg.mu = 1e-3;
        cfg.max_iters = 500;
        cfg.tol = 0.0;
        SolverResult res = solve_aspg(meas, dict, cfg);
        REQUIRE_FALSE(res.aborted);
        const double floor = cfg.gamma / (l_f + 1.0 / cfg.mu);
        for (double alpha : res.step_trace) CHECK(alpha >= floor - 1e-15);
    }
    {
        AspgConfig cfg;
        cfg.variant = PenaltyVariant::L1;
        cfg.eta = 0.2;
        cfg.mu = 1e-3;
        cfg.max_iters = 500;
        cfg.tol = 0.0;
        SolverResult res = solve_aspg(meas, dict, cfg);
        CHECK_FALSE(res.aborted);
        for (double alpha : res.step_trace) CHECK(alpha > 0.0);
    }
}

TEST_CASE("aspg variants land within the smoothing bias of each other") {
    const auto geom = ArrayGeometry::ula(4);
    const auto grid = AngularGrid::uniform(-20.0, 20.0, 0.5);
    const Dictionary dict = build_dictionary(geom, grid);
    Scenario sc = Scenario::at_snr({-12.0, 7.5}, 6.0, 1.0, 150, 77);
    const Measurement meas = assemble_measurement(sample_covariance(simulate_snapshots(sc, geom)));

    const double mu = 1e-3;
    const double d = grid.size() / 2.0;
    double finals[2];
    int idx = 0;
    for (auto variant : {PenaltyVariant::L1, PenaltyVariant::L2}) {
        AspgConfig cfg;
        cfg.variant = variant;
        cfg.eta = 0.2;
        cfg.mu = mu;
        cfg.max_iters = 20000;
        cfg.tol = 1e-13;
        SolverResult res = solve_aspg(meas, dict, cfg);
        REQUIRE_FALSE(res.aborted);
        finals[idx++] = res.objective_trace.back();
    }
    CHECK(std::abs(finals[0] - finals[1]) <= 5.0 * mu * d);
}
