// Tests for the statistics layer: realized-QV identities, generator-residual
// nulls on deterministic and stochastic runs, QV support fractions, boundary
// bookkeeping defects, occupation times, the KS test, and Z-score machinery.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "stickyheat/diagnostics.hpp"

using namespace stickyheat;

namespace {

EigenSpec one_mode_spec(double mu, BasisFn fn) {
    EigenSpec spec;
    spec.pairs.push_back({mu, std::move(fn)});
    return spec;
}

GridFunction const_grid(int n, double v) {
    return GridFunction(n, std::vector<double>(static_cast<std::size_t>(n), v));
}

// Standard normal draws off the auxiliary stream, one "path" per sequence.
std::vector<double> normal_sequence(std::uint64_t seed, std::uint64_t path, std::size_t count) {
    std::vector<double> out(count);
    normal_fill(SeedPolicy{seed}, path, 0, NoiseStream::auxiliary, out.data(), count);
    return out;
}

}  // namespace

TEST_CASE("realized QV: pinned values, shift invariance, bilinearity") {
    REQUIRE(realized_qv({0.0, 1.0, 0.0, 1.0}) == 3.0);  // increments (1,-1,1)
    REQUIRE(realized_qv({2.5, 2.5, 2.5, 2.5}) == 0.0);
    REQUIRE(realized_qv({7.0}) == 0.0);

    const std::vector<double> a = normal_sequence(11, 0, 200);
    const std::vector<double> b = normal_sequence(11, 1, 200);
    std::vector<double> shifted = a;
    for (double& v : shifted) v += 17.25;  // exactly representable shift
    REQUIRE(realized_qv(shifted) == Catch::Approx(realized_qv(a)).epsilon(1e-12));

    REQUIRE(realized_cross_qv(a, a) == realized_qv(a));  // identical arithmetic
    REQUIRE(realized_cross_qv(a, b) == realized_cross_qv(b, a));
    std::vector<double> combo(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) combo[i] = b[i] + 2.0 * a[i];
    REQUIRE(realized_cross_qv(a, combo) ==
            Catch::Approx(realized_cross_qv(a, b) + 2.0 * realized_qv(a)).epsilon(1e-12));
    REQUIRE_THROWS_AS(realized_cross_qv(a, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("realized QV of a standard BM path concentrates at T") {
    const double dt = 1e-4;
    const std::size_t steps = 10000;
    const int paths = 200;
    int within = 0;
    for (int p = 0; p < paths; ++p) {
        const std::vector<double> z =
            normal_sequence(2024, static_cast<std::uint64_t>(p), steps);
        std::vector<double> w(steps + 1, 0.0);
        for (std::size_t i = 0; i < steps; ++i) w[i + 1] = w[i] + std::sqrt(dt) * z[i];
        if (std::abs(realized_qv(w) - 1.0) <= 0.05) ++within;
    }
    REQUIRE(within >= static_cast<int>(0.95 * paths));
}

TEST_CASE("generator residual vanishes identically on the zero path") {
    SimPlan plan;
    plan.n = 4;
    plan.alpha0 = 0;
    plan.T = 0.05;
    plan.params.dt = 1e-3;
    plan.lambda_cells.assign(4, 0.0);
    plan.factor = build_noise_factor(EigenSpec{}, 4);
    plan.g_cells.assign(4, 0.0);
    const SimulationResult res = simulate(plan);
    const std::vector<double> m = martingale_residual_path(
        res.paths[0], 0, const_grid(4, 1.0), const_grid(4, 0.0), DriftSpec::zero(), 0.0);
    for (double v : m) REQUIRE(v == 0.0);
}

TEST_CASE("generator residual is a roundoff null for trapezoid-matched stepping") {
    // With theta = 1/2 and every step recorded, the trapezoidal quadrature is
    // the scheme's own time discretization, so the deterministic residual
    // collapses to accumulated roundoff.
    const int n = 8;
    SimPlan plan;
    plan.n = n;
    plan.alpha0 = 1;
    plan.T = 0.5;
    plan.params.dt = 4e-3;
    plan.lambda_cells.assign(n, 0.0);
    plan.factor = build_noise_factor(EigenSpec{}, n);
    plan.g_cells.resize(n);
    for (int k = 0; k < n; ++k) plan.g_cells[k] = 1.0 + std::cos(M_PI * (k + 0.5) / n);
    const SimulationResult res = simulate(plan);

    const GridFunction phi = project_basis(BasisFn::cosine(1), n);
    const std::vector<double> m = martingale_residual_path(
        res.paths[0], 1, phi, const_grid(n, 0.0), DriftSpec::zero(), 0.0);
    for (double v : m) REQUIRE(std::abs(v) < 1e-11);
}

TEST_CASE("generator residual of explicit stepping is first order in dt") {
    // theta = 0 advances with the left-endpoint rule while the diagnostic
    // integrates by trapezoid; the mismatch is O(dt). The constant below is a
    // frozen regression bound (measured ~1.6*dt on this scenario).
    const int n = 8;
    auto run_defect = [&](double dt) {
        SimPlan plan;
        plan.n = n;
        plan.alpha0 = 1;
        plan.T = 0.5;
        plan.params.dt = dt;
        plan.params.theta_implicit = 0.0;
        plan.lambda_cells.assign(n, 0.0);
        plan.factor = build_noise_factor(EigenSpec{}, n);
        plan.g_cells.resize(n);
        for (int k = 0; k < n; ++k) plan.g_cells[k] = 1.0 + std::cos(M_PI * (k + 0.5) / n);
        const SimulationResult res = simulate(plan);
        const GridFunction phi = project_basis(BasisFn::cosine(1), n);
        const std::vector<double> m = martingale_residual_path(
            res.paths[0], 1, phi, const_grid(n, 0.0), DriftSpec::zero(), 0.0);
        double worst = 0.0;
        for (double v : m) worst = std::max(worst, std::abs(v));
        return worst;
    };
    const double d1 = run_defect(4e-3);
    const double d2 = run_defect(2e-3);
    REQUIRE(d1 <= 3.0 * 4e-3);          // frozen bound C = 3
    REQUIRE(d2 <= 3.0 * 2e-3);
    REQUIRE(d1 / d2 == Catch::Approx(2.0).margin(0.5));  // first-order scaling
}

TEST_CASE("martingale report on a boundary-free stochastic ensemble") {
    // Initial data far above zero over a short horizon: no sticky or clamp
    // effects, the residual is the pure noise martingale. Z-scores must be
    // calibrated and realized QV must match the spectral target.
    const int n = 4;
    const EigenSpec spec = one_mode_spec(0.5, BasisFn::constant());
    SimPlan plan;
    plan.n = n;
    plan.alpha0 = 1;
    plan.T = 0.2;
    plan.params.dt = 1e-3;
    plan.lambda_cells.assign(n, 0.7);  // inert: the field never sees the layer
    plan.factor = build_noise_factor(spec, n);
    plan.g_cells.assign(n, 5.0);
    plan.paths = 500;
    plan.seeds = SeedPolicy{99991};
    plan.record_every = 10;
    const SimulationResult res = simulate(plan);
    REQUIRE(res.clamp_events == 0);

    const GridFunction phi = project_basis(BasisFn::constant(), n);
    const MartingaleTestReport rep =
        run_martingale_test(res, 1, phi, "constant", spec, const_grid(n, 0.7),
                            DriftSpec::zero());
    REQUIRE(rep.delta_diag == Catch::Approx(2.0 * std::sqrt(0.25 * 1e-3)));
    REQUIRE(rep.frac_abs_z_below_3 >= 0.95);
    REQUIRE_FALSE(rep.qv.degenerate);
    REQUIRE(rep.qv.pooled_ratio > 0.9);
    REQUIRE(rep.qv.pooled_ratio < 1.1);
    REQUIRE(rep.qv.ci_lo < 1.0);
    REQUIRE(rep.qv.ci_hi > 1.0);

    // Rescaling phi leaves the ratio invariant (both sides scale by c^2).
    GridFunction phi3 = phi;
    for (double& v : phi3.values) v *= 3.0;
    const QvIdentityReport r3 = qv_identity_check(res.paths, 1, phi3, spec,
                                                  const_grid(n, 0.7), DriftSpec::zero(),
                                                  rep.delta_diag);
    REQUIRE(r3.pooled_ratio == Catch::Approx(rep.qv.pooled_ratio).epsilon(1e-12));

    // JSON assembly carries the headline fields.
    const json j = rep.to_json();
    REQUIRE(j.at("paths").get<std::size_t>() == 500);
    REQUIRE(j.at("qv_identity").at("degenerate").get<bool>() == false);
}

TEST_CASE("silent noise makes the QV identity degenerate") {
    SimPlan plan;
    plan.n = 2;
    plan.alpha0 = 1;
    plan.T = 0.02;
    plan.params.dt = 1e-3;
    plan.lambda_cells.assign(2, 0.0);
    plan.factor = build_noise_factor(EigenSpec{}, 2);
    plan.g_cells.assign(2, 1.0);
    plan.paths = 3;
    const SimulationResult res = simulate(plan);
    const QvIdentityReport rep =
        qv_identity_check(res.paths, 1, const_grid(2, 1.0), EigenSpec{}, const_grid(2, 0.0),
                          DriftSpec::zero(), 0.01);
    REQUIRE(rep.degenerate);
    REQUIRE(rep.pooled_target == 0.0);
}

TEST_CASE("QV support fractions: trivial paths and monotonicity") {
    // A path that never visits the band accrues nothing below any threshold.
    std::vector<double> high = normal_sequence(5, 0, 300);
    for (double& v : high) v = 1.0 + 0.01 * v;
    for (const SupportRow& row : qv_support_fractions(high, {0.1, 0.2, 0.4}))
        REQUIRE(row.fraction == 0.0);

    // Zero total QV reports zero fractions rather than 0/0.
    const std::vector<double> flat(100, 0.0);
    for (const SupportRow& row : qv_support_fractions(flat, {0.0, 0.1}))
        REQUIRE(row.fraction == 0.0);

    // Fractions are nondecreasing in the threshold for any fixed path.
    std::vector<double> walk(1001, 0.0);
    const std::vector<double> z = normal_sequence(6, 0, 1000);
    for (std::size_t i = 0; i < 1000; ++i) walk[i + 1] = walk[i] + 0.03 * z[i];
    const std::vector<SupportRow> rows =
        qv_support_fractions(walk, {0.01, 0.05, 0.2, 1.0, 100.0});
    for (std::size_t i = 1; i < rows.size(); ++i)
        REQUIRE(rows[i].fraction >= rows[i - 1].fraction);
    REQUIRE(rows.back().fraction == 1.0);  // threshold above the whole path
}

TEST_CASE("QV support fractions on the sticky boundary ensemble") {
    // Fine-step boundary diffusion: QV accrued near zero is a small share
    // and shrinks with the threshold.
    SchemeParams p;
    p.dt = 1e-5;
    const int paths = 50;
    KahanSum f04, f02, f01;
    for (int pa = 0; pa < paths; ++pa) {
        const ScalarPathRecord rec = run_srbm_path(false, 0.0, 1.0, 1.0, 1.0, p,
                                                   SeedPolicy{321321}, pa);
        const std::vector<SupportRow> rows =
            qv_support_fractions(rec.x, {0.01, 0.02, 0.04});
        f01.add(rows[0].fraction);
        f02.add(rows[1].fraction);
        f04.add(rows[2].fraction);
    }
    const double m01 = f01.value() / paths, m02 = f02.value() / paths,
                 m04 = f04.value() / paths;
    REQUIRE(m01 <= 0.10);
    REQUIRE(m01 < m02);
    REQUIRE(m02 < m04);
}

TEST_CASE("boundary bookkeeping defect: exact zeros and refinement") {
    REQUIRE_THROWS_AS(boundary_clock_defect({0.0}, {0.0}, {0.0}, 1.0, 0.0),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(boundary_clock_defect({0.0, 1.0}, {0.0}, {0.0, 0.0}, 1.0, 1.0),
                      std::invalid_argument);

    // lambda = 0 makes the target identically zero, and the recorded drift
    // channel is exactly zero as well.
    SchemeParams p;
    p.dt = 1e-3;
    p.epsilon = 0.15;
    const ScalarPathRecord quiet =
        run_srbm_path(true, 0.5, 0.0, 1.0, 0.5, p, SeedPolicy{11}, 0, 1, true);
    REQUIRE(boundary_clock_defect(quiet.times, quiet.book_a, quiet.book_qv, 0.0, 1.0) ==
            0.0);

    // A path that never enters the layer has a = 0 and realized noise QV
    // tracking q*t; the defect is pure estimator noise.
    SchemeParams ph = p;
    ph.epsilon = 0.1;
    const ScalarPathRecord high =
        run_srbm_path(true, 10.0, 2.0, 1.0, 0.5, ph, SeedPolicy{12}, 0, 1, true);
    for (double av : high.book_a) REQUIRE(av == 0.0);
    const double defect =
        boundary_clock_defect(high.times, high.book_a, high.book_qv, 2.0, 1.0);
    REQUIRE(defect > 0.0);
    REQUIRE(defect < 0.5);

    // Refinement: halving dt shrinks the ensemble-mean defect.
    auto mean_defect = [](double dt) {
        SchemeParams pr;
        pr.dt = dt;
        pr.epsilon = 0.15;
        KahanSum total;
        const int paths = 60;
        for (int pa = 0; pa < paths; ++pa) {
            const ScalarPathRecord rec =
                run_srbm_path(true, 0.0, 1.0, 1.0, 1.0, pr, SeedPolicy{909090}, pa, 1, true);
            total.add(boundary_clock_defect(rec.times, rec.book_a, rec.book_qv, 1.0, 1.0));
        }
        return total.value() / paths;
    };
    const double coarse = mean_defect(1e-3);
    const double fine = mean_defect(5e-4);
    REQUIRE(fine / coarse < 0.8);
}

TEST_CASE("occupation time: closed forms and monotonicity") {
    std::vector<double> times(101), zero(101, 0.0), one(101, 1.0);
    for (int i = 0; i <= 100; ++i) times[i] = i / 100.0;
    REQUIRE(occupation_time(times, zero, 0.0) == Catch::Approx(1.0));
    REQUIRE(occupation_time(times, one, 0.5) == 0.0);
    REQUIRE_THROWS_AS(occupation_time(times, one, -0.1), std::invalid_argument);

    std::vector<double> walk(101, 0.0);
    const std::vector<double> z = normal_sequence(7, 0, 100);
    double peak = 0.0;
    for (int i = 0; i < 100; ++i) {
        walk[i + 1] = std::abs(walk[i] + 0.1 * z[i]);
        peak = std::max(peak, walk[i + 1]);
    }
    double prev = occupation_time(times, walk, peak + 1.0);
    REQUIRE(prev == Catch::Approx(1.0));
    for (double d : {0.5, 0.2, 0.1, 0.02, 0.0}) {
        const double occ = occupation_time(times, walk, d * peak);
        REQUIRE(occ <= prev + 1e-15);
        prev = occ;
    }

    const StickinessReport rep = make_stickiness_report({0.2, 0.4, 0.3}, 0.01, 1.0);
    REQUIRE(rep.mean == Catch::Approx(0.3));
    REQUIRE(rep.ci_lo < rep.mean);
    REQUIRE(rep.ci_hi > rep.mean);
    REQUIRE_THROWS_AS(make_stickiness_report({1.5}, 0.01, 1.0), std::invalid_argument);
}

TEST_CASE("two-sample KS: exact agreement, separation, calibration") {
    const std::vector<double> a = normal_sequence(40, 0, 10000);
    REQUIRE_THROWS_AS(ks_two_sample({}, a), std::invalid_argument);

    const KsResult same = ks_two_sample(a, a);
    REQUIRE(same.statistic == 0.0);
    REQUIRE(same.p_value == 1.0);

    std::vector<double> b = normal_sequence(41, 0, 10000);
    for (double& v : b) v += 5.0;
    const KsResult apart = ks_two_sample(a, b);
    REQUIRE(apart.statistic > 0.9);
    REQUIRE(apart.p_value < 1e-6);

    // Same-distribution calibration: p > 0.01 in at least 98 of 100 pairs.
    int calibrated = 0;
    for (int rep = 0; rep < 100; ++rep) {
        const std::vector<double> u = normal_sequence(500 + rep, 0, 500);
        const std::vector<double> v = normal_sequence(500 + rep, 1, 500);
        if (ks_two_sample(u, v).p_value > 0.01) ++calibrated;
    }
    REQUIRE(calibrated >= 98);

    // Tied data: duplicate-heavy integer samples still produce a valid D.
    const std::vector<double> ta{0, 0, 0, 1, 1, 2};
    const std::vector<double> tb{0, 1, 1, 1, 2, 2};
    const KsResult tied = ks_two_sample(ta, tb);
    REQUIRE(tied.statistic == Catch::Approx(2.0 / 6.0));
    REQUIRE(tied.p_value > 0.0);
}

TEST_CASE("ensemble Z-scores: nulls, calibration, and power") {
    REQUIRE_THROWS_AS(ensemble_ztest(std::vector<std::vector<double>>(10)),
                      std::invalid_argument);

    const std::vector<std::vector<double>> zeros(40, std::vector<double>(5, 0.0));
    for (double zv : ensemble_ztest(zeros)) REQUIRE(zv == 0.0);

    const std::size_t m = 100;
    std::vector<std::vector<double>> incs(1000);
    for (std::size_t p = 0; p < incs.size(); ++p) incs[p] = normal_sequence(314159, p, m);
    const std::vector<double> z = ensemble_ztest(incs);
    long ok = 0;
    for (double zv : z)
        if (std::abs(zv) < 3.0) ++ok;
    REQUIRE(ok >= static_cast<long>(0.99 * m));

    // Injected deterministic drift: the test must light up.
    for (auto& row : incs)
        for (double& v : row) v += 0.2;
    const std::vector<double> zs = ensemble_ztest(incs);
    long loud = 0;
    for (double zv : zs)
        if (std::abs(zv) > 3.0) ++loud;
    REQUIRE(loud >= static_cast<long>(0.9 * m));
}
