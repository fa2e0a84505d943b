#include <doctest.h>

#include "rfi/engine.hpp"
#include "rfi/error.hpp"

#include <algorithm>
#include <cmath>

using namespace rfi;

namespace {

Point scalar(double v) { return Point::Constant(1, v); }

RandomMap involution() { return random_maps::deterministic(ops::scale(1, -1.0)); }

/// T_xi x = xi with xi ~ N(0, I): forgets the state in one step.
RandomMap reset_map(Index dim) {
    return RandomMap(dim, IndexDistribution::gaussian_noise(dim, 1.0, 0.0),
                     [](const IndexSample& s, const Point&) { return s.xi; });
}

EnsembleConfig config(std::size_t chains, std::size_t iters, InitialDistribution init) {
    EnsembleConfig c;
    c.n_chains = chains;
    c.n_iters = iters;
    c.seed = 17;
    c.initial = std::move(init);
    return c;
}

} // namespace

TEST_CASE("identity keeps every snapshot equal to the initial cloud") {
    const RandomMap id = random_maps::deterministic(ops::identity(3));
    auto cfg = config(20, 5, GaussianCloudStart{Point::Zero(3), 1.0});
    const EnsembleRun run = simulate(id, cfg);
    REQUIRE(run.snapshots.size() == 6);
    for (const auto& s : run.snapshots) CHECK(s.measure.points() == run.snapshots[0].measure.points());
    for (const auto& r : run.residual_stats) CHECK(r.mean == 0.0);
}

TEST_CASE("involution alternates") {
    const EnsembleRun run = simulate(involution(), config(3, 4, DeltaStart{scalar(1.0)}));
    const double expected[] = {1.0, -1.0, 1.0, -1.0, 1.0};
    for (std::size_t k = 0; k <= 4; ++k)
        for (Index c = 0; c < 3; ++c) CHECK(run.snapshots[k].measure.points()(0, c) == expected[k]);
    CHECK(run.residual_stats[0].mean == doctest::Approx(2.0));
    CHECK(run.expectation_trace == std::vector<double>(5, 1.0));
}

TEST_CASE("a resetting map reaches its law in one step") {
    const RandomMap m = reset_map(2);
    auto cfg = config(50, 1, DeltaStart{Point::Constant(2, 5.0)});
    const EnsembleRun run = simulate(m, cfg);
    for (Index c = 0; c < 50; ++c) {
        RngStream rng(cfg.seed, static_cast<std::uint32_t>(c), 0, stream::kIndex);
        const IndexSample s = m.sample(rng);
        CHECK(run.snapshots[1].measure.point(c) == s.xi);
    }
}

TEST_CASE("results do not depend on the worker count") {
    const auto h = random_maps::anchored_hyperplane(Point::LinSpaced(4, 1.0, 2.0), 0.7);
    const RandomMap m = random_maps::noisy_hyperplane(h, 0.5, 0.1);
    auto cfg = config(37, 25, GaussianCloudStart{Point::Zero(4), 2.0});
    const EnsembleRun a = simulate(m, cfg, {1});
    for (unsigned w : {2u, 3u, 8u}) {
        const EnsembleRun b = simulate(m, cfg, {w});
        CHECK(a.residuals == b.residuals);
        CHECK(a.final_cloud().points() == b.final_cloud().points());
        CHECK(a.expectation_trace == b.expectation_trace);
    }
}

TEST_CASE("snapshots and residual statistics") {
    const auto h = random_maps::anchored_hyperplane(Point::Ones(3), 1.0);
    const RandomMap m = random_maps::noisy_hyperplane(h, 0.3, 0.2);
    auto cfg = config(11, 10, GaussianCloudStart{Point::Zero(3), 1.0});
    cfg.snapshot_every = 4;
    const EnsembleRun run = simulate(m, cfg);
    std::vector<std::size_t> ks;
    for (const auto& s : run.snapshots) ks.push_back(s.k);
    CHECK(ks == std::vector<std::size_t>{0, 4, 8});
    CHECK(run.snapshot_at(8) != nullptr);
    CHECK(run.snapshot_at(5) == nullptr);

    // percentiles by linear interpolation over the sorted chain values
    std::vector<double> r(11);
    for (Index c = 0; c < 11; ++c) r[static_cast<std::size_t>(c)] = run.residuals(3, c);
    std::sort(r.begin(), r.end());
    CHECK(run.residual_stats[3].p50 == r[5]);
    CHECK(run.residual_stats[3].p10 == doctest::Approx(r[1]));
    CHECK(run.residual_stats[3].p90 == doctest::Approx(r[9]));
    CHECK_THROWS_AS(cesaro(run), DomainError);
}

TEST_CASE("initial distributions") {
    Matrix pts(1, 2);
    pts << -3.0, 3.0;
    auto cfg = config(5, 1, ExplicitCloudStart{pts});
    for (std::size_t c = 0; c < 5; ++c) CHECK(initial_point(cfg, c)[0] == (c % 2 == 0 ? -3.0 : 3.0));
    cfg.initial = GaussianCloudStart{Point::Zero(1), 0.0};
    CHECK(initial_point(cfg, 3)[0] == 0.0);
}

TEST_CASE("configuration errors") {
    const RandomMap id = random_maps::deterministic(ops::identity(2));
    CHECK_THROWS_AS(simulate(id, config(0, 5, DeltaStart{Point::Zero(2)})), DomainError);
    CHECK_THROWS_AS(simulate(id, config(1, 0, DeltaStart{Point::Zero(2)})), DomainError);
    auto cfg = config(1, 5, DeltaStart{Point::Zero(2)});
    cfg.burn_in = 5;
    CHECK_THROWS_AS(simulate(id, cfg), DomainError);
    CHECK_THROWS_AS(simulate(id, config(1, 5, DeltaStart{Point::Zero(3)})), DimensionError);
    CHECK_THROWS_AS(simulate(id, config(1, 5, GaussianCloudStart{Point::Zero(2), -1.0})), DomainError);
}

TEST_CASE("divergence names the first failing chain") {
    // chain c starts at c; the iterate turns into NaN once it exceeds 100
    const RandomMap blow = random_maps::deterministic(ops::from_function(1, [](const Point& x) {
        Point y = 2.0 * x;
        if (std::abs(y[0]) > 100.0) y[0] = std::nan("");
        return y;
    }));
    Matrix pts(1, 4);
    pts << 0.0, 0.0, 10.0, 30.0;
    try {
        simulate(blow, config(4, 10, ExplicitCloudStart{pts}), {2});
        FAIL("expected DivergenceError");
    } catch (const DivergenceError& e) {
        CHECK(e.chain() == 2);
        CHECK(e.step() == 4);
    }
}

TEST_CASE("Cesaro averages of the involution") {
    const EnsembleRun run = simulate(involution(), config(4, 100, DeltaStart{scalar(1.0)}));
    const auto nu2 = cesaro_average(run, 2);
    CHECK(nu2.mass_near(scalar(-1.0)) == doctest::Approx(0.5));
    CHECK(nu2.mass_near(scalar(1.0)) == doctest::Approx(0.5));
    CHECK(cesaro_average(run, 5).mass_near(scalar(-1.0)) == doctest::Approx(0.6));
    const auto all = cesaro(run, 10);
    CHECK(all.size() == 10);
    CHECK(all[6].first == 7);
    CHECK_THROWS_AS(cesaro_average(run, 0), DomainError);
    CHECK_THROWS_AS(cesaro_average(run, 101), DomainError);

    const EnsembleRun idrun = simulate(random_maps::deterministic(ops::identity(1)),
                                       config(6, 8, GaussianCloudStart{Point::Zero(1), 1.0}));
    for (std::size_t k = 1; k <= 8; ++k) {
        const auto nu = cesaro_average(idrun, k);
        CHECK(nu.size() == static_cast<Index>(6 * k));
        for (Index i = 0; i < nu.size(); ++i) CHECK(nu.points()(0, i) == idrun.snapshots[0].measure.points()(0, i % 6));
    }
}

TEST_CASE("boundedness monitor") {
    const RandomMap half = random_maps::deterministic(ops::scale(2, 0.5));
    auto cfg = config(10, 30, GaussianCloudStart{Point::Zero(2), 1.0});
    CHECK(boundedness_monitor(simulate(half, cfg)).bounded);

    const RandomMap twice = random_maps::deterministic(ops::scale(1, 2.0));
    const EnsembleRun run = simulate(twice, config(2, 30, DeltaStart{scalar(1.0)}));
    const auto rep = boundedness_monitor(run);
    CHECK_FALSE(rep.bounded);
    for (std::size_t k = 1; k < run.expectation_trace.size(); ++k)
        CHECK(run.expectation_trace[k] == 2.0 * run.expectation_trace[k - 1]);
    CHECK(rep.m_hat == std::ldexp(1.0, 30));
}

TEST_CASE("invariant estimate pools the tail") {
    const RandomMap m = reset_map(2);
    auto cfg = config(10, 50, DeltaStart{Point::Zero(2)});
    cfg.burn_in = 10;
    const EnsembleRun run = simulate(m, cfg);
    // 41 eligible snapshots (k = 10..50), last ceil(20%) = 9 pooled
    CHECK(estimate_invariant(run).size() == 90);
    CHECK(estimate_invariant(run, 25).size() == 25);
}

TEST_CASE("coupled runs share index draws") {
    const RandomMap half = random_maps::deterministic(ops::scale(1, 0.5));
    auto cfg = config(3, 5, DeltaStart{scalar(1.0)});
    const CoupledRun cr = simulate_coupled(half, cfg, DeltaStart{scalar(-1.0)});
    for (Index s = 0; s < cr.distances.rows(); ++s)
        CHECK(cr.distances(s, 0) == doctest::Approx(2.0 * std::pow(0.5, static_cast<double>(s))));
}
