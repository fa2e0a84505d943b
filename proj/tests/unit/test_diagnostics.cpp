#include <doctest.h>

#include "oracles.hpp"
#include "rfi/diagnostics.hpp"
#include "rfi/error.hpp"
#include "rfi/regularity.hpp"

#include <cmath>

using namespace rfi;

namespace {

Point vec(std::initializer_list<double> v) {
    Point p(static_cast<Index>(v.size()));
    Index i = 0;
    for (double e : v) p[i++] = e;
    return p;
}

std::vector<std::pair<std::size_t, double>> series(std::size_t n, double (*f)(std::size_t)) {
    std::vector<std::pair<std::size_t, double>> out;
    for (std::size_t k = 1; k <= n; ++k) out.emplace_back(k, f(k));
    return out;
}

} // namespace

TEST_CASE("Markov transport discrepancy examples") {
    RngStream rng(1, 0, 0);
    Matrix pts(2, 6);
    for (Index j = 0; j < 6; ++j) pts.col(j) = vec({rng.normal(), rng.normal()});
    const auto mu = EmpiricalMeasure::uniform(pts);

    const RandomMap proj = random_maps::deterministic(ops::projector(ops::ConvexSet::hyperplane(vec({1.0, 0.0}), 0.0)));
    CHECK(markov_discrepancy(proj, mu, mu, 4, 1).value == 0.0);

    const RandomMap id = random_maps::deterministic(ops::identity(2));
    Matrix other = pts.array() + 1.0;
    CHECK(markov_discrepancy(id, mu, EmpiricalMeasure::uniform(other), 4, 1).value == 0.0);

    // single coupling: psi2((1,1), (0,1), (0,1), (0,1)) = |(1,0)|^2
    const auto d = markov_discrepancy(proj, EmpiricalMeasure::dirac(vec({1.0, 1.0})),
                                      EmpiricalMeasure::dirac(vec({0.0, 1.0})), 3, 1);
    CHECK(d.value == doctest::Approx(1.0));
    CHECK(d.std_error == 0.0);
}

TEST_CASE("linear gauge") {
    CHECK(theta_from_linear_gauge(1.0, 0.0, 0.5) == doctest::Approx(0.0));
    CHECK(theta_from_linear_gauge(std::sqrt(2.0), 0.0, 0.5) == doctest::Approx(std::sqrt(0.5)));
    CHECK(theta_from_linear_gauge(1.0, 0.1, 2.0 / 3.0) == doctest::Approx(std::sqrt(0.6)));
    CHECK_THROWS_AS(theta_from_linear_gauge(0.5, 0.0, 0.5), DomainError);
    CHECK_THROWS_AS(theta_from_linear_gauge(10.0, 0.1, 0.5), DomainError); // above sqrt(tau/eps)
    const auto w = linear_gauge_window(0.5, 0.0);
    CHECK(w.first == doctest::Approx(1.0));
    CHECK(std::isinf(w.second));
}

TEST_CASE("table gauge interpolation") {
    const GaugeSpec g = TableGauge{{1.0, 2.0}, {2.0, 3.0}};
    CHECK(evaluate_rho(g, 0.5) == doctest::Approx(1.0));
    CHECK(evaluate_rho(g, 1.5) == doctest::Approx(2.5));
    CHECK(evaluate_rho(g, 3.0) == doctest::Approx(4.0));
    CHECK_THROWS_AS(evaluate_rho(TableGauge{{2.0, 1.0}, {1.0, 2.0}}, 1.0), DomainError);
}

TEST_CASE("rate fitting") {
    const auto geo = series(30, [](std::size_t k) { return 2.0 * std::pow(0.5, static_cast<double>(k)); });
    const RateReport r = fit_rate(geo);
    CHECK(r.c_hat == doctest::Approx(0.5));
    CHECK(r.beta_hat == doctest::Approx(2.0));
    CHECK(r.classification == RateClass::q_linear);
    CHECK(r.fit_window.first == 1);
    CHECK(r.fit_window.second == 30); // 2^-29 > 1e-9

    CHECK(fit_rate(series(50, [](std::size_t k) { return 1.0 / static_cast<double>(k); })).classification ==
          RateClass::sublinear);

    // noisy geometric data: compare with an independent least-squares fit
    RngStream rng(2, 0, 0);
    std::vector<std::pair<std::size_t, double>> noisy;
    std::vector<double> xs, ys;
    for (std::size_t k = 0; k < 40; ++k) {
        const double d = 3.0 * std::pow(0.8, static_cast<double>(k)) * std::exp(0.3 * rng.normal());
        noisy.emplace_back(k, d);
        xs.push_back(static_cast<double>(k));
        ys.push_back(std::log(d));
    }
    const auto [b0, b1] = oracle::line_fit(xs, ys);
    const RateReport rn = fit_rate(noisy);
    CHECK(rn.c_hat == doctest::Approx(std::exp(b1)).epsilon(1e-10));
    CHECK(rn.beta_hat == doctest::Approx(std::exp(b0)).epsilon(1e-10));
    CHECK(rn.classification == RateClass::r_linear);

    // scaling the data scales beta and leaves c alone
    auto scaled = noisy;
    for (auto& p : scaled) p.second *= 7.0;
    const RateReport rs = fit_rate(scaled);
    CHECK(rs.c_hat == doctest::Approx(rn.c_hat).epsilon(1e-12));
    CHECK(rs.beta_hat == doctest::Approx(7.0 * rn.beta_hat).epsilon(1e-12));

    CHECK_THROWS_AS(fit_rate(series(4, [](std::size_t k) { return 1.0 / static_cast<double>(k); })), InconclusiveError);
    // longest run above the floor is used
    auto gap = geo;
    gap[3].second = 0.0;
    const RateReport rg = fit_rate(gap);
    CHECK(rg.fit_window.first == 5);
}

TEST_CASE("subregularity on an exact contraction") {
    // T x = r x: Psi(mu) = (1 - r) W2(mu, delta_0), W2 step = (1 - r) W2(mu, delta_0)
    const double r = 0.5;
    const RandomMap m = random_maps::deterministic(ops::scale(2, r));
    EnsembleConfig cfg;
    cfg.n_chains = 40;
    cfg.n_iters = 20;
    cfg.seed = 3;
    cfg.initial = GaussianCloudStart{Point::Zero(2), 1.0};
    const EnsembleRun run = simulate(m, cfg);
    const auto pi = EmpiricalMeasure::dirac(Point::Zero(2));
    TraceOptions o;
    o.n_xi = 1;
    const auto trace = transport_trace(m, run, pi, o);
    std::vector<double> psi, steps, inv;
    for (const auto& row : trace) {
        psi.push_back(row.psi);
        steps.push_back(std::isfinite(row.w2_step) ? row.w2_step : 0.0);
        inv.push_back(row.w2_to_pi);
    }
    const auto probe = subregularity_check(psi, steps, inv, LinearGauge{10.0, contraction_alpha(r), 0.0});
    CHECK_FALSE(probe.inconclusive);
    CHECK(probe.q_hat == doctest::Approx(1.0));
    CHECK(probe.kappa_hat <= 1.0 / (probe.q_hat * (1.0 - r)) + 1e-9);
    CHECK(probe.holds);
    // a gauge below the observed slope fails
    CHECK_FALSE(subregularity_check(psi, steps, inv, LinearGauge{1.5, contraction_alpha(r), 0.0}).holds);
    // a gauge outside the window fails
    CHECK_FALSE(subregularity_check(psi, steps, inv, LinearGauge{0.1, contraction_alpha(r), 0.0}).holds);
    CHECK(subregularity_check(psi, steps, inv, TableGauge{{1.0}, {2.0 + 1e-9}}).holds);

    const auto fit = fit_rate([&] {
        std::vector<std::pair<std::size_t, double>> d;
        for (const auto& row : trace) d.emplace_back(row.k, row.w2_to_pi);
        return d;
    }());
    CHECK(fit.c_hat == doctest::Approx(r));
    CHECK(fit.classification == RateClass::q_linear);
}

TEST_CASE("subregularity on the identity is inconclusive") {
    const std::vector<double> zeros(10, 0.0), dist(10, 0.5);
    const auto res = subregularity_check(zeros, zeros, dist, LinearGauge{1.0, 0.5, 0.0});
    CHECK(res.inconclusive);
    CHECK_FALSE(res.holds);
    CHECK_THROWS_AS(subregularity_check(zeros, std::vector<double>(3), dist, LinearGauge{1.0, 0.5, 0.0}),
                    DimensionError);
}

TEST_CASE("plateau detection") {
    std::vector<double> v;
    for (int k = 0; k < 400; ++k) v.push_back(std::max(std::pow(0.9, k), 1e-3));
    const auto p = detect_plateau(v);
    REQUIRE(p.has_value());
    // decay reaches 1e-3 at k = 66; the 20-step average settles 19 steps later
    CHECK(*p >= 66);
    CHECK(*p <= 66 + 19 + 50);
    CHECK_FALSE(detect_plateau(std::vector<double>(10, 1.0)).has_value());
    std::vector<double> geo;
    for (int k = 0; k < 400; ++k) geo.push_back(std::pow(0.9, k));
    CHECK_FALSE(detect_plateau(geo).has_value());
}
