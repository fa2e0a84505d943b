#include <doctest.h>

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

} // namespace

TEST_CASE("psi2 examples") {
    const Point x = vec({1.0, 0.0}), y = vec({0.0, 0.0});
    CHECK(psi2(x, x, y, y) == 0.0);
    CHECK(psi2(x, y, x, y) == 0.0);
    CHECK(psi2(x, y, y, y) == 1.0);
    CHECK_THROWS_AS(psi2(x, vec({1.0}), x, x), DimensionError);
}

TEST_CASE("closed-form violation bounds") {
    // strongly convex f with t = |tau_f| / L^2
    CHECK(fb_violation_bound(-0.5, 0.0, 2.0, 0.5 / 4.0) == doctest::Approx(0.0));
    CHECK(fb_violation_bound(0.0, 0.0, 3.0, 0.2) == doctest::Approx(2.0 * 0.04 * 9.0));
    CHECK(fb_violation_bound(0.0, 0.1, 1.0, 0.1) == doctest::Approx(1.2 * 1.02 - 1.0));
    CHECK(dr_violation_bound(0.0, 0.0) == 0.0);
    CHECK(dr_violation_bound(0.0, 0.1) == doctest::Approx(0.1));
    CHECK(dr_violation_bound(0.1, 0.1) == doctest::Approx(0.22));
    CHECK(contraction_alpha(0.0) == 0.5);
    CHECK(contraction_alpha(0.5) == 0.75);
    CHECK(contraction_alpha(0.999999) < 1.0);
    CHECK_THROWS_AS(contraction_alpha(1.0), DomainError);
    CHECK_THROWS_AS(fb_violation_bound(0.0, 0.0, 1.0, 0.0), DomainError);

    double prev = 0.0;
    for (int i = 1; i <= 50; ++i) {
        const double b = fb_violation_bound(0.3, 0.2, 1.5, 0.02 * i);
        CHECK(b >= prev);
        prev = b;
    }
}

TEST_CASE("identity map has no violation") {
    const RandomMap id = random_maps::deterministic(ops::identity(3));
    for (double alpha : {0.1, 0.5, 0.9}) {
        const auto rep = certify_afne_expectation(id, alpha, {Point::Zero(3), 1.0}, 20, 5, 1);
        CHECK(rep.eps_hat == 0.0);
        CHECK(rep.kappa2_hat == 0.0);
        CHECK(rep.n_violating == 0);
    }
}

TEST_CASE("projector is firmly nonexpansive") {
    const RandomMap p = random_maps::deterministic(ops::projector(ops::ConvexSet::ball(Point::Zero(2), 1.0)));
    const auto rep = certify_afne_expectation(p, 0.5, {Point::Zero(2), 2.0}, 100, 3, 2);
    CHECK(rep.eps_hat <= 2.0 * rep.se_at_max);
    CHECK(rep.n_violating == 0);
    CHECK(rep.kappa2_hat >= -rep.eps_hat - 1e-12);
}

TEST_CASE("expansive gradient step stays under the closed-form bound") {
    ops::QuadraticFn f(vec({2.0, 1.0}).asDiagonal().toDenseMatrix(), Point::Zero(2));
    const double t = 1.2;
    const RandomMap g = random_maps::deterministic(ops::gradient_step(f, t));
    const double bound = fb_violation_bound(f.hypomonotonicity(), 0.0, f.lipschitz(), t);
    const auto rep = certify_afne_expectation(g, 2.0 / 3.0, {Point::Zero(2), 1.0}, 200, 1, 3);
    CHECK(rep.eps_hat > 0.0);
    CHECK(rep.eps_hat <= bound + 0.05);
    // exact supremum over directions: eigen-direction lambda = 2
    const double sup = std::pow(1.0 - t * 2.0, 2) + 0.5 * std::pow(t * 2.0, 2) - 1.0;
    CHECK(rep.eps_hat <= sup + 1e-12);
    CHECK(rep.eps_hat >= 0.9 * sup);
}

TEST_CASE("contraction certified at alpha = (1 + r)/2") {
    const auto h = random_maps::anchored_hyperplane(vec({1.0, -1.0, 0.5}), 0.3);
    const RandomMap m = random_maps::noisy_hyperplane(h, 1.0, 0.0);
    const PairSampler s{Point::Zero(3), 1.0};
    const double r = estimate_contraction_ratio(m, s, 100, 200, 5);
    CHECK(r < 1.0);
    const auto rep = certify_afne_expectation(m, contraction_alpha(r), s, 100, 200, 5);
    CHECK(rep.eps_hat <= 3.0 * rep.se_at_max + 1e-12);
}

TEST_CASE("certification is independent of the worker count") {
    const auto h = random_maps::anchored_hyperplane(vec({1.0, 2.0}), 0.3);
    const RandomMap m = random_maps::noisy_hyperplane(h, 0.5, 0.2);
    CertifyOptions one, many;
    many.workers = 8;
    const auto a = certify_afne_expectation(m, 0.5, {Point::Zero(2), 1.0}, 30, 20, 9, one);
    const auto b = certify_afne_expectation(m, 0.5, {Point::Zero(2), 1.0}, 30, 20, 9, many);
    CHECK(a.eps_hat == b.eps_hat);
    CHECK(a.kappa2_hat == b.kappa2_hat);
    CHECK(a.max_slack == b.max_slack);
}

TEST_CASE("certification argument checks") {
    const RandomMap id = random_maps::deterministic(ops::identity(2));
    CHECK_THROWS_AS(certify_afne_expectation(id, 1.0, {Point::Zero(2), 1.0}, 1, 1, 0), DomainError);
    CHECK_THROWS_AS(certify_afne_expectation(id, 0.5, {Point::Zero(2), 0.0}, 1, 1, 0), DomainError);
    CHECK_THROWS_AS(certify_afne_expectation(id, 0.5, {Point::Zero(3), 1.0}, 1, 1, 0), DimensionError);
    CHECK_THROWS_AS(certify_afne_expectation(id, 0.5, {Point::Zero(2), 1.0}, 0, 1, 0), DomainError);
}
