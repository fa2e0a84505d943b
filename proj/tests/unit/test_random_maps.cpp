#include <doctest.h>

#include "oracles.hpp"
#include "rfi/error.hpp"
#include "rfi/random_maps.hpp"

#include <Eigen/Eigenvalues>

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

TEST_CASE("index distributions") {
    RngStream rng(0, 0, 0);
    const IndexSample det = sample_index(IndexDistribution::deterministic(), rng);
    CHECK(det.index == 0);
    CHECK(det.xi.size() == 0);

    const auto cat = IndexDistribution::categorical({0.5, 0.5});
    int ones = 0;
    for (std::uint32_t k = 0; k < 10000; ++k) {
        RngStream r(0, 0, k);
        ones += static_cast<int>(sample_index(cat, r).index);
    }
    CHECK(std::abs(ones / 10000.0 - 0.5) <= 0.02);

    const auto none = IndexDistribution::gaussian_noise(3, 0.0, 0.0);
    for (int k = 0; k < 10; ++k) {
        const IndexSample s = sample_index(none, rng);
        CHECK(s.xi.size() == 0);
        CHECK(s.zeta == 0.0);
    }
    const auto noisy = IndexDistribution::gaussian_noise(3, 1.0, 1.0);
    for (int k = 0; k < 1000; ++k) {
        const IndexSample s = sample_index(noisy, rng);
        REQUIRE(s.xi.size() == 3);
        CHECK(s.xi.cwiseAbs().maxCoeff() <= kNoiseTruncation);
        CHECK(std::abs(s.zeta) <= kNoiseTruncation);
    }

    CHECK_THROWS_AS(IndexDistribution::categorical({0.5, 0.6}), DomainError);
    CHECK_THROWS_AS(IndexDistribution::categorical({1.5, -0.5}), DomainError);
    CHECK_THROWS_AS(IndexDistribution::categorical({}), DomainError);
    CHECK_THROWS_AS(IndexDistribution::gaussian_noise(2, -1.0, 0.0), DomainError);
}

TEST_CASE("same stream gives the same draw") {
    const auto dist = IndexDistribution::product(
        {IndexDistribution::categorical({0.2, 0.8}), IndexDistribution::gaussian_noise(2, 1.0, 0.5)});
    RngStream a(4, 1, 2), b(4, 1, 2);
    CHECK(sample_index(dist, a) == sample_index(dist, b));
}

TEST_CASE("noisy hyperplane projector") {
    const auto h = random_maps::anchored_hyperplane(vec({1.0, 2.0}), 3.0);
    CHECK(h.normal.dot(h.anchor) == doctest::Approx(3.0));
    const Point xi = vec({0.3, -0.2});
    const double zeta = 0.4;
    const Point x = vec({2.0, -1.0});
    const Point y = random_maps::perturbed_projection(h, xi, zeta, x);
    const Point u = h.normal + xi;
    CHECK(std::abs(u.dot(y - h.anchor) - zeta) <= 1e-10);
    const Point expected = x - (u.dot(x - h.anchor) - zeta) / u.squaredNorm() * u;
    CHECK((y - expected).norm() <= 1e-14);

    const RandomMap exact = random_maps::noisy_hyperplane(h, 0.0, 0.0);
    RngStream rng(1, 0, 0);
    const Point on = h.anchor + vec({2.0, -1.0});
    CHECK((exact.apply(exact.sample(rng), on) - on).norm() <= 1e-14);

    const RandomMap inv = random_maps::deterministic(ops::scale(1, -1.0));
    CHECK(inv.apply(inv.sample(rng), vec({1.0}))[0] == -1.0);
}

TEST_CASE("noise constants") {
    const auto h = random_maps::anchored_hyperplane(vec({1.0, 2.0}), 0.5);
    const auto flat = random_maps::noise_constants(h, 0.0, 0.0, 5000, 1);
    CHECK(flat.c_hat <= 1e-12);
    CHECK(flat.flagged);

    SUBCASE("quadrature oracle for c with isotropic direction noise") {
        const double s = h.normal.norm();
        const auto nc = random_maps::noise_constants(h, s, 0.0, 200000, 3);
        CHECK_FALSE(nc.flagged);
        const double lim = kNoiseTruncation * s;
        auto density = [s](double u, double v) { return std::exp(-(u * u + v * v) / (2 * s * s)) / (2 * M_PI * s * s); };
        auto entry = [&](int i, int j) {
            return oracle::integrate_2d(
                [&](double u, double v) {
                    const Eigen::Vector2d w(h.normal[0] + u, h.normal[1] + v);
                    return density(u, v) * w[i] * w[j] / w.squaredNorm();
                },
                -lim, lim, 400);
        };
        const double mass = oracle::integrate_2d(density, -lim, lim, 400);
        Eigen::Matrix2d m;
        m << entry(0, 0), entry(0, 1), entry(1, 0), entry(1, 1);
        m /= mass;
        const double c_quad = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(m).eigenvalues()[0];
        CHECK(nc.c_hat > 0.0);
        CHECK(std::abs(nc.c_hat - c_quad) <= 3.0 * nc.c_std_error + 1e-4);
    }

    SUBCASE("closed-form d with offset noise only") {
        const double v = 0.25;
        const auto nc = random_maps::noise_constants(h, 0.0, std::sqrt(v), 200000, 4);
        const double expected = (0.5 * 0.5 + v) / h.normal.squaredNorm();
        CHECK(std::abs(nc.d_hat - expected) <= 3.0 * nc.d_std_error);
    }

    CHECK_THROWS_AS(random_maps::noise_constants(h, 1.0, 0.0, 10, 1), DomainError);
}

TEST_CASE("stochastic splittings apply the drawn components") {
    std::vector<ops::QuadraticFn> fs = {ops::QuadraticFn(Matrix::Identity(2, 2), vec({1.0, 0.0})),
                                        ops::QuadraticFn(2.0 * Matrix::Identity(2, 2), vec({0.0, 1.0}))};
    std::vector<ops::Prox> gs = {ops::Prox(ops::ConvexSet::box(vec({-1.0, -1.0}), vec({1.0, 1.0}))),
                                 ops::Prox(ops::ConvexSet::hyperplane(vec({1.0, 1.0}), 0.0))};
    const RandomMap fb = random_maps::stochastic_forward_backward(fs, {0.5, 0.5}, gs, {0.3, 0.7}, 0.2);
    const RandomMap dr = random_maps::stochastic_douglas_rachford(gs, {0.5, 0.5}, gs, {0.5, 0.5});
    const Point x = vec({2.0, -0.5});
    for (std::uint32_t k = 0; k < 50; ++k) {
        RngStream rng(8, 0, k);
        const IndexSample s = fb.sample(rng);
        const auto i = s.parts[0].index, j = s.parts[1].index;
        CHECK((fb.apply(s, x) - ops::prox(gs[j], ops::grad_step(fs[i], 0.2, x))).norm() <= 1e-14);
        const IndexSample d = dr.sample(rng);
        const auto a = d.parts[0].index, b = d.parts[1].index;
        const Point expected = 0.5 * (ops::reflect(gs[a], ops::reflect(gs[b], x)) + x);
        CHECK((dr.apply(d, x) - expected).norm() <= 1e-14);
    }
    CHECK_THROWS_AS(random_maps::stochastic_forward_backward(fs, {1.0}, gs, {0.5, 0.5}, 0.2), DomainError);
}

TEST_CASE("cyclic noisy projections use independent noise per plane") {
    std::vector<random_maps::NoisyHyperplane> planes = {random_maps::anchored_hyperplane(vec({1.0, 0.0}), 0.0),
                                                        random_maps::anchored_hyperplane(vec({0.0, 1.0}), 0.0)};
    const RandomMap exact = random_maps::noisy_cyclic_projections(planes, 0.0, 0.0);
    RngStream rng(0, 0, 0);
    CHECK(exact.apply(exact.sample(rng), vec({3.0, 4.0})).norm() <= 1e-15);

    const RandomMap noisy = random_maps::noisy_cyclic_projections(planes, 0.1, 0.1);
    const IndexSample s = noisy.sample(rng);
    REQUIRE(s.parts.size() == 2);
    CHECK(s.parts[0].xi != s.parts[1].xi);
    // the last projection is exact onto its own perturbed plane
    const Point y = noisy.apply(s, vec({3.0, 4.0}));
    CHECK(std::abs((planes[1].normal + s.parts[1].xi).dot(y - planes[1].anchor) - s.parts[1].zeta) <= 1e-12);
}
