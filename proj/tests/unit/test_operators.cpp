#include <doctest.h>

#include "rfi/error.hpp"
#include "rfi/operators.hpp"
#include "rfi/rng.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>

using namespace rfi;
using namespace rfi::ops;

namespace {

Point vec(std::initializer_list<double> v) {
    Point p(static_cast<Index>(v.size()));
    Index i = 0;
    for (double e : v) p[i++] = e;
    return p;
}

Matrix random_matrix(RngStream& rng, Index r, Index c) {
    Matrix m(r, c);
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < c; ++j) m(i, j) = rng.normal();
    return m;
}

} // namespace

TEST_CASE("quadratic constants follow the hypomonotone convention") {
    QuadraticFn f(vec({-1.0, 2.0}).asDiagonal().toDenseMatrix(), Point::Zero(2));
    CHECK(f.lipschitz() == doctest::Approx(2.0));
    CHECK(f.min_eigenvalue() == doctest::Approx(-1.0));
    CHECK(f.hypomonotonicity() == doctest::Approx(1.0));

    Matrix q(2, 2);
    q << 1.0, 2.0, 0.0, 1.0; // symmetrized to [[1,1],[1,1]]
    QuadraticFn g(q, vec({1.0, 0.0}), 3.0);
    CHECK(g.matrix()(0, 1) == doctest::Approx(1.0));
    CHECK(g.matrix()(1, 0) == doctest::Approx(1.0));
    CHECK(g.value(vec({1.0, 1.0})) == doctest::Approx(0.5 * 4.0 + 1.0 + 3.0));
    CHECK(g.gradient(vec({1.0, 1.0})).isApprox(vec({3.0, 2.0})));
    CHECK_THROWS_AS(QuadraticFn(Matrix::Identity(2, 2), Point::Zero(3)), DimensionError);
}

TEST_CASE("projection examples") {
    const auto h = ConvexSet::hyperplane(vec({1.0, 0.0}), 0.0);
    CHECK(project(h, vec({3.0, 4.0})).isApprox(vec({0.0, 4.0})));

    const auto box = ConvexSet::box(vec({0.0, 0.0}), vec({1.0, 1.0}));
    CHECK(project(box, vec({2.0, -1.0})).isApprox(vec({1.0, 0.0})));
    const auto ball = ConvexSet::ball(vec({0.0, 0.0}), 2.0);
    CHECK(project(ball, vec({3.0, 4.0})).isApprox(vec({1.2, 1.6})));
    CHECK(project(ConvexSet::full_space(2), vec({3.0, 4.0})) == vec({3.0, 4.0}));

    // idempotence on the set
    RngStream rng(5, 0, 0);
    Matrix a = random_matrix(rng, 2, 4);
    Point b = random_matrix(rng, 2, 1).col(0);
    const auto aff = ConvexSet::affine_subspace(a, b);
    for (const ConvexSet* s : {&h, &box, &ball}) {
        const Point p = project(*s, vec({0.3, 0.7}));
        CHECK(s->contains(p));
        CHECK((project(*s, p) - p).norm() <= 1e-15);
    }
    const Point on = project(aff, random_matrix(rng, 4, 1).col(0));
    CHECK(aff.contains(on));
    CHECK((project(aff, on) - on).norm() <= 1e-12);
}

TEST_CASE("affine projection matches a least-squares oracle") {
    RngStream rng(11, 0, 0);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = random_matrix(rng, 2, 4);
        const Point b = random_matrix(rng, 2, 1).col(0);
        const Point x = random_matrix(rng, 4, 1).col(0);
        // minimum-norm correction: solve A d = A x - b in the least-squares sense
        const Point d = a.completeOrthogonalDecomposition().solve(a * x - b);
        const Point expected = x - d;
        const Point got = project(ConvexSet::affine_subspace(a, b), x);
        for (Index i = 0; i < 4; ++i) CHECK(std::abs(got[i] - expected[i]) <= 1e-10);
    }
}

TEST_CASE("degenerate sets are rejected") {
    CHECK_THROWS_AS(ConvexSet::hyperplane(Point::Zero(2), 1.0), DomainError);
    CHECK_THROWS_AS(ConvexSet::box(vec({1.0, 0.0}), vec({0.0, 1.0})), DomainError);
    CHECK_THROWS_AS(ConvexSet::ball(vec({0.0}), 0.0), DomainError);
    Matrix a(2, 3);
    a << 1, 2, 3, 2, 4, 6;
    CHECK_THROWS_AS(ConvexSet::affine_subspace(a, vec({1.0, 2.0})), DomainError);
    CHECK_THROWS_AS(project(ConvexSet::full_space(2), vec({1.0, 2.0, 3.0})), DimensionError);
}

TEST_CASE("gradient step examples") {
    QuadraticFn id(Matrix::Identity(2, 2), Point::Zero(2));
    CHECK(grad_step(id, 1.0, vec({5.0, -3.0})).norm() == doctest::Approx(0.0));
    QuadraticFn zero(Matrix::Zero(2, 2), Point::Zero(2));
    CHECK(grad_step(zero, 0.3, vec({5.0, -3.0})) == vec({5.0, -3.0}));
    QuadraticFn f(vec({2.0, 1.0}).asDiagonal().toDenseMatrix(), vec({1.0, 0.0}));
    const Point y = grad_step(f, 0.1, vec({1.0, 1.0}));
    CHECK(y[0] == doctest::Approx(0.7));
    CHECK(y[1] == doctest::Approx(0.9));
    CHECK_THROWS_AS(grad_step(f, 0.0, vec({1.0, 1.0})), DomainError);
}

TEST_CASE("prox examples") {
    Prox ind(ConvexSet::hyperplane(vec({1.0, 0.0}), 0.0));
    CHECK(prox(ind, vec({3.0, 4.0})).isApprox(vec({0.0, 4.0})));
    Prox half_sq(QuadraticFn(Matrix::Identity(2, 2), Point::Zero(2)));
    CHECK(prox(half_sq, vec({2.0, 2.0})).isApprox(vec({1.0, 1.0})));

    RngStream rng(2, 0, 0);
    const Matrix b = random_matrix(rng, 3, 3);
    const Matrix q = b * b.transpose() + 0.1 * Matrix::Identity(3, 3);
    const Point c = random_matrix(rng, 3, 1).col(0);
    const Point x = random_matrix(rng, 3, 1).col(0);
    const Point p = prox(Prox(QuadraticFn(q, c)), x);
    CHECK((x - (p + q * p + c)).norm() <= 1e-10);

    // I + Q singular
    CHECK_THROWS_AS(Prox(QuadraticFn(-Matrix::Identity(2, 2), Point::Zero(2))), DomainError);
}

TEST_CASE("reflection examples") {
    Prox ind(ConvexSet::hyperplane(vec({1.0, 0.0}), 0.0));
    CHECK(reflect(ind, vec({3.0, 4.0})).isApprox(vec({-3.0, 4.0})));
    CHECK(reflect(ind, vec({0.0, 4.0})).isApprox(vec({0.0, 4.0})));

    RngStream rng(9, 0, 0);
    for (int trial = 0; trial < 10; ++trial) {
        Prox aff(ConvexSet::affine_subspace(random_matrix(rng, 2, 5), random_matrix(rng, 2, 1).col(0)));
        const Point x = random_matrix(rng, 5, 1).col(0);
        CHECK((reflect(aff, reflect(aff, x)) - x).norm() <= 1e-12);
    }
}

TEST_CASE("map composition") {
    QuadraticFn f(vec({2.0, 1.0}).asDiagonal().toDenseMatrix(), vec({1.0, 0.0}));
    const Map fb = compose_fb(f, Prox(ConvexSet::full_space(2)), 0.1);
    CHECK(fb(vec({1.0, 1.0})).isApprox(grad_step(f, 0.1, vec({1.0, 1.0}))));

    Prox h(ConvexSet::hyperplane(vec({1.0, 1.0}), 1.0));
    const Map dr = compose_dr(h, h);
    CHECK(dr(vec({0.5, 0.5})).isApprox(vec({0.5, 0.5})));

    const Map cyc = compose_cyclic({projector(ConvexSet::hyperplane(vec({1.0, 0.0}), 0.0)),
                                    projector(ConvexSet::hyperplane(vec({0.0, 1.0}), 0.0))});
    CHECK(cyc(vec({3.0, 4.0})).norm() <= 1e-15);
    CHECK_THROWS_AS(compose_cyclic({}), DomainError);

    // composition order: scale first, then shift
    const Map order = compose_cyclic({scale(1, 2.0), from_function(1, [](const Point& x) { return Point(x.array() + 1.0); })});
    CHECK(order(vec({1.0}))[0] == doctest::Approx(3.0));

    const Map r = relax(scale(1, -1.0), 0.25);
    CHECK(r(vec({4.0}))[0] == doctest::Approx(0.75 * 4.0 - 0.25 * 4.0));
    CHECK_THROWS_AS(relax(identity(1), 1.0), DomainError);
    CHECK_THROWS_AS(relax(identity(1), 0.0), DomainError);
    CHECK_THROWS_AS(compose_cyclic({identity(1), identity(2)}), DimensionError);
}
