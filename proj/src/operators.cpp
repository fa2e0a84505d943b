#include "rfi/operators.hpp"

#include "rfi/error.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <cmath>
#include <string>

namespace rfi {

void require_finite(const Point& x, std::string_view what) {
    if (!x.allFinite()) throw DomainError(std::string(what) + ": non-finite coordinate");
}

void require_dim(Index expected, const Point& x, std::string_view what) {
    if (x.size() != expected) throw DimensionError(std::string(what), expected, x.size());
}

namespace ops {

QuadraticFn::QuadraticFn(Matrix q, Point c, double offset)
    : q_(std::move(q)), c_(std::move(c)), offset_(offset) {
    if (q_.rows() != q_.cols()) throw DomainError("quadratic: Q must be square");
    require_dim(q_.rows(), c_, "quadratic linear term");
    if (!q_.allFinite() || !c_.allFinite() || !std::isfinite(offset_))
        throw DomainError("quadratic: non-finite coefficients");
    q_ = 0.5 * (q_ + q_.transpose()).eval();
    if (q_.rows() == 0) {
        lipschitz_ = 0.0;
        min_eig_ = 0.0;
        return;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(q_, Eigen::EigenvaluesOnly);
    const auto& ev = eig.eigenvalues();
    min_eig_ = ev.minCoeff();
    lipschitz_ = ev.cwiseAbs().maxCoeff();
}

double QuadraticFn::value(const Point& x) const {
    require_dim(dim(), x, "quadratic value");
    return 0.5 * x.dot(q_ * x) + c_.dot(x) + offset_;
}

Point QuadraticFn::gradient(const Point& x) const {
    require_dim(dim(), x, "quadratic gradient");
    return q_ * x + c_;
}

ConvexSet ConvexSet::hyperplane(Point normal, double offset) {
    if (!normal.allFinite() || !std::isfinite(offset))
        throw DomainError("hyperplane: non-finite data");
    if (!(normal.norm() > 0.0)) throw DomainError("hyperplane: normal vector must be nonzero");
    const Index n = normal.size();
    return ConvexSet(Hyperplane{std::move(normal), offset}, n);
}

ConvexSet ConvexSet::affine_subspace(Matrix a, Point b) {
    if (a.rows() != b.size()) throw DimensionError("affine subspace rhs", a.rows(), b.size());
    if (!a.allFinite() || !b.allFinite()) throw DomainError("affine subspace: non-finite data");
    if (a.rows() == 0 || a.rows() > a.cols())
        throw DomainError("affine subspace: need 1 <= rows <= cols");
    Eigen::ColPivHouseholderQR<Matrix> rank_check(a.transpose());
    rank_check.setThreshold(1e-10);
    if (rank_check.rank() != a.rows())
        throw DomainError("affine subspace: A must have full row rank (rank " +
                          std::to_string(rank_check.rank()) + " < " +
                          std::to_string(a.rows()) + ")");
    const Index m = a.rows();
    const Index n = a.cols();
    Eigen::HouseholderQR<Matrix> qr(a.transpose());
    Matrix q_thin = qr.householderQ() * Matrix::Identity(n, m);
    Matrix r = qr.matrixQR().topLeftCorner(m, m).triangularView<Eigen::Upper>();
    return ConvexSet(AffineSubspace{std::move(a), std::move(b), std::move(q_thin), std::move(r)}, n);
}

ConvexSet ConvexSet::box(Point lo, Point hi) {
    if (lo.size() != hi.size()) throw DimensionError("box bounds", lo.size(), hi.size());
    if (!lo.allFinite() || !hi.allFinite()) throw DomainError("box: non-finite bounds");
    if ((lo.array() > hi.array()).any()) throw DomainError("box: lo must be <= hi componentwise");
    const Index n = lo.size();
    return ConvexSet(Box{std::move(lo), std::move(hi)}, n);
}

ConvexSet ConvexSet::ball(Point center, double radius) {
    if (!center.allFinite() || !std::isfinite(radius)) throw DomainError("ball: non-finite data");
    if (!(radius > 0.0)) throw DomainError("ball: radius must be positive");
    const Index n = center.size();
    return ConvexSet(Ball{std::move(center), radius}, n);
}

ConvexSet ConvexSet::full_space(Index dim) {
    if (dim < 1) throw DomainError("full space: dimension must be positive");
    return ConvexSet(FullSpace{dim}, dim);
}

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

} // namespace

bool ConvexSet::contains(const Point& x, double tol) const {
    require_dim(dim_, x, "set membership");
    return std::visit(
        Overloaded{
            [&](const Hyperplane& h) {
                return std::abs(h.normal.dot(x) - h.offset) <= tol * h.normal.norm();
            },
            [&](const AffineSubspace& s) { return (s.a * x - s.b).norm() <= tol; },
            [&](const Box& b) {
                return ((x.array() >= b.lo.array() - tol) && (x.array() <= b.hi.array() + tol)).all();
            },
            [&](const Ball& b) { return (x - b.center).norm() <= b.radius + tol; },
            [](const FullSpace&) { return true; },
        },
        set_);
}

Point ConvexSet::project(const Point& x) const {
    require_dim(dim_, x, "projection");
    return std::visit(
        Overloaded{
            [&](const Hyperplane& h) -> Point {
                const double step = (h.normal.dot(x) - h.offset) / h.normal.squaredNorm();
                return x - step * h.normal;
            },
            [&](const AffineSubspace& s) -> Point {
                // A'(AA')^{-1} v = Q R^{-T} v when A' = QR.
                const Point residual = s.a * x - s.b;
                const Point w = s.r.transpose().triangularView<Eigen::Lower>().solve(residual);
                return x - s.q_thin * w;
            },
            [&](const Box& b) -> Point { return x.cwiseMax(b.lo).cwiseMin(b.hi); },
            [&](const Ball& b) -> Point {
                const Point d = x - b.center;
                const double dist = d.norm();
                if (dist <= b.radius) return x;
                return b.center + (b.radius / dist) * d;
            },
            [&](const FullSpace&) -> Point { return x; },
        },
        set_);
}

Point project(const ConvexSet& set, const Point& x) { return set.project(x); }

Point grad_step(const QuadraticFn& f, double t, const Point& x) {
    if (!(t > 0.0)) throw DomainError("gradient step: step size must be positive");
    return x - t * f.gradient(x);
}

Prox::Prox(ConvexSet set) : g_(std::move(set)) {}

Prox::Prox(QuadraticFn f) : g_(Quadratic{f, Eigen::LLT<Matrix>()}) {
    auto& q = std::get<Quadratic>(g_);
    const double smallest = 1.0 + f.min_eigenvalue();
    if (!(smallest > 1e-12))
        throw DomainError("prox: I + Q is not positive definite (smallest eigenvalue " +
                          std::to_string(smallest) + ")");
    q.shifted.compute(Matrix::Identity(f.dim(), f.dim()) + f.matrix());
    if (q.shifted.info() != Eigen::Success)
        throw DomainError("prox: factorization of I + Q failed (smallest eigenvalue " +
                          std::to_string(smallest) + ")");
}

Index Prox::dim() const noexcept {
    if (const auto* s = std::get_if<ConvexSet>(&g_)) return s->dim();
    return std::get<Quadratic>(g_).f.dim();
}

const QuadraticFn* Prox::quadratic() const noexcept {
    if (const auto* q = std::get_if<Quadratic>(&g_)) return &q->f;
    return nullptr;
}

Point Prox::operator()(const Point& x) const {
    if (const auto* s = std::get_if<ConvexSet>(&g_)) return s->project(x);
    const auto& q = std::get<Quadratic>(g_);
    require_dim(q.f.dim(), x, "prox");
    return q.shifted.solve(x - q.f.linear());
}

Point prox(const Prox& g, const Point& x) { return g(x); }

Point reflect(const Prox& g, const Point& x) { return 2.0 * g(x) - x; }

Map::Map(Index dim, Fn fn) : dim_(dim), fn_(std::move(fn)) {
    if (dim_ < 1) throw DomainError("map: dimension must be positive");
    if (!fn_) throw DomainError("map: empty function");
}

Point Map::operator()(const Point& x) const {
    require_dim(dim_, x, "map argument");
    return fn_(x);
}

Map identity(Index dim) {
    return Map(dim, [](const Point& x) { return x; });
}

Map scale(Index dim, double factor) {
    return Map(dim, [factor](const Point& x) -> Point { return factor * x; });
}

Map projector(ConvexSet set) {
    const Index n = set.dim();
    return Map(n, [s = std::move(set)](const Point& x) { return s.project(x); });
}

Map gradient_step(QuadraticFn f, double t) {
    if (!(t > 0.0)) throw DomainError("gradient step: step size must be positive");
    const Index n = f.dim();
    return Map(n, [f = std::move(f), t](const Point& x) { return grad_step(f, t, x); });
}

Map from_function(Index dim, Map::Fn fn) { return Map(dim, std::move(fn)); }

Map compose_fb(QuadraticFn f, Prox g, double t) {
    if (!(t > 0.0)) throw DomainError("forward-backward: step size must be positive");
    if (f.dim() != g.dim()) throw DimensionError("forward-backward operands", f.dim(), g.dim());
    const Index n = f.dim();
    return Map(n, [f = std::move(f), g = std::move(g), t](const Point& x) {
        return g(grad_step(f, t, x));
    });
}

Map compose_dr(Prox f, Prox g) {
    if (f.dim() != g.dim()) throw DimensionError("Douglas-Rachford operands", f.dim(), g.dim());
    const Index n = f.dim();
    return Map(n, [f = std::move(f), g = std::move(g)](const Point& x) -> Point {
        return 0.5 * (reflect(f, reflect(g, x)) + x);
    });
}

Map compose_cyclic(std::vector<Map> maps) {
    if (maps.empty()) throw DomainError("cyclic composition: empty list of maps");
    const Index n = maps.front().dim();
    for (const auto& m : maps)
        if (m.dim() != n) throw DimensionError("cyclic composition operand", n, m.dim());
    return Map(n, [maps = std::move(maps)](const Point& x) {
        Point y = x;
        for (const auto& m : maps) y = m(y);
        return y;
    });
}

Map relax(Map map, double lambda) {
    if (!(lambda > 0.0 && lambda < 1.0)) throw DomainError("relaxation: lambda must lie in (0, 1)");
    const Index n = map.dim();
    return Map(n, [map = std::move(map), lambda](const Point& x) -> Point {
        return (1.0 - lambda) * x + lambda * map(x);
    });
}

} // namespace ops
} // namespace rfi
