#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <functional>
#include <string_view>
#include <variant>
#include <vector>

namespace rfi {

using Index = Eigen::Index;
/// A point of R^n; the state of one chain.
using Point = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Throws DomainError if any coordinate is NaN or infinite.
void require_finite(const Point& x, std::string_view what);
/// Throws DimensionError unless x.size() == expected.
void require_dim(Index expected, const Point& x, std::string_view what);

namespace ops {

/// f(x) = 1/2 x'Qx + c'x + offset with Q symmetrized on construction.
class QuadraticFn {
public:
    QuadraticFn(Matrix q, Point c, double offset = 0.0);

    Index dim() const noexcept { return c_.size(); }
    const Matrix& matrix() const noexcept { return q_; }
    const Point& linear() const noexcept { return c_; }
    double offset() const noexcept { return offset_; }

    double value(const Point& x) const;
    Point gradient(const Point& x) const;

    /// Lipschitz constant of the gradient: largest |eigenvalue| of Q.
    double lipschitz() const noexcept { return lipschitz_; }
    double min_eigenvalue() const noexcept { return min_eig_; }
    /// Smallest tau with -tau |x-y|^2 <= <grad f(x) - grad f(y), x - y>,
    /// i.e. -min_eigenvalue(). Negative values mean strongly monotone.
    double hypomonotonicity() const noexcept { return -min_eig_; }

private:
    Matrix q_;
    Point c_;
    double offset_;
    double lipschitz_;
    double min_eig_;
};

struct Hyperplane {
    Point normal;
    double offset;
};

/// {x : A x = b}. Projection uses a thin QR factorization of A' computed once.
struct AffineSubspace {
    Matrix a;
    Point b;
    Matrix q_thin; // n x m, orthonormal columns spanning range(A')
    Matrix r;      // m x m upper triangular, A' = q_thin * r
};

struct Box {
    Point lo;
    Point hi;
};

struct Ball {
    Point center;
    double radius;
};

struct FullSpace {
    Index dim;
};

/// Closed convex set with a closed-form (or factorized) Euclidean projector.
class ConvexSet {
public:
    using Variant = std::variant<Hyperplane, AffineSubspace, Box, Ball, FullSpace>;

    static ConvexSet hyperplane(Point normal, double offset);
    static ConvexSet affine_subspace(Matrix a, Point b);
    static ConvexSet box(Point lo, Point hi);
    static ConvexSet ball(Point center, double radius);
    static ConvexSet full_space(Index dim);

    Index dim() const noexcept { return dim_; }
    const Variant& variant() const noexcept { return set_; }
    bool contains(const Point& x, double tol = 1e-10) const;
    Point project(const Point& x) const;

private:
    ConvexSet(Variant v, Index dim) : set_(std::move(v)), dim_(dim) {}

    Variant set_;
    Index dim_;
};

Point project(const ConvexSet& set, const Point& x);

/// x - t (Qx + c).
Point grad_step(const QuadraticFn& f, double t, const Point& x);

/// Resolvent of an indicator function or of a quadratic.
class Prox {
public:
    Prox(ConvexSet set);
    /// Throws DomainError unless I + Q is positive definite.
    Prox(QuadraticFn f);

    Index dim() const noexcept;
    Point operator()(const Point& x) const;

    const ConvexSet* set() const noexcept { return std::get_if<ConvexSet>(&g_); }
    const QuadraticFn* quadratic() const noexcept;

private:
    struct Quadratic {
        QuadraticFn f;
        Eigen::LLT<Matrix> shifted; // I + Q
    };
    std::variant<ConvexSet, Quadratic> g_;
};

Point prox(const Prox& g, const Point& x);
/// 2 prox(g, x) - x.
Point reflect(const Prox& g, const Point& x);

/// Deterministic self-map of R^n. Immutable and cheap to copy.
class Map {
public:
    using Fn = std::function<Point(const Point&)>;

    Map(Index dim, Fn fn);

    Index dim() const noexcept { return dim_; }
    Point operator()(const Point& x) const;

private:
    Index dim_;
    Fn fn_;
};

Map identity(Index dim);
Map scale(Index dim, double factor);
Map projector(ConvexSet set);
Map gradient_step(QuadraticFn f, double t);
/// User-supplied map. Not covered by any certification guarantee.
Map from_function(Index dim, Map::Fn fn);

/// x -> prox_g(x - t grad f(x)).
Map compose_fb(QuadraticFn f, Prox g, double t);
/// x -> 1/2 (R_f R_g x + x).
Map compose_dr(Prox f, Prox g);
/// maps[m-1] o ... o maps[0]; throws DomainError on an empty list.
Map compose_cyclic(std::vector<Map> maps);
/// (1 - lambda) Id + lambda T with lambda in (0, 1).
Map relax(Map map, double lambda);

} // namespace ops
} // namespace rfi
