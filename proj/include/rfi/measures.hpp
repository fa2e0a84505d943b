#pragma once

#include "rfi/operators.hpp"
#include "rfi/transport.hpp"

#include <vector>

namespace rfi {

/// Finitely supported probability measure: weighted point cloud.
/// Points are stored column-wise (dim x size).
class EmpiricalMeasure {
public:
    /// Throws DomainError unless weights are >= 0 and sum to 1 (within 1e-12 plus
    /// a summation allowance proportional to the number of atoms).
    EmpiricalMeasure(Matrix points, Eigen::VectorXd weights);

    static EmpiricalMeasure uniform(Matrix points);
    static EmpiricalMeasure dirac(const Point& x);

    Index dim() const noexcept { return points_.rows(); }
    Index size() const noexcept { return points_.cols(); }
    const Matrix& points() const noexcept { return points_; }
    Point point(Index i) const { return points_.col(i); }
    const Eigen::VectorXd& weights() const noexcept { return weights_; }
    bool is_uniform() const noexcept { return uniform_; }

    Point mean() const { return points_ * weights_; }
    /// Total mass of atoms within `tol` of x.
    double mass_near(const Point& x, double tol = 1e-12) const;
    /// Keeps at most max_points atoms chosen at evenly spaced indices,
    /// renormalizing their weights.
    EmpiricalMeasure thinned(Index max_points) const;

private:
    Matrix points_;
    Eigen::VectorXd weights_;
    bool uniform_ = false;
};

/// Transport plan between two empirical measures, stored sparsely.
struct Coupling {
    Index rows = 0;
    Index cols = 0;
    std::vector<CouplingEntry> entries;
    double cost = 0.0; // sum of mass * squared distance

    Matrix dense() const;
};

/// True when the plan is nonnegative with the right marginals (within tol).
bool is_feasible(const Coupling& c, const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                 double tol = 1e-9);

CostMatrix squared_distances(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

struct TransportResult {
    double w2;
    Coupling coupling;
};

/// Exact Wasserstein-2 distance and an optimal coupling. Equal-size uniform
/// clouds go through the assignment solver, anything else through the
/// transportation simplex.
TransportResult wasserstein2(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

inline constexpr Index kProkhorovSupportCap = 512;

/// Prokhorov-Levy distance via the Strassen coupling characterization:
/// the smallest eps with min_{couplings} P(|X - Y| > eps) <= eps.
/// Distances exactly equal to eps count as within eps (closed balls).
double prokhorov(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                 Index support_cap = kProkhorovSupportCap);

/// Smallest coupling mass on {|x - y| > eps}, via max flow.
double strassen_excess(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double eps);

} // namespace rfi
