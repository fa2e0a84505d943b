#include "rfi/measures.hpp"

#include "rfi/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rfi {

EmpiricalMeasure::EmpiricalMeasure(Matrix points, Eigen::VectorXd weights)
    : points_(std::move(points)), weights_(std::move(weights)) {
    if (points_.cols() != weights_.size())
        throw DimensionError("empirical measure weights", points_.cols(), weights_.size());
    if (points_.cols() == 0) throw DomainError("empirical measure: empty support");
    if (points_.rows() == 0) throw DomainError("empirical measure: zero-dimensional points");
    if (!points_.allFinite()) throw DomainError("empirical measure: non-finite support point");
    if (!weights_.allFinite() || (weights_.array() < 0.0).any())
        throw DomainError("empirical measure: weights must be >= 0");
    // summation error grows with the number of atoms
    const double tol = 1e-12 + 4.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(weights_.size());
    if (std::abs(weights_.sum() - 1.0) > tol)
        throw DomainError("empirical measure: weights must sum to 1");
    const double w0 = 1.0 / static_cast<double>(weights_.size());
    uniform_ = ((weights_.array() - w0).abs() <= 1e-15).all();
}

EmpiricalMeasure EmpiricalMeasure::uniform(Matrix points) {
    const Index n = points.cols();
    if (n == 0) throw DomainError("empirical measure: empty support");
    return EmpiricalMeasure(std::move(points), Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
}

EmpiricalMeasure EmpiricalMeasure::dirac(const Point& x) {
    Matrix p(x.size(), 1);
    p.col(0) = x;
    return EmpiricalMeasure(std::move(p), Eigen::VectorXd::Ones(1));
}

double EmpiricalMeasure::mass_near(const Point& x, double tol) const {
    require_dim(dim(), x, "mass_near");
    double mass = 0.0;
    for (Index i = 0; i < size(); ++i)
        if ((points_.col(i) - x).norm() <= tol) mass += weights_[i];
    return mass;
}

EmpiricalMeasure EmpiricalMeasure::thinned(Index max_points) const {
    if (max_points < 1) throw DomainError("thinning: need at least one point");
    if (size() <= max_points) return *this;
    Matrix pts(dim(), max_points);
    Eigen::VectorXd w(max_points);
    for (Index k = 0; k < max_points; ++k) {
        const Index i = k * size() / max_points;
        pts.col(k) = points_.col(i);
        w[k] = weights_[i];
    }
    const double total = w.sum();
    if (uniform_ || !(total > 0.0)) return uniform(std::move(pts));
    return EmpiricalMeasure(std::move(pts), w / total);
}

Matrix Coupling::dense() const {
    Matrix g = Matrix::Zero(rows, cols);
    for (const auto& e : entries) g(e.source, e.target) += e.mass;
    return g;
}

bool is_feasible(const Coupling& c, const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double tol) {
    if (c.rows != mu.size() || c.cols != nu.size()) return false;
    Eigen::VectorXd row = Eigen::VectorXd::Zero(c.rows);
    Eigen::VectorXd col = Eigen::VectorXd::Zero(c.cols);
    for (const auto& e : c.entries) {
        if (e.mass < 0.0 || e.source < 0 || e.source >= c.rows || e.target < 0 || e.target >= c.cols)
            return false;
        row[e.source] += e.mass;
        col[e.target] += e.mass;
    }
    return (row - mu.weights()).cwiseAbs().maxCoeff() <= tol &&
           (col - nu.weights()).cwiseAbs().maxCoeff() <= tol;
}

CostMatrix squared_distances(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    if (mu.dim() != nu.dim()) throw DimensionError("measure dimensions", mu.dim(), nu.dim());
    const Index n = mu.size();
    const Index m = nu.size();
    const Index d = mu.dim();
    CostMatrix cost(n, m);
    const double* x = mu.points().data();
    const double* y = nu.points().data();
    for (Index i = 0; i < n; ++i) {
        const double* xi = x + i * d;
        for (Index j = 0; j < m; ++j) {
            const double* yj = y + j * d;
            double s = 0.0;
            for (Index k = 0; k < d; ++k) {
                const double t = xi[k] - yj[k];
                s += t * t;
            }
            cost(i, j) = s;
        }
    }
    return cost;
}

TransportResult wasserstein2(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    const CostMatrix cost = squared_distances(mu, nu);
    Coupling coupling;
    coupling.rows = mu.size();
    coupling.cols = nu.size();
    if (mu.size() == nu.size() && mu.is_uniform() && nu.is_uniform()) {
        const auto a = transport::solve_assignment(cost);
        const double w = 1.0 / static_cast<double>(mu.size());
        coupling.entries.reserve(a.row_to_col.size());
        for (Index i = 0; i < mu.size(); ++i) coupling.entries.push_back({i, a.row_to_col[i], w});
        coupling.cost = a.cost * w;
    } else {
        auto plan = transport::solve_transportation(cost, mu.weights(), nu.weights());
        coupling.entries = std::move(plan.entries);
        coupling.cost = plan.cost;
    }
    return {std::sqrt(std::max(coupling.cost, 0.0)), std::move(coupling)};
}

namespace {

Eigen::MatrixXd pairwise_distances(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    const CostMatrix sq = squared_distances(mu, nu);
    return sq.cwiseSqrt();
}

double excess_at(const Eigen::MatrixXd& dist, const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                 double eps) {
    const BoolMatrix allowed = (dist.array() <= eps).matrix();
    const double flow = transport::max_bipartite_flow(mu.weights(), nu.weights(), allowed);
    const double excess = 1.0 - flow;
    return excess < 1e-12 ? 0.0 : excess;
}

} // namespace

double strassen_excess(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double eps) {
    return excess_at(pairwise_distances(mu, nu), mu, nu, eps);
}

double prokhorov(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, Index support_cap) {
    if (mu.dim() != nu.dim()) throw DimensionError("measure dimensions", mu.dim(), nu.dim());
    if (mu.size() + nu.size() > support_cap)
        throw DomainError("prokhorov: combined support " + std::to_string(mu.size() + nu.size()) +
                          " exceeds cap " + std::to_string(support_cap) +
                          "; subsample the measures (EmpiricalMeasure::thinned)");
    const Eigen::MatrixXd dist = pairwise_distances(mu, nu);

    // The excess m(eps) is a nonincreasing step function with jumps at the
    // pairwise distances. On [t_j, t_{j+1}) it is constant m_j, so the answer
    // is max(t_j, m_j) for the first interval with m_j < t_{j+1}.
    std::vector<double> t(dist.data(), dist.data() + dist.size());
    t.push_back(0.0);
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());

    auto next_threshold = [&](std::size_t j) {
        return j + 1 < t.size() ? t[j + 1] : std::numeric_limits<double>::infinity();
    };
    std::size_t lo = 0, hi = t.size() - 1; // the last interval always qualifies (m = 0)
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (excess_at(dist, mu, nu, t[mid]) < next_threshold(mid))
            hi = mid;
        else
            lo = mid + 1;
    }
    return std::min(1.0, std::max(t[lo], excess_at(dist, mu, nu, t[lo])));
}

} // namespace rfi
