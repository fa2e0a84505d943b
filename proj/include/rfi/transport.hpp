#pragma once

#include <Eigen/Core>
#include <vector>

namespace rfi {

using Index = Eigen::Index;
using CostMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct CouplingEntry {
    Index source;
    Index target;
    double mass;
};

namespace transport {

struct Assignment {
    std::vector<Index> row_to_col;
    double cost; // sum of cost(i, row_to_col[i])
};

/// Minimum-cost perfect matching on a square cost matrix (Jonker-Volgenant).
Assignment solve_assignment(const CostMatrix& cost);

struct Plan {
    std::vector<CouplingEntry> entries; // basic cells with positive mass
    double cost;                        // sum of mass * cost
    std::size_t pivots;
};

/// Minimum-cost transportation plan between supply and demand vectors with
/// equal totals, by the primal transportation (network) simplex method.
Plan solve_transportation(const CostMatrix& cost, const Eigen::VectorXd& supply,
                          const Eigen::VectorXd& demand);

/// Maximum flow from sources (capacities `supply`) to sinks (`demand`) through
/// uncapacitated arcs where `allowed(i, j)` is true.
double max_bipartite_flow(const Eigen::VectorXd& supply, const Eigen::VectorXd& demand,
                          const BoolMatrix& allowed);

} // namespace transport
} // namespace rfi
