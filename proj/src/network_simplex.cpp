#include "rfi/error.hpp"
#include "rfi/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rfi::transport {

namespace {

struct Cell {
    Index row;
    Index col;
    double flow;
};

// Spanning-tree basis of the bipartite transportation graph. Nodes 0..n-1 are
// sources, n..n+m-1 are sinks.
class TransportTree {
public:
    TransportTree(Index n, Index m) : n_(n), m_(m), adjacency_(n + m) {}

    void add(Index slot) {
        adjacency_[cells_[slot].row].push_back(slot);
        adjacency_[n_ + cells_[slot].col].push_back(slot);
    }

    void remove(Index slot) {
        for (Index node : {cells_[slot].row, n_ + cells_[slot].col}) {
            auto& adj = adjacency_[node];
            adj.erase(std::find(adj.begin(), adj.end(), slot));
        }
    }

    // Potentials with u[0] = 0 plus parent links for path finding.
    void rebuild(const CostMatrix& cost) {
        const Index nodes = n_ + m_;
        parent_cell_.assign(nodes, -1);
        depth_.assign(nodes, -1);
        potential_.assign(nodes, 0.0);
        order_.clear();
        order_.push_back(0);
        depth_[0] = 0;
        for (std::size_t head = 0; head < order_.size(); ++head) {
            const Index node = order_[head];
            for (Index slot : adjacency_[node]) {
                const Cell& c = cells_[slot];
                const Index other = node < n_ ? n_ + c.col : c.row;
                if (depth_[other] >= 0) continue;
                depth_[other] = depth_[node] + 1;
                parent_cell_[other] = slot;
                potential_[other] = cost(c.row, c.col) - potential_[node];
                order_.push_back(other);
            }
        }
        if (static_cast<Index>(order_.size()) != nodes)
            throw NumericError("transportation simplex: basis is not a spanning tree");
    }

    double reduced_cost(const CostMatrix& cost, Index i, Index j) const {
        return cost(i, j) - potential_[i] - potential_[n_ + j];
    }

    Index other_end(Index slot, Index node) const {
        return node < n_ ? n_ + cells_[slot].col : cells_[slot].row;
    }

    // Tree path from sink node of column j to source node of row i.
    void path(Index i, Index j, std::vector<Index>& out) const {
        std::vector<Index> from_col, from_row;
        Index a = n_ + j;
        Index b = i;
        while (depth_[a] > depth_[b]) {
            from_col.push_back(parent_cell_[a]);
            a = other_end(parent_cell_[a], a);
        }
        while (depth_[b] > depth_[a]) {
            from_row.push_back(parent_cell_[b]);
            b = other_end(parent_cell_[b], b);
        }
        while (a != b) {
            from_col.push_back(parent_cell_[a]);
            a = other_end(parent_cell_[a], a);
            from_row.push_back(parent_cell_[b]);
            b = other_end(parent_cell_[b], b);
        }
        out = std::move(from_col);
        out.insert(out.end(), from_row.rbegin(), from_row.rend());
    }

    std::vector<Cell> cells_;

private:
    Index n_, m_;
    std::vector<std::vector<Index>> adjacency_;
    std::vector<Index> parent_cell_;
    std::vector<Index> depth_;
    std::vector<double> potential_;
    std::vector<Index> order_;
};

} // namespace

Plan solve_transportation(const CostMatrix& cost, const Eigen::VectorXd& supply,
                          const Eigen::VectorXd& demand) {
    const Index n = supply.size();
    const Index m = demand.size();
    if (n == 0 || m == 0) throw DomainError("transportation: empty marginal");
    if (cost.rows() != n || cost.cols() != m) throw DomainError("transportation: cost shape mismatch");
    if (!cost.allFinite()) throw NumericError("transportation: non-finite cost");
    if ((supply.array() < 0.0).any() || (demand.array() < 0.0).any())
        throw DomainError("transportation: negative marginal");
    if (std::abs(supply.sum() - demand.sum()) > 1e-9 * std::max(1.0, supply.sum()))
        throw DomainError("transportation: marginals have different totals");

    // North-west corner start: exactly n + m - 1 cells forming a tree.
    TransportTree tree(n, m);
    tree.cells_.reserve(n + m - 1);
    {
        Index i = 0, j = 0;
        double rs = supply[0], rd = demand[0];
        for (;;) {
            const bool last = (i == n - 1 && j == m - 1);
            const double x = last ? std::max(rs, 0.0) : std::max(std::min(rs, rd), 0.0);
            tree.cells_.push_back({i, j, x});
            if (last) break;
            rs -= x;
            rd -= x;
            if ((rs <= rd && i < n - 1) || j == m - 1) {
                ++i;
                rs = supply[i];
            } else {
                ++j;
                rd = demand[j];
            }
        }
    }
    for (Index s = 0; s < static_cast<Index>(tree.cells_.size()); ++s) tree.add(s);

    const double scale = std::max(1.0, cost.cwiseAbs().maxCoeff());
    const double tol = 1e-12 * scale;
    const Index total_cells = n * m;
    const Index block = std::max<Index>(static_cast<Index>(std::sqrt(static_cast<double>(total_cells))), 16);
    const std::size_t max_pivots = 64 * static_cast<std::size_t>(n + m) * static_cast<std::size_t>(n + m) + 10000;

    Index cursor = 0;
    std::size_t pivots = 0;
    std::vector<Index> cycle;
    for (;;) {
        tree.rebuild(cost);

        // Block search pricing over all cells in cyclic order.
        Index enter_i = -1, enter_j = -1;
        double best = -tol;
        Index scanned = 0;
        while (scanned < total_cells) {
            const Index stop = std::min(scanned + block, total_cells);
            for (; scanned < stop; ++scanned) {
                const Index i = cursor / m;
                const Index j = cursor % m;
                const double rc = tree.reduced_cost(cost, i, j);
                if (rc < best) {
                    best = rc;
                    enter_i = i;
                    enter_j = j;
                }
                if (++cursor == total_cells) cursor = 0;
            }
            if (enter_i >= 0) break;
        }
        if (enter_i < 0) break;
        if (++pivots > max_pivots) throw NumericError("transportation simplex: pivot limit exceeded");

        // Cycle: entering cell (+), then the tree path from its column back to
        // its row with alternating signs starting at (-).
        tree.path(enter_i, enter_j, cycle);
        double theta = std::numeric_limits<double>::infinity();
        Index leave_pos = -1;
        for (Index p = 0; p < static_cast<Index>(cycle.size()); p += 2) {
            const double f = tree.cells_[cycle[p]].flow;
            if (f < theta) {
                theta = f;
                leave_pos = p;
            }
        }
        for (Index p = 0; p < static_cast<Index>(cycle.size()); ++p) {
            auto& cell = tree.cells_[cycle[p]];
            if (p % 2 == 0)
                cell.flow = std::max(cell.flow - theta, 0.0);
            else
                cell.flow += theta;
        }
        const Index slot = cycle[leave_pos];
        tree.remove(slot);
        tree.cells_[slot] = {enter_i, enter_j, theta};
        tree.add(slot);
    }

    Plan plan;
    plan.pivots = pivots;
    plan.cost = 0.0;
    std::vector<Cell> cells = tree.cells_;
    std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    for (const auto& c : cells) {
        if (c.flow <= 0.0) continue;
        plan.entries.push_back({c.row, c.col, c.flow});
        plan.cost += c.flow * cost(c.row, c.col);
    }
    return plan;
}

} // namespace rfi::transport
