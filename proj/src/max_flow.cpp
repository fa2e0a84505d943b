#include "rfi/error.hpp"
#include "rfi/transport.hpp"

#include <algorithm>
#include <limits>
#include <queue>

namespace rfi::transport {

namespace {

// Dinic's algorithm on real capacities.
class FlowNetwork {
public:
    explicit FlowNetwork(Index nodes) : head_(nodes, -1), level_(nodes), iter_(nodes) {}

    void add_edge(Index from, Index to, double cap) {
        edges_.push_back({to, head_[from], cap});
        head_[from] = static_cast<Index>(edges_.size()) - 1;
        edges_.push_back({from, head_[to], 0.0});
        head_[to] = static_cast<Index>(edges_.size()) - 1;
    }

    double max_flow(Index s, Index t) {
        double total = 0.0;
        while (bfs(s, t)) {
            iter_ = head_;
            for (;;) {
                const double pushed = dfs(s, t, std::numeric_limits<double>::infinity());
                if (pushed <= kEps) break;
                total += pushed;
            }
        }
        return total;
    }

private:
    static constexpr double kEps = 1e-15;

    struct Edge {
        Index to;
        Index next;
        double cap;
    };

    bool bfs(Index s, Index t) {
        std::fill(level_.begin(), level_.end(), -1);
        std::queue<Index> q;
        level_[s] = 0;
        q.push(s);
        while (!q.empty()) {
            const Index u = q.front();
            q.pop();
            for (Index e = head_[u]; e >= 0; e = edges_[e].next) {
                if (edges_[e].cap > kEps && level_[edges_[e].to] < 0) {
                    level_[edges_[e].to] = level_[u] + 1;
                    q.push(edges_[e].to);
                }
            }
        }
        return level_[t] >= 0;
    }

    double dfs(Index u, Index t, double limit) {
        if (u == t) return limit;
        for (Index& e = iter_[u]; e >= 0; e = edges_[e].next) {
            Edge& edge = edges_[e];
            if (edge.cap > kEps && level_[edge.to] == level_[u] + 1) {
                const double pushed = dfs(edge.to, t, std::min(limit, edge.cap));
                if (pushed > kEps) {
                    edge.cap -= pushed;
                    edges_[e ^ 1].cap += pushed;
                    return pushed;
                }
            }
        }
        return 0.0;
    }

    std::vector<Edge> edges_;
    std::vector<Index> head_;
    std::vector<Index> level_;
    std::vector<Index> iter_;
};

} // namespace

double max_bipartite_flow(const Eigen::VectorXd& supply, const Eigen::VectorXd& demand,
                          const BoolMatrix& allowed) {
    const Index n = supply.size();
    const Index m = demand.size();
    if (allowed.rows() != n || allowed.cols() != m) throw DomainError("max flow: shape mismatch");
    const double unbounded = supply.sum() + demand.sum() + 1.0;
    FlowNetwork net(n + m + 2);
    const Index source = n + m;
    const Index sink = n + m + 1;
    for (Index i = 0; i < n; ++i) net.add_edge(source, i, supply[i]);
    for (Index j = 0; j < m; ++j) net.add_edge(n + j, sink, demand[j]);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < m; ++j)
            if (allowed(i, j)) net.add_edge(i, n + j, unbounded);
    return net.max_flow(source, sink);
}

} // namespace rfi::transport
