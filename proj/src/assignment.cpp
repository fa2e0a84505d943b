#include "rfi/error.hpp"
#include "rfi/transport.hpp"

#include <limits>

namespace rfi::transport {

// Jonker & Volgenant, "A shortest augmenting path algorithm for dense and
// sparse linear assignment problems", Computing 38 (1987). Column reduction,
// reduction transfer and two rounds of augmenting row reduction followed by
// Dijkstra-style augmentation for the remaining free rows.
Assignment solve_assignment(const CostMatrix& cost) {
    const Index n = cost.rows();
    if (cost.cols() != n) throw DomainError("assignment: cost matrix must be square");
    if (n == 0) throw DomainError("assignment: empty cost matrix");
    if (!cost.allFinite()) throw NumericError("assignment: non-finite cost");
    if (n == 1) return {{0}, cost(0, 0)};

    constexpr double kBig = std::numeric_limits<double>::infinity();
    auto c = [&](Index i, Index j) { return cost(i, j); };

    std::vector<Index> rowsol(n, -1), colsol(n, -1), free_rows(n), collist(n), pred(n);
    std::vector<int> matches(n, 0);
    std::vector<double> v(n), d(n);

    for (Index j = n - 1; j >= 0; --j) {
        double best = c(0, j);
        Index imin = 0;
        for (Index i = 1; i < n; ++i)
            if (c(i, j) < best) {
                best = c(i, j);
                imin = i;
            }
        v[j] = best;
        if (++matches[imin] == 1) {
            rowsol[imin] = j;
            colsol[j] = imin;
        } else if (v[j] < v[rowsol[imin]]) {
            const Index j1 = rowsol[imin];
            rowsol[imin] = j;
            colsol[j] = imin;
            colsol[j1] = -1;
        } else {
            colsol[j] = -1;
        }
    }

    Index num_free = 0;
    for (Index i = 0; i < n; ++i) {
        if (matches[i] == 0) {
            free_rows[num_free++] = i;
        } else if (matches[i] == 1) {
            const Index j1 = rowsol[i];
            double best = kBig;
            for (Index j = 0; j < n; ++j)
                if (j != j1 && c(i, j) - v[j] < best) best = c(i, j) - v[j];
            v[j1] -= best;
        }
    }

    // Immediate re-processing of displaced rows is bounded so that long chains
    // of tiny floating-point decrements defer to the augmentation phase.
    const long long reprocess_limit = 8LL * n * n;
    long long reprocessed = 0;
    for (int round = 0; round < 2; ++round) {
        Index k = 0;
        const Index prev_free = num_free;
        num_free = 0;
        while (k < prev_free) {
            const Index i = free_rows[k++];
            double umin = c(i, 0) - v[0];
            Index j1 = 0, j2 = 0;
            double usubmin = kBig;
            for (Index j = 1; j < n; ++j) {
                const double h = c(i, j) - v[j];
                if (h < usubmin) {
                    if (h >= umin) {
                        usubmin = h;
                        j2 = j;
                    } else {
                        usubmin = umin;
                        umin = h;
                        j2 = j1;
                        j1 = j;
                    }
                }
            }
            Index i0 = colsol[j1];
            const bool strict = umin < usubmin;
            if (strict)
                v[j1] -= usubmin - umin;
            else if (i0 > -1) {
                j1 = j2;
                i0 = colsol[j2];
            }
            rowsol[i] = j1;
            colsol[j1] = i;
            if (i0 > -1) {
                if (i0 != i) rowsol[i0] = -1;
                if (strict && ++reprocessed < reprocess_limit)
                    free_rows[--k] = i0;
                else
                    free_rows[num_free++] = i0;
            }
        }
    }

    for (Index f = 0; f < num_free; ++f) {
        const Index free_row = free_rows[f];
        for (Index j = n - 1; j >= 0; --j) {
            d[j] = c(free_row, j) - v[j];
            pred[j] = free_row;
            collist[j] = j;
        }
        Index low = 0, up = 0, last = 0, end_of_path = -1;
        double dmin = 0.0;
        bool found = false;
        do {
            if (up == low) {
                last = low - 1;
                dmin = d[collist[up++]];
                for (Index k = up; k < n; ++k) {
                    const Index j = collist[k];
                    const double h = d[j];
                    if (h <= dmin) {
                        if (h < dmin) {
                            up = low;
                            dmin = h;
                        }
                        collist[k] = collist[up];
                        collist[up++] = j;
                    }
                }
                for (Index k = low; k < up; ++k)
                    if (colsol[collist[k]] < 0) {
                        end_of_path = collist[k];
                        found = true;
                        break;
                    }
            }
            if (!found) {
                const Index j1 = collist[low++];
                const Index i = colsol[j1];
                const double h = c(i, j1) - v[j1] - dmin;
                for (Index k = up; k < n; ++k) {
                    const Index j = collist[k];
                    const double v2 = c(i, j) - v[j] - h;
                    if (v2 < d[j]) {
                        pred[j] = i;
                        if (v2 == dmin) {
                            if (colsol[j] < 0) {
                                end_of_path = j;
                                found = true;
                                break;
                            }
                            collist[k] = collist[up];
                            collist[up++] = j;
                        }
                        d[j] = v2;
                    }
                }
            }
        } while (!found);

        for (Index k = 0; k <= last; ++k) {
            const Index j1 = collist[k];
            v[j1] += d[j1] - dmin;
        }
        Index i;
        do {
            i = pred[end_of_path];
            colsol[end_of_path] = i;
            const Index j1 = end_of_path;
            end_of_path = rowsol[i];
            rowsol[i] = j1;
        } while (i != free_row);
    }

    Assignment out;
    out.row_to_col = std::move(rowsol);
    out.cost = 0.0;
    for (Index i = 0; i < n; ++i) {
        if (out.row_to_col[i] < 0) throw NumericError("assignment: solver left a row unassigned");
        out.cost += c(i, out.row_to_col[i]);
    }
    return out;
}

} // namespace rfi::transport
