#include "rfi/engine.hpp"

#include "rfi/error.hpp"
#include "rfi/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace rfi {

Index initial_dim(const InitialDistribution& init) {
    if (const auto* d = std::get_if<DeltaStart>(&init)) return d->x.size();
    if (const auto* g = std::get_if<GaussianCloudStart>(&init)) return g->mean.size();
    return std::get<ExplicitCloudStart>(init).points.rows();
}

void validate(const EnsembleConfig& cfg) {
    if (cfg.n_chains < 1) throw DomainError("ensemble: n_chains must be >= 1");
    if (cfg.n_iters < 1) throw DomainError("ensemble: n_iters must be >= 1");
    if (cfg.snapshot_every < 1) throw DomainError("ensemble: snapshot_every must be >= 1");
    if (cfg.burn_in >= cfg.n_iters) throw DomainError("ensemble: burn_in must be < n_iters");
    if (initial_dim(cfg.initial) < 1) throw DomainError("ensemble: initial distribution has no dimension");
    if (const auto* g = std::get_if<GaussianCloudStart>(&cfg.initial)) {
        if (!(g->sigma >= 0.0) || !std::isfinite(g->sigma))
            throw DomainError("ensemble: initial sigma must be >= 0");
        require_finite(g->mean, "ensemble initial mean");
    } else if (const auto* d = std::get_if<DeltaStart>(&cfg.initial)) {
        require_finite(d->x, "ensemble initial point");
    } else {
        const auto& e = std::get<ExplicitCloudStart>(cfg.initial);
        if (e.points.cols() < 1) throw DomainError("ensemble: explicit cloud is empty");
        if (!e.points.allFinite()) throw DomainError("ensemble: explicit cloud has non-finite points");
    }
}

Point initial_point(const EnsembleConfig& cfg, std::size_t chain) {
    if (const auto* d = std::get_if<DeltaStart>(&cfg.initial)) return d->x;
    if (const auto* g = std::get_if<GaussianCloudStart>(&cfg.initial)) {
        RngStream rng(cfg.seed, static_cast<std::uint32_t>(chain), 0, stream::kInitial);
        Point x(g->mean.size());
        for (Index k = 0; k < x.size(); ++k) x[k] = g->mean[k] + g->sigma * rng.normal();
        return x;
    }
    const auto& e = std::get<ExplicitCloudStart>(cfg.initial);
    return e.points.col(static_cast<Index>(chain % static_cast<std::size_t>(e.points.cols())));
}

const Snapshot* EnsembleRun::snapshot_at(std::size_t k) const {
    auto it = std::lower_bound(snapshots.begin(), snapshots.end(), k,
                               [](const Snapshot& s, std::size_t key) { return s.k < key; });
    return (it != snapshots.end() && it->k == k) ? &*it : nullptr;
}

namespace {

double quantile_sorted(const std::vector<double>& v, double q) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] + frac * (v[hi] - v[lo]);
}

} // namespace

EnsembleRun simulate(const RandomMap& map, const EnsembleConfig& cfg, ExecutionOptions exec) {
    validate(cfg);
    const Index dim = map.dim();
    if (initial_dim(cfg.initial) != dim)
        throw DimensionError("initial distribution", dim, initial_dim(cfg.initial));

    const std::size_t n_chains = cfg.n_chains;
    const std::size_t n_iters = cfg.n_iters;
    std::vector<std::size_t> snapshot_steps;
    for (std::size_t k = 0; k <= n_iters; k += cfg.snapshot_every) snapshot_steps.push_back(k);

    std::vector<Matrix> clouds(snapshot_steps.size(), Matrix(dim, static_cast<Index>(n_chains)));
    Matrix residuals(static_cast<Index>(n_iters), static_cast<Index>(n_chains));
    Matrix norms(static_cast<Index>(n_iters + 1), static_cast<Index>(n_chains));
    std::vector<std::size_t> failed_at(n_chains, 0);

    parallel_for(n_chains, exec.workers, [&](std::size_t c) {
        const Index col = static_cast<Index>(c);
        Point x = initial_point(cfg, c);
        clouds[0].col(col) = x;
        norms(0, col) = x.norm();
        std::size_t next_snap = 1;
        for (std::size_t k = 0; k < n_iters; ++k) {
            RngStream rng(cfg.seed, static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(k),
                          stream::kIndex);
            const IndexSample draw = map.sample(rng);
            Point y = map.apply(draw, x);
            if (!y.allFinite()) {
                failed_at[c] = k + 1;
                return;
            }
            residuals(static_cast<Index>(k), col) = (y - x).norm();
            x = std::move(y);
            norms(static_cast<Index>(k + 1), col) = x.norm();
            if (next_snap < snapshot_steps.size() && snapshot_steps[next_snap] == k + 1) {
                clouds[next_snap].col(col) = x;
                ++next_snap;
            }
        }
    });

    for (std::size_t c = 0; c < n_chains; ++c)
        if (failed_at[c] != 0) throw DivergenceError(c, failed_at[c]);

    EnsembleRun run;
    run.config = cfg;
    run.snapshots.reserve(snapshot_steps.size());
    for (std::size_t s = 0; s < snapshot_steps.size(); ++s)
        run.snapshots.push_back({snapshot_steps[s], EmpiricalMeasure::uniform(std::move(clouds[s]))});

    run.residual_stats.reserve(n_iters);
    std::vector<double> row(n_chains);
    for (std::size_t k = 0; k < n_iters; ++k) {
        double sum = 0.0;
        for (std::size_t c = 0; c < n_chains; ++c) {
            row[c] = residuals(static_cast<Index>(k), static_cast<Index>(c));
            sum += row[c];
        }
        std::sort(row.begin(), row.end());
        run.residual_stats.push_back({k, sum / static_cast<double>(n_chains), quantile_sorted(row, 0.1),
                                      quantile_sorted(row, 0.5), quantile_sorted(row, 0.9)});
    }
    run.residuals = std::move(residuals);

    run.expectation_trace.resize(n_iters + 1);
    for (std::size_t k = 0; k <= n_iters; ++k) {
        double sum = 0.0;
        for (std::size_t c = 0; c < n_chains; ++c) sum += norms(static_cast<Index>(k), static_cast<Index>(c));
        run.expectation_trace[k] = sum / static_cast<double>(n_chains);
    }
    return run;
}

CoupledRun simulate_coupled(const RandomMap& map, const EnsembleConfig& cfg,
                            const InitialDistribution& second_start, ExecutionOptions exec) {
    EnsembleConfig other = cfg;
    other.initial = second_start;
    CoupledRun out{simulate(map, cfg, exec), simulate(map, other, exec), Matrix()};
    const auto& a = out.first.snapshots;
    const auto& b = out.second.snapshots;
    out.distances.resize(static_cast<Index>(a.size()), static_cast<Index>(cfg.n_chains));
    for (std::size_t s = 0; s < a.size(); ++s)
        out.distances.row(static_cast<Index>(s)) =
            (a[s].measure.points() - b[s].measure.points()).colwise().norm();
    return out;
}

EmpiricalMeasure cesaro_average(const EnsembleRun& run, std::size_t k) {
    if (run.config.snapshot_every != 1)
        throw DomainError("cesaro: requires snapshot_every == 1");
    if (k < 1 || k > run.config.n_iters) throw DomainError("cesaro: k must lie in [1, n_iters]");
    const Index n = static_cast<Index>(run.config.n_chains);
    const Index dim = run.snapshots.front().measure.dim();
    Matrix pooled(dim, n * static_cast<Index>(k));
    for (std::size_t j = 1; j <= k; ++j)
        pooled.middleCols(n * static_cast<Index>(j - 1), n) = run.snapshots[j].measure.points();
    return EmpiricalMeasure::uniform(std::move(pooled));
}

std::vector<std::pair<std::size_t, EmpiricalMeasure>> cesaro(const EnsembleRun& run, std::size_t k_max) {
    if (run.config.snapshot_every != 1)
        throw DomainError("cesaro: requires snapshot_every == 1");
    if (k_max == 0) k_max = run.config.n_iters;
    std::vector<std::pair<std::size_t, EmpiricalMeasure>> out;
    out.reserve(k_max);
    for (std::size_t k = 1; k <= k_max; ++k) out.emplace_back(k, cesaro_average(run, k));
    return out;
}

BoundednessReport boundedness_monitor(const EnsembleRun& run) {
    const auto& trace = run.expectation_trace;
    const std::size_t start = run.config.burn_in;
    std::vector<double> tail(trace.begin() + static_cast<std::ptrdiff_t>(start), trace.end());

    const double n = static_cast<double>(tail.size());
    double mean_k = 0.0, mean_v = 0.0;
    for (std::size_t i = 0; i < tail.size(); ++i) {
        mean_k += static_cast<double>(i);
        mean_v += tail[i];
    }
    mean_k /= n;
    mean_v /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < tail.size(); ++i) {
        const double dk = static_cast<double>(i) - mean_k;
        sxy += dk * (tail[i] - mean_v);
        sxx += dk * dk;
    }
    const double slope = sxx > 0.0 ? sxy / sxx : 0.0;

    std::vector<double> sorted = tail;
    std::sort(sorted.begin(), sorted.end());
    const double median = quantile_sorted(sorted, 0.5);
    const double tail_max = sorted.back();

    BoundednessReport rep;
    rep.slope = slope;
    rep.median = median;
    rep.m_hat = *std::max_element(trace.begin(), trace.end());
    rep.bounded = slope <= 0.0 || tail_max <= 1.05 * median;
    return rep;
}

EmpiricalMeasure estimate_invariant(const EnsembleRun& run, Index max_points) {
    std::vector<const Snapshot*> eligible;
    for (const auto& s : run.snapshots)
        if (s.k >= run.config.burn_in) eligible.push_back(&s);
    if (eligible.empty()) eligible.push_back(&run.snapshots.back());
    const std::size_t count =
        std::max<std::size_t>(1, (eligible.size() + 4) / 5); // ceil(20%)
    const std::size_t first = eligible.size() - count;

    const Index n = run.snapshots.front().measure.size();
    const Index dim = run.snapshots.front().measure.dim();
    Matrix pooled(dim, n * static_cast<Index>(count));
    for (std::size_t s = 0; s < count; ++s)
        pooled.middleCols(n * static_cast<Index>(s), n) = eligible[first + s]->measure.points();
    auto pi_hat = EmpiricalMeasure::uniform(std::move(pooled));
    return max_points > 0 ? pi_hat.thinned(max_points) : pi_hat;
}

} // namespace rfi
