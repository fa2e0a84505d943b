#pragma once

#include "rfi/measures.hpp"
#include "rfi/random_maps.hpp"

#include <cstdint>
#include <utility>
#include <variant>
#include <vector>

namespace rfi {

struct DeltaStart {
    Point x;
};
struct GaussianCloudStart {
    Point mean;
    double sigma;
};
/// Chain c starts at points.col(c % points.cols()).
struct ExplicitCloudStart {
    Matrix points;
};
using InitialDistribution = std::variant<DeltaStart, GaussianCloudStart, ExplicitCloudStart>;

Index initial_dim(const InitialDistribution& init);

struct EnsembleConfig {
    std::size_t n_chains = 1;
    std::size_t n_iters = 1;
    std::uint64_t seed = 0;
    InitialDistribution initial = DeltaStart{Point::Zero(1)};
    std::size_t snapshot_every = 1;
    std::size_t burn_in = 0;
};

/// Throws DomainError on out-of-range fields.
void validate(const EnsembleConfig& cfg);

/// X_0 of chain `chain`; Gaussian clouds draw from their own keyed stream.
Point initial_point(const EnsembleConfig& cfg, std::size_t chain);

struct Snapshot {
    std::size_t k;
    EmpiricalMeasure measure;
};

/// Distribution of |X_{k+1} - X_k| over chains.
struct ResidualStats {
    std::size_t k;
    double mean;
    double p10;
    double p50;
    double p90;
};

struct EnsembleRun {
    EnsembleConfig config;
    /// k = 0 and every multiple of snapshot_every up to n_iters.
    std::vector<Snapshot> snapshots;
    /// Entry k describes |X_{k+1} - X_k|, k = 0 .. n_iters - 1.
    std::vector<ResidualStats> residual_stats;
    /// residuals(k, c) = |X_{k+1} - X_k| for chain c.
    Matrix residuals;
    /// Mean of |X_k| over chains, k = 0 .. n_iters.
    std::vector<double> expectation_trace;

    const EmpiricalMeasure& final_cloud() const { return snapshots.back().measure; }
    /// Snapshot at step k, or nullptr.
    const Snapshot* snapshot_at(std::size_t k) const;
};

struct ExecutionOptions {
    unsigned workers = 1;
};

/// Runs n_chains independent copies of X_{k+1} = T_{xi_k} X_k. The draw for
/// chain c at step k comes from RngStream(seed, c, k), so the output does not
/// depend on the number of workers. Throws DivergenceError on the lowest
/// chain that produced a non-finite iterate.
EnsembleRun simulate(const RandomMap& map, const EnsembleConfig& cfg, ExecutionOptions exec = {});

/// Two ensembles driven by identical index draws from different starts.
struct CoupledRun {
    EnsembleRun first;
    EnsembleRun second;
    /// distances(s, c) = |X_k - Y_k| for chain c at snapshot s.
    Matrix distances;
};

CoupledRun simulate_coupled(const RandomMap& map, const EnsembleConfig& cfg,
                            const InitialDistribution& second_start, ExecutionOptions exec = {});

/// nu_k = (1/k) sum_{j=1..k} mu_j, pooled with weights 1/(k n_chains).
/// Requires snapshot_every == 1.
EmpiricalMeasure cesaro_average(const EnsembleRun& run, std::size_t k);
/// nu_1 .. nu_kmax (kmax = 0 means n_iters).
std::vector<std::pair<std::size_t, EmpiricalMeasure>> cesaro(const EnsembleRun& run,
                                                             std::size_t k_max = 0);

struct BoundednessReport {
    bool bounded;
    double m_hat;  // max of the expectation trace
    double slope;  // least-squares slope after burn-in
    double median; // median after burn-in
};

BoundednessReport boundedness_monitor(const EnsembleRun& run);

/// Invariant-measure estimate: pools the last ceil(20%) of the snapshots taken
/// at or after burn_in; thinned to max_points atoms when max_points > 0.
EmpiricalMeasure estimate_invariant(const EnsembleRun& run, Index max_points = 0);

} // namespace rfi
