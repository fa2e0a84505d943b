#pragma once

#include "rfi/engine.hpp"
#include "rfi/measures.hpp"
#include "rfi/random_maps.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace rfi {

struct DiscrepancyEstimate {
    double value;
    double std_error;
};

/// Markov transport discrepancy against pi_hat:
///   sqrt( sum_jk gamma_jk * mean_d psi2(x_j, y_k, Phi(x_j, xi_d), Phi(y_k, xi_d)) )
/// with gamma an optimal W2 coupling and xi_1..xi_{n_xi} shared by all entries.
DiscrepancyEstimate markov_discrepancy(const RandomMap& map, const EmpiricalMeasure& mu,
                                       const EmpiricalMeasure& pi_hat, std::size_t n_xi, std::uint64_t seed);

/// rho(t) = kappa t, with the (alpha, eps) it is paired with.
struct LinearGauge {
    double kappa;
    double alpha;
    double eps;
};
/// rho by monotone piecewise-linear interpolation through (t_i, rho_i), starting at (0, 0).
struct TableGauge {
    std::vector<double> t;
    std::vector<double> rho;
};
using GaugeSpec = std::variant<LinearGauge, TableGauge>;

double evaluate_rho(const GaugeSpec& g, double t);

/// [sqrt(tau/(1+eps)), sqrt(tau/eps)], tau = (1-alpha)/alpha; upper end is +inf for eps = 0.
std::pair<double, double> linear_gauge_window(double alpha, double eps);

/// sqrt(1 + eps - (1-alpha)/(alpha kappa^2)); DomainError outside the window.
double theta_from_linear_gauge(double kappa, double eps, double alpha);

inline constexpr double kDistanceFloor = 1e-9;

struct SubregularityResult {
    bool holds = false;
    bool inconclusive = false;
    double q_hat = 0.0;
    double kappa_hat = 0.0;
    std::size_t n_used = 0;
    std::string note;
};

/// Inputs are aligned per step k: psi[k] = Psi(mu_k), w2_steps[k] = W2(mu_{k+1}, mu_k),
/// w2_to_inv[k] = W2(mu_k, pi_hat). Steps at or below `floor` are ignored and
/// Psi values below it are raised to it.
SubregularityResult subregularity_check(const std::vector<double>& psi, const std::vector<double>& w2_steps,
                                        const std::vector<double>& w2_to_inv, const GaugeSpec& gauge,
                                        double floor = kDistanceFloor);

enum class RateClass { q_linear, r_linear, sublinear, none };
std::string to_string(RateClass c);

struct RateReport {
    double c_hat = 0.0;
    double beta_hat = 0.0;
    std::pair<std::size_t, std::size_t> fit_window{0, 0};
    double r_squared = 0.0;
    RateClass classification = RateClass::none;
};

/// Least-squares fit of log d_k = log beta + k log c on the longest run of
/// consecutive entries above `floor`. Throws InconclusiveError with fewer
/// than 5 usable points.
RateReport fit_rate(const std::vector<std::pair<std::size_t, double>>& dists, double floor = kDistanceFloor);

/// First k where the `window`-point trailing moving average changed by less
/// than `rel` relative to its value `lag` steps earlier.
std::optional<std::size_t> detect_plateau(const std::vector<double>& values, std::size_t window = 20,
                                          std::size_t lag = 50, double rel = 0.01);

struct TraceOptions {
    std::size_t stride = 1;
    std::size_t k_max = 0; // 0: all snapshots
    std::size_t n_xi = 16;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    Index cloud_cap = 500; // snapshots are thinned to this many atoms
};

struct TraceRow {
    std::size_t k;
    double w2_to_pi;
    double psi;
    double psi_se;
    double w2_step; // W2 to the next snapshot; NaN on the last one
};

/// W2 to pi_hat, Psi and W2 between consecutive snapshots, for every stride-th snapshot.
std::vector<TraceRow> transport_trace(const RandomMap& map, const EnsembleRun& run, const EmpiricalMeasure& pi_hat,
                                      const TraceOptions& opts);

} // namespace rfi
