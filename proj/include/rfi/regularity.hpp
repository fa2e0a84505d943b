#pragma once

#include "rfi/random_maps.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace rfi {

/// |(x - x_plus) - (y - y_plus)|^2.
double psi2(const Point& x, const Point& y, const Point& x_plus, const Point& y_plus);

/// Gaussian point pairs: x, y ~ N(center, radius^2 I) independently.
struct PairSampler {
    Point center;
    double radius = 1.0;
};

struct CertifyOptions {
    std::size_t bootstrap_resamples = 200;
    unsigned workers = 1;
    std::optional<double> eps_bound;
};

struct RegularityReport {
    double alpha;
    double eps_hat;                 // max over pairs of the per-pair violation, clamped at 0
    std::optional<double> eps_bound;
    double kappa2_hat;              // min over pairs of 1 - E|Phi x - Phi y|^2 / |x - y|^2
    std::size_t n_pairs;
    std::size_t n_xi;
    double max_slack;               // max over pairs of (eps_p - 3 SE_p)
    double se_at_max;               // bootstrap SE of the pair attaining eps_hat
    std::size_t n_violating;        // pairs with eps_p > 3 SE_p
    Point sample_center;
    double sample_radius;
    std::string confidence_note;
};

/// Estimates the smallest eps with
///   E|Phi(x) - Phi(y)|^2 <= (1 + eps)|x - y|^2 - ((1 - alpha)/alpha) E psi2
/// on sampled pairs, using the same index draw for x and y. Pair p uses its
/// own streams, so results do not depend on the worker count.
RegularityReport certify_afne_expectation(const RandomMap& map, double alpha, const PairSampler& sampler,
                                          std::size_t n_pairs, std::size_t n_xi, std::uint64_t seed,
                                          const CertifyOptions& opts = {});

/// max{0, (1 + 2 tau_g)(1 + t(2 tau_f + 2 t L^2)) - 1}.
double fb_violation_bound(double tau_f, double tau_g, double lipschitz, double t);
/// 1/2 ((1 + 2 tau_g)(1 + 2 tau_f) - 1).
double dr_violation_bound(double tau_f, double tau_g);
/// (1 + r)/2 for r in [0, 1).
double contraction_alpha(double r);

/// max over sampled pairs of sqrt(E|Phi x - Phi y|^2 / |x - y|^2).
double estimate_contraction_ratio(const RandomMap& map, const PairSampler& sampler, std::size_t n_pairs,
                                  std::size_t n_xi, std::uint64_t seed, unsigned workers = 1);

} // namespace rfi
