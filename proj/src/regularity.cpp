#include "rfi/regularity.hpp"

#include "rfi/error.hpp"
#include "rfi/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace rfi {

double psi2(const Point& x, const Point& y, const Point& x_plus, const Point& y_plus) {
    require_dim(x.size(), y, "psi2 y");
    require_dim(x.size(), x_plus, "psi2 x_plus");
    require_dim(x.size(), y_plus, "psi2 y_plus");
    return ((x - x_plus) - (y - y_plus)).squaredNorm();
}

namespace {

constexpr double kMinPairDistance = 1e-9;
constexpr double kRoundoffSe = 1e-12;
constexpr std::uint32_t kMaxPairAttempts = 1000;

struct PairDraws {
    double d2;
    std::vector<double> sq_dist; // |Phi x - Phi y|^2 per draw
    std::vector<double> psi;     // psi2 per draw
};

Point sample_point(const PairSampler& s, RngStream& rng) {
    Point x(s.center.size());
    for (Index i = 0; i < x.size(); ++i) x[i] = s.center[i] + s.radius * rng.normal();
    return x;
}

PairDraws draw_pair(const RandomMap& map, const PairSampler& s, std::size_t p, std::size_t n_xi,
                    std::uint64_t seed) {
    Point x, y;
    double d2 = 0.0;
    for (std::uint32_t attempt = 0;; ++attempt) {
        if (attempt == kMaxPairAttempts)
            throw DomainError("certify: pair sampler keeps producing coincident points; increase radius");
        RngStream rng(seed, static_cast<std::uint32_t>(p), attempt, stream::kPairs);
        x = sample_point(s, rng);
        y = sample_point(s, rng);
        d2 = (x - y).squaredNorm();
        if (std::sqrt(d2) >= kMinPairDistance) break;
    }
    PairDraws out{d2, std::vector<double>(n_xi), std::vector<double>(n_xi)};
    for (std::size_t j = 0; j < n_xi; ++j) {
        RngStream rng(seed, static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(j), stream::kShared);
        const IndexSample xi = map.sample(rng);
        const Point xp = map.apply(xi, x);
        const Point yp = map.apply(xi, y);
        if (!xp.allFinite() || !yp.allFinite())
            throw NumericError("certify: map produced a non-finite value on pair " + std::to_string(p));
        out.sq_dist[j] = (xp - yp).squaredNorm();
        out.psi[j] = psi2(x, y, xp, yp);
    }
    return out;
}

void check_sampler(const RandomMap& map, const PairSampler& s, std::size_t n_pairs, std::size_t n_xi) {
    require_dim(map.dim(), s.center, "pair sampler center");
    require_finite(s.center, "pair sampler center");
    if (!(s.radius > 0.0) || !std::isfinite(s.radius))
        throw DomainError("pair sampler radius must be positive");
    if (n_pairs < 1) throw DomainError("n_pairs must be >= 1");
    if (n_xi < 1) throw DomainError("n_xi must be >= 1");
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double e : v) s += e;
    return s / static_cast<double>(v.size());
}

double bootstrap_se(const std::vector<double>& v, std::size_t resamples, std::uint64_t seed, std::size_t p) {
    const std::size_t n = v.size();
    if (n < 2 || resamples < 2) return kRoundoffSe;
    std::vector<double> means(resamples);
    for (std::size_t b = 0; b < resamples; ++b) {
        RngStream rng(seed, static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(b), stream::kBootstrap);
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[rng.next_u64() % n];
        means[b] = s / static_cast<double>(n);
    }
    const double m = mean(means);
    double ss = 0.0;
    for (double e : means) ss += (e - m) * (e - m);
    return std::max(std::sqrt(ss / static_cast<double>(resamples - 1)), kRoundoffSe);
}

} // namespace

RegularityReport certify_afne_expectation(const RandomMap& map, double alpha, const PairSampler& sampler,
                                          std::size_t n_pairs, std::size_t n_xi, std::uint64_t seed,
                                          const CertifyOptions& opts) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("certify: alpha must lie in (0, 1)");
    check_sampler(map, sampler, n_pairs, n_xi);
    const double tau = (1.0 - alpha) / alpha;

    std::vector<double> eps(n_pairs), se(n_pairs), kappa(n_pairs);
    parallel_for(n_pairs, opts.workers, [&](std::size_t p) {
        const PairDraws d = draw_pair(map, sampler, p, n_xi, seed);
        std::vector<double> e(n_xi);
        for (std::size_t j = 0; j < n_xi; ++j) e[j] = (d.sq_dist[j] + tau * d.psi[j]) / d.d2 - 1.0;
        eps[p] = mean(e);
        se[p] = bootstrap_se(e, opts.bootstrap_resamples, seed, p);
        kappa[p] = 1.0 - mean(d.sq_dist) / d.d2;
    });

    RegularityReport rep;
    rep.alpha = alpha;
    rep.eps_bound = opts.eps_bound;
    rep.n_pairs = n_pairs;
    rep.n_xi = n_xi;
    rep.sample_center = sampler.center;
    rep.sample_radius = sampler.radius;
    const auto worst = static_cast<std::size_t>(std::max_element(eps.begin(), eps.end()) - eps.begin());
    rep.eps_hat = std::max(0.0, eps[worst]);
    rep.se_at_max = se[worst];
    rep.kappa2_hat = *std::min_element(kappa.begin(), kappa.end());
    rep.max_slack = -std::numeric_limits<double>::infinity();
    rep.n_violating = 0;
    for (std::size_t p = 0; p < n_pairs; ++p) {
        rep.max_slack = std::max(rep.max_slack, eps[p] - 3.0 * se[p]);
        if (eps[p] > 3.0 * se[p]) ++rep.n_violating;
    }

    std::ostringstream note;
    note << "eps_hat is the worst pair over " << n_pairs << " Gaussian pairs (radius " << sampler.radius
         << ") with " << n_xi << " shared draws each; bootstrap SE at that pair " << rep.se_at_max << "; "
         << rep.n_violating << " pairs exceed 3 SE";
    if (rep.eps_bound) note << "; closed-form bound " << *rep.eps_bound;
    rep.confidence_note = note.str();
    return rep;
}

double fb_violation_bound(double tau_f, double tau_g, double lipschitz, double t) {
    if (!(t > 0.0)) throw DomainError("fb_violation_bound: t must be > 0");
    if (!(lipschitz >= 0.0)) throw DomainError("fb_violation_bound: L must be >= 0");
    return std::max(0.0, (1.0 + 2.0 * tau_g) * (1.0 + t * (2.0 * tau_f + 2.0 * t * lipschitz * lipschitz)) - 1.0);
}

double dr_violation_bound(double tau_f, double tau_g) {
    return 0.5 * ((1.0 + 2.0 * tau_g) * (1.0 + 2.0 * tau_f) - 1.0);
}

double contraction_alpha(double r) {
    if (!(r >= 0.0 && r < 1.0)) throw DomainError("contraction_alpha: r must lie in [0, 1)");
    return 0.5 * (1.0 + r);
}

double estimate_contraction_ratio(const RandomMap& map, const PairSampler& sampler, std::size_t n_pairs,
                                  std::size_t n_xi, std::uint64_t seed, unsigned workers) {
    check_sampler(map, sampler, n_pairs, n_xi);
    std::vector<double> ratio(n_pairs);
    parallel_for(n_pairs, workers, [&](std::size_t p) {
        const PairDraws d = draw_pair(map, sampler, p, n_xi, seed);
        ratio[p] = std::sqrt(mean(d.sq_dist) / d.d2);
    });
    return *std::max_element(ratio.begin(), ratio.end());
}

} // namespace rfi
