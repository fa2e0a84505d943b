#include "rfi/diagnostics.hpp"

#include "rfi/error.hpp"
#include "rfi/parallel.hpp"
#include "rfi/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace rfi {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

} // namespace

DiscrepancyEstimate markov_discrepancy(const RandomMap& map, const EmpiricalMeasure& mu,
                                       const EmpiricalMeasure& pi_hat, std::size_t n_xi, std::uint64_t seed) {
    if (n_xi < 1) throw DomainError("markov_discrepancy: n_xi must be >= 1");
    if (mu.dim() != map.dim()) throw DimensionError("markov_discrepancy mu", map.dim(), mu.dim());
    if (pi_hat.dim() != map.dim()) throw DimensionError("markov_discrepancy pi_hat", map.dim(), pi_hat.dim());
    const TransportResult ot = wasserstein2(mu, pi_hat);

    std::vector<double> per_draw(n_xi, 0.0);
    for (std::size_t d = 0; d < n_xi; ++d) {
        RngStream rng(seed, static_cast<std::uint32_t>(d), 0, stream::kDiscrepancy);
        const IndexSample xi = map.sample(rng);
        double s = 0.0;
        for (const auto& e : ot.coupling.entries) {
            const Point x = mu.point(e.source);
            const Point y = pi_hat.point(e.target);
            s += e.mass * psi2(x, y, map.apply(xi, x), map.apply(xi, y));
        }
        if (!std::isfinite(s)) throw NumericError("markov_discrepancy: non-finite transport discrepancy");
        per_draw[d] = s;
    }
    double mean = 0.0;
    for (double s : per_draw) mean += s;
    mean /= static_cast<double>(n_xi);
    double var = 0.0;
    for (double s : per_draw) var += (s - mean) * (s - mean);
    const double se_sq = n_xi > 1 ? std::sqrt(var / static_cast<double>(n_xi - 1) / static_cast<double>(n_xi)) : 0.0;

    const double value = std::sqrt(std::max(mean, 0.0));
    // delta method on the square root; falls back to sqrt(se) at zero
    const double se = value > 0.0 ? se_sq / (2.0 * value) : std::sqrt(se_sq);
    return {value, se};
}

double evaluate_rho(const GaugeSpec& g, double t) {
    if (const auto* lin = std::get_if<LinearGauge>(&g)) return lin->kappa * t;
    const auto& tab = std::get<TableGauge>(g);
    if (tab.t.empty() || tab.t.size() != tab.rho.size())
        throw DomainError("table gauge needs matching, nonempty node lists");
    for (std::size_t i = 0; i < tab.t.size(); ++i)
        if (!(tab.t[i] > (i ? tab.t[i - 1] : 0.0)) || tab.rho[i] < (i ? tab.rho[i - 1] : 0.0))
            throw DomainError("table gauge nodes must be increasing in t and nondecreasing in rho");
    double t0 = 0.0, r0 = 0.0;
    for (std::size_t i = 0; i < tab.t.size(); ++i) {
        if (t <= tab.t[i]) return r0 + (tab.rho[i] - r0) * (t - t0) / (tab.t[i] - t0);
        t0 = tab.t[i];
        r0 = tab.rho[i];
    }
    // extend the last segment's slope
    const std::size_t n = tab.t.size();
    const double tp = n > 1 ? tab.t[n - 2] : 0.0;
    const double rp = n > 1 ? tab.rho[n - 2] : 0.0;
    return r0 + (r0 - rp) / (t0 - tp) * (t - t0);
}

std::pair<double, double> linear_gauge_window(double alpha, double eps) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("gauge: alpha must lie in (0, 1)");
    if (!(eps >= 0.0)) throw DomainError("gauge: eps must be >= 0");
    const double tau = (1.0 - alpha) / alpha;
    const double hi = eps > 0.0 ? std::sqrt(tau / eps) : std::numeric_limits<double>::infinity();
    return {std::sqrt(tau / (1.0 + eps)), hi};
}

double theta_from_linear_gauge(double kappa, double eps, double alpha) {
    const auto [lo, hi] = linear_gauge_window(alpha, eps);
    // the window edges are meant inclusively; allow for rounding in sqrt
    const double slack = 1e-12 * std::max(1.0, lo);
    if (!(kappa >= lo - slack && kappa <= hi + slack))
        throw DomainError("linear gauge kappa = " + fmt(kappa) + " lies outside [" + fmt(lo) +
                          ", " + fmt(hi) + "] for alpha = " + fmt(alpha) +
                          ", eps = " + fmt(eps));
    const double tau = (1.0 - alpha) / alpha;
    return std::sqrt(std::max(0.0, 1.0 + eps - tau / (kappa * kappa)));
}

SubregularityResult subregularity_check(const std::vector<double>& psi, const std::vector<double>& w2_steps,
                                        const std::vector<double>& w2_to_inv, const GaugeSpec& gauge,
                                        double floor) {
    if (psi.size() != w2_steps.size() || psi.size() != w2_to_inv.size())
        throw DimensionError("subregularity_check sequences", static_cast<std::ptrdiff_t>(psi.size()),
                             static_cast<std::ptrdiff_t>(w2_steps.size() != psi.size() ? w2_steps.size()
                                                                                        : w2_to_inv.size()));
    SubregularityResult res;
    const double inf = std::numeric_limits<double>::infinity();
    res.q_hat = inf;
    bool any_step = false;
    for (std::size_t k = 0; k < psi.size(); ++k) {
        if (!(w2_steps[k] > floor)) continue;
        any_step = true;
        res.q_hat = std::min(res.q_hat, psi[k] / w2_steps[k]);
    }
    if (!any_step) {
        res.inconclusive = true;
        res.q_hat = 0.0;
        res.kappa_hat = inf;
        res.note = "every W2 step is at or below the floor " + fmt(floor);
        return res;
    }

    bool table_ok = true;
    for (std::size_t k = 0; k < psi.size(); ++k) {
        if (!(w2_to_inv[k] > floor)) continue;
        ++res.n_used;
        // a residual below the floor is read as the floor itself
        const double p = std::max(psi[k], floor);
        res.kappa_hat = std::max(res.kappa_hat, w2_to_inv[k] / p);
        if (std::holds_alternative<TableGauge>(gauge) && w2_to_inv[k] > evaluate_rho(gauge, p)) table_ok = false;
    }
    if (res.n_used == 0) {
        res.inconclusive = true;
        res.note = "every W2 distance to pi_hat is at or below the floor";
        return res;
    }

    const bool finite = std::isfinite(res.kappa_hat);
    if (const auto* lin = std::get_if<LinearGauge>(&gauge)) {
        const auto [lo, hi] = linear_gauge_window(lin->alpha, lin->eps);
        const bool in_window = lin->kappa >= lo && lin->kappa <= hi;
        res.holds = finite && in_window && res.kappa_hat <= lin->kappa;
        res.note = "linear gauge kappa = " + fmt(lin->kappa) + ", window [" + fmt(lo) + ", " +
                   fmt(hi) + "]" + (in_window ? "" : " (kappa outside window)");
    } else {
        res.holds = finite && table_ok;
        res.note = table_ok ? "table gauge dominates every observed step" : "table gauge violated";
    }
    return res;
}

std::string to_string(RateClass c) {
    switch (c) {
    case RateClass::q_linear: return "Q-linear";
    case RateClass::r_linear: return "R-linear";
    case RateClass::sublinear: return "sublinear";
    case RateClass::none: break;
    }
    return "none";
}

namespace {

struct LineFit {
    double slope;
    double intercept;
    double r2;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    const double slope = sxy / sxx;
    const double r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return {slope, my - slope * mx, r2};
}

} // namespace

RateReport fit_rate(const std::vector<std::pair<std::size_t, double>>& dists, double floor) {
    std::size_t best_lo = 0, best_len = 0;
    for (std::size_t i = 0; i < dists.size();) {
        if (!(dists[i].second > floor) || !std::isfinite(dists[i].second)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < dists.size() && dists[j].second > floor && std::isfinite(dists[j].second)) ++j;
        if (j - i > best_len) {
            best_lo = i;
            best_len = j - i;
        }
        i = j;
    }
    if (best_len < 5)
        throw InconclusiveError("fit_rate: " + std::to_string(best_len) + " usable points above floor " +
                                fmt(floor) + ", need 5");
    for (std::size_t i = best_lo + 1; i < best_lo + best_len; ++i)
        if (dists[i].first <= dists[i - 1].first) throw DomainError("fit_rate: k must be strictly increasing");

    std::vector<double> ks, logd, logk;
    const double k0 = static_cast<double>(dists[best_lo].first);
    for (std::size_t i = best_lo; i < best_lo + best_len; ++i) {
        ks.push_back(static_cast<double>(dists[i].first));
        logd.push_back(std::log(dists[i].second));
        logk.push_back(std::log(static_cast<double>(dists[i].first) - k0 + 1.0));
    }
    const LineFit lin = least_squares(ks, logd);
    const LineFit pow = least_squares(logk, logd);

    RateReport rep;
    rep.c_hat = std::exp(lin.slope);
    rep.beta_hat = std::exp(lin.intercept);
    rep.fit_window = {dists[best_lo].first, dists[best_lo + best_len - 1].first};
    rep.r_squared = lin.r2;

    if (pow.slope < 0.0 && pow.r2 > lin.r2) {
        rep.classification = RateClass::sublinear;
    } else if (rep.c_hat < 1.0) {
        bool q_linear = true;
        for (std::size_t i = best_lo + 1; i < best_lo + best_len; ++i) {
            const double dk = static_cast<double>(dists[i].first - dists[i - 1].first);
            const double ratio = std::pow(dists[i].second / dists[i - 1].second, 1.0 / dk);
            if (ratio > rep.c_hat * 1.1) {
                q_linear = false;
                break;
            }
        }
        rep.classification = q_linear ? RateClass::q_linear : RateClass::r_linear;
    }
    return rep;
}

std::optional<std::size_t> detect_plateau(const std::vector<double>& values, std::size_t window, std::size_t lag,
                                          double rel) {
    if (window < 1) throw DomainError("detect_plateau: window must be >= 1");
    if (values.size() < window) return std::nullopt;
    std::vector<double> prefix(values.size() + 1, 0.0);
    for (std::size_t i = 0; i < values.size(); ++i) prefix[i + 1] = prefix[i] + values[i];
    auto ma = [&](std::size_t k) { return (prefix[k + 1] - prefix[k + 1 - window]) / static_cast<double>(window); };
    for (std::size_t k = window - 1 + lag; k < values.size(); ++k) {
        const double before = ma(k - lag);
        if (std::abs(ma(k) - before) < rel * std::abs(before)) return k;
    }
    return std::nullopt;
}

std::vector<TraceRow> transport_trace(const RandomMap& map, const EnsembleRun& run, const EmpiricalMeasure& pi_hat,
                                      const TraceOptions& opts) {
    if (opts.stride < 1) throw DomainError("transport_trace: stride must be >= 1");
    if (opts.cloud_cap < 1) throw DomainError("transport_trace: cloud_cap must be >= 1");
    std::vector<std::size_t> picks;
    for (std::size_t s = 0; s < run.snapshots.size(); s += opts.stride) {
        if (opts.k_max > 0 && run.snapshots[s].k > opts.k_max) break;
        picks.push_back(s);
    }
    std::vector<TraceRow> rows(picks.size());
    parallel_for(picks.size(), opts.workers, [&](std::size_t i) {
        const std::size_t s = picks[i];
        const EmpiricalMeasure mu = run.snapshots[s].measure.thinned(opts.cloud_cap);
        TraceRow row;
        row.k = run.snapshots[s].k;
        row.w2_to_pi = wasserstein2(mu, pi_hat).w2;
        const DiscrepancyEstimate psi = markov_discrepancy(map, mu, pi_hat, opts.n_xi, opts.seed);
        row.psi = psi.value;
        row.psi_se = psi.std_error;
        row.w2_step = std::numeric_limits<double>::quiet_NaN();
        if (s + 1 < run.snapshots.size())
            row.w2_step = wasserstein2(mu, run.snapshots[s + 1].measure.thinned(opts.cloud_cap)).w2;
        rows[i] = row;
    });
    return rows;
}

} // namespace rfi
