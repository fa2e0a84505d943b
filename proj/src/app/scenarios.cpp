#include "rfi/app/scenarios.hpp"

#include "rfi/app/csv.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

namespace rfi::app {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

Point to_point(const std::vector<double>& v) { return Eigen::Map<const Point>(v.data(), static_cast<Index>(v.size())); }

Matrix normal_matrix(RngStream& rng, Index rows, Index cols) {
    Matrix a(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) a(i, j) = rng.normal();
    return a;
}

Point normal_vector(RngStream& rng, Index n) {
    Point v(n);
    for (Index i = 0; i < n; ++i) v[i] = rng.normal();
    return v;
}

json to_json(const random_maps::NoiseConstants& nc) {
    return {{"c_hat", nc.c_hat}, {"c_std_error", nc.c_std_error}, {"d_hat", nc.d_hat},
            {"d_std_error", nc.d_std_error}, {"n_mc", nc.n_mc}, {"flagged", nc.flagged}};
}

json to_json(const RateReport& r) {
    return {{"c_hat", r.c_hat},
            {"beta_hat", r.beta_hat},
            {"fit_window", {r.fit_window.first, r.fit_window.second}},
            {"r_squared", r.r_squared},
            {"classification", to_string(r.classification)}};
}

json to_json(const RegularityReport& r) {
    return {{"alpha", r.alpha},
            {"eps_hat", r.eps_hat},
            {"eps_bound", r.eps_bound ? json(*r.eps_bound) : json(nullptr)},
            {"kappa2_hat", r.kappa2_hat},
            {"n_pairs", r.n_pairs},
            {"n_xi", r.n_xi},
            {"max_slack", r.max_slack},
            {"se_at_max", r.se_at_max},
            {"n_violating", r.n_violating},
            {"sample_center", std::vector<double>(r.sample_center.data(), r.sample_center.data() + r.sample_center.size())},
            {"sample_radius", r.sample_radius},
            {"confidence_note", r.confidence_note}};
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

} // namespace

Problem build_problem(const ScenarioConfig& cfg) {
    const auto n = static_cast<Index>(cfg.n);
    const auto m = static_cast<Index>(cfg.m);
    RngStream rng(cfg.engine.seed, 0, 0, stream::kProblem);
    const PairSampler sampler{to_point(cfg.engine.initial.point), cfg.regularity.radius};
    json info;

    switch (cfg.scenario) {
    case Scenario::fig1_cyclic: {
        const Matrix a = normal_matrix(rng, m, n);
        const Point b = normal_vector(rng, m);
        std::vector<random_maps::NoisyHyperplane> planes;
        for (Index i = 0; i < m; ++i) planes.push_back(random_maps::anchored_hyperplane(a.row(i).transpose(), b[i]));
        info = {{"description", "cyclic projections onto the rows of a standard normal system A x = b"},
                {"rows", m}, {"cols", n}};
        const double alpha = static_cast<double>(m) / static_cast<double>(m + 1);
        return {random_maps::noisy_cyclic_projections(std::move(planes), cfg.sigma_dir, cfg.sigma_off), sampler,
                alpha, 0.0, std::nullopt, {}, false, std::nullopt, info};
    }
    case Scenario::noisy_hyperplane: {
        std::vector<random_maps::NoisyHyperplane> planes;
        for (Index i = 0; i < m; ++i) {
            Point a = normal_vector(rng, n);
            const double b = rng.normal();
            planes.push_back(random_maps::anchored_hyperplane(std::move(a), b));
        }
        std::vector<random_maps::NoiseConstants> noise;
        bool flagged = false;
        double ratio = 1.0;
        for (Index i = 0; i < m; ++i) {
            noise.push_back(random_maps::noise_constants(planes[static_cast<std::size_t>(i)], cfg.sigma_dir,
                                                         cfg.sigma_off, cfg.diagnostics.n_mc,
                                                         cfg.engine.seed + static_cast<std::uint64_t>(i)));
            flagged = flagged || noise.back().flagged;
            ratio *= std::sqrt(std::max(0.0, 1.0 - noise.back().c_hat));
        }
        info = {{"description", m == 1 ? "projection onto one hyperplane with perturbed normal and offset"
                                        : "cyclic projections onto perturbed hyperplanes"},
                {"hyperplanes", m}, {"dim", n}};
        std::optional<double> ratio_bound;
        double alpha = 0.5;
        if (!flagged) {
            ratio_bound = ratio;
            alpha = contraction_alpha(ratio);
        }
        RandomMap map = m == 1 ? random_maps::noisy_hyperplane(planes.front(), cfg.sigma_dir, cfg.sigma_off)
                               : random_maps::noisy_cyclic_projections(planes, cfg.sigma_dir, cfg.sigma_off);
        return {std::move(map), sampler, alpha, 0.0, ratio_bound, std::move(noise), flagged, std::nullopt, info};
    }
    case Scenario::sgd_strongly_convex: {
        std::vector<ops::QuadraticFn> fs;
        double tau_f = -std::numeric_limits<double>::infinity();
        double lip = 0.0;
        for (Index i = 0; i < m; ++i) {
            const Eigen::HouseholderQR<Matrix> qr(normal_matrix(rng, n, n));
            const Matrix u = qr.householderQ();
            Point lambda(n);
            for (Index j = 0; j < n; ++j) lambda[j] = 0.5 + 1.5 * rng.uniform();
            fs.emplace_back(u * lambda.asDiagonal() * u.transpose(), normal_vector(rng, n));
            tau_f = std::max(tau_f, fs.back().hypomonotonicity());
            lip = std::max(lip, fs.back().lipschitz());
        }
        const double t = cfg.step.value_or(std::abs(tau_f) / (lip * lip));
        const double bound = fb_violation_bound(tau_f, 0.0, lip, t);
        info = {{"description", "stochastic gradient steps on strongly convex quadratics"},
                {"functions", m}, {"dim", n}, {"tau_f", tau_f}, {"lipschitz", lip}, {"step", t}};
        std::vector<double> w(static_cast<std::size_t>(m), 1.0 / static_cast<double>(m));
        RandomMap map = random_maps::stochastic_forward_backward(std::move(fs), w, {ops::Prox(ops::ConvexSet::full_space(n))},
                                                                 {1.0}, t);
        return {std::move(map), sampler, 2.0 / 3.0, bound, std::nullopt, {}, false, t, info};
    }
    case Scenario::stochastic_dr_affine: {
        const Point x_star = normal_vector(rng, n);
        std::vector<ops::Prox> sets;
        for (Index i = 0; i < m; ++i) {
            Matrix a = normal_matrix(rng, 2, n);
            Point b = a * x_star;
            sets.emplace_back(ops::ConvexSet::affine_subspace(std::move(a), std::move(b)));
        }
        info = {{"description", "Douglas-Rachford on random pairs of affine subspaces through a common point"},
                {"subspaces", m}, {"dim", n}, {"codimension", 2}};
        std::vector<double> w(static_cast<std::size_t>(m), 1.0 / static_cast<double>(m));
        RandomMap map = random_maps::stochastic_douglas_rachford(sets, w, sets, w);
        return {std::move(map), sampler, 0.5, dr_violation_bound(0.0, 0.0), std::nullopt, {}, false, std::nullopt, info};
    }
    case Scenario::involution:
        info = {{"description", "deterministic involution x -> -x"}, {"dim", n}};
        return {random_maps::deterministic(ops::scale(n, -1.0)), sampler, 0.5, std::nullopt, std::nullopt, {}, false,
                std::nullopt, info};
    case Scenario::custom: {
        const MapSpec& ms = cfg.map;
        info = {{"description", "custom map"}, {"type", ms.type}, {"dim", n}};
        if (ms.type == "identity")
            return {random_maps::deterministic(ops::identity(n)), sampler, 0.5, 0.0, std::nullopt, {}, false,
                    std::nullopt, info};
        if (ms.type == "scale") {
            std::optional<double> bound;
            if (ms.factor >= 0.0 && ms.factor <= 1.0) bound = 0.0; // averaged map
            return {random_maps::deterministic(ops::scale(n, ms.factor)), sampler, 0.5, bound, std::nullopt,
                    {}, false, std::nullopt, info};
        }
        if (ms.type == "hyperplane")
            return {random_maps::deterministic(ops::projector(ops::ConvexSet::hyperplane(to_point(ms.normal), ms.offset))),
                    sampler, 0.5, 0.0, std::nullopt, {}, false, std::nullopt, info};
        auto h = random_maps::anchored_hyperplane(to_point(ms.normal), ms.offset);
        return {random_maps::noisy_hyperplane(h, cfg.sigma_dir, cfg.sigma_off), sampler, 0.5, 0.0, std::nullopt, {},
                false, std::nullopt, info};
    }
    }
    throw DomainError("unhandled scenario");
}

Histogram residual_histogram(const std::vector<double>& values, std::size_t bins) {
    Histogram h;
    if (values.empty() || bins == 0) return h;
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    bool zeros = false;
    for (double v : values) {
        if (v > 0.0) lo = std::min(lo, v);
        else zeros = true;
        hi = std::max(hi, v);
    }
    if (!(hi > 0.0)) {
        h.lo = {0.0};
        h.hi = {0.0};
        h.count = {values.size()};
        return h;
    }
    const bool log_bins = hi / lo > 10.0;
    std::vector<double> edges(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) {
        const double f = static_cast<double>(i) / static_cast<double>(bins);
        edges[i] = log_bins ? std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo))) : lo + f * (hi - lo);
    }
    edges.front() = lo;
    edges.back() = hi;
    h.count.assign(bins, 0);
    for (double v : values) {
        std::size_t b = 0;
        if (v > 0.0) {
            b = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), v) - edges.begin());
            b = std::clamp<std::size_t>(b, 1, bins) - 1;
        }
        ++h.count[b];
    }
    h.lo.assign(edges.begin(), edges.end() - 1);
    h.hi.assign(edges.begin() + 1, edges.end());
    if (zeros) h.lo.front() = 0.0;
    return h;
}

PlateauReport analyze_plateau(const std::vector<double>& mean_residual, const ScenarioConfig& cfg) {
    PlateauReport rep;
    if (cfg.sigma_off > 0.0) rep.noise_scale = cfg.sigma_off * std::sqrt(static_cast<double>(cfg.m));
    rep.k = detect_plateau(mean_residual, 20, 50, 0.01);
    if (!rep.k) return rep;
    double sum = 0.0;
    for (std::size_t k = *rep.k; k < mean_residual.size(); ++k) sum += mean_residual[k];
    rep.level = sum / static_cast<double>(mean_residual.size() - *rep.k);
    std::vector<std::pair<std::size_t, double>> phase;
    for (std::size_t k = 0; k <= *rep.k; ++k) phase.emplace_back(k, mean_residual[k]);
    try {
        rep.phase = fit_rate(phase, 0.0);
    } catch (const InconclusiveError&) {
    }
    return rep;
}

ScenarioResult run_scenario(const ScenarioConfig& cfg, Stages stages) {
    const fs::path out_dir(cfg.output_dir);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw Error("cannot create output directory " + cfg.output_dir + ": " + ec.message());

    ScenarioResult result;
    json& report = result.report;
    report["config"] = to_json(cfg);
    report["seeds"] = {{"master", cfg.engine.seed},
                       {"streams", {{"index", stream::kIndex}, {"initial", stream::kInitial}, {"problem", stream::kProblem},
                                    {"pairs", stream::kPairs}, {"shared_draws", stream::kShared},
                                    {"bootstrap", stream::kBootstrap}, {"noise_mc", stream::kNoiseMc},
                                    {"discrepancy", stream::kDiscrepancy}}}};

    const Problem problem = build_problem(cfg);
    report["problem"] = problem.info;
    if (!problem.noise.empty()) {
        json arr = json::array();
        for (const auto& nc : problem.noise) arr.push_back(to_json(nc));
        report["noise_constants"] = arr;
        report["ratio_bound"] = optional_json(problem.ratio_bound);
    }
    report["tolerances"] = {{"distance_floor", kDistanceFloor},
                            {"rate_floor", cfg.diagnostics.rate_floor},
                            {"q_linear_slack", 1.1},
                            {"envelope_tolerance", 0.15},
                            {"violation_se_multiple", 3.0},
                            {"noise_truncation_sigmas", kNoiseTruncation}};

    std::vector<std::string> inconclusive;
    if (problem.noise_flagged) inconclusive.push_back("noise constant c_hat is not positive; certification skipped");

    if (stages.certify && !problem.noise_flagged) {
        const double alpha = cfg.regularity.alpha.value_or(problem.alpha);
        CertifyOptions opts;
        opts.bootstrap_resamples = cfg.regularity.bootstrap;
        opts.workers = cfg.engine.workers;
        opts.eps_bound = problem.eps_bound;
        const RegularityReport reg = certify_afne_expectation(problem.map, alpha, problem.sampler, cfg.regularity.n_pairs,
                                                              cfg.regularity.n_xi, cfg.engine.seed, opts);
        report["regularity"] = to_json(reg);
    }

    if (stages.simulate || stages.diagnostics) {
        EnsembleConfig ec_cfg;
        ec_cfg.n_chains = cfg.engine.n_chains;
        ec_cfg.n_iters = cfg.engine.n_iters;
        ec_cfg.seed = cfg.engine.seed;
        ec_cfg.snapshot_every = cfg.engine.snapshot_every;
        ec_cfg.burn_in = cfg.engine.burn_in;
        if (cfg.engine.initial.type == "delta")
            ec_cfg.initial = DeltaStart{to_point(cfg.engine.initial.point)};
        else
            ec_cfg.initial = GaussianCloudStart{to_point(cfg.engine.initial.point), cfg.engine.initial.sigma};
        const EnsembleRun run = simulate(problem.map, ec_cfg, {cfg.engine.workers});

        std::vector<double> mean_residual;
        if (stages.simulate) {
            std::vector<std::vector<std::string>> rows;
            for (const auto& s : run.residual_stats) {
                mean_residual.push_back(s.mean);
                rows.push_back({format_number(s.k), format_number(s.mean), format_number(s.p10), format_number(s.p50),
                                format_number(s.p90)});
            }
            write_csv((out_dir / "residuals.csv").string(), {"k", "mean_residual", "p10", "p50", "p90"}, rows);

            const std::size_t first = cfg.engine.n_iters / 5;
            std::vector<double> tail;
            tail.reserve((cfg.engine.n_iters - first) * cfg.engine.n_chains);
            for (std::size_t k = first; k < cfg.engine.n_iters; ++k)
                for (Index c = 0; c < run.residuals.cols(); ++c) tail.push_back(run.residuals(static_cast<Index>(k), c));
            const Histogram h = residual_histogram(tail, cfg.diagnostics.histogram_bins);
            rows.clear();
            std::size_t nonempty = 0;
            for (std::size_t b = 0; b < h.count.size(); ++b) {
                rows.push_back({format_number(h.lo[b]), format_number(h.hi[b]), format_number(h.count[b])});
                if (h.count[b] > 0) ++nonempty;
            }
            write_csv((out_dir / "histogram.csv").string(), {"bin_lo", "bin_hi", "count"}, rows);

            const PlateauReport pl = analyze_plateau(mean_residual, cfg);
            json plateau = {{"k", pl.k ? json(*pl.k) : json(nullptr)},
                            {"level", pl.k ? json(pl.level) : json(nullptr)},
                            {"noise_scale", optional_json(pl.noise_scale)},
                            {"level_over_noise_scale",
                             pl.k && pl.noise_scale ? json(pl.level / *pl.noise_scale) : json(nullptr)},
                            {"phase", pl.phase ? to_json(*pl.phase) : json(nullptr)},
                            {"rule", "first k where the 20-step moving average of mean_residual changes by < 1% over 50 steps"},
                            {"histogram_nonempty_bins", nonempty}};
            report["plateau"] = plateau;

            const BoundednessReport b = boundedness_monitor(run);
            report["boundedness"] = {{"bounded", b.bounded}, {"m_hat", b.m_hat}, {"slope", b.slope}, {"median", b.median}};

            if (cfg.scenario == Scenario::involution) {
                rows.clear();
                const std::size_t kmax = std::min(cfg.diagnostics.cesaro_k_max, cfg.engine.n_iters);
                for (std::size_t k = 1; k <= kmax; ++k) {
                    const EmpiricalMeasure nu = cesaro_average(run, k);
                    std::vector<std::pair<double, double>> atoms;
                    for (Index i = 0; i < nu.size(); ++i) atoms.emplace_back(nu.points()(0, i), nu.weights()[i]);
                    std::sort(atoms.begin(), atoms.end());
                    for (std::size_t i = 0; i < atoms.size();) {
                        std::size_t j = i;
                        std::size_t count = 0;
                        while (j < atoms.size() && atoms[j].first == atoms[i].first) {
                            ++count;
                            ++j;
                        }
                        // uniform pool: mass is an exact ratio of counts
                        const double mass = static_cast<double>(count) / static_cast<double>(nu.size());
                        rows.push_back({format_number(k), format_number(atoms[i].first), format_number(mass)});
                        i = j;
                    }
                }
                write_csv((out_dir / "cesaro.csv").string(), {"k", "value", "mass"}, rows);
            }
        }

        if (stages.diagnostics) {
            const EmpiricalMeasure pi_hat = estimate_invariant(run, static_cast<Index>(cfg.diagnostics.pi_hat_cap));
            TraceOptions topts;
            topts.stride = cfg.diagnostics.every;
            topts.k_max = cfg.diagnostics.k_max;
            topts.n_xi = cfg.diagnostics.n_xi;
            topts.seed = cfg.engine.seed;
            topts.workers = cfg.engine.workers;
            topts.cloud_cap = static_cast<Index>(cfg.diagnostics.cloud_cap);
            const std::vector<TraceRow> trace = transport_trace(problem.map, run, pi_hat, topts);

            std::vector<std::vector<std::string>> rows;
            std::vector<std::pair<std::size_t, double>> dists;
            std::vector<double> psi, steps, to_inv;
            for (const auto& r : trace) {
                rows.push_back({format_number(r.k), format_number(r.w2_to_pi), format_number(r.psi)});
                dists.emplace_back(r.k, r.w2_to_pi);
                psi.push_back(r.psi);
                steps.push_back(std::isfinite(r.w2_step) ? r.w2_step : 0.0);
                to_inv.push_back(r.w2_to_pi);
            }
            write_csv((out_dir / "w2_trace.csv").string(), {"k", "w2_to_pi_hat", "psi_hat"}, rows);

            try {
                report["rates"] = to_json(fit_rate(dists, cfg.diagnostics.rate_floor));
            } catch (const InconclusiveError& e) {
                report["rates"] = nullptr;
                inconclusive.push_back(e.what());
            }

            // contraction ratio: from the noise constants when known, otherwise sampled
            double ratio = problem.ratio_bound.value_or(std::numeric_limits<double>::quiet_NaN());
            if (!problem.ratio_bound && !problem.noise_flagged)
                ratio = estimate_contraction_ratio(problem.map, problem.sampler, cfg.regularity.n_pairs,
                                                   cfg.regularity.n_xi, cfg.engine.seed, cfg.engine.workers);
            SubregularityResult probe = subregularity_check(psi, steps, to_inv, LinearGauge{1.0, 0.5, 0.0});
            json sub;
            if (probe.inconclusive) {
                inconclusive.push_back("subregularity: " + probe.note);
                sub = {{"holds", false}, {"inconclusive", true}, {"note", probe.note}};
            } else {
                LinearGauge gauge{0.0, 0.5, 0.0};
                std::string source;
                if (ratio < 1.0 && probe.q_hat > 0.0) {
                    gauge = {2.0 / (probe.q_hat * (1.0 - ratio)), contraction_alpha(ratio), 0.0};
                    source = "kappa = 2/(q_hat (1 - r)): factor 2 over the contraction gauge (q (1 - r))^-1";
                } else {
                    const double lo = linear_gauge_window(gauge.alpha, gauge.eps).first;
                    gauge.kappa = std::isfinite(probe.kappa_hat) ? std::max(probe.kappa_hat, lo) : lo;
                    source = "no contraction ratio below 1; kappa taken from the observed trajectory";
                }
                const SubregularityResult sr = subregularity_check(psi, steps, to_inv, gauge);
                sub = {{"holds", sr.holds},
                       {"inconclusive", false},
                       {"q_hat", sr.q_hat},
                       {"kappa_hat", std::isfinite(sr.kappa_hat) ? json(sr.kappa_hat) : json(nullptr)},
                       {"gauge_kappa", gauge.kappa},
                       {"gauge_alpha", gauge.alpha},
                       {"gauge_eps", gauge.eps},
                       {"contraction_ratio", std::isfinite(ratio) ? json(ratio) : json(nullptr)},
                       {"steps_used", sr.n_used},
                       {"gauge_source", source},
                       {"note", sr.note},
                       {"sampling_slack", "W2 and Psi are computed on clouds thinned to " +
                                              std::to_string(cfg.diagnostics.cloud_cap) + " atoms against pi_hat with " +
                                              std::to_string(pi_hat.size()) + " atoms; Psi uses " +
                                              std::to_string(cfg.diagnostics.n_xi) + " shared draws"}};
            }
            report["subregularity"] = sub;

            // Psi at the invariant estimate versus two halves of the final cloud
            const EmpiricalMeasure& final_cloud = run.final_cloud();
            const Index half = final_cloud.size() / 2;
            if (half >= 1) {
                Matrix even(final_cloud.dim(), half), odd(final_cloud.dim(), half);
                for (Index i = 0; i < half; ++i) {
                    even.col(i) = final_cloud.points().col(2 * i);
                    odd.col(i) = final_cloud.points().col(2 * i + 1);
                }
                const Index cap = static_cast<Index>(cfg.diagnostics.cloud_cap);
                const auto at_pi = markov_discrepancy(problem.map, final_cloud.thinned(cap), pi_hat,
                                                      cfg.diagnostics.n_xi, cfg.engine.seed);
                const auto floor = markov_discrepancy(problem.map, EmpiricalMeasure::uniform(std::move(even)).thinned(cap),
                                                      EmpiricalMeasure::uniform(std::move(odd)).thinned(cap),
                                                      cfg.diagnostics.n_xi, cfg.engine.seed);
                report["psi_at_pi_hat"] = {{"value", at_pi.value},
                                           {"std_error", at_pi.std_error},
                                           {"monte_carlo_floor", floor.value},
                                           {"floor_definition", "Psi between the even and odd halves of the final cloud"}};
            }
        }
    }

    if (inconclusive.empty()) {
        result.status = "ok";
        result.exit_code = kExitOk;
    } else {
        result.status = "inconclusive: " + inconclusive.front();
        for (std::size_t i = 1; i < inconclusive.size(); ++i) result.status += "; " + inconclusive[i];
        result.exit_code = kExitInconclusive;
    }
    report["status"] = result.status;
    report["exit_code"] = result.exit_code;
    write_json(out_dir / "report.json", report);
    return result;
}

} // namespace rfi::app
