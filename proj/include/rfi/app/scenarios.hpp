#pragma once

#include "rfi/app/config.hpp"
#include "rfi/diagnostics.hpp"
#include "rfi/regularity.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace rfi::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitInconclusive = 4;

/// A scenario's random map together with what is known about it in closed form.
struct Problem {
    RandomMap map;
    PairSampler sampler;
    double alpha;                        // default certification constant
    std::optional<double> eps_bound;     // closed-form violation bound
    std::optional<double> ratio_bound;   // contraction ratio known from the noise constants
    std::vector<random_maps::NoiseConstants> noise;
    bool noise_flagged = false;
    std::optional<double> step;          // resolved step length (sgd)
    nlohmann::ordered_json info;
};

Problem build_problem(const ScenarioConfig& cfg);

struct Histogram {
    std::vector<double> lo;
    std::vector<double> hi;
    std::vector<std::size_t> count;
};

/// Log-spaced bins between the smallest positive and the largest value when
/// they span more than a decade, linear bins otherwise. Zeros land in the
/// first bin, whose lower edge is then 0.
Histogram residual_histogram(const std::vector<double>& values, std::size_t bins);

struct PlateauReport {
    std::optional<std::size_t> k;
    double level = 0.0;
    std::optional<double> noise_scale; // sigma_off sqrt(m)
    std::optional<RateReport> phase;   // fit of mean residuals up to the plateau
};

/// Plateau of the mean residual trace, using a 20-step moving average compared 50 steps back.
PlateauReport analyze_plateau(const std::vector<double>& mean_residual, const ScenarioConfig& cfg);

struct Stages {
    bool simulate = true;
    bool certify = true;
    bool diagnostics = true;
};

struct ScenarioResult {
    int exit_code = kExitOk;
    std::string status;
    nlohmann::ordered_json report;
};

/// Runs the requested stages and writes CSVs plus report.json into cfg.output_dir.
ScenarioResult run_scenario(const ScenarioConfig& cfg, Stages stages = {});

} // namespace rfi::app
