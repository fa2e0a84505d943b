#pragma once

#include "rfi/error.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rfi::app {

/// Malformed or out-of-range configuration; the message names the line or field.
class ConfigError : public Error {
public:
    using Error::Error;
};

enum class Scenario { fig1_cyclic, noisy_hyperplane, sgd_strongly_convex, stochastic_dr_affine, involution, custom };

std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& name);

struct InitialSpec {
    std::string type = "gaussian"; // "gaussian" or "delta"
    std::vector<double> point;     // mean or location, resolved to length n
    double sigma = 1.0;
    friend bool operator==(const InitialSpec&, const InitialSpec&) = default;
};

struct EngineSpec {
    std::size_t n_chains = 2000;
    std::size_t n_iters = 3000;
    std::uint64_t seed = 42;
    std::size_t snapshot_every = 1;
    std::size_t burn_in = 600;
    unsigned workers = 1;
    InitialSpec initial;
    friend bool operator==(const EngineSpec&, const EngineSpec&) = default;
};

struct RegularitySpec {
    std::optional<double> alpha; // unset: scenario default
    std::size_t n_pairs = 200;
    std::size_t n_xi = 50;
    double radius = 1.0;
    std::size_t bootstrap = 200;
    friend bool operator==(const RegularitySpec&, const RegularitySpec&) = default;
};

struct DiagnosticsSpec {
    std::size_t n_xi = 16;
    std::size_t every = 1;
    std::size_t k_max = 0;
    std::size_t pi_hat_cap = 250;
    std::size_t cloud_cap = 500;
    double rate_floor = 1e-9;
    std::size_t n_mc = 100000;
    std::size_t cesaro_k_max = 100;
    std::size_t histogram_bins = 40;
    friend bool operator==(const DiagnosticsSpec&, const DiagnosticsSpec&) = default;
};

/// Map of the custom scenario.
struct MapSpec {
    std::string type = "identity"; // identity, scale, hyperplane, noisy_hyperplane
    double factor = 1.0;
    std::vector<double> normal;
    double offset = 0.0;
    friend bool operator==(const MapSpec&, const MapSpec&) = default;
};

struct ScenarioConfig {
    Scenario scenario = Scenario::fig1_cyclic;
    std::size_t m = 50;
    std::size_t n = 60;
    double sigma_dir = 0.0;
    double sigma_off = 1e-8;
    EngineSpec engine;
    std::optional<double> step;
    RegularitySpec regularity;
    DiagnosticsSpec diagnostics;
    MapSpec map;
    std::string output_dir = "out";
    friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// Strict parse: unknown keys, wrong types and out-of-range values throw
/// ConfigError. Missing fields take scenario-dependent defaults.
ScenarioConfig parse_config(const nlohmann::ordered_json& doc);
ScenarioConfig parse_config_text(const std::string& text);
ScenarioConfig parse_config_file(const std::string& path);

/// Defaults for a scenario with nothing specified.
ScenarioConfig default_config(Scenario s);

/// Fully resolved document; parse_config(to_json(c)) == c.
nlohmann::ordered_json to_json(const ScenarioConfig& c);

/// Closest candidate within edit distance 2, or empty.
std::string suggest_key(const std::string& key, const std::vector<std::string>& candidates);

} // namespace rfi::app
