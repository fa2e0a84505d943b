#include "rfi/app/config.hpp"
#include "rfi/app/csv.hpp"
#include "rfi/app/scenarios.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

using namespace rfi;
using namespace rfi::app;

namespace {

struct Common {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
    auto* opt = cmd->add_option("--config", c.config, "JSON config file");
    if (config_required) opt->required();
    cmd->add_option("--out", c.out, "output directory (overrides output_dir)");
    cmd->add_option("--seed", c.seed, "master seed (overrides engine.seed)");
    cmd->add_option("--workers", c.workers, "worker threads (overrides engine.workers)")->check(CLI::Range(1u, 1024u));
}

ScenarioConfig load(const Common& c, std::optional<Scenario> scenario) {
    ScenarioConfig cfg = c.config.empty() ? default_config(*scenario) : parse_config_file(c.config);
    if (scenario && cfg.scenario != *scenario)
        throw ConfigError("scenario: config names \"" + to_string(cfg.scenario) + "\" but the command asks for \"" +
                          to_string(*scenario) + "\"");
    if (!c.out.empty()) cfg.output_dir = c.out;
    if (c.seed) cfg.engine.seed = *c.seed;
    if (c.workers) cfg.engine.workers = *c.workers;
    // overrides go back through the validator
    return parse_config(to_json(cfg));
}

int run(const ScenarioConfig& cfg, Stages stages) {
    const ScenarioResult res = run_scenario(cfg, stages);
    std::cout << to_string(cfg.scenario) << ": " << res.status << " (" << cfg.output_dir << ")\n";
    return res.exit_code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random function iterations: simulation, regularity certification and transport diagnostics"};
    app.require_subcommand(1);

    Common simulate_opts, certify_opts, rates_opts, scenario_opts;
    auto* simulate_cmd = app.add_subcommand("simulate", "run the ensemble and write residual statistics");
    add_common(simulate_cmd, simulate_opts, true);
    auto* certify_cmd = app.add_subcommand("certify", "estimate the violation of alpha-firm nonexpansiveness in expectation");
    add_common(certify_cmd, certify_opts, true);
    auto* rates_cmd = app.add_subcommand("rates", "W2 / Psi traces, rate fit and subregularity check");
    add_common(rates_cmd, rates_opts, true);

    auto* scenario_cmd = app.add_subcommand("scenario", "run every stage of a named scenario");
    std::string scenario_name;
    scenario_cmd->add_option("name", scenario_name, "fig1_cyclic, noisy_hyperplane, sgd_strongly_convex, "
                                                    "stochastic_dr_affine, involution or custom")
        ->required();
    add_common(scenario_cmd, scenario_opts, false);

    auto* distance_cmd = app.add_subcommand("distance", "W2 and Prokhorov distance between two point-cloud CSV files");
    std::string cloud_a, cloud_b, distance_out;
    distance_cmd->add_option("first", cloud_a, "first cloud")->required()->check(CLI::ExistingFile);
    distance_cmd->add_option("second", cloud_b, "second cloud")->required()->check(CLI::ExistingFile);
    distance_cmd->add_option("--out", distance_out, "directory for distance.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*simulate_cmd) return run(load(simulate_opts, std::nullopt), {true, false, false});
        if (*certify_cmd) return run(load(certify_opts, std::nullopt), {false, true, false});
        if (*rates_cmd) return run(load(rates_opts, std::nullopt), {false, false, true});
        if (*scenario_cmd) return run(load(scenario_opts, scenario_from_string(scenario_name)), {});
        if (*distance_cmd) {
            const EmpiricalMeasure mu = read_cloud_csv(cloud_a);
            const EmpiricalMeasure nu = read_cloud_csv(cloud_b);
            if (mu.dim() != nu.dim()) throw DimensionError("second cloud", mu.dim(), nu.dim());
            nlohmann::ordered_json j = {{"w2", wasserstein2(mu, nu).w2}, {"prokhorov", prokhorov(mu, nu)}};
            std::cout << j.dump(2) << "\n";
            if (!distance_out.empty()) {
                std::filesystem::create_directories(distance_out);
                std::ofstream(std::filesystem::path(distance_out) / "distance.json") << j.dump(2) << "\n";
            }
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DimensionError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DomainError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const InconclusiveError& e) {
        std::cerr << "inconclusive: " << e.what() << "\n";
        return kExitInconclusive;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
