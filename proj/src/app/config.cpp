#include "rfi/app/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace rfi::app {

using json = nlohmann::ordered_json;

namespace {

const std::vector<std::pair<Scenario, std::string>> kScenarioNames = {
    {Scenario::fig1_cyclic, "fig1_cyclic"},
    {Scenario::noisy_hyperplane, "noisy_hyperplane"},
    {Scenario::sgd_strongly_convex, "sgd_strongly_convex"},
    {Scenario::stochastic_dr_affine, "stochastic_dr_affine"},
    {Scenario::involution, "involution"},
    {Scenario::custom, "custom"},
};

std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

[[noreturn]] void fail(const std::string& path, const std::string& msg) { throw ConfigError(path + ": " + msg); }

/// Walks one JSON object, rejecting keys outside `allowed`.
class Section {
public:
    Section(const json& doc, std::string path, std::vector<std::string> allowed)
        : doc_(doc), path_(std::move(path)) {
        if (!doc_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
        for (const auto& [key, _] : doc_.items()) {
            if (std::find(allowed.begin(), allowed.end(), key) != allowed.end()) continue;
            std::string msg = "unknown key \"" + key + "\"";
            const std::string hint = suggest_key(key, allowed);
            if (!hint.empty()) msg += "; did you mean \"" + hint + "\"?";
            fail(join(path_, key), msg);
        }
    }

    bool has(const std::string& key) const { return doc_.contains(key) && !doc_.at(key).is_null(); }
    const json& at(const std::string& key) const { return doc_.at(key); }
    std::string path(const std::string& key) const { return join(path_, key); }

    void number(const std::string& key, double& out) const {
        if (!has(key)) return;
        const json& v = doc_.at(key);
        if (!v.is_number()) fail(path(key), "expected a number");
        out = v.get<double>();
        if (!std::isfinite(out)) fail(path(key), "must be finite");
    }
    void number(const std::string& key, std::optional<double>& out) const {
        if (!has(key)) return;
        double v = 0.0;
        number(key, v);
        out = v;
    }
    template <class Int>
    void integer(const std::string& key, Int& out, std::uint64_t lo) const {
        if (!has(key)) return;
        const json& v = doc_.at(key);
        if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
            fail(path(key), "expected a nonnegative integer");
        const auto u = v.get<std::uint64_t>();
        if (u < lo) fail(path(key), "must be >= " + std::to_string(lo));
        if (u > static_cast<std::uint64_t>(std::numeric_limits<Int>::max())) fail(path(key), "value too large");
        out = static_cast<Int>(u);
    }
    void string(const std::string& key, std::string& out) const {
        if (!has(key)) return;
        if (!doc_.at(key).is_string()) fail(path(key), "expected a string");
        out = doc_.at(key).get<std::string>();
    }
    /// Array of numbers, or a single number broadcast later.
    void vector(const std::string& key, std::vector<double>& out, bool& scalar) const {
        scalar = false;
        if (!has(key)) return;
        const json& v = doc_.at(key);
        if (v.is_number()) {
            out = {v.get<double>()};
            scalar = true;
        } else if (v.is_array()) {
            out.clear();
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (!v[i].is_number()) fail(path(key) + "[" + std::to_string(i) + "]", "expected a number");
                out.push_back(v[i].get<double>());
            }
        } else {
            fail(path(key), "expected a number or an array of numbers");
        }
        for (double e : out)
            if (!std::isfinite(e)) fail(path(key), "entries must be finite");
    }

private:
    const json& doc_;
    std::string path_;
};

void require(bool ok, const std::string& path, const std::string& msg) {
    if (!ok) fail(path, msg);
}

} // namespace

std::string to_string(Scenario s) {
    for (const auto& [v, name] : kScenarioNames)
        if (v == s) return name;
    return "unknown";
}

Scenario scenario_from_string(const std::string& name) {
    std::vector<std::string> names;
    for (const auto& [v, n] : kScenarioNames) {
        if (n == name) return v;
        names.push_back(n);
    }
    std::string msg = "unknown scenario \"" + name + "\"";
    const std::string hint = suggest_key(name, names);
    if (!hint.empty()) msg += "; did you mean \"" + hint + "\"?";
    throw ConfigError("scenario: " + msg);
}

std::string suggest_key(const std::string& key, const std::vector<std::string>& candidates) {
    std::string best;
    std::size_t best_d = 3;
    for (const auto& c : candidates) {
        const std::size_t d = edit_distance(key, c);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

ScenarioConfig default_config(Scenario s) {
    ScenarioConfig c;
    c.scenario = s;
    switch (s) {
    case Scenario::fig1_cyclic:
        c.m = 50;
        c.n = 60;
        c.sigma_dir = 0.0;
        c.sigma_off = 1e-8;
        c.diagnostics.every = 10;
        c.diagnostics.n_xi = 4;
        c.diagnostics.cloud_cap = 200;
        break;
    case Scenario::noisy_hyperplane:
        c.m = 1;
        c.n = 10;
        c.sigma_dir = 2.0;
        c.sigma_off = 0.0;
        break;
    case Scenario::sgd_strongly_convex:
        c.m = 5;
        c.n = 10;
        c.sigma_dir = c.sigma_off = 0.0;
        break;
    case Scenario::stochastic_dr_affine:
        c.m = 3;
        c.n = 10;
        c.sigma_dir = c.sigma_off = 0.0;
        break;
    case Scenario::involution:
        c.m = 1;
        c.n = 1;
        c.sigma_dir = c.sigma_off = 0.0;
        c.engine.initial = {"delta", {1.0}, 1.0};
        break;
    case Scenario::custom:
        c.m = 1;
        c.n = 2;
        c.sigma_dir = c.sigma_off = 0.0;
        break;
    }
    c.engine.burn_in = c.engine.n_iters / 5;
    if (c.engine.initial.point.empty()) c.engine.initial.point.assign(c.n, 0.0);
    return c;
}

ScenarioConfig parse_config(const json& doc) {
    Section root(doc, "", {"scenario", "dims", "noise", "engine", "step", "regularity", "diagnostics", "map",
                           "output_dir"});
    if (!root.has("scenario")) fail("scenario", "required");
    std::string name;
    root.string("scenario", name);
    ScenarioConfig c = default_config(scenario_from_string(name));

    if (root.has("dims")) {
        Section dims(root.at("dims"), "dims", {"m", "n"});
        dims.integer("m", c.m, 1);
        dims.integer("n", c.n, 1);
    }
    // custom maps carry their own dimension
    std::vector<double> normal;
    if (root.has("map")) {
        Section map(root.at("map"), "map", {"type", "factor", "normal", "offset"});
        map.string("type", c.map.type);
        const std::vector<std::string> types = {"identity", "scale", "hyperplane", "noisy_hyperplane"};
        if (std::find(types.begin(), types.end(), c.map.type) == types.end()) {
            std::string msg = "unknown map type \"" + c.map.type + "\"";
            const std::string hint = suggest_key(c.map.type, types);
            if (!hint.empty()) msg += "; did you mean \"" + hint + "\"?";
            fail("map.type", msg);
        }
        map.number("factor", c.map.factor);
        bool scalar = false;
        map.vector("normal", c.map.normal, scalar);
        require(!scalar, "map.normal", "expected an array");
        map.number("offset", c.map.offset);
        if (!c.map.normal.empty() && !(root.has("dims") && root.at("dims").contains("n")))
            c.n = c.map.normal.size();
    }
    if (root.has("noise")) {
        Section noise(root.at("noise"), "noise", {"sigma_dir", "sigma_off"});
        noise.number("sigma_dir", c.sigma_dir);
        noise.number("sigma_off", c.sigma_off);
        require(c.sigma_dir >= 0.0, "noise.sigma_dir", "must be >= 0");
        require(c.sigma_off >= 0.0, "noise.sigma_off", "must be >= 0");
    }

    bool burn_in_given = false;
    bool point_scalar = false;
    bool point_given = false;
    if (root.has("engine")) {
        Section eng(root.at("engine"), "engine",
                    {"n_chains", "n_iters", "seed", "snapshot_every", "burn_in", "workers", "initial"});
        eng.integer("n_chains", c.engine.n_chains, 1);
        eng.integer("n_iters", c.engine.n_iters, 1);
        eng.integer("seed", c.engine.seed, 0);
        eng.integer("snapshot_every", c.engine.snapshot_every, 1);
        burn_in_given = eng.has("burn_in");
        eng.integer("burn_in", c.engine.burn_in, 0);
        eng.integer("workers", c.engine.workers, 1);
        require(c.engine.workers <= 1024, "engine.workers", "must be <= 1024");
        if (eng.has("initial")) {
            const json& init = eng.at("initial");
            std::string type = c.engine.initial.type;
            if (init.is_object() && init.contains("type")) {
                Section probe(init, "engine.initial", {"type", "mean", "sigma", "x"});
                probe.string("type", type);
            }
            if (type == "gaussian") {
                Section s(init, "engine.initial", {"type", "mean", "sigma"});
                if (c.engine.initial.type != "gaussian") c.engine.initial = InitialSpec{};
                point_given = s.has("mean");
                s.vector("mean", c.engine.initial.point, point_scalar);
                s.number("sigma", c.engine.initial.sigma);
                require(c.engine.initial.sigma >= 0.0, "engine.initial.sigma", "must be >= 0");
            } else if (type == "delta") {
                Section s(init, "engine.initial", {"type", "x"});
                if (c.engine.initial.type != "delta") c.engine.initial = InitialSpec{"delta", {}, 0.0};
                point_given = s.has("x");
                s.vector("x", c.engine.initial.point, point_scalar);
            } else {
                std::string msg = "unknown initial type \"" + type + "\"";
                const std::string hint = suggest_key(type, {"gaussian", "delta"});
                if (!hint.empty()) msg += "; did you mean \"" + hint + "\"?";
                fail("engine.initial.type", msg);
            }
        }
    }
    if (!burn_in_given) c.engine.burn_in = c.engine.n_iters / 5;
    require(c.engine.burn_in < c.engine.n_iters, "engine.burn_in", "must be < engine.n_iters");

    auto& pt = c.engine.initial.point;
    if (point_scalar) {
        pt.assign(c.n, pt.front());
    } else if (!point_given && pt.size() != c.n) {
        // defaults follow the resolved dimension
        const double fill = pt.empty() ? 0.0 : pt.front();
        pt.assign(c.n, fill);
    }
    require(pt.size() == c.n, c.engine.initial.type == "delta" ? "engine.initial.x" : "engine.initial.mean",
            "expected " + std::to_string(c.n) + " entries, got " + std::to_string(pt.size()));

    root.number("step", c.step);
    if (c.step) require(*c.step > 0.0, "step", "must be > 0");

    if (root.has("regularity")) {
        Section reg(root.at("regularity"), "regularity", {"alpha", "n_pairs", "n_xi", "radius", "bootstrap"});
        reg.number("alpha", c.regularity.alpha);
        if (c.regularity.alpha)
            require(*c.regularity.alpha > 0.0 && *c.regularity.alpha < 1.0, "regularity.alpha", "must lie in (0, 1)");
        reg.integer("n_pairs", c.regularity.n_pairs, 1);
        reg.integer("n_xi", c.regularity.n_xi, 1);
        reg.number("radius", c.regularity.radius);
        require(c.regularity.radius > 0.0, "regularity.radius", "must be > 0");
        reg.integer("bootstrap", c.regularity.bootstrap, 2);
    }
    if (root.has("diagnostics")) {
        Section d(root.at("diagnostics"), "diagnostics",
                  {"n_xi", "every", "k_max", "pi_hat_cap", "cloud_cap", "rate_floor", "n_mc", "cesaro_k_max",
                   "histogram_bins"});
        d.integer("n_xi", c.diagnostics.n_xi, 1);
        d.integer("every", c.diagnostics.every, 1);
        d.integer("k_max", c.diagnostics.k_max, 0);
        d.integer("pi_hat_cap", c.diagnostics.pi_hat_cap, 1);
        d.integer("cloud_cap", c.diagnostics.cloud_cap, 1);
        d.number("rate_floor", c.diagnostics.rate_floor);
        require(c.diagnostics.rate_floor >= 0.0, "diagnostics.rate_floor", "must be >= 0");
        d.integer("n_mc", c.diagnostics.n_mc, 1000);
        d.integer("cesaro_k_max", c.diagnostics.cesaro_k_max, 1);
        d.integer("histogram_bins", c.diagnostics.histogram_bins, 1);
    }
    root.string("output_dir", c.output_dir);
    require(!c.output_dir.empty(), "output_dir", "must not be empty");

    switch (c.scenario) {
    case Scenario::involution:
        require(c.n == 1, "dims.n", "the involution scenario is one-dimensional");
        require(c.engine.snapshot_every == 1, "engine.snapshot_every", "Cesaro averages need every step (set 1)");
        break;
    case Scenario::stochastic_dr_affine:
        require(c.n >= 3, "dims.n", "must be >= 3 (each subspace has codimension 2)");
        break;
    case Scenario::custom:
        if (c.map.type == "hyperplane" || c.map.type == "noisy_hyperplane") {
            require(!c.map.normal.empty(), "map.normal", "required for map type " + c.map.type);
            require(c.map.normal.size() == c.n, "map.normal",
                    "expected " + std::to_string(c.n) + " entries, got " + std::to_string(c.map.normal.size()));
            double nn = 0.0;
            for (double e : c.map.normal) nn += e * e;
            require(nn > 0.0, "map.normal", "must be nonzero");
        }
        break;
    default:
        break;
    }
    if (c.scenario != Scenario::custom && root.has("map")) fail("map", "only allowed with scenario \"custom\"");
    return c;
}

ScenarioConfig parse_config_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        // nlohmann reports byte offsets; convert to a line number
        const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
        throw ConfigError("line " + std::to_string(line) + ": malformed document: " + e.what());
    }
    return parse_config(doc);
}

ScenarioConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config_text(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

json to_json(const ScenarioConfig& c) {
    json j;
    j["scenario"] = to_string(c.scenario);
    j["dims"] = {{"m", c.m}, {"n", c.n}};
    j["noise"] = {{"sigma_dir", c.sigma_dir}, {"sigma_off", c.sigma_off}};
    json init;
    init["type"] = c.engine.initial.type;
    if (c.engine.initial.type == "gaussian") {
        init["mean"] = c.engine.initial.point;
        init["sigma"] = c.engine.initial.sigma;
    } else {
        init["x"] = c.engine.initial.point;
    }
    j["engine"] = {{"n_chains", c.engine.n_chains},     {"n_iters", c.engine.n_iters},
                   {"seed", c.engine.seed},             {"snapshot_every", c.engine.snapshot_every},
                   {"burn_in", c.engine.burn_in},       {"workers", c.engine.workers},
                   {"initial", init}};
    j["step"] = c.step ? json(*c.step) : json(nullptr);
    j["regularity"] = {{"alpha", c.regularity.alpha ? json(*c.regularity.alpha) : json(nullptr)},
                       {"n_pairs", c.regularity.n_pairs},
                       {"n_xi", c.regularity.n_xi},
                       {"radius", c.regularity.radius},
                       {"bootstrap", c.regularity.bootstrap}};
    j["diagnostics"] = {{"n_xi", c.diagnostics.n_xi},
                        {"every", c.diagnostics.every},
                        {"k_max", c.diagnostics.k_max},
                        {"pi_hat_cap", c.diagnostics.pi_hat_cap},
                        {"cloud_cap", c.diagnostics.cloud_cap},
                        {"rate_floor", c.diagnostics.rate_floor},
                        {"n_mc", c.diagnostics.n_mc},
                        {"cesaro_k_max", c.diagnostics.cesaro_k_max},
                        {"histogram_bins", c.diagnostics.histogram_bins}};
    if (c.scenario == Scenario::custom)
        j["map"] = {{"type", c.map.type}, {"factor", c.map.factor}, {"normal", c.map.normal}, {"offset", c.map.offset}};
    j["output_dir"] = c.output_dir;
    return j;
}

} // namespace rfi::app
