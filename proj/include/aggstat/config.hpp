#ifndef AGGSTAT_CONFIG_HPP
#define AGGSTAT_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "aggstat/design.hpp"
#include "aggstat/errors.hpp"
#include "aggstat/model.hpp"
#include "aggstat/montecarlo.hpp"
#include "aggstat/random.hpp"

namespace aggstat {

// Substream reserved for randomized design construction, far above any
// replicate index so experiment draws never overlap design draws. Swept
// coinflip designs use kDesignSubstream + n.
inline constexpr std::uint64_t kDesignSubstream = 1ULL << 63;

struct DesignConfig {
    enum class Source { SizeOnly, Balanced, Biased, Coinflip, Matrix };
    Source source = Source::SizeOnly;
    std::int64_t n = 0;
    double p = 0.0;
    std::vector<std::vector<std::int64_t>> counts;
};

struct OutputConfig {
    std::string format = "csv"; // csv | json
    std::string path;           // empty = standard output
};

struct RunConfig {
    PopulationSpec population;
    ExperimentKind kind = ExperimentKind::PerItemWeighings;
    std::uint64_t replicates = 0;
    std::uint64_t seed = 0;
    DesignConfig design;
    std::vector<std::int64_t> sweep_n; // empty unless the manifest has a sweep block
    OutputConfig output;
};

namespace detail {

inline const nlohmann::json& require_key(const nlohmann::json& j, const char* key,
                                         const char* where) {
    const auto it = j.find(key);
    if (it == j.end())
        throw ConfigError(std::string("config: missing '") + key + "' in " + where);
    return *it;
}

template <typename T>
T get_as(const nlohmann::json& j, const char* what) {
    try {
        return j.get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("config: ") + what + " has the wrong type");
    }
}

inline PopulationSpec parse_population(const nlohmann::json& j) {
    const auto& groups = require_key(j, "groups", "population");
    if (!groups.is_array() || groups.empty())
        throw ConfigError("config: population.groups must be a non-empty array");
    PopulationSpec pop;
    for (const auto& g : groups) {
        GroupSpec spec;
        spec.name = get_as<std::string>(require_key(g, "name", "group"), "group name");
        spec.mean_weight = get_as<double>(require_key(g, "mean", "group"), "group mean");
        spec.variance = get_as<double>(require_key(g, "variance", "group"), "group variance");
        pop.groups.push_back(std::move(spec));
    }
    try {
        pop.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return pop;
}

inline DesignConfig parse_design(const nlohmann::json& j, ExperimentKind kind) {
    DesignConfig d;
    if (!j.is_object())
        throw ConfigError("config: design must be an object");
    if (!j.contains("type")) {
        d.source = DesignConfig::Source::SizeOnly;
        d.n = get_as<std::int64_t>(require_key(j, "n", "design"), "design n");
        if (kind == ExperimentKind::MixtureDesign)
            throw ConfigError("config: kind C needs a design type "
                              "(balanced|biased|coinflip|matrix), not a bare n");
        return d;
    }
    if (kind != ExperimentKind::MixtureDesign)
        throw ConfigError("config: kinds A and B take a plain {\"n\": N} design");
    const std::string type = get_as<std::string>(j.at("type"), "design type");
    if (type == "balanced") {
        d.source = DesignConfig::Source::Balanced;
        d.n = get_as<std::int64_t>(require_key(j, "n", "design"), "design n");
    } else if (type == "biased" || type == "coinflip") {
        d.source = type == "biased" ? DesignConfig::Source::Biased
                                    : DesignConfig::Source::Coinflip;
        d.n = get_as<std::int64_t>(require_key(j, "n", "design"), "design n");
        d.p = get_as<double>(require_key(j, "p", "design"), "design p");
    } else if (type == "matrix") {
        d.source = DesignConfig::Source::Matrix;
        d.counts = get_as<std::vector<std::vector<std::int64_t>>>(
            require_key(j, "counts", "design"), "design counts");
    } else {
        throw ConfigError("config: unknown design type '" + type +
                          "' (expected balanced|biased|coinflip|matrix)");
    }
    return d;
}

} // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
    if (!j.is_object())
        throw ConfigError("config: top level must be a JSON object");
    RunConfig cfg;
    cfg.population = detail::parse_population(detail::require_key(j, "population", "config"));

    const auto& exp = detail::require_key(j, "experiment", "config");
    const std::string kind =
        detail::get_as<std::string>(detail::require_key(exp, "kind", "experiment"), "kind");
    if (kind == "A")
        cfg.kind = ExperimentKind::PerItemWeighings;
    else if (kind == "B")
        cfg.kind = ExperimentKind::PairedBaskets;
    else if (kind == "C")
        cfg.kind = ExperimentKind::MixtureDesign;
    else
        throw ConfigError("config: experiment.kind must be \"A\", \"B\", or \"C\"");
    cfg.replicates = detail::get_as<std::uint64_t>(
        detail::require_key(exp, "replicates", "experiment"), "replicates");
    if (cfg.replicates < 1)
        throw ConfigError("config: experiment.replicates must be at least 1");
    if (exp.contains("seed"))
        cfg.seed = detail::get_as<std::uint64_t>(exp.at("seed"), "seed");

    cfg.design = detail::parse_design(detail::require_key(j, "design", "config"), cfg.kind);
    if (cfg.design.source != DesignConfig::Source::Matrix && cfg.design.n < 1)
        throw ConfigError("config: design.n must be at least 1");

    if (j.contains("sweep")) {
        const auto& sweep = j.at("sweep");
        cfg.sweep_n = detail::get_as<std::vector<std::int64_t>>(
            detail::require_key(sweep, "n", "sweep"), "sweep n list");
        if (cfg.sweep_n.empty())
            throw ConfigError("config: sweep.n must be a non-empty array");
        for (std::int64_t n : cfg.sweep_n)
            if (n < 1)
                throw ConfigError("config: sweep.n entries must be positive");
    }

    if (j.contains("output")) {
        const auto& out = j.at("output");
        if (out.contains("format"))
            cfg.output.format = detail::get_as<std::string>(out.at("format"), "output format");
        if (out.contains("path"))
            cfg.output.path = detail::get_as<std::string>(out.at("path"), "output path");
    }
    if (cfg.output.format != "csv" && cfg.output.format != "json")
        throw ConfigError("config: output.format must be \"csv\" or \"json\"");
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("config: cannot read '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config: '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

// Build the concrete channel design a config describes. Coinflip designs
// draw their counts once, from the reserved design substream of the run
// seed, so the realized design is a deterministic function of the config.
inline ChannelDesign realize_design(const DesignConfig& d, std::uint64_t seed,
                                    std::uint64_t design_substream = kDesignSubstream) {
    try {
        switch (d.source) {
        case DesignConfig::Source::SizeOnly:
            return ChannelDesign({{d.n}, {d.n}});
        case DesignConfig::Source::Balanced:
            return balanced_typical(d.n);
        case DesignConfig::Source::Biased:
            return biased_typical(d.n, d.p);
        case DesignConfig::Source::Coinflip: {
            RandomSource rng(seed, design_substream);
            return coinflip_counts(d.n, d.p, rng);
        }
        case DesignConfig::Source::Matrix:
            return ChannelDesign(d.counts);
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    throw ConfigError("config: unknown design source");
}

inline ExperimentSpec experiment_from_config(const RunConfig& cfg) {
    ExperimentSpec spec;
    spec.kind = cfg.kind;
    spec.population = cfg.population;
    spec.replicates = cfg.replicates;
    spec.master_seed = cfg.seed;
    switch (cfg.kind) {
    case ExperimentKind::PerItemWeighings:
        spec.item_count = cfg.design.n;
        break;
    case ExperimentKind::PairedBaskets:
    case ExperimentKind::MixtureDesign:
        spec.design = realize_design(cfg.design, cfg.seed);
        break;
    }
    return spec;
}

// Design-per-n callback for kind C sweeps. Coinflip draws use substream
// kDesignSubstream + n so each size gets its own deterministic design.
inline std::function<ChannelDesign(std::int64_t)> sweep_design_builder(const RunConfig& cfg) {
    if (cfg.kind != ExperimentKind::MixtureDesign)
        return {};
    switch (cfg.design.source) {
    case DesignConfig::Source::Balanced:
        return [](std::int64_t n) { return balanced_typical(n); };
    case DesignConfig::Source::Biased:
        return [p = cfg.design.p](std::int64_t n) { return biased_typical(n, p); };
    case DesignConfig::Source::Coinflip:
        return [p = cfg.design.p, seed = cfg.seed](std::int64_t n) {
            RandomSource rng(seed, kDesignSubstream + static_cast<std::uint64_t>(n));
            return coinflip_counts(n, p, rng);
        };
    default:
        throw ConfigError("config: a fixed matrix design cannot be swept over n");
    }
}

} // namespace aggstat

#endif // AGGSTAT_CONFIG_HPP
