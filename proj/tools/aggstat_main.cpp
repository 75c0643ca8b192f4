// Command-line front end: run seeded experiments, print Fisher/CRB
// analyses, sweep basket sizes, and diagnose channel designs.
//
// Exit codes: 0 success, 2 usage/config error, 3 non-identifiable design.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aggstat/aggstat.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> replicates;
    std::optional<std::string> format;
    std::optional<std::string> out;
    unsigned threads = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("config", args.config_path, "experiment manifest (JSON)")->required();
    cmd->add_option("--seed", args.seed, "override the manifest seed");
    cmd->add_option("--replicates", args.replicates, "override the replicate count");
    cmd->add_option("--format", args.format, "output format: csv or json");
    cmd->add_option("--out", args.out, "write the report to this file instead of stdout");
    cmd->add_option("--threads", args.threads, "worker threads (results identical for any value)")
        ->check(CLI::Range(1u, 512u));
}

aggstat::RunConfig load_with_overrides(const CommonArgs& args) {
    aggstat::RunConfig cfg = aggstat::load_config(args.config_path);
    if (args.seed)
        cfg.seed = *args.seed;
    if (args.replicates) {
        if (*args.replicates < 1)
            throw aggstat::ConfigError("--replicates must be at least 1");
        cfg.replicates = *args.replicates;
    }
    if (args.format) {
        if (*args.format != "csv" && *args.format != "json")
            throw aggstat::ConfigError("--format must be csv or json");
        cfg.output.format = *args.format;
    }
    if (args.out)
        cfg.output.path = *args.out;
    return cfg;
}

void emit(const aggstat::RunConfig& cfg, const std::string& csv,
          const aggstat::ordered_json& json) {
    const std::string text = cfg.output.format == "csv" ? csv : json.dump(2) + "\n";
    if (cfg.output.path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(cfg.output.path, std::ios::binary);
    if (!out)
        throw aggstat::ConfigError("cannot open output file '" + cfg.output.path + "'");
    out << text;
}

int cmd_simulate(const CommonArgs& args) {
    const aggstat::RunConfig cfg = load_with_overrides(args);
    const aggstat::ExperimentSpec spec = aggstat::experiment_from_config(cfg);
    const aggstat::MCSummary summary = aggstat::run_experiment(spec, args.threads);
    emit(cfg, aggstat::summary_csv(summary), aggstat::summary_json(summary));
    return 0;
}

int cmd_sweep(const CommonArgs& args) {
    const aggstat::RunConfig cfg = load_with_overrides(args);
    if (cfg.sweep_n.empty())
        throw aggstat::ConfigError("config: the sweep command needs a sweep.n list");
    const aggstat::ExperimentSpec base = aggstat::experiment_from_config(cfg);
    const auto builder = aggstat::sweep_design_builder(cfg);
    const aggstat::SweepTable table = aggstat::mse_sweep(base, cfg.sweep_n, builder, args.threads);
    emit(cfg, aggstat::sweep_csv(table), aggstat::sweep_json(table));
    return 0;
}

int cmd_crb(const CommonArgs& args) {
    const aggstat::RunConfig cfg = load_with_overrides(args);
    aggstat::CrbAnalysis analysis;
    switch (cfg.kind) {
    case aggstat::ExperimentKind::PerItemWeighings:
        throw aggstat::ConfigError(
            "crb covers the basket models (kinds B and C); per-item weighing has the "
            "plain mean bound v/n");
    case aggstat::ExperimentKind::PairedBaskets: {
        const double v = cfg.population.groups.front().variance;
        if (v <= 0.0)
            throw aggstat::ConfigError("crb: the variance parameter must be positive");
        const std::string label = "variance:" + cfg.population.groups.front().name;
        analysis.fisher.entries = aggstat::Matrix(1, 1);
        analysis.fisher.entries(0, 0) = aggstat::fisher_info_variance(v);
        analysis.fisher.labels = {label};
        analysis.crb.entries = aggstat::Matrix(1, 1);
        analysis.crb.entries(0, 0) = aggstat::crb_variance(v);
        analysis.crb.labels = {label};
        break;
    }
    case aggstat::ExperimentKind::MixtureDesign: {
        const auto [common, v] = cfg.population.common_variance();
        if (!common || v <= 0.0)
            throw aggstat::ConfigError(
                "crb: the two-means model needs a common positive per-item variance");
        std::vector<std::string> labels;
        for (const auto& g : cfg.population.groups)
            labels.push_back("mean:" + g.name);
        const aggstat::ChannelDesign design = aggstat::realize_design(cfg.design, cfg.seed);
        analysis.fisher = aggstat::fisher_info_means(design, v, labels);
        analysis.crb = aggstat::crb_from_fisher(analysis.fisher);
        if (cfg.design.source == aggstat::DesignConfig::Source::Balanced) {
            const double n = static_cast<double>(cfg.design.n);
            aggstat::Matrix closed(2, 2);
            closed(0, 0) = closed(1, 1) = v / 8.0 * (1.0 + 4.0 / n);
            closed(0, 1) = closed(1, 0) = v / 8.0 * (-1.0 + 4.0 / n);
            analysis.closed_form = closed;
        } else if (cfg.design.source == aggstat::DesignConfig::Source::Biased) {
            analysis.closed_form =
                aggstat::crb_biased_typical(cfg.design.n, cfg.design.p, v).entries;
        }
        if (analysis.closed_form) {
            double delta = 0.0;
            for (std::size_t i = 0; i < 2; ++i)
                for (std::size_t j = 0; j < 2; ++j)
                    delta = std::max(delta, std::abs((*analysis.closed_form)(i, j) -
                                                     analysis.crb.entries(i, j)));
            analysis.max_abs_delta = delta;
        }
        break;
    }
    }
    emit(cfg, aggstat::crb_csv(analysis), aggstat::crb_json(analysis));
    return 0;
}

int cmd_design(const CommonArgs& args) {
    const aggstat::RunConfig cfg = load_with_overrides(args);
    const aggstat::ChannelDesign design = aggstat::realize_design(cfg.design, cfg.seed);
    const aggstat::DesignDiagnostics diag = aggstat::design_diagnostics(design);
    emit(cfg, aggstat::diagnostics_csv(design, diag), aggstat::diagnostics_json(design, diag));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Estimation from aggregated measurements: seeded Monte Carlo experiments, "
                 "Fisher/CRB analysis, basket-size sweeps, and design diagnostics"};
    app.require_subcommand(1);

    CommonArgs args;
    CLI::App* simulate = app.add_subcommand("simulate", "run one experiment and report "
                                                        "bias/MSE per estimand");
    CLI::App* crb = app.add_subcommand("crb", "print Fisher information and Cramer-Rao bounds");
    CLI::App* sweep = app.add_subcommand("sweep", "re-run the experiment across basket sizes");
    CLI::App* design = app.add_subcommand("design", "print design diagnostics "
                                                    "(rank, determinant, condition)");
    for (CLI::App* cmd : {simulate, crb, sweep, design})
        add_common(cmd, args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (simulate->parsed())
            return cmd_simulate(args);
        if (crb->parsed())
            return cmd_crb(args);
        if (sweep->parsed())
            return cmd_sweep(args);
        return cmd_design(args);
    } catch (const aggstat::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const aggstat::NonIdentifiableError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}
