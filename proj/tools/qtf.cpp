// SPDX-License-Identifier: Apache-2.0
//
// qtf: analytic bounds and Monte Carlo sweeps for sequential target finding.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qtf/sweep.hpp"
#include "qtf/version.hpp"

namespace {

struct CommonArgs {
    std::string config;
    std::string out;
    std::string json;
};

int emit(const qtf::SweepConfig& cfg, const qtf::ResultTable& table, const CommonArgs& args)
{
    const std::string out = args.out.empty() ? cfg.output_path : args.out;
    const std::string json = args.json.empty() ? cfg.json_output_path : args.json;
    if (out.empty() || out == "-") qtf::write_csv(table, std::cout);
    else qtf::write_csv(table, out);
    if (!json.empty()) qtf::write_json(table, json);
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Error bounds and Monte Carlo sweeps for sequential Bell-state target finding"};
    app.set_version_flag("--version", std::string("qtf ") + qtf::version_string);
    app.require_subcommand(1);

    CommonArgs sim_args;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    auto* simulate = app.add_subcommand("simulate", "Run a sweep with Monte Carlo campaigns");
    simulate->add_option("--config", sim_args.config, "Sweep configuration (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    simulate->add_option("--out", sim_args.out, "CSV output path ('-' for stdout)");
    simulate->add_option("--json", sim_args.json, "Optional JSON mirror of the table");
    simulate->add_option("--seed", seed, "Override the config seed");
    simulate->add_option("--workers", workers, "Worker threads per campaign")
        ->check(CLI::Range(1u, 4096u));

    CommonArgs bounds_args;
    auto* bounds = app.add_subcommand("bounds", "Evaluate analytic quantities only");
    bounds->add_option("--config", bounds_args.config, "Sweep configuration (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    bounds->add_option("--out", bounds_args.out, "CSV output path ('-' for stdout)");
    bounds->add_option("--json", bounds_args.json, "Optional JSON mirror of the table");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) {
            auto cfg = qtf::load_config(sim_args.config);
            if (seed) cfg.seed = *seed;
            qtf::SweepOptions opts;
            opts.workers = qtf::resolve_workers(workers, std::getenv("QTF_WORKERS"), cfg);
            return emit(cfg, qtf::run_sweep(cfg, opts), sim_args);
        }
        auto cfg = qtf::load_config(bounds_args.config);
        qtf::SweepOptions opts;
        opts.monte_carlo = false;
        return emit(cfg, qtf::run_sweep(cfg, opts), bounds_args);
    } catch (const std::exception& e) {
        std::cerr << "qtf: " << e.what() << '\n';
        return 2;
    }
}
