#include <iostream>

#include <CLI11.hpp>

#include "harvest/config.hpp"
#include "harvest/errors.hpp"
#include "harvest/experiments.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Harvested logistic reaction-diffusion toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    harvest::RunContext ctx;
    std::string out_dir = ".";
    app.add_option("--config", config_path, "JSON run configuration")->required();
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--threads", ctx.threads, "worker threads for sweeps (0 = auto)")->check(CLI::NonNegativeNumber);
    app.add_flag("--quiet", ctx.quiet, "suppress the summary line");
    app.set_version_flag("--version", std::string("harvest ") + harvest::kVersion);

    for (const auto& name : harvest::experiment_names()) app.add_subcommand(name, "run the " + name + " experiment");
    auto* validate_cmd = app.add_subcommand("validate", "check a configuration without running it");
    std::string target = "thresholds";
    validate_cmd->add_option("experiment", target, "experiment the config is meant for");

    CLI11_PARSE(app, argc, argv);
    ctx.out_dir = out_dir;

    harvest::RunConfig config;
    try {
        config = harvest::load_config(config_path);
    } catch (const harvest::Error& e) {
        std::cerr << e.what() << '\n';
        return 1;
    }

    if (validate_cmd->parsed()) {
        const auto diagnostics = harvest::validate(config, target);
        for (const auto& d : diagnostics) std::cout << d << '\n';
        if (diagnostics.empty() && !ctx.quiet) std::cout << "ok\n";
        return diagnostics.empty() ? 0 : 1;
    }
    const std::string experiment = app.get_subcommands().front()->get_name();
    return harvest::run(config, experiment, ctx, std::cout, std::cerr);
}
