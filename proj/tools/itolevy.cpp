#include "itolevy/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv)
{
    using itolevy::cli::CommandOptions;

    CLI::App app{"Series construction of Ito integrals driven by Hilbert-space Levy processes"};
    app.require_subcommand(1);

    CommandOptions options;
    auto addConfig = [&](CLI::App* cmd) {
        cmd->add_option("--config", options.configPath, "experiment config (JSON)")->required();
        cmd->add_option("--seed", options.seed, "override mc.seed");
        cmd->add_option("--out", options.out, "output file");
    };

    auto* simulate = app.add_subcommand("simulate", "write a driver path dump");
    addConfig(simulate);

    auto* integrate = app.add_subcommand("integrate", "write an operator integral path and summary");
    addConfig(integrate);
    integrate->add_flag("--dump-series", options.dumpSeries, "also write one file per series term");

    auto* check = app.add_subcommand("check", "run verification checks");
    addConfig(check);
    check->add_option("--check", options.checks, "check name (repeatable)");
    check->add_option("--suite", options.suite, "named suite")->check(CLI::IsMember({"default"}));
    check->add_option("--paths", options.paths, "override nPaths of every check");
    check->add_option("--format", options.format, "report format")->check(CLI::IsMember({"json", "csv"}));
    check->add_option("--negative-control", options.negativeControl,
                      "inject a fault (right_point, non_orthogonal_basis); succeed iff detected");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (simulate->parsed()) {
        return itolevy::cli::cmd_simulate(options, std::cout, std::cerr);
    }
    if (integrate->parsed()) {
        return itolevy::cli::cmd_integrate(options, std::cout, std::cerr);
    }
    return itolevy::cli::cmd_check(options, std::cout, std::cerr);
}
