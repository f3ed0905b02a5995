#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nakano/cli.hpp"

int main(int argc, char** argv) {
    nakano::cli::RunConfig cfg;
    CLI::App app{"Computations in variable-exponent Lebesgue spaces over finite atomic measure spaces"};
    app.require_subcommand(1, 1);

    double r = 0.0, eps = 0.0;
    std::string output;
    for (const auto& name : nakano::cli::commands()) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--input", cfg.inputs, "Input JSON file (repeatable)");
        sub->add_option("--output", output, "Write results here instead of stdout");
        sub->add_option("--seed", cfg.seed, "Seed for randomized suites")->capture_default_str();
        sub->add_option("--s", cfg.s, "Exponent ratio bound s (repeatable for constants-table)");
        sub->add_option("--n", cfg.n, "Chunk resolution n (repeatable)");
        sub->add_option("--m", cfg.m, "Integer scaling factor m for fit")->capture_default_str();
        sub->add_option("--r", r, "Exponent bound r");
        sub->add_option("--eps", eps, "Target accuracy or perturbation size");
        sub->add_option("--grid-step", cfg.grid_step, "Grid step for the constants")->capture_default_str();
        sub->add_option("--trials", cfg.trials, "Random trials or probes")->capture_default_str();
        sub->add_option("--suite", cfg.suite, "verify suite: all or one name")->capture_default_str();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    CLI::App* sub = app.get_subcommands().front();
    cfg.command = sub->get_name();
    if (sub->count("--output"))
        cfg.output = output;
    if (sub->count("--r"))
        cfg.r = r;
    if (sub->count("--eps"))
        cfg.eps = eps;
    return nakano::cli::run(cfg, std::cout, std::cerr);
}
