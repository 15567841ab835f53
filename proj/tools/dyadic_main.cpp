// Command-line front end: dyadic run --config <file> [--output-dir <dir>]
// [--seed <n>]. Exit codes: 0 pass, 1 configuration or runtime error,
// 2 acceptance failure.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

#include "dyadic/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Simulation laboratory for the dyadic cascade model on a tree"};
    app.require_subcommand(1);

    std::string config_file;
    std::string output_dir;
    std::uint64_t seed_override = 0;
    bool has_seed = false;

    CLI::App* run = app.add_subcommand("run", "run one experiment from a JSON config");
    run->add_option("--config", config_file, "experiment config file")->required();
    run->add_option("--output-dir", output_dir, "artifact directory (overrides config)");
    run->add_option("--seed", seed_override, "seed override")->each([&](const std::string&) {
        has_seed = true;
    });

    CLI11_PARSE(app, argc, argv);

    try {
        dyadic::ExperimentConfig cfg = dyadic::load_experiment_config(config_file);
        if (!output_dir.empty()) cfg.output_dir = output_dir;
        if (has_seed) cfg.seed = seed_override;
        const int code = dyadic::run_experiment(cfg);
        if (code == 0)
            std::cout << cfg.experiment << ": pass\n";
        else
            std::cout << cfg.experiment << ": acceptance failure (exit 2)\n";
        return code;
    } catch (const dyadic::config_error& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
