#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ope/cli.hpp"

namespace {

const char* error_kind(const std::exception& e) {
    if (dynamic_cast<const ope::ConfigError*>(&e)) return "config_error";
    if (dynamic_cast<const ope::SchemaError*>(&e)) return "schema_error";
    if (dynamic_cast<const ope::DataError*>(&e)) return "data_error";
    if (dynamic_cast<const ope::DimensionError*>(&e)) return "dimension_error";
    if (dynamic_cast<const ope::DomainError*>(&e)) return "domain_error";
    if (dynamic_cast<const ope::NumericError*>(&e)) return "numeric_error";
    return "error";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"One-plus-epsilon anomaly detection: training, evaluation and data tools"};
    app.require_subcommand(1);

    std::string config_path, checkpoint_path, out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::size_t trials = 5;
    std::size_t resolution = 64;

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        if (needs_config)
            cmd->add_option("--config", config_path, "JSON run configuration")->required();
        cmd->add_option("--out", out_dir, "output directory (overrides config)");
        cmd->add_option("--seed", seed, "master seed (overrides config)")
            ->each([&seed_set](const std::string&) { seed_set = true; });
    };

    CLI::App* gen = app.add_subcommand("gen-data", "generate a dataset as CSV + manifest");
    add_common(gen, true);

    CLI::App* train = app.add_subcommand("train", "train a model; writes checkpoint + log");
    add_common(train, true);

    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on the config's test data");
    add_common(eval, true);
    eval->add_option("--checkpoint", checkpoint_path, "checkpoint JSON")->required();

    CLI::App* grid = app.add_subcommand("grid", "dump the decision surface of a checkpoint");
    grid->add_option("--checkpoint", checkpoint_path, "checkpoint JSON")->required();
    grid->add_option("--resolution", resolution, "grid resolution per axis");
    grid->add_option("--out", out_dir, "output directory")->required();

    CLI::App* exp = app.add_subcommand("experiment", "repeated-trial protocol with mean/std AUC");
    add_common(exp, true);
    exp->add_option("--trials", trials, "number of trials");

    CLI11_PARSE(app, argc, argv);

    ope::cli::Overrides ov;
    if (seed_set) ov.seed = seed;
    if (!out_dir.empty()) ov.out_dir = out_dir;

    try {
        if (gen->parsed()) {
            std::cout << ope::cli::cmd_gen_data(config_path, ov) << "\n";
        } else if (train->parsed()) {
            std::cout << ope::cli::cmd_train(config_path, ov) << "\n";
        } else if (eval->parsed()) {
            std::cout << ope::cli::cmd_eval(checkpoint_path, config_path, ov) << "\n";
        } else if (grid->parsed()) {
            std::cout << ope::cli::cmd_grid(checkpoint_path, resolution, out_dir) << "\n";
        } else if (exp->parsed()) {
            std::cout << ope::cli::cmd_experiment(config_path, trials, ov) << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << ope::cli::error_json(error_kind(e), e.what()).dump() << "\n";
        return 1;
    }
    return 0;
}
