// reactid: reaction-term identification toolkit
//   reactid solve|reconstruct|sweep --config <path> [--jobs N] [--out <dir>]

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>

#include "reactid/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Reaction-term identification for (time-fractional) reaction-diffusion"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    int jobs = 1;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "experiment config file")->required();
        cmd->add_option("--out", out_dir, "output directory (default: output.dir from config)");
    };

    CLI::App* solve = app.add_subcommand("solve", "run the forward problem, write g.csv");
    add_common(solve);
    CLI::App* reconstruct =
        app.add_subcommand("reconstruct", "recover the reaction term from final-time data");
    add_common(reconstruct);
    CLI::App* sweep = app.add_subcommand("sweep", "first-iterate metric over (T, alpha) axes");
    add_common(sweep);
    sweep->add_option("--jobs", jobs, "concurrent sweep cells")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    try {
        auto kv = reactid::KeyValueConfig::parse_file(config_path);
        auto cfg = reactid::ExperimentConfig::from_kv(kv);
        const std::string out = out_dir.empty() ? cfg.out_dir : out_dir;
        if (solve->parsed()) return reactid::cmd_solve(cfg, out);
        if (reconstruct->parsed()) return reactid::cmd_reconstruct(cfg, out);
        return reactid::cmd_sweep(cfg, out, jobs);
    } catch (const reactid::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
