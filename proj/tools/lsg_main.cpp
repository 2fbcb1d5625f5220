// Command-line driver: dataset generation, training, active-contour
// calibration, evaluation, perturbation sweeps, timing benchmarks, reports.
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lsg/experiment.hpp"

namespace {

struct CliOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::string> split;
    bool force = false;
};

lsg::ExperimentConfig resolve_config(const CliOptions& cli) {
    lsg::ExperimentConfig config;
    if (!cli.config_path.empty()) config = lsg::load_config(cli.config_path);
    if (cli.seed) config.seed = *cli.seed;
    if (cli.out_dir) config.out_dir = *cli.out_dir;
    if (cli.split) config.split = *cli.split;
    config.validate();
    return config;
}

void add_common(CLI::App* cmd, CliOptions& cli) {
    cmd->add_option("--config", cli.config_path, "JSON experiment config (defaults when omitted)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", cli.seed, "training seed override");
    cmd->add_option("--out", cli.out_dir, "output directory override");
    cmd->add_option("--split", cli.split, "split strategy: separate_<id> or joint");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"layer-wise powder-bed segmentation workbench"};
    app.require_subcommand(1);

    CliOptions cli;
    auto* gen = app.add_subcommand("gen", "generate the synthetic dataset");
    gen->add_flag("--force", cli.force, "regenerate even if a manifest exists");
    auto* train = app.add_subcommand("train", "train the U-Net and UNet-GNN on the split");
    auto* calibrate = app.add_subcommand("calibrate-ac", "grid-search w and r_kernel");
    auto* eval = app.add_subcommand("eval", "evaluate all methods on the clean test set");
    auto* sweep = app.add_subcommand("perturb-sweep",
                                     "evaluate all methods under every configured perturbation");
    auto* bench = app.add_subcommand("bench", "single-threaded per-image timing");
    auto* report = app.add_subcommand("report", "summaries, plots, and report.md from scores");
    auto* run = app.add_subcommand("run", "full pipeline: gen, train, calibrate, eval, sweep,"
                                          " bench, report");
    for (CLI::App* cmd : {gen, train, calibrate, eval, sweep, bench, report, run})
        add_common(cmd, cli);

    CLI11_PARSE(app, argc, argv);

    try {
        const lsg::ExperimentConfig config = resolve_config(cli);
        if (gen->parsed()) {
            const auto manifest = lsg::stage_gen(config, cli.force);
            std::printf("dataset: %zu layers across %zu specimens -> %s/dataset\n",
                        manifest.entries.size(), manifest.specimens.size(),
                        config.out_dir.c_str());
        } else if (train->parsed()) {
            lsg::stage_train(config);
            std::printf("trained models -> %s/models\n", config.out_dir.c_str());
        } else if (calibrate->parsed()) {
            const auto result = lsg::stage_calibrate(config);
            std::printf("calibrated: w=%.2f r_kernel=%d (mean accuracy %.4f, %zu grid points)\n",
                        result.w, result.r_kernel, result.best_accuracy, result.table.size());
        } else if (eval->parsed()) {
            const auto rows = lsg::stage_eval(config);
            std::printf("clean eval: %zu rows -> %s/results/scores_clean.csv\n", rows.size(),
                        config.out_dir.c_str());
        } else if (sweep->parsed()) {
            const auto rows = lsg::stage_perturb_sweep(config);
            std::printf("perturbation sweep: %zu rows -> %s/results/scores_perturbed.csv\n",
                        rows.size(), config.out_dir.c_str());
        } else if (bench->parsed()) {
            lsg::stage_bench(config);
            std::printf("timing -> %s/results/timing.json\n", config.out_dir.c_str());
        } else if (report->parsed()) {
            lsg::stage_report(config);
            std::printf("report -> %s/report.md\n", config.out_dir.c_str());
        } else if (run->parsed()) {
            lsg::run_experiment(config);
            std::printf("experiment complete -> %s\n", config.out_dir.c_str());
        }
        return 0;
    } catch (const lsg::ValidationError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const lsg::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const lsg::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
