// geoseg: synthetic cortical-world pipeline driver.
//
// Subcommands run the pipeline up to (and including) the named stage;
// completed stages are skipped when their inputs are unchanged, so e.g.
// `geoseg pretrain` after `geoseg pairs` only trains.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "geoseg/pipeline.hpp"

using namespace geoseg;

int main(int argc, char** argv) {
    CLI::App app{std::string(kToolVersion) + " - geodesic self-supervision pipeline"};
    app.require_subcommand(1);
    app.fallthrough();  // accept the global options after the subcommand too

    std::string config_path;
    std::string out_dir = "out";
    uint64_t seed = 0;
    bool seed_set = false;
    app.add_option("--config", config_path, "configuration file (key = value lines)");
    app.add_option("--out", out_dir, "artifact directory")->capture_default_str();
    app.add_option("--seed", seed, "override the global seed")
        ->each([&](const std::string&) { seed_set = true; });

    // training overrides, applied on top of the config
    double alpha = -1, lambda = -1, lr = -1;
    int epochs = -1, batch = -1;
    int phase1 = -1, phase2 = -1;
    double atlas_mult = -1;

    CLI::App* cmd_world = app.add_subcommand("gen-world", "build the synthetic world");
    CLI::App* cmd_sample = app.add_subcommand("sample", "sample the patch dataset");
    CLI::App* cmd_pairs = app.add_subcommand("pairs", "build and annotate training pairs");
    CLI::App* cmd_pre = app.add_subcommand("pretrain", "self-supervised Siamese pretraining");
    cmd_pre->add_option("--alpha", alpha, "coordinate loss weight");
    cmd_pre->add_option("--lambda", lambda, "weight decay");
    cmd_pre->add_option("--epochs", epochs, "training epochs");
    cmd_pre->add_option("--batch-size", batch, "batch size");
    cmd_pre->add_option("--lr", lr, "initial learning rate");
    CLI::App* cmd_fine = app.add_subcommand("finetune", "segmentation fine-tuning");
    cmd_fine->add_option("--phase1-iters", phase1, "iterations without atlas input");
    cmd_fine->add_option("--phase2-iters", phase2, "iterations with atlas input");
    cmd_fine->add_option("--atlas-lr-multiplier", atlas_mult, "atlas branch lr factor");
    CLI::App* cmd_eval = app.add_subcommand("eval", "segmentation metrics");
    CLI::App* cmd_borders = app.add_subcommand("borders", "feature-distance border profile");
    CLI::App* cmd_report = app.add_subcommand("report", "aggregate report.csv");
    CLI::App* cmd_run = app.add_subcommand("run", "full pipeline");
    std::string stop_after_name;
    cmd_run->add_option("--stop-after", stop_after_name,
                        "halt after this stage (gen-world, sample, pairs, pretrain, finetune, "
                        "eval, borders, report)");

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig config = config_path.empty() ? RunConfig{} : load_config(config_path);
        if (seed_set) {
            config.seed = seed;
            config.world.seed = seed;
            config.siamese.seed = seed;
            config.segnet.seed = seed;
        }
        if (alpha >= 0) config.siamese.alpha = alpha;
        if (lambda >= 0) config.siamese.weight_decay = lambda;
        if (epochs >= 0) config.siamese.epochs = epochs;
        if (batch > 0) config.siamese.batch_size = batch;
        if (lr > 0) config.siamese.schedule.initial_lr = lr;
        if (phase1 >= 0) config.segnet.phase1_iters = phase1;
        if (phase2 >= 0) config.segnet.phase2_iters = phase2;
        if (atlas_mult > 0) config.segnet.atlas_lr_multiplier = atlas_mult;

        Stage stop = Stage::REPORT;
        if (cmd_world->parsed()) stop = Stage::WORLD;
        if (cmd_sample->parsed()) stop = Stage::SAMPLE;
        if (cmd_pairs->parsed()) stop = Stage::PAIRS;
        if (cmd_pre->parsed()) stop = Stage::PRETRAIN;
        if (cmd_fine->parsed()) stop = Stage::FINETUNE;
        if (cmd_eval->parsed()) stop = Stage::EVAL;
        if (cmd_borders->parsed()) stop = Stage::BORDERS;
        if (cmd_report->parsed()) stop = Stage::REPORT;
        if (cmd_run->parsed() && !stop_after_name.empty())
            stop = stage_from_name(stop_after_name);

        run_pipeline(config, out_dir, stop, &std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "geoseg: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
