// steatoscore: quantitative liver-steatosis scoring from ultrasound images.
// Subcommands: preprocess, train, score, experiment, synth.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "steato/common.hpp"
#include "steato/experiments.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

void add_common_options(CLI::App* cmd, steato::RunConfig& cfg, bool needs_manifest) {
    // Subcommand options are configurable from the [subcommand] section of
    // the --config file; fallthrough lets --config appear after the
    // subcommand. Flags win over file values.
    cmd->configurable();
    cmd->fallthrough();
    auto* manifest = cmd->add_option("--manifest,-m", cfg.manifest, "Cohort manifest CSV");
    if (needs_manifest) manifest->required();
    cmd->add_option("--images,-i", cfg.images_dir, "Base directory for image paths");
    cmd->add_option("--out,-o", cfg.out_dir, "Output directory")->required();
    cmd->add_option("--seed,-s", cfg.seed, "Master RNG seed")->default_val(std::uint64_t{0});
    cmd->add_option("--min-images", cfg.min_images, "Images required per qualifying view group")
        ->default_val(3);
    cmd->add_option("--jobs,-j", cfg.jobs, "Worker threads (0 = hardware)")->default_val(0);
    cmd->add_option("--margin", cfg.preprocess.margin_px, "Margin strip in pixels")
        ->default_val(8);
    cmd->add_option("--bg-tol", cfg.preprocess.bg_tol, "Background intensity tolerance")
        ->default_val(5);
    cmd->add_option("--canny-sigma", cfg.preprocess.canny_sigma, "Canny Gaussian sigma")
        ->default_val(1.4);
    cmd->add_option("--canny-low", cfg.preprocess.canny_low, "Canny low threshold")
        ->default_val(30.0);
    cmd->add_option("--canny-high", cfg.preprocess.canny_high, "Canny high threshold")
        ->default_val(90.0);
    cmd->add_option("--hough-top", cfg.preprocess.hough_top_n, "Hough lines to keep")
        ->default_val(8);
    cmd->add_option("--center-window", cfg.preprocess.center_window,
                    "Central width fraction for beam intersections")
        ->default_val(0.2);
    cmd->add_option("--side", cfg.preprocess.out_side, "Output image side in pixels")
        ->default_val(256);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantitative ultrasound liver-steatosis scoring"};
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML config file; sections mirror the subcommands");
    app.set_version_flag("--version", std::string("steatoscore ") + steato::kToolVersion);

    steato::RunConfig cfg;
    steato::TrainHyper hyper;
    steato::SynthSpec synth;
    std::string experiment_id;
    std::vector<double> cutoff_values;
    int augment_variants = 3;

    auto* c_pre = app.add_subcommand("preprocess", "Run the image preprocessing pipeline");
    add_common_options(c_pre, cfg, true);

    auto* c_train = app.add_subcommand("train", "Train the ordinal scoring head");
    add_common_options(c_train, cfg, true);
    c_train->add_option("--model", cfg.model_path, "Model output path (default <out>/model.json)");
    c_train->add_option("--lr", hyper.lr, "Learning rate")->default_val(0.0005);
    c_train->add_option("--epochs", hyper.epochs, "Training epochs")->default_val(120);
    c_train->add_option("--batch", hyper.batch, "Mini-batch size")->default_val(32);
    c_train->add_option("--l2", hyper.l2, "L2 regularization weight")->default_val(0.0001);
    c_train->add_option("--augment-variants", augment_variants,
                        "Augmented copies per training image")
        ->default_val(3);

    auto* c_score = app.add_subcommand("score", "Score a cohort and write scores.csv");
    add_common_options(c_score, cfg, true);
    c_score->add_option("--model", cfg.model_path, "Trained model JSON")->required();

    auto* c_exp = app.add_subcommand("experiment", "Run a reliability/diagnostic experiment");
    add_common_options(c_exp, cfg, true);
    c_exp->add_option("--model", cfg.model_path, "Trained model JSON")->required();
    c_exp->add_option("--experiment,-e", experiment_id, "Experiment id: 1, 2, 3a, 3b, 4a, 4b")
        ->required();
    c_exp->add_option("--bootstrap", cfg.bootstrap_replicates, "Bootstrap replicates")
        ->default_val(1000);
    c_exp->add_flag("--one-study-per-patient", cfg.one_study_per_patient,
                    "Keep one seeded-random study per patient");
    c_exp->add_option("--cutoffs", cutoff_values,
                      "Three increasing grade cutoffs for percent agreement")
        ->expected(3);

    auto* c_synth = app.add_subcommand("synth", "Generate a synthetic phantom cohort");
    add_common_options(c_synth, cfg, false);
    c_synth->add_option("--patients", synth.n_patients, "Number of patients")->default_val(10);
    c_synth->add_option("--scanners", synth.scanners, "Scanner names (one study per scanner)");
    c_synth->add_option("--dual-fraction", synth.dual_fraction,
                        "Fraction of patients with dual-beam frames")
        ->default_val(0.5);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);  // prints help/version or the parse problem
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (c_exp->parsed() && cutoff_values.size() == 3)
            cfg.grade_cutoffs = {cutoff_values[0], cutoff_values[1], cutoff_values[2]};
        if (c_pre->parsed()) {
            steato::cmd_preprocess(cfg);
        } else if (c_train->parsed()) {
            hyper.seed = cfg.seed;
            steato::cmd_train(cfg, hyper, augment_variants);
        } else if (c_score->parsed()) {
            steato::cmd_score(cfg);
        } else if (c_exp->parsed()) {
            steato::cmd_experiment(cfg, experiment_id);
        } else if (c_synth->parsed()) {
            synth.seed = cfg.seed;
            steato::cmd_synth(cfg, synth);
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const steato::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitOk;
}
