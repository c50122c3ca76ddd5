#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lsinit/error.hpp"
#include "lsinit/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Classifier-head initialization for class-incremental learning on frozen features"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_dir;
    auto* run = app.add_subcommand("run", "Run every configured initializer and write results.json and curves.csv");
    run->add_option("config", config_path, "JSON experiment config")->required();
    run->add_option("-o,--output-dir", output_dir, "Override the config's output_dir");

    std::string reference;
    std::string test;
    auto* compare = app.add_subcommand("compare", "Efficiency gain and iteration-0 accuracy deltas between two results");
    compare->add_option("reference", reference, "results.json of the reference run")->required();
    compare->add_option("test", test, "results.json of the run under test")->required();

    lsinit::cli::SynthArgs synth;
    std::string layout = "simplex_etf";
    std::string train_out = "train.ncfb";
    std::string test_out = "test.ncfb";
    auto* gen = app.add_subcommand("synth", "Generate a synthetic Gaussian feature stream");
    gen->add_option("--classes", synth.spec.class_count, "Number of classes")->capture_default_str();
    gen->add_option("--dim", synth.spec.dim, "Feature dimension")->capture_default_str();
    gen->add_option("--mean-layout", layout, "simplex-etf or random-gaussian")->capture_default_str();
    gen->add_option("--mean-scale", synth.spec.mean_scale, "Norm of the class means")->capture_default_str();
    gen->add_option("--within-std", synth.spec.within_std, "Isotropic within-class std")->capture_default_str();
    gen->add_option("--samples-per-class", synth.spec.samples_per_class, "Training samples per class")
        ->capture_default_str();
    gen->add_option("--test-samples-per-class", synth.spec.test_samples_per_class,
                    "Test samples per class (0: same as training)")
        ->capture_default_str();
    gen->add_option("--seed", synth.spec.seed, "Generator seed")->capture_default_str();
    gen->add_option("--train-out", train_out, "Training split output (.ncfb or .csv)")->capture_default_str();
    gen->add_option("--test-out", test_out, "Test split output (.ncfb or .csv)")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        lsinit::cli::report_error("UsageError", e.what());
        return 1;
    }

    if (*run) {
        std::optional<std::filesystem::path> override_dir;
        if (!output_dir.empty()) override_dir = output_dir;
        return lsinit::cli::cmd_run(config_path, override_dir);
    }
    if (*compare) return lsinit::cli::cmd_compare(reference, test, std::cout);

    try {
        synth.spec.mean_layout = lsinit::parse_mean_layout(layout);
    } catch (const lsinit::Error& e) {
        lsinit::cli::report_error(lsinit::to_string(e.kind()), e.what());
        return 1;
    }
    synth.train_out = train_out;
    synth.test_out = test_out;
    return lsinit::cli::cmd_synth(synth, std::cout);
}
