#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lsinit/datastore.hpp"
#include "lsinit/synth.hpp"
#include "lsinit/trainer.hpp"

namespace lsinit {

struct ScheduleParams {
    std::size_t pretrain_class_count = 10;
    std::size_t num_cl_tasks = 5;
    std::size_t classes_per_task = 10;
    std::uint64_t order_seed = 0;
};

struct ExperimentConfig {
    std::optional<SynthSpec> synthetic;
    std::filesystem::path train_path;
    std::filesystem::path test_path;
    std::optional<std::filesystem::path> pretrained_head;
    ScheduleParams schedule;
    TrainConfig train;
    std::vector<InitKind> initializers;
    std::filesystem::path output_dir = "results";

    void validate() const;
};

/// Parses a config document; relative paths are resolved against `base_dir`.
/// Throws Error(ConfigError) on missing or malformed fields.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical form with every default spelled out.
nlohmann::json config_to_json(const ExperimentConfig& config);
std::uint64_t config_fingerprint(const ExperimentConfig& config);

struct ExperimentOutput {
    TaskSchedule schedule;
    std::vector<ExperimentResult> runs;  // one per initializer, config order
};

/// Runs every initializer on the same data, schedule and seeds.
ExperimentOutput run_experiment(const ExperimentConfig& config);

nlohmann::json results_to_json(const ExperimentConfig& config, const ExperimentOutput& output);
void write_curves_csv(std::ostream& os, const ExperimentOutput& output);
/// Writes results.json and curves.csv into config.output_dir.
void write_outputs(const ExperimentConfig& config, const ExperimentOutput& output);

struct NamedLog {
    std::string init;
    EvalLog log;
};

/// Reads the per-initializer logs back from a results.json document.
std::vector<NamedLog> logs_from_results(const nlohmann::json& results);
nlohmann::json gain_to_json(const GainReport& report);

/// Comparison document for two results files. Runs are paired by initializer
/// name when the files share any; otherwise the first run of `reference`
/// is compared against every run of `test`.
nlohmann::json compare_results(const nlohmann::json& reference, const nlohmann::json& test);

namespace cli {

int cmd_run(const std::filesystem::path& config_path,
            const std::optional<std::filesystem::path>& output_override = std::nullopt);
int cmd_compare(const std::filesystem::path& reference, const std::filesystem::path& test, std::ostream& out);

struct SynthArgs {
    SynthSpec spec;
    std::filesystem::path train_out = "train.ncfb";
    std::filesystem::path test_out = "test.ncfb";
};
int cmd_synth(const SynthArgs& args, std::ostream& out);

/// One-line JSON error report on standard error.
void report_error(std::string_view kind, std::string_view message);

} // namespace cli

} // namespace lsinit
