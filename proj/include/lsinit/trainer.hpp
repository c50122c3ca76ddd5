#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "lsinit/datastore.hpp"
#include "lsinit/eval.hpp"
#include "lsinit/init.hpp"
#include "lsinit/losses.hpp"
#include "lsinit/stats.hpp"

namespace lsinit {

/// How the head for the pretraining task is produced when none is supplied.
enum class PretrainMode { train, least_square };

std::string_view to_string(PretrainMode mode);
PretrainMode parse_pretrain_mode(std::string_view name);

struct TrainConfig {
    std::size_t iterations_per_task = 600;  // compute budget U
    std::size_t batch_size = 256;
    double learning_rate = 1e-3;
    double weight_decay = 0.05;
    LossKind loss;
    InitStrategy init;
    std::size_t eval_every = 50;
    std::size_t buffer_capacity = 24000;  // storage budget S
    std::uint64_t seed = 0;
    PretrainMode pretrain = PretrainMode::train;
    /// Optimizer steps for the pretraining head; 0 means iterations_per_task.
    std::size_t pretrain_iterations = 0;

    void validate() const;
};

struct OptimizerState {
    Matrix first_moment;
    Matrix second_moment;
    std::size_t step_count = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static OptimizerState zeros(std::size_t rows, std::size_t cols);
};

/// Decoupled weight decay followed by a bias-corrected Adam update, in place.
void adamw_step(Matrix& weights, const Matrix& grad, OptimizerState& state, double lr, double wd);

/// Mixes a master seed with stream identifiers into an independent seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

/// Read-only inputs of a task's training loop. Datasets carry head-row labels.
struct TrainContext {
    const FeatureDataset* train = nullptr;
    const FeatureDataset* test = nullptr;
    const TaskLayout* layout = nullptr;
    std::size_t position = 0;          // task position in the layout
    std::size_t global_offset = 0;     // global iteration of this task's iteration 0
    const Matrix* ls_reference = nullptr;  // W_LS for D_LS tracking, optional
    const Matrix* ls_metric = nullptr;
};

struct TaskOutcome {
    ClassifierHead head;
    std::vector<EvalRecord> records;
    std::size_t optimizer_steps = 0;
    std::size_t max_buffer_size = 0;
};

/// Runs exactly `iterations_per_task` rehearsal steps on `task` (head-row
/// classes and indices into ctx.train), recording a checkpoint at iteration 0
/// and every `eval_every` iterations. The buffer receives the task's classes
/// after training. With an empty buffer the whole batch comes from the task.
TaskOutcome train_task(ClassifierHead head, const Task& task, ReplayBuffer& buffer, const TrainConfig& config,
                       const TrainContext& ctx, std::mt19937_64& rng);

struct TaskSummary {
    int task_id = 1;
    std::size_t optimizer_steps = 0;
    std::size_t max_buffer_size = 0;
    std::size_t buffer_size_after = 0;
    std::optional<double> d_ls_boundary;
    std::optional<double> d_ls_final;
    std::optional<CollapseMetrics> nc_boundary;
    std::optional<CollapseMetrics> nc_final;
};

struct ExperimentResult {
    InitKind init = InitKind::random;
    EvalLog log;
    std::vector<TaskSummary> tasks;
    ClassifierHead final_head;
};

/// Pretraining head for task-1 samples (head-row labels 0..C-1).
ClassifierHead fit_pretrain_head(const FeatureDataset& train, const Task& task, const TrainConfig& config);

/// Full class-incremental run. `train` and `test` carry dataset labels; the
/// schedule maps them to head rows. `pretrained_head`, when given, must cover
/// the pretraining classes.
ExperimentResult run_continual(const TrainConfig& config, const FeatureDataset& train, const FeatureDataset& test,
                               const TaskSchedule& schedule,
                               const std::optional<ClassifierHead>& pretrained_head = std::nullopt);

} // namespace lsinit
