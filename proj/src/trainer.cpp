#include "lsinit/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lsinit/error.hpp"
#include "lsinit/kernels.hpp"

namespace lsinit {

std::string_view to_string(PretrainMode mode) {
    return mode == PretrainMode::train ? "train" : "least_square";
}

PretrainMode parse_pretrain_mode(std::string_view name) {
    if (name == "train") return PretrainMode::train;
    if (name == "least_square" || name == "ls") return PretrainMode::least_square;
    throw Error(ErrorKind::InvalidArgument, "unknown pretrain mode '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
    if (batch_size == 0 || batch_size % 2 != 0)
        throw Error(ErrorKind::InvalidArgument, "batch_size must be positive and even");
    if (eval_every == 0) throw Error(ErrorKind::InvalidArgument, "eval_every must be positive");
    if (iterations_per_task > 0 && eval_every > iterations_per_task)
        throw Error(ErrorKind::InvalidArgument, "eval_every exceeds iterations_per_task");
    if (!(learning_rate > 0.0)) throw Error(ErrorKind::InvalidArgument, "learning_rate must be positive");
    if (!(weight_decay >= 0.0)) throw Error(ErrorKind::InvalidArgument, "weight_decay must be non-negative");
    if (!(init.lambda >= 0.0)) throw Error(ErrorKind::InvalidArgument, "lambda must be non-negative");
    loss.validate();
}

OptimizerState OptimizerState::zeros(std::size_t rows, std::size_t cols) {
    OptimizerState s;
    s.first_moment = Matrix(rows, cols);
    s.second_moment = Matrix(rows, cols);
    return s;
}

void adamw_step(Matrix& weights, const Matrix& grad, OptimizerState& state, double lr, double wd) {
    if (grad.rows() != weights.rows() || grad.cols() != weights.cols() ||
        state.first_moment.rows() != weights.rows() || state.first_moment.cols() != weights.cols() ||
        state.second_moment.rows() != weights.rows() || state.second_moment.cols() != weights.cols())
        throw Error(ErrorKind::ShapeMismatch, "adamw_step: weights, gradient and moments differ in shape");
    if (!grad.all_finite()) throw Error(ErrorKind::NonFiniteGradient, "gradient has NaN or Inf");
    if (!(lr > 0.0)) throw Error(ErrorKind::InvalidArgument, "learning rate must be positive");

    ++state.step_count;
    const double t = static_cast<double>(state.step_count);
    const double correction1 = 1.0 - std::pow(state.beta1, t);
    const double correction2 = 1.0 - std::pow(state.beta2, t);
    const double decay = 1.0 - lr * wd;

    double* w = weights.data();
    double* m = state.first_moment.data();
    double* v = state.second_moment.data();
    const double* g = grad.data();
    for (std::size_t i = 0; i < weights.size(); ++i) {
        w[i] *= decay;
        m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
        v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
        const double m_hat = m[i] / correction1;
        const double v_hat = v[i] / correction2;
        w[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
    // splitmix64 finalizer over the combined words
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(master) ^ a) ^ (b * 0x2545f4914f6cdd1dULL));
}

namespace {

enum Stream : std::uint64_t { kRehearsal = 1, kBuffer = 2, kInit = 3 };

std::vector<std::size_t> sample_uniform(std::span<const std::size_t> source, std::size_t count,
                                        std::mt19937_64& rng) {
    if (source.empty()) throw Error(ErrorKind::EmptySource, "task has no samples");
    std::uniform_int_distribution<std::size_t> pick(0, source.size() - 1);
    std::vector<std::size_t> out(count);
    for (auto& i : out) i = source[pick(rng)];
    return out;
}

struct StepResult {
    double loss;
    Matrix grad;
};

StepResult batch_gradient(const Matrix& weights, const FeatureDataset& data, std::span<const std::size_t> batch,
                          const LossKind& loss) {
    const Matrix z = extended_features(data, batch);
    const std::vector<int> labels = labels_of(data, batch);
    const auto evaluated = kernels::batch_loss(loss, kernels::logits(weights, z), labels);
    return {evaluated.mean_loss, kernels::weight_gradient(evaluated.logit_grads, z)};
}

std::vector<std::size_t> draw_batch(const ReplayBuffer& buffer, const Task& task, std::size_t batch_size,
                                    std::mt19937_64& rng) {
    if (buffer.empty()) return sample_uniform(task.indices, batch_size, rng);
    return sample_rehearsal_batch(buffer, task.indices, batch_size, rng);
}

} // namespace

TaskOutcome train_task(ClassifierHead head, const Task& task, ReplayBuffer& buffer, const TrainConfig& config,
                       const TrainContext& ctx, std::mt19937_64& rng) {
    if (!ctx.train || !ctx.test || !ctx.layout)
        throw Error(ErrorKind::InvalidArgument, "train_task needs train, test and layout");
    const std::size_t budget = config.iterations_per_task;

    TaskOutcome out;
    Matrix& w = head.weights();
    auto opt = OptimizerState::zeros(w.rows(), w.cols());

    auto checkpoint = [&](std::size_t iteration, double loss_new) {
        EvalRecord rec = split_eval(head, *ctx.test, *ctx.layout, ctx.position, config.loss);
        rec.iteration = iteration;
        rec.global_iteration = ctx.global_offset + iteration;
        rec.loss_new = loss_new;
        if (ctx.ls_reference && ctx.ls_metric && ctx.ls_reference->rows() == w.rows())
            rec.d_ls = ls_deviation(w, *ctx.ls_reference, *ctx.ls_metric);
        rec.buffer_size = buffer.size();
        out.max_buffer_size = std::max(out.max_buffer_size, rec.buffer_size);
        out.records.push_back(rec);
    };

    double running = 0.0;
    std::size_t running_count = 0;
    for (std::size_t t = 0; t < budget; ++t) {
        const auto batch = draw_batch(buffer, task, config.batch_size, rng);
        StepResult step = batch_gradient(w, *ctx.train, batch, config.loss);
        if (t == 0) checkpoint(0, step.loss);
        running += step.loss;
        ++running_count;

        adamw_step(w, step.grad, opt, config.learning_rate, config.weight_decay);
        ++out.optimizer_steps;

        const std::size_t done = t + 1;
        if (done % config.eval_every == 0 || done == budget) {
            checkpoint(done, running / static_cast<double>(running_count));
            running = 0.0;
            running_count = 0;
        }
    }
    if (budget == 0) {
        const auto batch = draw_batch(buffer, task, config.batch_size, rng);
        checkpoint(0, batch_gradient(w, *ctx.train, batch, config.loss).loss);
    }

    buffer.update(task.classes, task.indices, *ctx.train);
    out.head = std::move(head);
    return out;
}

ClassifierHead fit_pretrain_head(const FeatureDataset& train, const Task& task, const TrainConfig& config) {
    const std::size_t classes = task.classes.size();
    const std::size_t dim = train.dim + 1u;
    if (config.pretrain == PretrainMode::least_square) {
        const ClassStatistics stats = compute_stats(train, task.indices);
        if (stats.class_count != classes)
            throw Error(ErrorKind::MissingClass, "pretraining data does not cover every pretraining class");
        return ClassifierHead(least_square_weights(stats, config.init.lambda));
    }

    Matrix w = random_weights(classes, dim, derive_seed(config.seed, 1, kInit));
    auto opt = OptimizerState::zeros(w.rows(), w.cols());
    std::mt19937_64 rng(derive_seed(config.seed, 1, kRehearsal));
    const std::size_t steps = config.pretrain_iterations ? config.pretrain_iterations : config.iterations_per_task;
    for (std::size_t t = 0; t < steps; ++t) {
        const auto batch = sample_uniform(task.indices, config.batch_size, rng);
        const StepResult step = batch_gradient(w, train, batch, config.loss);
        adamw_step(w, step.grad, opt, config.learning_rate, config.weight_decay);
    }
    return ClassifierHead(std::move(w));
}

namespace {

struct HeadView {
    FeatureDataset train;
    FeatureDataset test;
    std::vector<Task> tasks;
    TaskLayout layout;
};

// Keeps only scheduled classes and rewrites labels as head rows.
FeatureDataset relabel(const FeatureDataset& data, const TaskSchedule& schedule,
                       std::vector<std::ptrdiff_t>* position) {
    std::vector<int> head_of(data.class_count(), -1);
    for (std::size_t r = 0; r < schedule.class_order.size(); ++r) {
        const auto c = static_cast<std::size_t>(schedule.class_order[r]);
        if (c < head_of.size()) head_of[c] = static_cast<int>(r);
    }
    FeatureDataset out;
    out.dim = data.dim;
    out.split = data.split;
    if (position) position->assign(data.size(), -1);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const int h = head_of[static_cast<std::size_t>(data.labels[i])];
        if (h < 0) continue;
        if (position) (*position)[i] = static_cast<std::ptrdiff_t>(out.size());
        out.labels.push_back(h);
        auto row = data.row(i);
        out.features.insert(out.features.end(), row.begin(), row.end());
    }
    return out;
}

HeadView make_head_view(const FeatureDataset& train, const FeatureDataset& test, const TaskSchedule& schedule) {
    if (train.dim != test.dim) throw Error(ErrorKind::DimensionMismatch, "train and test dimensions differ");
    HeadView view;
    std::vector<std::ptrdiff_t> position;
    view.train = relabel(train, schedule, &position);
    view.test = relabel(test, schedule, nullptr);

    int next = 0;
    for (const Task& t : schedule.tasks) {
        Task mapped;
        mapped.task_id = t.task_id;
        for (std::size_t k = 0; k < t.classes.size(); ++k) mapped.classes.push_back(next + static_cast<int>(k));
        for (std::size_t i : t.indices) {
            if (position.at(i) < 0) throw Error(ErrorKind::InvalidArgument, "schedule index outside scheduled classes");
            mapped.indices.push_back(static_cast<std::size_t>(position[i]));
        }
        if (mapped.indices.empty())
            throw Error(ErrorKind::EmptySource, "task " + std::to_string(t.task_id) + " has no training samples");
        view.layout.tasks.push_back({t.task_id, next, static_cast<int>(t.classes.size())});
        next += static_cast<int>(t.classes.size());
        view.tasks.push_back(std::move(mapped));
    }
    return view;
}

} // namespace

ExperimentResult run_continual(const TrainConfig& config, const FeatureDataset& train, const FeatureDataset& test,
                               const TaskSchedule& schedule, const std::optional<ClassifierHead>& pretrained_head) {
    config.validate();
    if (schedule.tasks.empty()) throw Error(ErrorKind::InvalidArgument, "schedule has no pretraining task");
    const HeadView view = make_head_view(train, test, schedule);

    ExperimentResult result;
    result.init = config.init.kind;

    ClassifierHead head = pretrained_head ? *pretrained_head : fit_pretrain_head(view.train, view.tasks[0], config);
    if (head.class_count() != view.tasks[0].classes.size() || head.dim() != view.train.dim + 1u)
        throw Error(ErrorKind::DimensionMismatch, "pretrained head does not match the pretraining task");

    ReplayBuffer buffer(config.buffer_capacity, derive_seed(config.seed, 0, kBuffer));
    buffer.update(view.tasks[0].classes, view.tasks[0].indices, view.train);

    EvalRecord pre = split_eval(head, view.test, view.layout, 0, config.loss);
    pre.buffer_size = buffer.size();
    result.log.records.push_back(pre);
    TaskSummary pre_summary;
    pre_summary.task_id = view.tasks[0].task_id;
    pre_summary.max_buffer_size = pre_summary.buffer_size_after = buffer.size();
    result.tasks.push_back(pre_summary);

    std::size_t global = 0;
    for (std::size_t pos = 1; pos < view.tasks.size(); ++pos) {
        const Task& task = view.tasks[pos];

        std::vector<std::size_t> stat_indices = buffer.all_indices();
        stat_indices.insert(stat_indices.end(), task.indices.begin(), task.indices.end());
        std::optional<ClassStatistics> stats;
        try {
            stats = compute_stats(view.train, stat_indices);
        } catch (const Error& e) {
            // A class squeezed out of the buffer only matters for data-driven init.
            if (e.kind() != ErrorKind::MissingClass || config.init.kind != InitKind::random) throw;
        }

        InitStrategy strategy = config.init;
        strategy.seed = derive_seed(config.seed, static_cast<std::uint64_t>(task.task_id), kInit);
        head = expand_head(head, task.classes, strategy, stats ? &*stats : nullptr);

        TaskSummary summary;
        summary.task_id = task.task_id;
        std::optional<Matrix> w_ls;
        std::optional<Matrix> metric;
        if (stats && stats->class_count == head.class_count()) {
            w_ls = least_square_weights(*stats, config.init.lambda);
            metric = ls_metric(*stats, config.init.lambda);
            summary.d_ls_boundary = ls_deviation(head.weights(), *w_ls, *metric);
            summary.nc_boundary = collapse_metrics(head.weights(), *stats);
        }

        TrainContext ctx;
        ctx.train = &view.train;
        ctx.test = &view.test;
        ctx.layout = &view.layout;
        ctx.position = pos;
        ctx.global_offset = global;
        ctx.ls_reference = w_ls ? &*w_ls : nullptr;
        ctx.ls_metric = metric ? &*metric : nullptr;

        std::mt19937_64 rng(derive_seed(config.seed, static_cast<std::uint64_t>(task.task_id), kRehearsal));
        TaskOutcome outcome = train_task(std::move(head), task, buffer, config, ctx, rng);
        head = std::move(outcome.head);
        global += config.iterations_per_task;

        summary.optimizer_steps = outcome.optimizer_steps;
        summary.max_buffer_size = std::max(outcome.max_buffer_size, buffer.size());
        summary.buffer_size_after = buffer.size();
        if (w_ls) {
            summary.d_ls_final = ls_deviation(head.weights(), *w_ls, *metric);
            summary.nc_final = collapse_metrics(head.weights(), *stats);
        }
        result.tasks.push_back(summary);
        for (auto& r : outcome.records) result.log.records.push_back(r);
    }

    result.final_head = std::move(head);
    return result;
}

} // namespace lsinit
