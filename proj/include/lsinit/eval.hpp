#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "lsinit/datastore.hpp"
#include "lsinit/init.hpp"
#include "lsinit/losses.hpp"

namespace lsinit {

/// One continual-evaluation checkpoint. Accuracies are percentages.
struct EvalRecord {
    int task_id = 1;
    std::size_t global_iteration = 0;
    std::size_t iteration = 0;  // within the task
    double acc_pre = 0.0;
    double acc_new = 0.0;
    std::optional<double> acc_old;  // absent until a past CL task exists
    double acc_all = 0.0;
    double loss_new = 0.0;       // mean training-batch loss since the previous checkpoint
    double test_loss_new = 0.0;  // mean loss on the current task's test samples
    std::optional<double> d_ls;  // deviation from the task's LS solution
    std::size_t buffer_size = 0;
};

struct EvalLog {
    std::vector<EvalRecord> records;
    std::uint64_t config_fingerprint = 0;
};

enum class AccuracyField { pre, new_task, old, all };

AccuracyField parse_accuracy_field(std::string_view name);

/// Head-row ranges of the tasks, in schedule order (entry 0 is pretraining).
struct TaskLayout {
    struct Entry {
        int task_id;
        int first_class;
        int class_count;
    };
    std::vector<Entry> tasks;

    int end_class(std::size_t pos) const { return tasks[pos].first_class + tasks[pos].class_count; }
};

/// Top-1 accuracy (%) over the samples whose label is in `class_mask`. The
/// argmax runs over every head class; ties go to the lowest index.
double top1_accuracy(const ClassifierHead& head, const FeatureDataset& data, std::span<const int> class_mask);
double top1_accuracy(const ClassifierHead& head, const Matrix& extended, std::span<const int> labels,
                     std::span<const int> class_mask);

/// Accuracies and test loss at the current position of the stream. `test`
/// must carry head-row labels.
EvalRecord split_eval(const ClassifierHead& head, const FeatureDataset& test, const TaskLayout& layout,
                      std::size_t current_pos, const LossKind& loss);

double average_accuracy(const EvalLog& log, AccuracyField field);

struct TaskGain {
    int task_id = 0;
    double threshold = 0.0;
    std::size_t reference_iterations = 0;
    std::size_t test_iterations = 0;
    double gain = 1.0;
    bool reachable = true;  // false when the test run never reached the threshold
};

struct GainReport {
    std::vector<TaskGain> tasks;
    double mean_gain = 0.0;
};

/// Per CL task: iterations each run needs to first reach 95% of the
/// reference run's best new-task accuracy, and their ratio. Iteration 0
/// counts as one iteration.
GainReport efficiency_gain(const EvalLog& reference, const EvalLog& test);

} // namespace lsinit
