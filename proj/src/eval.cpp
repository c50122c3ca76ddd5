#include "lsinit/eval.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <string>

#include "lsinit/error.hpp"
#include "lsinit/kernels.hpp"

namespace lsinit {

AccuracyField parse_accuracy_field(std::string_view name) {
    if (name == "pre" || name == "acc_pre") return AccuracyField::pre;
    if (name == "new" || name == "acc_new") return AccuracyField::new_task;
    if (name == "old" || name == "acc_old") return AccuracyField::old;
    if (name == "all" || name == "acc_all") return AccuracyField::all;
    throw Error(ErrorKind::InvalidArgument, "unknown accuracy field '" + std::string(name) + "'");
}

double top1_accuracy(const ClassifierHead& head, const Matrix& extended, std::span<const int> labels,
                     std::span<const int> class_mask) {
    const std::set<int> mask(class_mask.begin(), class_mask.end());
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (mask.count(labels[i])) rows.push_back(i);
    if (rows.empty()) throw Error(ErrorKind::EmptyEvalSet, "no samples match the class mask");

    Matrix z(rows.size(), extended.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        auto src = extended.row(rows[r]);
        std::copy(src.begin(), src.end(), z.row(r).begin());
    }
    const auto predicted = kernels::argmax_rows(kernels::logits(head.weights(), z));
    std::size_t correct = 0;
    for (std::size_t r = 0; r < rows.size(); ++r)
        if (predicted[r] == labels[rows[r]]) ++correct;
    return 100.0 * static_cast<double>(correct) / static_cast<double>(rows.size());
}

double top1_accuracy(const ClassifierHead& head, const FeatureDataset& data, std::span<const int> class_mask) {
    std::vector<std::size_t> all(data.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return top1_accuracy(head, extended_features(data, all), labels_of(data, all), class_mask);
}

EvalRecord split_eval(const ClassifierHead& head, const FeatureDataset& test, const TaskLayout& layout,
                      std::size_t current_pos, const LossKind& loss) {
    if (current_pos >= layout.tasks.size())
        throw Error(ErrorKind::InvalidArgument, "task position " + std::to_string(current_pos) + " out of range");
    const int seen = layout.end_class(current_pos);
    const int pre_end = layout.end_class(0);
    const int new_begin = layout.tasks[current_pos].first_class;

    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < test.size(); ++i)
        if (test.labels[i] >= 0 && test.labels[i] < seen) rows.push_back(i);
    if (rows.empty()) throw Error(ErrorKind::EmptyEvalSet, "no test samples for the encountered classes");

    const Matrix z = extended_features(test, rows);
    const std::vector<int> labels = labels_of(test, rows);
    const Matrix logits = kernels::logits(head.weights(), z);
    const std::vector<int> predicted = kernels::argmax_rows(logits);

    struct Tally {
        std::size_t correct = 0;
        std::size_t total = 0;
        double pct() const { return 100.0 * static_cast<double>(correct) / static_cast<double>(total); }
    };
    Tally pre, fresh, old, all;
    std::vector<std::size_t> new_rows;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const bool hit = predicted[r] == labels[r];
        const int y = labels[r];
        auto count = [hit](Tally& t) {
            ++t.total;
            if (hit) ++t.correct;
        };
        count(all);
        if (y < pre_end) count(pre);
        if (y >= new_begin) {
            count(fresh);
            new_rows.push_back(r);
        } else if (y >= pre_end) {
            count(old);
        }
    }
    if (pre.total == 0 || fresh.total == 0)
        throw Error(ErrorKind::EmptyEvalSet, "pretraining or current task has no test samples");

    EvalRecord rec;
    rec.task_id = layout.tasks[current_pos].task_id;
    rec.acc_pre = pre.pct();
    rec.acc_new = fresh.pct();
    if (old.total > 0) rec.acc_old = old.pct();
    rec.acc_all = all.pct();

    Matrix new_logits(new_rows.size(), logits.cols());
    std::vector<int> new_labels(new_rows.size());
    for (std::size_t k = 0; k < new_rows.size(); ++k) {
        auto src = logits.row(new_rows[k]);
        std::copy(src.begin(), src.end(), new_logits.row(k).begin());
        new_labels[k] = labels[new_rows[k]];
    }
    rec.test_loss_new = kernels::batch_loss(loss, new_logits, new_labels).mean_loss;
    return rec;
}

double average_accuracy(const EvalLog& log, AccuracyField field) {
    double total = 0.0;
    std::size_t n = 0;
    for (const auto& r : log.records) {
        switch (field) {
        case AccuracyField::pre: total += r.acc_pre; ++n; break;
        case AccuracyField::new_task: total += r.acc_new; ++n; break;
        case AccuracyField::all: total += r.acc_all; ++n; break;
        case AccuracyField::old:
            if (r.acc_old) {
                total += *r.acc_old;
                ++n;
            }
            break;
        }
    }
    if (n == 0) throw Error(ErrorKind::EmptyLog, "no records carry the requested accuracy");
    return total / static_cast<double>(n);
}

namespace {

// CL-task records grouped by task id, in log order. The pretraining task is skipped.
std::map<int, std::vector<const EvalRecord*>> cl_tasks(const EvalLog& log) {
    std::map<int, std::vector<const EvalRecord*>> out;
    for (const auto& r : log.records)
        if (r.task_id > 1) out[r.task_id].push_back(&r);
    return out;
}

std::size_t as_iterations(std::size_t iteration) { return iteration == 0 ? 1 : iteration; }

} // namespace

GainReport efficiency_gain(const EvalLog& reference, const EvalLog& test) {
    const auto ref_tasks = cl_tasks(reference);
    const auto test_tasks = cl_tasks(test);
    if (ref_tasks.size() != test_tasks.size())
        throw Error(ErrorKind::MismatchedGrids, "logs cover different tasks");
    for (const auto& [task, recs] : ref_tasks) {
        auto it = test_tasks.find(task);
        if (it == test_tasks.end() || it->second.size() != recs.size())
            throw Error(ErrorKind::MismatchedGrids, "task " + std::to_string(task) + " grids differ");
        for (std::size_t k = 0; k < recs.size(); ++k)
            if (recs[k]->iteration != it->second[k]->iteration)
                throw Error(ErrorKind::MismatchedGrids, "task " + std::to_string(task) + " checkpoint " +
                                                            std::to_string(k) + " iterations differ");
    }

    GainReport report;
    for (const auto& [task, recs] : ref_tasks) {
        const auto& other = test_tasks.at(task);
        double best = 0.0;
        for (const auto* r : recs) best = std::max(best, r->acc_new);

        TaskGain g;
        g.task_id = task;
        g.threshold = 0.95 * best;
        for (const auto* r : recs)
            if (r->acc_new >= g.threshold) {
                g.reference_iterations = as_iterations(r->iteration);
                break;
            }
        g.reachable = false;
        for (const auto* r : other)
            if (r->acc_new >= g.threshold) {
                g.test_iterations = as_iterations(r->iteration);
                g.reachable = true;
                break;
            }
        if (!g.reachable) g.test_iterations = as_iterations(other.back()->iteration);
        g.gain = static_cast<double>(g.reference_iterations) / static_cast<double>(g.test_iterations);
        report.tasks.push_back(g);
    }
    double total = 0.0;
    for (const auto& g : report.tasks) total += g.gain;
    report.mean_gain = report.tasks.empty() ? 0.0 : total / static_cast<double>(report.tasks.size());
    return report;
}

} // namespace lsinit
