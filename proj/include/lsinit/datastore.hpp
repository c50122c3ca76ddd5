#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "lsinit/matrix.hpp"

namespace lsinit {

enum class Split { train, test };
enum class FeatureFormat { binary, csv };

/// Labeled feature vectors, stored as 32-bit floats. The bias coordinate is
/// not stored; `extended_features` appends it when a model needs it.
struct FeatureDataset {
    std::uint32_t dim = 0;
    std::vector<float> features;  // size() x dim, row-major
    std::vector<std::int32_t> labels;
    Split split = Split::train;

    std::size_t size() const noexcept { return labels.size(); }
    std::span<const float> row(std::size_t i) const noexcept { return {features.data() + i * dim, dim}; }
    /// max label + 1 (0 for an empty dataset).
    std::size_t class_count() const noexcept;
    /// Throws DimMismatch, NonFiniteValue or BadClass when the invariants do not hold.
    void validate() const;
};

/// N x (d+1) matrix of the selected rows in double precision with a trailing 1.
Matrix extended_features(const FeatureDataset& data, std::span<const std::size_t> indices);
std::vector<int> labels_of(const FeatureDataset& data, std::span<const std::size_t> indices);
/// Indices of all samples whose label is in `classes`, in ascending order.
std::vector<std::size_t> indices_for_classes(const FeatureDataset& data, std::span<const int> classes);

FeatureFormat format_from_path(const std::filesystem::path& path);
FeatureDataset load_features(const std::filesystem::path& path, FeatureFormat format,
                             Split split = Split::train);
void save_features(const std::filesystem::path& path, const FeatureDataset& data,
                   FeatureFormat format = FeatureFormat::binary);

struct Task {
    int task_id = 1;
    std::vector<int> classes;          // dataset class ids
    std::vector<std::size_t> indices;  // sample indices into the dataset
};

/// Disjoint class-incremental tasks. tasks[0] is the pretraining task.
struct TaskSchedule {
    std::vector<Task> tasks;
    std::vector<int> pretrain_classes;
    /// Dataset class id of each head row, in the order classes are first encountered.
    std::vector<int> class_order;

    std::size_t num_cl_tasks() const noexcept { return tasks.empty() ? 0 : tasks.size() - 1; }
    /// Head row of a dataset class id, or -1 when the class is not scheduled.
    int head_index(int dataset_class) const noexcept;
};

TaskSchedule partition_tasks(const FeatureDataset& data, std::size_t pretrain_class_count,
                             std::size_t num_cl_tasks, std::size_t classes_per_task,
                             std::uint64_t order_seed);

/// Class-balanced store of sample indices, capped at `capacity` samples.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity, std::uint64_t seed = 0);

    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t size() const noexcept;
    std::size_t class_count() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return size() == 0; }
    bool contains_class(int label) const noexcept { return entries_.count(label) != 0; }
    const std::map<int, std::vector<std::size_t>>& entries() const noexcept { return entries_; }
    /// Stored indices flattened in class order.
    std::vector<std::size_t> all_indices() const;

    /// Adds the classes of a finished task. Per-class quota becomes
    /// floor(capacity / classes seen); existing classes are down-sampled
    /// uniformly without replacement and new classes contribute up to the
    /// quota. Throws InvalidArgument if a class is already stored.
    void update(std::span<const int> new_classes, std::span<const std::size_t> new_indices,
                const FeatureDataset& data);

private:
    std::size_t capacity_;
    std::map<int, std::vector<std::size_t>> entries_;
    std::mt19937_64 rng_;
};

/// Half of the batch is drawn uniformly with replacement from the current
/// task, half from the buffer; the result is shuffled.
std::vector<std::size_t> sample_rehearsal_batch(const ReplayBuffer& buffer,
                                                std::span<const std::size_t> current_task,
                                                std::size_t batch_size, std::mt19937_64& rng);

} // namespace lsinit
