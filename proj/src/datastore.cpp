#include "lsinit/datastore.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include "lsinit/error.hpp"

namespace lsinit {

namespace {

constexpr char kFeatureMagic[4] = {'N', 'C', 'F', 'B'};
constexpr std::uint32_t kFeatureVersion = 1;

template <typename T>
void write_le(std::ostream& os, T value) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(std::istream& is, const std::string& what) {
    unsigned char bytes[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T)))
        throw Error(ErrorKind::DimMismatch, "truncated file while reading " + what);
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

FeatureDataset load_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());

    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kFeatureMagic, 4) != 0)
        throw Error(ErrorKind::BadMagic, path.string() + " is not an NCFB feature file");
    const auto version = read_le<std::uint32_t>(in, "version");
    if (version != kFeatureVersion)
        throw Error(ErrorKind::BadMagic, "unsupported feature file version " + std::to_string(version));
    const auto n = read_le<std::uint64_t>(in, "sample count");
    const auto d = read_le<std::uint32_t>(in, "dimension");

    const auto header = static_cast<std::uintmax_t>(in.tellg());
    const auto file_size = std::filesystem::file_size(path);
    const std::uintmax_t expected = header + n * 4u + n * static_cast<std::uintmax_t>(d) * 4u;
    if (file_size != expected)
        throw Error(ErrorKind::DimMismatch, "header declares N=" + std::to_string(n) + ", d=" +
                                                std::to_string(d) + " but payload is " +
                                                std::to_string(file_size - header) + " bytes");

    FeatureDataset data;
    data.dim = d;
    data.labels.resize(n);
    for (auto& l : data.labels) l = read_le<std::int32_t>(in, "labels");
    data.features.resize(n * d);
    for (auto& f : data.features) f = read_le<float>(in, "features");
    return data;
}

void save_binary(const std::filesystem::path& path, const FeatureDataset& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
    out.write(kFeatureMagic, 4);
    write_le<std::uint32_t>(out, kFeatureVersion);
    write_le<std::uint64_t>(out, data.size());
    write_le<std::uint32_t>(out, data.dim);
    for (auto l : data.labels) write_le<std::int32_t>(out, l);
    for (auto f : data.features) write_le<float>(out, f);
    if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

FeatureDataset load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    FeatureDataset data;
    bool have_dim = false;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        std::string_view rest = trim(line);
        if (rest.empty()) continue;
        std::vector<std::string_view> cells;
        for (std::size_t pos; (pos = rest.find(',')) != std::string_view::npos;) {
            cells.push_back(trim(rest.substr(0, pos)));
            rest.remove_prefix(pos + 1);
        }
        cells.push_back(trim(rest));

        if (!have_dim) {
            if (cells.size() < 2) throw Error(ErrorKind::DimMismatch, "csv row has no feature columns");
            data.dim = static_cast<std::uint32_t>(cells.size() - 1);
            have_dim = true;
        } else if (cells.size() != data.dim + 1u) {
            throw Error(ErrorKind::DimMismatch, "csv row " + std::to_string(row) + " has " +
                                                    std::to_string(cells.size() - 1) + " features, expected " +
                                                    std::to_string(data.dim));
        }

        std::int32_t label = 0;
        auto [lp, lec] = std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), label);
        if (lec != std::errc{} || lp != cells[0].data() + cells[0].size())
            throw Error(ErrorKind::IoError, "csv row " + std::to_string(row) + ": bad label '" +
                                                std::string(cells[0]) + "'");
        data.labels.push_back(label);
        for (std::size_t c = 1; c < cells.size(); ++c) {
            double v = 0.0;
            auto [p, ec] = std::from_chars(cells[c].data(), cells[c].data() + cells[c].size(), v);
            if (ec != std::errc{} || p != cells[c].data() + cells[c].size())
                throw Error(ErrorKind::IoError, "csv row " + std::to_string(row) + ": bad value '" +
                                                    std::string(cells[c]) + "'");
            data.features.push_back(static_cast<float>(v));
        }
        ++row;
    }
    return data;
}

void save_csv(const std::filesystem::path& path, const FeatureDataset& data) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
    out.precision(9);
    for (std::size_t i = 0; i < data.size(); ++i) {
        out << data.labels[i];
        for (float v : data.row(i)) out << ',' << v;
        out << '\n';
    }
}

} // namespace

std::size_t FeatureDataset::class_count() const noexcept {
    if (labels.empty()) return 0;
    return static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end())) + 1;
}

void FeatureDataset::validate() const {
    if (features.size() != labels.size() * dim)
        throw Error(ErrorKind::DimMismatch, "feature count " + std::to_string(features.size()) +
                                                " != N*d = " + std::to_string(labels.size() * dim));
    for (std::size_t i = 0; i < size(); ++i) {
        if (labels[i] < 0)
            throw Error(ErrorKind::BadClass, "negative label at row " + std::to_string(i));
        for (float v : row(i))
            if (!std::isfinite(v))
                throw Error(ErrorKind::NonFiniteValue, "row " + std::to_string(i));
    }
}

Matrix extended_features(const FeatureDataset& data, std::span<const std::size_t> indices) {
    Matrix z(indices.size(), data.dim + 1u);
    for (std::size_t r = 0; r < indices.size(); ++r) {
        auto src = data.row(indices[r]);
        auto dst = z.row(r);
        std::copy(src.begin(), src.end(), dst.begin());
        dst[data.dim] = 1.0;
    }
    return z;
}

std::vector<int> labels_of(const FeatureDataset& data, std::span<const std::size_t> indices) {
    std::vector<int> out(indices.size());
    for (std::size_t r = 0; r < indices.size(); ++r) out[r] = data.labels[indices[r]];
    return out;
}

std::vector<std::size_t> indices_for_classes(const FeatureDataset& data, std::span<const int> classes) {
    const std::set<int> wanted(classes.begin(), classes.end());
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (wanted.count(data.labels[i])) out.push_back(i);
    return out;
}

FeatureFormat format_from_path(const std::filesystem::path& path) {
    return path.extension() == ".csv" ? FeatureFormat::csv : FeatureFormat::binary;
}

FeatureDataset load_features(const std::filesystem::path& path, FeatureFormat format, Split split) {
    if (!std::filesystem::exists(path)) throw Error(ErrorKind::IoError, path.string() + " does not exist");
    FeatureDataset data = format == FeatureFormat::binary ? load_binary(path) : load_csv(path);
    data.split = split;
    data.validate();
    return data;
}

void save_features(const std::filesystem::path& path, const FeatureDataset& data, FeatureFormat format) {
    data.validate();
    if (format == FeatureFormat::binary)
        save_binary(path, data);
    else
        save_csv(path, data);
}

int TaskSchedule::head_index(int dataset_class) const noexcept {
    auto it = std::find(class_order.begin(), class_order.end(), dataset_class);
    return it == class_order.end() ? -1 : static_cast<int>(it - class_order.begin());
}

TaskSchedule partition_tasks(const FeatureDataset& data, std::size_t pretrain_class_count,
                             std::size_t num_cl_tasks, std::size_t classes_per_task,
                             std::uint64_t order_seed) {
    const std::size_t total = data.class_count();
    const std::size_t needed = pretrain_class_count + num_cl_tasks * classes_per_task;
    if (needed > total)
        throw Error(ErrorKind::NotEnoughClasses, "schedule needs " + std::to_string(needed) +
                                                     " classes, dataset has " + std::to_string(total));
    if (pretrain_class_count == 0)
        throw Error(ErrorKind::InvalidArgument, "pretraining task needs at least one class");
    if (num_cl_tasks > 0 && classes_per_task == 0)
        throw Error(ErrorKind::InvalidArgument, "classes_per_task must be positive");

    TaskSchedule schedule;
    schedule.pretrain_classes.resize(pretrain_class_count);
    std::iota(schedule.pretrain_classes.begin(), schedule.pretrain_classes.end(), 0);

    std::vector<int> remaining(total - pretrain_class_count);
    std::iota(remaining.begin(), remaining.end(), static_cast<int>(pretrain_class_count));
    std::mt19937_64 rng(order_seed);
    std::shuffle(remaining.begin(), remaining.end(), rng);

    schedule.tasks.push_back({1, schedule.pretrain_classes, {}});
    for (std::size_t t = 0; t < num_cl_tasks; ++t) {
        auto first = remaining.begin() + static_cast<std::ptrdiff_t>(t * classes_per_task);
        Task task{static_cast<int>(t + 2), {first, first + static_cast<std::ptrdiff_t>(classes_per_task)}, {}};
        schedule.tasks.push_back(std::move(task));
    }

    std::vector<int> task_of(total, -1);
    for (std::size_t t = 0; t < schedule.tasks.size(); ++t)
        for (int c : schedule.tasks[t].classes) {
            task_of[static_cast<std::size_t>(c)] = static_cast<int>(t);
            schedule.class_order.push_back(c);
        }
    for (std::size_t i = 0; i < data.size(); ++i) {
        const int t = task_of[static_cast<std::size_t>(data.labels[i])];
        if (t >= 0) schedule.tasks[static_cast<std::size_t>(t)].indices.push_back(i);
    }
    return schedule;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::uint64_t seed) : capacity_(capacity), rng_(seed) {}

std::size_t ReplayBuffer::size() const noexcept {
    std::size_t n = 0;
    for (const auto& [label, idx] : entries_) n += idx.size();
    return n;
}

std::vector<std::size_t> ReplayBuffer::all_indices() const {
    std::vector<std::size_t> out;
    out.reserve(size());
    for (const auto& [label, idx] : entries_) out.insert(out.end(), idx.begin(), idx.end());
    return out;
}

void ReplayBuffer::update(std::span<const int> new_classes, std::span<const std::size_t> new_indices,
                          const FeatureDataset& data) {
    const std::set<int> incoming(new_classes.begin(), new_classes.end());
    for (int c : incoming)
        if (contains_class(c))
            throw Error(ErrorKind::InvalidArgument, "class " + std::to_string(c) + " already buffered");
    if (incoming.empty()) return;

    const std::size_t quota = capacity_ / (entries_.size() + incoming.size());

    auto keep_random = [&](std::vector<std::size_t>& idx) {
        if (idx.size() <= quota) return;
        std::shuffle(idx.begin(), idx.end(), rng_);
        idx.resize(quota);
        std::sort(idx.begin(), idx.end());
    };

    for (auto& [label, idx] : entries_) keep_random(idx);

    std::map<int, std::vector<std::size_t>> fresh;
    for (int c : incoming) fresh[c];
    for (std::size_t i : new_indices) {
        auto it = fresh.find(data.labels[i]);
        if (it != fresh.end()) it->second.push_back(i);
    }
    for (auto& [label, idx] : fresh) {
        keep_random(idx);
        entries_[label] = std::move(idx);
    }
}

std::vector<std::size_t> sample_rehearsal_batch(const ReplayBuffer& buffer,
                                                std::span<const std::size_t> current_task,
                                                std::size_t batch_size, std::mt19937_64& rng) {
    if (batch_size % 2 != 0)
        throw Error(ErrorKind::InvalidArgument, "rehearsal batch size must be even");
    const std::vector<std::size_t> replay = buffer.all_indices();
    if (replay.empty()) throw Error(ErrorKind::EmptySource, "replay buffer is empty");
    if (current_task.empty()) throw Error(ErrorKind::EmptySource, "current task has no samples");

    const std::size_t half = batch_size / 2;
    std::vector<std::size_t> batch;
    batch.reserve(batch_size);
    std::uniform_int_distribution<std::size_t> pick_current(0, current_task.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_replay(0, replay.size() - 1);
    for (std::size_t i = 0; i < half; ++i) batch.push_back(current_task[pick_current(rng)]);
    for (std::size_t i = 0; i < half; ++i) batch.push_back(replay[pick_replay(rng)]);
    std::shuffle(batch.begin(), batch.end(), rng);
    return batch;
}

} // namespace lsinit
