#include "lsinit/init.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <string>

#include "lsinit/error.hpp"
#include "lsinit/numerics.hpp"

namespace lsinit {

ClassifierHead::ClassifierHead(Matrix weights) : weights_(std::move(weights)) {
    if (weights_.rows() == 0 || weights_.cols() == 0)
        throw Error(ErrorKind::InvalidArgument, "classifier head needs at least one class");
    if (!weights_.all_finite()) throw Error(ErrorKind::NonFinite, "classifier head has non-finite weights");
}

std::pair<Matrix, Vector> split_bias(const Matrix& head_weights) {
    if (head_weights.cols() == 0) throw Error(ErrorKind::DimensionMismatch, "head has no columns");
    const std::size_t d = head_weights.cols() - 1;
    Matrix w(head_weights.rows(), d);
    Vector b(head_weights.rows());
    for (std::size_t c = 0; c < head_weights.rows(); ++c) {
        for (std::size_t k = 0; k < d; ++k) w(c, k) = head_weights(c, k);
        b[c] = head_weights(c, d);
    }
    return {std::move(w), std::move(b)};
}

std::string_view to_string(InitKind kind) {
    switch (kind) {
    case InitKind::random: return "random";
    case InitKind::class_mean: return "class_mean";
    case InitKind::least_square: return "least_square";
    }
    return "random";
}

InitKind parse_init_kind(std::string_view name) {
    if (name == "random") return InitKind::random;
    if (name == "class_mean") return InitKind::class_mean;
    if (name == "least_square" || name == "ls") return InitKind::least_square;
    throw Error(ErrorKind::InvalidArgument, "unknown initializer '" + std::string(name) + "'");
}

Matrix least_square_weights(const ClassStatistics& stats, double lambda) {
    if (!(lambda >= 0.0)) throw Error(ErrorKind::InvalidArgument, "lambda must be non-negative");
    Matrix rhs = stats.class_means;  // (d+1) x C
    rhs *= 1.0 / static_cast<double>(stats.class_count);
    try {
        // The metric is symmetric, so W_LSᵀ = metric⁻¹ M / C.
        return spd_solve(ls_metric(stats, lambda), rhs).transposed();
    } catch (const Error& e) {
        throw Error(ErrorKind::SolveFailure, e.what());
    }
}

Matrix direct_ridge_weights(const Matrix& z, const Matrix& y, double lambda_prime) {
    if (z.cols() != y.cols())
        throw Error(ErrorKind::DimensionMismatch, "Z and Y must have the same number of samples");
    if (!(lambda_prime >= 0.0)) throw Error(ErrorKind::InvalidArgument, "lambda must be non-negative");
    for (std::size_t i = 0; i < y.cols(); ++i) {
        int ones = 0;
        bool valid = true;
        for (std::size_t c = 0; c < y.rows(); ++c) {
            if (y(c, i) == 1.0)
                ++ones;
            else if (y(c, i) != 0.0)
                valid = false;
        }
        if (!valid || ones != 1) throw Error(ErrorKind::NotOneHot, "column " + std::to_string(i));
    }
    Matrix gram = matmul_nt(z, z);
    for (std::size_t i = 0; i < gram.rows(); ++i) gram(i, i) += lambda_prime;
    try {
        return spd_solve(gram, matmul_nt(z, y)).transposed();
    } catch (const Error& e) {
        throw Error(ErrorKind::SolveFailure, e.what());
    }
}

Matrix class_mean_weights(const ClassStatistics& stats, std::span<const int> class_ids) {
    Matrix w(class_ids.size(), stats.dim);
    for (std::size_t r = 0; r < class_ids.size(); ++r) {
        const int c = class_ids[r];
        if (c < 0 || static_cast<std::size_t>(c) >= stats.class_count)
            throw Error(ErrorKind::UnknownClass, "class " + std::to_string(c));
        for (std::size_t k = 0; k < stats.dim; ++k) w(r, k) = stats.class_means(k, static_cast<std::size_t>(c));
    }
    return w;
}

Matrix random_weights(std::size_t new_class_count, std::size_t dim, std::uint64_t seed) {
    if (dim == 0) throw Error(ErrorKind::InvalidArgument, "random_weights needs a positive dimension");
    const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix w(new_class_count, dim);
    for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
    return w;
}

ClassifierHead expand_head(const ClassifierHead& head, std::span<const int> new_class_ids,
                           const InitStrategy& strategy, const ClassStatistics* stats) {
    if (new_class_ids.empty()) return head;
    const std::size_t old_count = head.class_count();
    for (std::size_t k = 0; k < new_class_ids.size(); ++k)
        if (new_class_ids[k] != static_cast<int>(old_count + k))
            throw Error(ErrorKind::NonContiguousIds,
                        "expected class " + std::to_string(old_count + k) + ", got " +
                            std::to_string(new_class_ids[k]));

    Matrix rows;
    if (strategy.kind == InitKind::random) {
        rows = random_weights(new_class_ids.size(), head.dim(), strategy.seed);
    } else {
        const std::size_t needed = old_count + new_class_ids.size();
        if (stats == nullptr || stats->class_count < needed)
            throw Error(ErrorKind::MissingStats, "data-driven initialization needs statistics for all " +
                                                     std::to_string(needed) + " classes");
        if (stats->dim != head.dim())
            throw Error(ErrorKind::DimensionMismatch, "statistics dimension differs from head");
        if (strategy.kind == InitKind::class_mean) {
            rows = class_mean_weights(*stats, new_class_ids);
        } else {
            const Matrix full = least_square_weights(*stats, strategy.lambda);
            rows = Matrix(new_class_ids.size(), head.dim());
            for (std::size_t k = 0; k < new_class_ids.size(); ++k) {
                auto src = full.row(static_cast<std::size_t>(new_class_ids[k]));
                std::copy(src.begin(), src.end(), rows.row(k).begin());
            }
        }
    }

    Matrix grown(old_count + rows.rows(), head.dim());
    std::copy(head.weights().data(), head.weights().data() + head.weights().size(), grown.data());
    std::copy(rows.data(), rows.data() + rows.size(), grown.data() + head.weights().size());
    return ClassifierHead(std::move(grown));
}

namespace {

constexpr char kHeadMagic[4] = {'N', 'C', 'H', 'D'};
constexpr std::uint32_t kHeadVersion = 1;

template <typename T>
void put_le(std::ostream& os, T value) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
    unsigned char bytes[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T)))
        throw Error(ErrorKind::DimMismatch, "truncated head checkpoint");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

} // namespace

void save_head(const std::filesystem::path& path, const ClassifierHead& head) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
    out.write(kHeadMagic, 4);
    put_le<std::uint32_t>(out, kHeadVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(head.class_count()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(head.dim()));
    for (double v : head.weights().values()) put_le<double>(out, v);
    if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

ClassifierHead load_head(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kHeadMagic, 4) != 0)
        throw Error(ErrorKind::BadMagic, path.string() + " is not an NCHD head checkpoint");
    if (get_le<std::uint32_t>(in) != kHeadVersion)
        throw Error(ErrorKind::BadMagic, "unsupported head checkpoint version");
    const auto classes = get_le<std::uint32_t>(in);
    const auto dim = get_le<std::uint32_t>(in);
    std::vector<double> values(static_cast<std::size_t>(classes) * dim);
    for (double& v : values) v = get_le<double>(in);
    if (in.peek() != std::char_traits<char>::eof())
        throw Error(ErrorKind::DimMismatch, "trailing bytes after head weights");
    return ClassifierHead(Matrix(classes, dim, std::move(values)));
}

} // namespace lsinit
