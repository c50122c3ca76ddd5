#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <utility>

#include "lsinit/matrix.hpp"
#include "lsinit/stats.hpp"

namespace lsinit {

inline constexpr double kDefaultRidgeLambda = 0.05;

/// Linear classifier over bias-extended features. Row c holds the weights of
/// class c; the last column is the bias.
class ClassifierHead {
public:
    ClassifierHead() = default;
    explicit ClassifierHead(Matrix weights);

    std::size_t class_count() const noexcept { return weights_.rows(); }
    std::size_t dim() const noexcept { return weights_.cols(); }
    const Matrix& weights() const noexcept { return weights_; }
    Matrix& weights() noexcept { return weights_; }

private:
    Matrix weights_;
};

/// Splits a C x (d+1) head into its C x d weights and the bias column.
std::pair<Matrix, Vector> split_bias(const Matrix& head_weights);

enum class InitKind { random, class_mean, least_square };

std::string_view to_string(InitKind kind);
InitKind parse_init_kind(std::string_view name);

struct InitStrategy {
    InitKind kind = InitKind::random;
    double lambda = kDefaultRidgeLambda;
    std::uint64_t seed = 0;
};

/// W_LS = (1/C) Mᵀ (Σ_T + μ_G μ_Gᵀ + λI)⁻¹, solved as a symmetric system.
Matrix least_square_weights(const ClassStatistics& stats, double lambda);

/// W = Y Zᵀ (Z Zᵀ + λ′I)⁻¹ for Z of shape (d+1) x N and one-hot Y of shape C x N.
/// Matches least_square_weights with λ′ = N·λ when classes are balanced.
Matrix direct_ridge_weights(const Matrix& z, const Matrix& y, double lambda_prime);

/// Row k is the bias-extended mean of class_ids[k].
Matrix class_mean_weights(const ClassStatistics& stats, std::span<const int> class_ids);

/// i.i.d. uniform entries on [-1/√dim, 1/√dim].
Matrix random_weights(std::size_t new_class_count, std::size_t dim, std::uint64_t seed);

/// Appends rows for `new_class_ids` (which must continue the head's class
/// range). Existing rows are copied unchanged. `stats` must describe all seen
/// classes (buffered old data plus the new task) unless the strategy is random.
ClassifierHead expand_head(const ClassifierHead& head, std::span<const int> new_class_ids,
                           const InitStrategy& strategy, const ClassStatistics* stats);

/// Head checkpoint: "NCHD", u32 version, u32 C, u32 d+1, f64 row-major weights.
void save_head(const std::filesystem::path& path, const ClassifierHead& head);
ClassifierHead load_head(const std::filesystem::path& path);

} // namespace lsinit
