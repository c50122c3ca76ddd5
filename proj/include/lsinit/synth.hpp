#pragma once

#include <cstdint>
#include <string_view>
#include <utility>

#include "lsinit/datastore.hpp"
#include "lsinit/matrix.hpp"

namespace lsinit {

enum class MeanLayout { simplex_etf, random_gaussian };

std::string_view to_string(MeanLayout layout);
MeanLayout parse_mean_layout(std::string_view name);

/// Gaussian class clusters z = m_y + ε, ε ~ N(0, within_std² I).
struct SynthSpec {
    std::size_t class_count = 10;
    std::size_t dim = 64;
    MeanLayout mean_layout = MeanLayout::simplex_etf;
    double mean_scale = 1.0;
    double within_std = 0.1;
    std::size_t samples_per_class = 100;
    /// Test samples per class; 0 means samples_per_class.
    std::size_t test_samples_per_class = 0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// d x C matrix whose columns form a simplex ETF of norm `scale`, embedded
/// in the first C-1 coordinates.
Matrix gen_simplex_etf_means(std::size_t classes, std::size_t dim, double scale);

/// Class means (d x C) for a spec, randomly rotated for simplex_etf.
Matrix gen_class_means(const SynthSpec& spec);

/// d x d orthogonal matrix from the QR factorization of a seeded Gaussian matrix.
Matrix random_orthogonal(std::size_t dim, std::uint64_t seed);

/// Train and test splits drawn independently from the same class means.
std::pair<FeatureDataset, FeatureDataset> gen_stream(const SynthSpec& spec);

} // namespace lsinit
