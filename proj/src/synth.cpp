#include "lsinit/synth.hpp"

#include <cmath>
#include <random>
#include <string>

#include "lsinit/error.hpp"

namespace lsinit {

std::string_view to_string(MeanLayout layout) {
    return layout == MeanLayout::simplex_etf ? "simplex_etf" : "random_gaussian";
}

MeanLayout parse_mean_layout(std::string_view name) {
    if (name == "simplex_etf" || name == "simplex-etf") return MeanLayout::simplex_etf;
    if (name == "random_gaussian" || name == "random-gaussian") return MeanLayout::random_gaussian;
    throw Error(ErrorKind::InvalidArgument, "unknown mean layout '" + std::string(name) + "'");
}

void SynthSpec::validate() const {
    if (class_count < 2) throw Error(ErrorKind::InvalidArgument, "need at least two classes");
    if (dim == 0) throw Error(ErrorKind::InvalidArgument, "dimension must be positive");
    if (!(within_std >= 0.0)) throw Error(ErrorKind::InvalidArgument, "within_std must be non-negative");
    if (!(mean_scale >= 0.0)) throw Error(ErrorKind::InvalidArgument, "mean_scale must be non-negative");
    if (samples_per_class == 0) throw Error(ErrorKind::InvalidArgument, "samples_per_class must be positive");
    if (mean_layout == MeanLayout::simplex_etf && dim + 1 < class_count)
        throw Error(ErrorKind::DimensionTooSmall, "simplex ETF of " + std::to_string(class_count) +
                                                      " classes needs dim >= " + std::to_string(class_count - 1));
}

Matrix gen_simplex_etf_means(std::size_t classes, std::size_t dim, double scale) {
    if (classes < 2) throw Error(ErrorKind::InvalidArgument, "simplex ETF needs at least two classes");
    if (dim + 1 < classes)
        throw Error(ErrorKind::DimensionTooSmall, "simplex ETF of " + std::to_string(classes) +
                                                      " classes needs dim >= " + std::to_string(classes - 1));
    // Helmert basis of the centered subspace: column k (k = 1..C-1) is
    // (1, ..., 1, -k, 0, ...)/√(k(k+1)), so U Uᵀ = I - 11ᵀ/C.
    const double c = static_cast<double>(classes);
    const double norm = scale * std::sqrt(c / (c - 1.0));
    Matrix means(dim, classes);
    for (std::size_t k = 1; k < classes; ++k) {
        const double kk = static_cast<double>(k);
        const double inv = 1.0 / std::sqrt(kk * (kk + 1.0));
        for (std::size_t j = 0; j < k; ++j) means(k - 1, j) = norm * inv;
        means(k - 1, k) = -norm * kk * inv;
    }
    return means;
}

Matrix random_orthogonal(std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    // Modified Gram-Schmidt on the columns of a Gaussian matrix.
    Matrix q(dim, dim);
    for (std::size_t i = 0; i < q.size(); ++i) q.data()[i] = normal(rng);
    for (std::size_t j = 0; j < dim; ++j) {
        for (std::size_t p = 0; p < j; ++p) {
            double proj = 0.0;
            for (std::size_t i = 0; i < dim; ++i) proj += q(i, p) * q(i, j);
            for (std::size_t i = 0; i < dim; ++i) q(i, j) -= proj * q(i, p);
        }
        double n = 0.0;
        for (std::size_t i = 0; i < dim; ++i) n += q(i, j) * q(i, j);
        n = std::sqrt(n);
        for (std::size_t i = 0; i < dim; ++i) q(i, j) /= n;
    }
    return q;
}

Matrix gen_class_means(const SynthSpec& spec) {
    spec.validate();
    if (spec.mean_layout == MeanLayout::simplex_etf) {
        const Matrix canonical = gen_simplex_etf_means(spec.class_count, spec.dim, spec.mean_scale);
        return matmul(random_orthogonal(spec.dim, spec.seed ^ 0x5eedULL), canonical);
    }
    std::mt19937_64 rng(spec.seed ^ 0x5eedULL);
    std::normal_distribution<double> normal(0.0, spec.mean_scale / std::sqrt(static_cast<double>(spec.dim)));
    Matrix means(spec.dim, spec.class_count);
    for (std::size_t i = 0; i < means.size(); ++i) means.data()[i] = normal(rng);
    return means;
}

namespace {

FeatureDataset draw(const SynthSpec& spec, const Matrix& means, std::size_t per_class, Split split,
                    std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    FeatureDataset data;
    data.dim = static_cast<std::uint32_t>(spec.dim);
    data.split = split;
    data.labels.reserve(per_class * spec.class_count);
    data.features.reserve(per_class * spec.class_count * spec.dim);
    for (std::size_t c = 0; c < spec.class_count; ++c)
        for (std::size_t s = 0; s < per_class; ++s) {
            data.labels.push_back(static_cast<std::int32_t>(c));
            for (std::size_t k = 0; k < spec.dim; ++k)
                data.features.push_back(static_cast<float>(means(k, c) + spec.within_std * noise(rng)));
        }
    return data;
}

} // namespace

std::pair<FeatureDataset, FeatureDataset> gen_stream(const SynthSpec& spec) {
    const Matrix means = gen_class_means(spec);
    const std::size_t test_count = spec.test_samples_per_class ? spec.test_samples_per_class : spec.samples_per_class;
    return {draw(spec, means, spec.samples_per_class, Split::train, spec.seed * 2 + 1),
            draw(spec, means, test_count, Split::test, spec.seed * 2 + 2)};
}

} // namespace lsinit
