#include "lsinit/stats.hpp"

#include <cmath>
#include <string>

#include "lsinit/error.hpp"
#include "lsinit/init.hpp"
#include "lsinit/kernels.hpp"
#include "lsinit/numerics.hpp"

namespace lsinit {

Vector ClassStatistics::class_mean(std::size_t c) const {
    Vector m(dim);
    for (std::size_t k = 0; k < dim; ++k) m[k] = class_means(k, c);
    return m;
}

ClassStatistics compute_stats(const Matrix& features, std::span<const int> labels) {
    const std::size_t n = features.rows();
    const std::size_t dim = features.cols();
    if (labels.size() != n)
        throw Error(ErrorKind::DimensionMismatch, "label count differs from feature rows");
    if (n == 0 || dim == 0) throw Error(ErrorKind::EmptyInput, "no samples for statistics");

    int max_label = -1;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] < 0) throw Error(ErrorKind::BadClass, "negative label");
        max_label = std::max(max_label, labels[i]);
        if (features(i, dim - 1) != 1.0)
            throw Error(ErrorKind::BiasCoordinateNotOne, "row " + std::to_string(i));
    }

    ClassStatistics s;
    s.dim = dim;
    s.class_count = static_cast<std::size_t>(max_label) + 1;
    s.counts.assign(s.class_count, 0);
    s.mu_global.assign(dim, 0.0);

    Matrix sums(s.class_count, dim);
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = static_cast<std::size_t>(labels[i]);
        ++s.counts[c];
        auto zi = features.row(i);
        auto sc = sums.row(c);
        for (std::size_t k = 0; k < dim; ++k) {
            sc[k] += zi[k];
            s.mu_global[k] += zi[k];
        }
    }
    for (std::size_t c = 0; c < s.class_count; ++c)
        if (s.counts[c] == 0) throw Error(ErrorKind::MissingClass, "class " + std::to_string(c));
    for (double& v : s.mu_global) v /= static_cast<double>(n);

    s.class_means = Matrix(dim, s.class_count);
    for (std::size_t c = 0; c < s.class_count; ++c)
        for (std::size_t k = 0; k < dim; ++k)
            s.class_means(k, c) = sums(c, k) / static_cast<double>(s.counts[c]);

    Matrix centered_total(n, dim);
    Matrix centered_within(n, dim);
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = static_cast<std::size_t>(labels[i]);
        for (std::size_t k = 0; k < dim; ++k) {
            centered_total(i, k) = features(i, k) - s.mu_global[k];
            centered_within(i, k) = features(i, k) - s.class_means(k, c);
        }
    }
    s.sigma_T = kernels::second_moment(centered_total);
    s.sigma_W = kernels::second_moment(centered_within);

    Matrix centered_means(s.class_count, dim);
    for (std::size_t c = 0; c < s.class_count; ++c)
        for (std::size_t k = 0; k < dim; ++k) centered_means(c, k) = s.class_means(k, c) - s.mu_global[k];
    s.sigma_B = kernels::second_moment(centered_means);
    return s;
}

ClassStatistics compute_stats(const FeatureDataset& data, std::span<const std::size_t> indices) {
    return compute_stats(extended_features(data, indices), labels_of(data, indices));
}

Matrix ls_metric(const ClassStatistics& stats, double lambda) {
    Matrix a = stats.sigma_T + outer(stats.mu_global, stats.mu_global);
    for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) += lambda;
    return a;
}

double ls_deviation(const Matrix& w, const Matrix& w_ls, const Matrix& metric) {
    if (w.rows() != w_ls.rows() || w.cols() != w_ls.cols() || metric.rows() != w.cols())
        throw Error(ErrorKind::DimensionMismatch, "ls_deviation: head and statistics disagree");
    const Matrix delta = w - w_ls;
    const Matrix delta_metric = matmul(delta, metric);
    double total = 0.0;
    for (std::size_t i = 0; i < delta.size(); ++i) total += delta_metric.data()[i] * delta.data()[i];
    return 0.5 * total;
}

double ls_deviation(const Matrix& w, const ClassStatistics& stats, double lambda) {
    if (w.rows() != stats.class_count || w.cols() != stats.dim)
        throw Error(ErrorKind::DimensionMismatch,
                    "ls_deviation: head is " + std::to_string(w.rows()) + "x" + std::to_string(w.cols()) +
                        ", statistics are for " + std::to_string(stats.class_count) + "x" +
                        std::to_string(stats.dim));
    return ls_deviation(w, least_square_weights(stats, lambda), ls_metric(stats, lambda));
}

double nc1(const ClassStatistics& stats) {
    const Matrix pinv = sym_pinv(stats.sigma_B);
    double t = 0.0;
    for (std::size_t i = 0; i < stats.dim; ++i)
        for (std::size_t j = 0; j < stats.dim; ++j) t += stats.sigma_W(i, j) * pinv(j, i);
    return t / static_cast<double>(stats.class_count);
}

Matrix simplex_etf_gram(std::size_t classes) {
    Matrix etf(classes, classes);
    const double scale = 1.0 / std::sqrt(static_cast<double>(classes) - 1.0);
    const double off = 1.0 / static_cast<double>(classes);
    for (std::size_t i = 0; i < classes; ++i)
        for (std::size_t j = 0; j < classes; ++j) etf(i, j) = scale * ((i == j ? 1.0 : 0.0) - off);
    return etf;
}

namespace {

double distance_to_etf(const Matrix& product, ErrorKind zero_kind) {
    const double norm = frobenius_norm(product);
    if (norm == 0.0) throw Error(zero_kind, "cannot normalize a zero matrix");
    const Matrix etf = simplex_etf_gram(product.rows());
    double acc = 0.0;
    for (std::size_t i = 0; i < product.size(); ++i) {
        const double diff = product.data()[i] / norm - etf.data()[i];
        acc += diff * diff;
    }
    return std::sqrt(acc);
}

} // namespace

double nc2(const Matrix& w) {
    if (w.rows() < 2) throw Error(ErrorKind::InvalidArgument, "nc2 needs at least two classes");
    return distance_to_etf(matmul_nt(w, w), ErrorKind::ZeroWeights);
}

double nc3(const Matrix& w, const ClassStatistics& stats) {
    const std::size_t d = stats.dim - 1;
    if (w.rows() < 2) throw Error(ErrorKind::InvalidArgument, "nc3 needs at least two classes");
    if (w.rows() != stats.class_count || w.cols() != d)
        throw Error(ErrorKind::DimensionMismatch, "nc3: weights must be C x d without the bias column");
    Matrix centered(d, stats.class_count);
    for (std::size_t k = 0; k < d; ++k)
        for (std::size_t c = 0; c < stats.class_count; ++c)
            centered(k, c) = stats.class_means(k, c) - stats.mu_global[k];
    return distance_to_etf(matmul(w, centered), ErrorKind::ZeroProduct);
}

double nc4(const Matrix& w, std::span<const double> bias, const ClassStatistics& stats) {
    const std::size_t d = stats.dim - 1;
    if (w.cols() != d || bias.size() != w.rows())
        throw Error(ErrorKind::DimensionMismatch, "nc4: weights, bias and statistics disagree");
    const Vector wmu = matvec(w, std::span<const double>(stats.mu_global).first(d));
    double acc = 0.0;
    for (std::size_t c = 0; c < wmu.size(); ++c) acc += (bias[c] + wmu[c]) * (bias[c] + wmu[c]);
    return std::sqrt(acc);
}

CollapseMetrics collapse_metrics(const Matrix& head_weights, const ClassStatistics& stats) {
    const auto [w, b] = split_bias(head_weights);
    return {nc1(stats), nc2(w), nc3(w, stats), nc4(w, b, stats)};
}

} // namespace lsinit
