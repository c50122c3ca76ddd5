#pragma once
#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "lsinit/datastore.hpp"
#include "lsinit/matrix.hpp"

namespace testutil {

inline lsinit::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double sd = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, sd);
    lsinit::Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
    return m;
}

/// Q^T Q + I for a random Q.
inline lsinit::Matrix random_spd(std::size_t n, std::uint64_t seed) {
    const lsinit::Matrix q = random_matrix(n, n, seed);
    lsinit::Matrix a = lsinit::matmul(q.transposed(), q);
    for (std::size_t i = 0; i < n; ++i) a(i, i) += 1.0;
    return a;
}

inline double rel_diff(const lsinit::Matrix& a, const lsinit::Matrix& b) {
    const double denom = std::max(lsinit::frobenius_norm(b), 1e-300);
    return lsinit::frobenius_norm(a - b) / denom;
}

/// Balanced Gaussian clusters: `per_class` samples for each of `classes`
/// classes in dimension `dim`.
inline lsinit::FeatureDataset gaussian_clusters(std::size_t classes, std::size_t dim, std::size_t per_class,
                                                double mean_sd, double noise_sd, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<std::vector<double>> means(classes, std::vector<double>(dim));
    for (auto& m : means)
        for (auto& v : m) v = mean_sd * n(rng);
    lsinit::FeatureDataset data;
    data.dim = static_cast<std::uint32_t>(dim);
    for (std::size_t c = 0; c < classes; ++c)
        for (std::size_t i = 0; i < per_class; ++i) {
            data.labels.push_back(static_cast<std::int32_t>(c));
            for (std::size_t k = 0; k < dim; ++k)
                data.features.push_back(static_cast<float>(means[c][k] + noise_sd * n(rng)));
        }
    return data;
}

inline std::vector<std::size_t> all_indices(const lsinit::FeatureDataset& data) {
    std::vector<std::size_t> idx(data.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return idx;
}

struct RidgeProblem {
    lsinit::Matrix z;  // N x (d+1), trailing 1
    std::vector<int> labels;
    std::size_t classes = 0;
};

inline RidgeProblem ridge_problem(const lsinit::FeatureDataset& data) {
    RidgeProblem p;
    p.z = lsinit::extended_features(data, all_indices(data));
    p.labels.assign(data.labels.begin(), data.labels.end());
    p.classes = data.class_count();
    return p;
}

/// Gradient of ½(1/N)Σ‖W z_i − y_i‖² + ½λ‖W‖²_F, i.e. (1/N)(W ZZᵀ − Y Zᵀ) + λW.
inline lsinit::Matrix ridge_gradient(const RidgeProblem& p, const lsinit::Matrix& w, double lambda) {
    const std::size_t n = p.z.rows();
    lsinit::Matrix resid = lsinit::matmul_nt(p.z, w);  // N x C
    for (std::size_t i = 0; i < n; ++i) resid(i, static_cast<std::size_t>(p.labels[i])) -= 1.0;
    lsinit::Matrix g = lsinit::matmul(resid.transposed(), p.z);
    g *= 1.0 / static_cast<double>(n);
    lsinit::Matrix reg = w;
    reg *= lambda;
    return g + reg;
}

/// Norm of the target term (1/N) Y Zᵀ, used to make gradient norms relative.
inline double ridge_target_norm(const RidgeProblem& p) {
    lsinit::Matrix yz(p.classes, p.z.cols());
    for (std::size_t i = 0; i < p.z.rows(); ++i)
        for (std::size_t k = 0; k < p.z.cols(); ++k)
            yz(static_cast<std::size_t>(p.labels[i]), k) += p.z(i, k) / static_cast<double>(p.z.rows());
    return lsinit::frobenius_norm(yz);
}

/// Plain gradient descent on the ridge objective from W = 0. Works on the
/// precomputed second moment so each step costs O(C d²).
inline lsinit::Matrix ridge_gradient_descent(const RidgeProblem& p, double lambda, double step,
                                             std::size_t max_steps, double tol, std::size_t* steps_taken = nullptr) {
    const std::size_t n = p.z.rows(), dim = p.z.cols();
    lsinit::Matrix gram = lsinit::matmul(p.z.transposed(), p.z);
    gram *= 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < dim; ++k) gram(k, k) += lambda;
    lsinit::Matrix yz(p.classes, dim);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < dim; ++k)
            yz(static_cast<std::size_t>(p.labels[i]), k) += p.z(i, k) / static_cast<double>(n);
    const double scale = lsinit::frobenius_norm(yz);
    lsinit::Matrix w(p.classes, dim);
    std::size_t s = 0;
    for (; s < max_steps; ++s) {
        lsinit::Matrix g = lsinit::matmul(w, gram) - yz;
        if (lsinit::frobenius_norm(g) < tol * scale) break;
        g *= step;
        w -= g;
    }
    if (steps_taken) *steps_taken = s;
    return w;
}

/// One-hot C x N label matrix and (d+1) x N feature matrix.
inline std::pair<lsinit::Matrix, lsinit::Matrix> ridge_columns(const RidgeProblem& p) {
    lsinit::Matrix y(p.classes, p.z.rows());
    for (std::size_t i = 0; i < p.z.rows(); ++i) y(static_cast<std::size_t>(p.labels[i]), i) = 1.0;
    return {p.z.transposed(), y};
}

} // namespace testutil
