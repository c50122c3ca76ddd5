#pragma once

#include <span>
#include <vector>

#include "lsinit/datastore.hpp"
#include "lsinit/matrix.hpp"

namespace lsinit {

/// First and second order statistics of bias-extended features z = (x, 1).
struct ClassStatistics {
    std::size_t dim = 0;          // d + 1
    std::size_t class_count = 0;  // C
    Vector mu_global;             // average over all samples
    Matrix class_means;           // (d+1) x C, column c is the mean of class c
    Matrix sigma_T;               // total covariance
    Matrix sigma_W;               // within-class covariance (sample weighted)
    Matrix sigma_B;               // between-class covariance, (1/C) over class means
    std::vector<std::size_t> counts;

    Vector class_mean(std::size_t c) const;
};

/// `features` is N x (d+1) with a trailing 1 in every row; labels must cover
/// 0..C-1 where C = max label + 1.
ClassStatistics compute_stats(const Matrix& features, std::span<const int> labels);
ClassStatistics compute_stats(const FeatureDataset& data, std::span<const std::size_t> indices);

/// Σ_T + μ_G μ_Gᵀ + λI, the metric of the ridge problem.
Matrix ls_metric(const ClassStatistics& stats, double lambda);

/// ½ tr{(W - W_LS) (Σ_T + μ_G μ_Gᵀ + λI) (W - W_LS)ᵀ} for a C x (d+1) head.
double ls_deviation(const Matrix& w, const ClassStatistics& stats, double lambda);
/// Same quantity against a precomputed W_LS and metric.
double ls_deviation(const Matrix& w, const Matrix& w_ls, const Matrix& metric);

/// (1/C) tr(Σ_W Σ_B⁺).
double nc1(const ClassStatistics& stats);
/// Distance of the normalized Gram matrix W Wᵀ from the normalized simplex ETF.
double nc2(const Matrix& w);
/// Distance of normalized W Z̄ from the simplex ETF; Z̄ holds centered class means.
double nc3(const Matrix& w, const ClassStatistics& stats);
/// ‖b + W μ_G‖.
double nc4(const Matrix& w, std::span<const double> bias, const ClassStatistics& stats);

struct CollapseMetrics {
    double nc1 = 0.0;
    double nc2 = 0.0;
    double nc3 = 0.0;
    double nc4 = 0.0;
};

/// All four metrics for a bias-extended head (C x (d+1)).
CollapseMetrics collapse_metrics(const Matrix& head_weights, const ClassStatistics& stats);

/// (1/√(C-1)) (I - 11ᵀ/C).
Matrix simplex_etf_gram(std::size_t classes);

} // namespace lsinit
