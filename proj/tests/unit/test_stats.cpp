#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "lsinit/error.hpp"
#include "lsinit/init.hpp"
#include "lsinit/numerics.hpp"
#include "lsinit/stats.hpp"
#include "lsinit/synth.hpp"

using namespace lsinit;

namespace {

ClassStatistics two_point_stats() {
    return compute_stats(Matrix{{1, 1}, {-1, 1}}, std::vector<int>{0, 1});
}

ClassStatistics stats_of(const FeatureDataset& d) {
    return compute_stats(d, testutil::all_indices(d));
}

FeatureDataset scaled(FeatureDataset d, float s) {
    for (float& v : d.features) v *= s;
    return d;
}

// ‖A/‖A‖_F − ETF‖_F evaluated entry by entry.
double etf_distance(const Matrix& a) {
    const std::size_t c = a.rows();
    double norm = 0;
    for (std::size_t i = 0; i < a.size(); ++i) norm += a.data()[i] * a.data()[i];
    norm = std::sqrt(norm);
    double acc = 0;
    for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = 0; j < c; ++j) {
            const double target = ((i == j ? 1.0 : 0.0) - 1.0 / static_cast<double>(c)) /
                                  std::sqrt(static_cast<double>(c) - 1.0);
            const double diff = a(i, j) / norm - target;
            acc += diff * diff;
        }
    return std::sqrt(acc);
}

} // namespace

TEST_SUITE("stats") {

TEST_CASE("two-point statistics") {
    const ClassStatistics s = two_point_stats();
    CHECK(s.mu_global == Vector{0, 1});
    CHECK(s.class_mean(0) == Vector{1, 1});
    CHECK(s.class_mean(1) == Vector{-1, 1});
    CHECK(s.sigma_T == Matrix{{1, 0}, {0, 0}});
    CHECK(max_abs(s.sigma_W) == 0.0);
    CHECK(s.counts == std::vector<std::size_t>{1, 1});
}

TEST_CASE("identical samples give zero covariances") {
    const ClassStatistics s = compute_stats(Matrix{{2, 3, 1}, {2, 3, 1}, {2, 3, 1}}, std::vector<int>{0, 0, 0});
    CHECK(max_abs(s.sigma_T) == 0.0);
    CHECK(max_abs(s.sigma_W) == 0.0);
    CHECK(max_abs(s.sigma_B) == 0.0);
}

TEST_CASE("total covariance matches a naive double loop") {
    const FeatureDataset d = testutil::gaussian_clusters(5, 6, 40, 2.0, 1.0, 3);
    const Matrix z = extended_features(d, testutil::all_indices(d));
    const ClassStatistics s = stats_of(d);
    const std::size_t n = z.rows(), dim = z.cols();
    Vector mu(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < dim; ++k) mu[k] += z(i, k) / static_cast<double>(n);
    Matrix naive(dim, dim);
    for (std::size_t a = 0; a < dim; ++a)
        for (std::size_t b = 0; b < dim; ++b) {
            double acc = 0;
            for (std::size_t i = 0; i < n; ++i) acc += (z(i, a) - mu[a]) * (z(i, b) - mu[b]);
            naive(a, b) = acc / static_cast<double>(n);
        }
    CHECK(max_abs(s.sigma_T - naive) < 1e-10);
}

TEST_CASE("law of total covariance for balanced classes") {
    const ClassStatistics s = stats_of(testutil::gaussian_clusters(4, 5, 30, 3.0, 0.7, 8));
    CHECK(testutil::rel_diff(s.sigma_W + s.sigma_B, s.sigma_T) < 1e-7);
}

TEST_CASE("statistics error paths") {
    CHECK_THROWS_AS(compute_stats(Matrix{{1, 1}, {2, 1}}, std::vector<int>{0, 2}), Error);
    try {
        compute_stats(Matrix{{1, 0.5}}, std::vector<int>{0});
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::BiasCoordinateNotOne);
    }
    try {
        compute_stats(Matrix{{1, 1}, {2, 1}}, std::vector<int>{0, 2});
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::MissingClass);
    }
}

TEST_CASE("ls deviation") {
    const ClassStatistics s = stats_of(testutil::gaussian_clusters(3, 4, 20, 2.0, 1.0, 5));
    const Matrix w_ls = least_square_weights(s, 0.05);
    CHECK(ls_deviation(w_ls, s, 0.05) < 1e-9);
    const Matrix delta = testutil::random_matrix(w_ls.rows(), w_ls.cols(), 6);
    const double d1 = ls_deviation(w_ls + delta, s, 0.05);
    const double d2 = ls_deviation(w_ls + 2.0 * delta, s, 0.05);
    CHECK(d1 > 0.0);
    CHECK(d2 >= d1);
    CHECK(d2 == doctest::Approx(4.0 * d1));
}

TEST_CASE("ls deviation under an identity metric is half the squared Frobenius norm") {
    const Matrix w_ls = testutil::random_matrix(3, 4, 1);
    const Matrix delta = testutil::random_matrix(3, 4, 2);
    const double f = frobenius_norm(delta);
    CHECK(ls_deviation(w_ls + delta, w_ls, Matrix::identity(4)) == doctest::Approx(0.5 * f * f).epsilon(1e-12));
}

TEST_CASE("nc1 collapse limit, hand formula and scale invariance") {
    FeatureDataset collapsed = testutil::gaussian_clusters(4, 6, 10, 1.0, 0.0, 4);
    CHECK(nc1(stats_of(collapsed)) == 0.0);

    ClassStatistics s;
    const std::size_t d = 3, c = 5;
    s.dim = d + 1;
    s.class_count = c;
    s.sigma_W = Matrix(d + 1, d + 1);
    s.sigma_B = Matrix(d + 1, d + 1);
    for (std::size_t i = 0; i < d; ++i) s.sigma_W(i, i) = s.sigma_B(i, i) = 1.0;
    CHECK(nc1(s) == doctest::Approx(static_cast<double>(d) / static_cast<double>(c)));

    const FeatureDataset noisy = testutil::gaussian_clusters(5, 8, 30, 1.0, 0.5, 9);
    CHECK(nc1(stats_of(scaled(noisy, 7.5f))) == doctest::Approx(nc1(stats_of(noisy))).epsilon(1e-5));
}

TEST_CASE("nc2 on exact ETF, identity rows and scaled weights") {
    const Matrix etf_rows = gen_simplex_etf_means(3, 3, 1.0).transposed();
    CHECK(nc2(etf_rows) < 1e-10);
    const Matrix eye = Matrix::identity(4);
    CHECK(nc2(eye) == doctest::Approx(etf_distance(eye)).epsilon(1e-14));
    // |I/2 - ETF|: diagonal 1/2 - 3/(4√3), off-diagonal 1/(4√3).
    const double diag = 0.5 - 0.75 / std::sqrt(3.0), off = 0.25 / std::sqrt(3.0);
    CHECK(nc2(eye) == doctest::Approx(std::sqrt(4 * diag * diag + 12 * off * off)));
    const Matrix w = testutil::random_matrix(6, 9, 2);
    CHECK(nc2(-3.0 * w) == doctest::Approx(nc2(w)).epsilon(1e-12));
    CHECK_THROWS_AS(nc2(Matrix(3, 2)), Error);
}

TEST_CASE("nc3 self duality, direct formula and rescaling") {
    // Class means forming a centered simplex in 4 dims.
    const std::size_t c = 4, d = 4;
    const Matrix means = gen_simplex_etf_means(c, d, 2.0);
    Matrix z(c, d + 1);
    std::vector<int> labels;
    for (std::size_t k = 0; k < c; ++k) {
        labels.push_back(static_cast<int>(k));
        for (std::size_t j = 0; j < d; ++j) z(k, j) = means(j, k);
        z(k, d) = 1.0;
    }
    const ClassStatistics s = compute_stats(z, labels);
    Matrix w(c, d);
    for (std::size_t k = 0; k < c; ++k)
        for (std::size_t j = 0; j < d; ++j) w(k, j) = s.class_means(j, k) - s.mu_global[j];
    CHECK(nc3(w, s) < 1e-10);

    const ClassStatistics r = stats_of(testutil::gaussian_clusters(5, 6, 3, 1.0, 0.2, 10));
    const Matrix rw = testutil::random_matrix(5, 6, 11);
    Matrix zbar(6, 5);
    for (std::size_t k = 0; k < 5; ++k)
        for (std::size_t j = 0; j < 6; ++j) zbar(j, k) = r.class_means(j, k) - r.mu_global[j];
    CHECK(nc3(rw, r) == doctest::Approx(etf_distance(matmul(rw, zbar))).epsilon(1e-12));

    const ClassStatistics big = stats_of(scaled(testutil::gaussian_clusters(5, 6, 3, 1.0, 0.2, 10), 4.0f));
    CHECK(nc3(2.5 * rw, big) == doctest::Approx(nc3(rw, r)).epsilon(1e-5));
}

TEST_CASE("nc4 examples") {
    const ClassStatistics s = stats_of(testutil::gaussian_clusters(3, 4, 5, 1.0, 1.0, 12));
    const Matrix w = testutil::random_matrix(3, 4, 13);
    Vector b = matvec(w, std::span<const double>(s.mu_global).first(4));
    for (double& v : b) v = -v;
    CHECK(nc4(w, b, s) < 1e-12);

    ClassStatistics t;
    t.dim = 3;
    t.mu_global = {1, 1, 1};
    CHECK(nc4(Matrix::identity(2), Vector{1, 0}, t) == doctest::Approx(std::sqrt(5.0)));
    t.mu_global = {0, 0, 1};
    CHECK(nc4(Matrix::identity(2), Vector{0, 0}, t) == 0.0);
}

TEST_CASE("collapse metrics split the bias column") {
    const ClassStatistics s = stats_of(testutil::gaussian_clusters(3, 4, 5, 1.0, 1.0, 14));
    const Matrix head = least_square_weights(s, 0.05);
    const auto [w, b] = split_bias(head);
    const CollapseMetrics m = collapse_metrics(head, s);
    CHECK(m.nc1 == nc1(s));
    CHECK(m.nc2 == nc2(w));
    CHECK(m.nc3 == nc3(w, s));
    CHECK(m.nc4 == nc4(w, b, s));
}

} // TEST_SUITE
