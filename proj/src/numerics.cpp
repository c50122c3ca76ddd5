#include "lsinit/numerics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "lsinit/error.hpp"

namespace lsinit {

bool is_symmetric(const Matrix& a, double tol) {
    if (a.rows() != a.cols()) return false;
    const double bound = tol * std::max(1.0, max_abs(a));
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j)
            if (std::abs(a(i, j) - a(j, i)) > bound) return false;
    return true;
}

Matrix cholesky(const Matrix& a) {
    const std::size_t n = a.rows();
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        auto lj = l.row(j);
        double diag = a(j, j);
        for (std::size_t k = 0; k < j; ++k) diag -= lj[k] * lj[k];
        if (!(diag > 0.0) || !std::isfinite(diag)) return {};
        const double ljj = std::sqrt(diag);
        lj[j] = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            auto li = l.row(i);
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= li[k] * lj[k];
            li[j] = s / ljj;
        }
    }
    return l;
}

namespace {

// Forward then backward substitution with L Lᵀ, column by column of B.
Matrix cholesky_substitute(const Matrix& l, const Matrix& b) {
    const std::size_t n = l.rows();
    const std::size_t k = b.cols();
    Matrix x = b;
    for (std::size_t i = 0; i < n; ++i) {
        auto xi = x.row(i);
        for (std::size_t p = 0; p < i; ++p) {
            const double lip = l(i, p);
            auto xp = x.row(p);
            for (std::size_t c = 0; c < k; ++c) xi[c] -= lip * xp[c];
        }
        for (std::size_t c = 0; c < k; ++c) xi[c] /= l(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
        auto xi = x.row(ii);
        for (std::size_t p = ii + 1; p < n; ++p) {
            const double lpi = l(p, ii);
            auto xp = x.row(p);
            for (std::size_t c = 0; c < k; ++c) xi[c] -= lpi * xp[c];
        }
        for (std::size_t c = 0; c < k; ++c) xi[c] /= l(ii, ii);
    }
    return x;
}

} // namespace

Matrix spd_solve(const Matrix& a, const Matrix& b) {
    if (a.rows() != a.cols() || b.rows() != a.rows())
        throw Error(ErrorKind::DimensionMismatch, "spd_solve expects square A and B with matching rows");
    if (!is_symmetric(a))
        throw Error(ErrorKind::NotSymmetric, "spd_solve input is not symmetric");
    if (a.rows() == 0) return b;

    Matrix l = cholesky(a);
    if (!l.empty()) return cholesky_substitute(l, b);

    double scale = std::max(1.0, std::abs(trace(a)) / static_cast<double>(a.rows()));
    for (double jitter : std::array{1e-12, 1e-10, 1e-8}) {
        Matrix shifted = a;
        for (std::size_t i = 0; i < a.rows(); ++i) shifted(i, i) += jitter * scale;
        l = cholesky(shifted);
        if (!l.empty()) return cholesky_substitute(l, b);
    }
    throw Error(ErrorKind::NotPositiveDefinite, "Cholesky failed after jitter escalation");
}

Matrix sym_pinv(const Matrix& a, double rank_tol) {
    if (!is_symmetric(a))
        throw Error(ErrorKind::NotSymmetric, "sym_pinv input is not symmetric");
    const auto n = static_cast<Eigen::Index>(a.rows());
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            m(i, j) = 0.5 * (a(i, j) + a(j, i));

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    if (eig.info() != Eigen::Success)
        throw Error(ErrorKind::EigenFailure, "symmetric eigendecomposition did not converge");

    const Eigen::VectorXd& vals = eig.eigenvalues();
    const Eigen::MatrixXd& vecs = eig.eigenvectors();
    const double cutoff = rank_tol * (n > 0 ? vals.cwiseAbs().maxCoeff() : 0.0);

    Matrix out(a.rows(), a.cols());
    for (Eigen::Index k = 0; k < n; ++k) {
        if (std::abs(vals(k)) <= cutoff) continue;
        const double inv = 1.0 / vals(k);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double vi = vecs(i, k) * inv;
            for (Eigen::Index j = 0; j < n; ++j) out(i, j) += vi * vecs(j, k);
        }
    }
    return out;
}

double log_sum_exp(std::span<const double> v) {
    if (v.empty()) throw Error(ErrorKind::EmptyInput, "log_sum_exp of empty vector");
    const double hi = *std::max_element(v.begin(), v.end());
    double s = 0.0;
    for (double x : v) s += std::exp(x - hi);
    return hi + std::log(s);
}

void softmax(std::span<const double> v, std::span<double> out) {
    const double lse = log_sum_exp(v);
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::exp(v[i] - lse);
}

} // namespace lsinit
