#pragma once

#include <span>

#include "lsinit/matrix.hpp"

namespace lsinit {

inline constexpr double kSymmetryTolerance = 1e-9;
inline constexpr double kDefaultRankTolerance = 1e-10;

/// True when |a_ij - a_ji| <= tol * max(1, max|a|) for all entries.
bool is_symmetric(const Matrix& a, double tol = kSymmetryTolerance);

/// Lower-triangular Cholesky factor of `a`, or an empty matrix if a pivot
/// is not strictly positive. No jitter, no symmetry check.
Matrix cholesky(const Matrix& a);

/// Solves A·X = B for symmetric positive-definite A via Cholesky. A failed
/// factorization is retried with diagonal jitter 1e-12, 1e-10, 1e-8 (scaled by
/// max(1, mean diagonal)) before NotPositiveDefinite is thrown.
Matrix spd_solve(const Matrix& a, const Matrix& b);

/// Moore-Penrose pseudo-inverse of a symmetric matrix through its
/// eigendecomposition. Eigenvalues with |λ| <= rank_tol * max|λ| are dropped.
Matrix sym_pinv(const Matrix& a, double rank_tol = kDefaultRankTolerance);

double log_sum_exp(std::span<const double> v);

/// Softmax written into `out` (same length as `v`).
void softmax(std::span<const double> v, std::span<double> out);

} // namespace lsinit
