#include <exception>

#include "lsinit/error.hpp"
#include "lsinit/kernels.hpp"

namespace lsinit::kernels::parallel {

namespace {

using Index = long long;

} // namespace

Matrix second_moment(const Matrix& x) {
    const Index n = static_cast<Index>(x.rows());
    const Index d = static_cast<Index>(x.cols());
    Matrix s(x.cols(), x.cols());
    // Each thread owns whole output rows; per-entry order over samples is ascending.
#pragma omp parallel for schedule(dynamic, 1)
    for (Index i = 0; i < d; ++i) {
        double* si = s.data() + i * d;
        for (Index r = 0; r < n; ++r) {
            const double* xr = x.data() + r * d;
            const double xi = xr[i];
            for (Index j = i; j < d; ++j) si[j] += xi * xr[j];
        }
    }
    const double inv = n ? 1.0 / static_cast<double>(n) : 0.0;
    for (Index i = 0; i < d; ++i)
        for (Index j = i; j < d; ++j) {
            s(i, j) *= inv;
            s(j, i) = s(i, j);
        }
    return s;
}

Matrix logits(const Matrix& w, const Matrix& z) {
    if (w.cols() != z.cols())
        throw Error(ErrorKind::DimensionMismatch, "logits: weight and feature widths differ");
    Matrix out(z.rows(), w.rows());
    const Index n = static_cast<Index>(z.rows());
    const std::size_t classes = w.rows();
#pragma omp parallel for schedule(static)
    for (Index r = 0; r < n; ++r) {
        auto zr = z.row(static_cast<std::size_t>(r));
        auto orow = out.row(static_cast<std::size_t>(r));
        for (std::size_t c = 0; c < classes; ++c) orow[c] = dot(w.row(c), zr);
    }
    return out;
}

Matrix weight_gradient(const Matrix& g, const Matrix& z) {
    if (g.rows() != z.rows())
        throw Error(ErrorKind::DimensionMismatch, "weight_gradient: sample counts differ");
    const Index n = static_cast<Index>(z.rows());
    const Index classes = static_cast<Index>(g.cols());
    const std::size_t width = z.cols();
    Matrix out(g.cols(), z.cols());
#pragma omp parallel for schedule(static)
    for (Index c = 0; c < classes; ++c) {
        auto oc = out.row(static_cast<std::size_t>(c));
        for (Index r = 0; r < n; ++r) {
            const double gc = g(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
            auto zr = z.row(static_cast<std::size_t>(r));
            for (std::size_t k = 0; k < width; ++k) oc[k] += gc * zr[k];
        }
    }
    if (n) out *= 1.0 / static_cast<double>(n);
    return out;
}

BatchLoss batch_loss(const LossKind& kind, const Matrix& logits, std::span<const int> labels) {
    if (labels.size() != logits.rows())
        throw Error(ErrorKind::DimensionMismatch, "batch_loss: label count differs from logits rows");
    BatchLoss out{0.0, Vector(logits.rows()), Matrix(logits.rows(), logits.cols())};
    const Index n = static_cast<Index>(logits.rows());
    std::exception_ptr failure;
#pragma omp parallel for schedule(static)
    for (Index r = 0; r < n; ++r) {
        const auto row = static_cast<std::size_t>(r);
        try {
            out.losses[row] = loss_and_grad(kind, logits.row(row), labels[row], out.logit_grads.row(row));
        } catch (...) {
#pragma omp critical(lsinit_batch_loss_error)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    double total = 0.0;
    for (double l : out.losses) total += l;
    out.mean_loss = n ? total / static_cast<double>(n) : 0.0;
    return out;
}

std::vector<int> argmax_rows(const Matrix& m) {
    std::vector<int> out(m.rows(), -1);
    const Index n = static_cast<Index>(m.rows());
#pragma omp parallel for schedule(static)
    for (Index r = 0; r < n; ++r) {
        auto row = m.row(static_cast<std::size_t>(r));
        std::size_t best = 0;
        for (std::size_t c = 1; c < row.size(); ++c)
            if (row[c] > row[best]) best = c;
        if (!row.empty()) out[static_cast<std::size_t>(r)] = static_cast<int>(best);
    }
    return out;
}

} // namespace lsinit::kernels::parallel
