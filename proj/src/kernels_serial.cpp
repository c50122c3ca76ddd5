#include "lsinit/error.hpp"
#include "lsinit/kernels.hpp"

namespace lsinit::kernels::serial {

Matrix second_moment(const Matrix& x) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    Matrix s(d, d);
    for (std::size_t r = 0; r < n; ++r) {
        auto xr = x.row(r);
        for (std::size_t i = 0; i < d; ++i) {
            const double xi = xr[i];
            auto si = s.row(i);
            for (std::size_t j = i; j < d; ++j) si[j] += xi * xr[j];
        }
    }
    const double inv = n ? 1.0 / static_cast<double>(n) : 0.0;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
            s(i, j) *= inv;
            s(j, i) = s(i, j);
        }
    return s;
}

Matrix logits(const Matrix& w, const Matrix& z) {
    if (w.cols() != z.cols())
        throw Error(ErrorKind::DimensionMismatch, "logits: weight and feature widths differ");
    Matrix out(z.rows(), w.rows());
    for (std::size_t r = 0; r < z.rows(); ++r)
        for (std::size_t c = 0; c < w.rows(); ++c) out(r, c) = dot(w.row(c), z.row(r));
    return out;
}

Matrix weight_gradient(const Matrix& g, const Matrix& z) {
    if (g.rows() != z.rows())
        throw Error(ErrorKind::DimensionMismatch, "weight_gradient: sample counts differ");
    const std::size_t n = z.rows();
    Matrix out(g.cols(), z.cols());
    for (std::size_t r = 0; r < n; ++r) {
        auto zr = z.row(r);
        for (std::size_t c = 0; c < g.cols(); ++c) {
            const double gc = g(r, c);
            auto oc = out.row(c);
            for (std::size_t k = 0; k < zr.size(); ++k) oc[k] += gc * zr[k];
        }
    }
    if (n) out *= 1.0 / static_cast<double>(n);
    return out;
}

BatchLoss batch_loss(const LossKind& kind, const Matrix& logits, std::span<const int> labels) {
    if (labels.size() != logits.rows())
        throw Error(ErrorKind::DimensionMismatch, "batch_loss: label count differs from logits rows");
    BatchLoss out{0.0, Vector(logits.rows()), Matrix(logits.rows(), logits.cols())};
    for (std::size_t r = 0; r < logits.rows(); ++r)
        out.losses[r] = loss_and_grad(kind, logits.row(r), labels[r], out.logit_grads.row(r));
    double total = 0.0;
    for (double l : out.losses) total += l;
    out.mean_loss = logits.rows() ? total / static_cast<double>(logits.rows()) : 0.0;
    return out;
}

std::vector<int> argmax_rows(const Matrix& m) {
    std::vector<int> out(m.rows(), -1);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        std::size_t best = 0;
        for (std::size_t c = 1; c < row.size(); ++c)
            if (row[c] > row[best]) best = c;
        if (!row.empty()) out[r] = static_cast<int>(best);
    }
    return out;
}

} // namespace lsinit::kernels::serial
