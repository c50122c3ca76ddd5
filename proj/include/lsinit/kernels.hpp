#pragma once

// Data-parallel inner loops of the engine. Every kernel exists twice: a
// plain serial reference and an OpenMP version. Both accumulate each output
// entry over samples in ascending order, so their results are bit-identical
// for any thread count.

#include <span>
#include <vector>

#include "lsinit/losses.hpp"
#include "lsinit/matrix.hpp"

namespace lsinit::kernels {

struct BatchLoss {
    double mean_loss = 0.0;
    Vector losses;       // per sample
    Matrix logit_grads;  // N x C, d(loss_i)/d(logits_i)
};

namespace serial {

/// (1/N) XᵀX for X of shape N x D.
Matrix second_moment(const Matrix& x);
/// Z Wᵀ: N x C logits for features Z (N x D) and weights W (C x D).
Matrix logits(const Matrix& w, const Matrix& z);
/// (1/N) Gᵀ Z: C x D weight gradient from logit gradients G (N x C).
Matrix weight_gradient(const Matrix& g, const Matrix& z);
BatchLoss batch_loss(const LossKind& kind, const Matrix& logits, std::span<const int> labels);
/// Row-wise argmax; ties go to the lowest column index.
std::vector<int> argmax_rows(const Matrix& m);

} // namespace serial

namespace parallel {

Matrix second_moment(const Matrix& x);
Matrix logits(const Matrix& w, const Matrix& z);
Matrix weight_gradient(const Matrix& g, const Matrix& z);
BatchLoss batch_loss(const LossKind& kind, const Matrix& logits, std::span<const int> labels);
std::vector<int> argmax_rows(const Matrix& m);

} // namespace parallel

using parallel::argmax_rows;
using parallel::batch_loss;
using parallel::logits;
using parallel::second_moment;
using parallel::weight_gradient;

} // namespace lsinit::kernels
