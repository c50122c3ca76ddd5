#include "lsinit/losses.hpp"

#include <cmath>
#include <string>

#include "lsinit/error.hpp"
#include "lsinit/numerics.hpp"

namespace lsinit {

void LossKind::validate() const {
    if (type == LossType::mse && !(kappa > 0.0 && beta > 0.0))
        throw Error(ErrorKind::InvalidArgument, "mse loss needs kappa > 0 and beta > 0");
}

std::string_view to_string(LossType type) {
    switch (type) {
    case LossType::ce: return "ce";
    case LossType::mse: return "mse";
    case LossType::squentropy: return "squentropy";
    }
    return "ce";
}

LossType parse_loss_type(std::string_view name) {
    if (name == "ce" || name == "cross_entropy") return LossType::ce;
    if (name == "mse") return LossType::mse;
    if (name == "squentropy" || name == "sqen") return LossType::squentropy;
    throw Error(ErrorKind::InvalidArgument, "unknown loss '" + std::string(name) + "'");
}

namespace {

void check_label(std::size_t classes, int label, std::size_t min_classes = 1) {
    if (label < 0 || static_cast<std::size_t>(label) >= classes)
        throw Error(ErrorKind::BadClass, "label " + std::to_string(label) + " outside [0, " +
                                             std::to_string(classes) + ")");
    if (classes < min_classes)
        throw Error(ErrorKind::BadClass, "loss needs at least " + std::to_string(min_classes) + " classes");
}

// -log softmax(u)_y, with softmax(u) - e_y written to grad.
double cross_entropy(std::span<const double> u, int y, std::span<double> grad) {
    const double lse = log_sum_exp(u);
    for (std::size_t c = 0; c < u.size(); ++c) grad[c] = std::exp(u[c] - lse);
    grad[static_cast<std::size_t>(y)] -= 1.0;
    return lse - u[static_cast<std::size_t>(y)];
}

double scaled_mse(std::span<const double> u, int y, double kappa, double beta, std::span<double> grad) {
    const double inv_c = 1.0 / static_cast<double>(u.size());
    double loss = 0.0;
    for (std::size_t c = 0; c < u.size(); ++c) {
        if (c == static_cast<std::size_t>(y)) {
            const double r = u[c] - beta;
            loss += kappa * r * r;
            grad[c] = 2.0 * kappa * inv_c * r;
        } else {
            loss += u[c] * u[c];
            grad[c] = 2.0 * inv_c * u[c];
        }
    }
    return loss * inv_c;
}

double squentropy(std::span<const double> u, int y, std::span<double> grad) {
    double loss = cross_entropy(u, y, grad);
    const double inv = 1.0 / static_cast<double>(u.size() - 1);
    for (std::size_t c = 0; c < u.size(); ++c) {
        if (c == static_cast<std::size_t>(y)) continue;
        loss += inv * u[c] * u[c];
        grad[c] += 2.0 * inv * u[c];
    }
    return loss;
}

} // namespace

LossValue ce_loss_and_grad(std::span<const double> logits, int label) {
    check_label(logits.size(), label);
    LossValue out{0.0, Vector(logits.size())};
    out.loss = cross_entropy(logits, label, out.grad);
    return out;
}

LossValue mse_loss_and_grad(std::span<const double> logits, int label, double kappa, double beta) {
    check_label(logits.size(), label);
    LossValue out{0.0, Vector(logits.size())};
    out.loss = scaled_mse(logits, label, kappa, beta, out.grad);
    return out;
}

LossValue squentropy_loss_and_grad(std::span<const double> logits, int label) {
    check_label(logits.size(), label, 2);
    LossValue out{0.0, Vector(logits.size())};
    out.loss = squentropy(logits, label, out.grad);
    return out;
}

double loss_and_grad(const LossKind& kind, std::span<const double> logits, int label,
                     std::span<double> grad) {
    switch (kind.type) {
    case LossType::ce:
        check_label(logits.size(), label);
        return cross_entropy(logits, label, grad);
    case LossType::mse:
        check_label(logits.size(), label);
        return scaled_mse(logits, label, kind.kappa, kind.beta, grad);
    case LossType::squentropy:
        check_label(logits.size(), label, 2);
        return squentropy(logits, label, grad);
    }
    return 0.0;
}

double loss_value(const LossKind& kind, std::span<const double> logits, int label) {
    Vector scratch(logits.size());
    return loss_and_grad(kind, logits, label, scratch);
}

} // namespace lsinit
