#pragma once

#include <span>
#include <string>
#include <string_view>

#include "lsinit/matrix.hpp"

namespace lsinit {

enum class LossType { ce, mse, squentropy };

/// Training objective. kappa and beta only matter for the scaled MSE loss.
struct LossKind {
    LossType type = LossType::ce;
    double kappa = 15.0;
    double beta = 30.0;

    void validate() const;
};

std::string_view to_string(LossType type);
LossType parse_loss_type(std::string_view name);

struct LossValue {
    double loss = 0.0;
    Vector grad;
};

LossValue ce_loss_and_grad(std::span<const double> logits, int label);
LossValue mse_loss_and_grad(std::span<const double> logits, int label, double kappa, double beta);
LossValue squentropy_loss_and_grad(std::span<const double> logits, int label);

/// Dispatches on `kind`; writes d(loss)/d(logits) into `grad` and returns the loss.
double loss_and_grad(const LossKind& kind, std::span<const double> logits, int label,
                     std::span<double> grad);

/// Loss only, no gradient.
double loss_value(const LossKind& kind, std::span<const double> logits, int label);

} // namespace lsinit
