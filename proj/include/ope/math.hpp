#pragma once

#include <cmath>

#include "ope/errors.hpp"

namespace ope {

/// log(1 + exp(z)) without overflow: max(z, 0) + log1p(exp(-|z|)).
/// Identities used throughout the losses: -log sigmoid(g) = softplus(-g)
/// and -log(1 - sigmoid(g)) = softplus(g).
inline double softplus(double z) {
    return std::fmax(z, 0.0) + std::log1p(std::exp(-std::fabs(z)));
}

/// 1 / (1 + exp(-z)), evaluated on the non-overflowing branch.
inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

/// Inverse of sigmoid; defined for p in (0, 1).
inline double logit(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw DomainError("logit: argument must lie in (0, 1)");
    return std::log(p) - std::log1p(-p);
}

}  // namespace ope
