#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ope/errors.hpp"
#include "ope/math.hpp"
#include "ope/net.hpp"

namespace ope {

enum class LossVariant { CrossEntropy, Ope, Eope };

inline const char* to_string(LossVariant v) {
    switch (v) {
        case LossVariant::CrossEntropy: return "cross_entropy";
        case LossVariant::Ope: return "ope";
        case LossVariant::Eope: return "eope";
    }
    return "cross_entropy";
}

inline LossVariant loss_variant_from_string(const std::string& s) {
    if (s == "cross_entropy") return LossVariant::CrossEntropy;
    if (s == "ope") return LossVariant::Ope;
    if (s == "eope") return LossVariant::Eope;
    throw ConfigError("unknown loss variant: '" + s + "'");
}

struct LossConfig {
    LossVariant variant = LossVariant::Ope;
    double epsilon = 0.95;
    double gamma = 1.0;
    double pred_reg_c = 1e-3;

    void validate() const {
        if (!(epsilon >= 0.0 && epsilon <= 1.0))
            throw ConfigError("loss epsilon must lie in [0, 1], got " + std::to_string(epsilon));
        if (!(gamma >= 0.0))
            throw ConfigError("loss gamma must be >= 0, got " + std::to_string(gamma));
        if (!(pred_reg_c >= 0.0))
            throw ConfigError("loss pred_reg_c must be >= 0, got " + std::to_string(pred_reg_c));
    }
};

/// Reported per-term values. total = (1/2) (l_plus + gamma l_minus +
/// (1 - epsilon) l_zero_or_energy). For eope, l_zero_or_energy is the mean
/// logit over negative-phase samples: a stochastic stand-in for log Z up to
/// an additive constant, NOT log Z itself; the total is then a monitoring
/// quantity, not the exact objective.
struct LossBreakdown {
    double l_plus = 0.0;
    double l_minus = 0.0;
    double l_zero_or_energy = 0.0;
    double total = 0.0;
};

struct LossResult {
    LossBreakdown breakdown;
    GradientSet grad;
};

namespace detail {

// Mean softplus(-g) over a batch, i.e. mean of -log f. dL/dg_i = (sigmoid(g_i) - 1) / B.
inline double positive_term(const std::vector<double>& g, std::vector<double>& dL_dg) {
    double loss = 0.0;
    double inv = 1.0 / static_cast<double>(g.size());
    dL_dg.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        loss += softplus(-g[i]);
        dL_dg[i] = (sigmoid(g[i]) - 1.0) * inv;
    }
    return loss * inv;
}

// Mean softplus(g) over a batch, i.e. mean of -log(1 - f). dL/dg_i = sigmoid(g_i) / B.
inline double negative_term(const std::vector<double>& g, std::vector<double>& dL_dg) {
    double loss = 0.0;
    double inv = 1.0 / static_cast<double>(g.size());
    dL_dg.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        loss += softplus(g[i]);
        dL_dg[i] = sigmoid(g[i]) * inv;
    }
    return loss * inv;
}

inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace detail

/// Negative-phase gradient estimate: mean over rows of grad_theta g(x).
/// This is the contrastive-divergence stand-in for grad log Z; exposed
/// separately because it has no matching scalar to finite-difference.
inline GradientSet energy_gradient(const DenseNet& net, const Tensor2& X0) {
    if (X0.empty()) throw DataError("energy_gradient: empty negative-phase batch");
    std::vector<double> w(X0.rows, 1.0 / static_cast<double>(X0.rows));
    return net.param_grad(X0, w);
}

/// Gradient of c * mean g(x)^2 over the batch (the prediction-l2 stabilizer).
inline GradientSet prediction_reg_gradient(const DenseNet& net, const Tensor2& X0, double c,
                                           const std::vector<double>& g0) {
    std::vector<double> w(X0.rows);
    double inv = 1.0 / static_cast<double>(X0.rows);
    for (std::size_t i = 0; i < X0.rows; ++i) w[i] = 2.0 * c * g0[i] * inv;
    return net.param_grad(X0, w);
}

/// Two-class baseline: total = (1/2)(L+ + gamma L-) in softplus form.
/// The returned gradient is grad L+ + gamma grad L-; the 1/2 prefactor of the
/// reported total is absorbed into the update direction (it only rescales the
/// effective learning rate), matching the other variants.
inline LossResult cross_entropy_loss_and_grad(const DenseNet& net, const Tensor2& pos,
                                              const Tensor2& neg, double gamma) {
    if (pos.empty()) throw DataError("cross_entropy: empty positive batch");
    if (neg.empty()) throw DataError("cross_entropy: empty negative batch");
    std::vector<double> g_pos = net.logits(pos);
    std::vector<double> g_neg = net.logits(neg);
    std::vector<double> dpos, dneg;
    LossResult res;
    res.breakdown.l_plus = detail::positive_term(g_pos, dpos);
    res.breakdown.l_minus = detail::negative_term(g_neg, dneg);
    res.breakdown.l_zero_or_energy = 0.0;
    res.breakdown.total = 0.5 * (res.breakdown.l_plus + gamma * res.breakdown.l_minus);
    res.grad = net.param_grad(pos, dpos);
    if (gamma != 0.0) res.grad.axpy(gamma, net.param_grad(neg, dneg));
    return res;
}

/// Brute-force variant: uniform-box batch carries the background term.
/// neg may be empty (one-class mode); the known-anomaly term is then dropped.
/// Gradient = grad L+ + gamma grad L- + (1 - epsilon) grad L0, with each term
/// the gradient of the batch mean; the 1/2 of the reported total is absorbed
/// as in cross_entropy_loss_and_grad. Zero-weight terms are skipped exactly,
/// so epsilon = 1 reproduces the cross-entropy gradient bit for bit.
inline LossResult ope_loss_and_grad(const DenseNet& net, const Tensor2& pos, const Tensor2& neg,
                                    const Tensor2& unif, const LossConfig& cfg) {
    cfg.validate();
    if (pos.empty()) throw DataError("ope: empty positive batch");
    if (unif.empty()) throw DataError("ope: empty uniform batch");
    std::vector<double> g_pos = net.logits(pos);
    std::vector<double> g_unif = net.logits(unif);
    std::vector<double> dpos, dneg, dunif;

    LossResult res;
    res.breakdown.l_plus = detail::positive_term(g_pos, dpos);
    res.breakdown.l_zero_or_energy = detail::negative_term(g_unif, dunif);
    double w0 = 1.0 - cfg.epsilon;
    res.grad = net.param_grad(pos, dpos);
    if (!neg.empty()) {
        std::vector<double> g_neg = net.logits(neg);
        res.breakdown.l_minus = detail::negative_term(g_neg, dneg);
        if (cfg.gamma != 0.0) res.grad.axpy(cfg.gamma, net.param_grad(neg, dneg));
    }
    if (w0 != 0.0) res.grad.axpy(w0, net.param_grad(unif, dunif));
    res.breakdown.total = 0.5 * (res.breakdown.l_plus + cfg.gamma * res.breakdown.l_minus +
                                 w0 * res.breakdown.l_zero_or_energy);
    return res;
}

/// Energy variant: negative_phase rows must come from a sampler targeting
/// exp(g(x)) over the box. The background gradient is the contrastive
/// estimate mean grad g plus the prediction-l2 stabilizer, both weighted by
/// (1 - epsilon). Same absorbed-1/2 convention as the other variants.
inline LossResult eope_loss_and_grad(const DenseNet& net, const Tensor2& pos, const Tensor2& neg,
                                     const Tensor2& negative_phase, const LossConfig& cfg) {
    cfg.validate();
    if (pos.empty()) throw DataError("eope: empty positive batch");
    if (negative_phase.empty())
        throw DataError("eope: empty negative-phase batch (the energy estimator is undefined)");
    std::vector<double> g_pos = net.logits(pos);
    std::vector<double> g0 = net.logits(negative_phase);
    std::vector<double> dpos, dneg;

    LossResult res;
    res.breakdown.l_plus = detail::positive_term(g_pos, dpos);
    res.breakdown.l_zero_or_energy = detail::mean(g0);
    double w0 = 1.0 - cfg.epsilon;
    res.grad = net.param_grad(pos, dpos);
    if (!neg.empty()) {
        std::vector<double> g_neg = net.logits(neg);
        res.breakdown.l_minus = detail::negative_term(g_neg, dneg);
        if (cfg.gamma != 0.0) res.grad.axpy(cfg.gamma, net.param_grad(neg, dneg));
    }
    if (w0 != 0.0) {
        res.grad.axpy(w0, energy_gradient(net, negative_phase));
        if (cfg.pred_reg_c != 0.0)
            res.grad.axpy(w0, prediction_reg_gradient(net, negative_phase, cfg.pred_reg_c, g0));
    }
    res.breakdown.total = 0.5 * (res.breakdown.l_plus + cfg.gamma * res.breakdown.l_minus +
                                 w0 * res.breakdown.l_zero_or_energy);
    return res;
}

/// Pointwise minimizer of the OPE objective for known densities:
///   f*(x) = p_pos / (p_pos + (1 - epsilon) C + gamma p_neg).
/// With C = 0 and gamma = 1 this is the equal-prior Bayes posterior.
inline double optimal_f(double p_pos, double p_neg, double C, double gamma, double epsilon) {
    if (p_pos < 0.0 || p_neg < 0.0 || C < 0.0)
        throw DomainError("optimal_f: densities must be non-negative");
    double denom = p_pos + (1.0 - epsilon) * C + gamma * p_neg;
    if (denom <= 0.0) throw DomainError("optimal_f: zero denominator");
    return p_pos / denom;
}

}  // namespace ope
