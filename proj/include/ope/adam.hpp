#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ope/errors.hpp"
#include "ope/net.hpp"

namespace ope {

struct AdamConfig {
    double lr = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Bias-corrected adam accumulators, one pair per parameter block.
struct AdamState {
    AdamConfig cfg;
    std::uint64_t step = 0;
    std::vector<Tensor2> mW, vW;
    std::vector<std::vector<double>> mb, vb;

    static AdamState init(const DenseNet& net, AdamConfig cfg = {}) {
        AdamState s;
        s.cfg = cfg;
        for (const auto& layer : net.layers()) {
            s.mW.emplace_back(layer.W.rows, layer.W.cols);
            s.vW.emplace_back(layer.W.rows, layer.W.cols);
            s.mb.emplace_back(layer.b.size(), 0.0);
            s.vb.emplace_back(layer.b.size(), 0.0);
        }
        return s;
    }
};

namespace detail {

inline void adam_update_block(std::vector<double>& param, const std::vector<double>& grad,
                              std::vector<double>& m, std::vector<double>& v,
                              const AdamConfig& cfg, double c1, double c2,
                              const std::string& block_name) {
    for (std::size_t i = 0; i < param.size(); ++i) {
        double g = grad[i];
        if (!std::isfinite(g))
            throw NumericError("adam_step: non-finite gradient in " + block_name);
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        double mhat = m[i] / c1;
        double vhat = v[i] / c2;
        param[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
}

}  // namespace detail

/// One bias-corrected adam step in place. Throws NumericError naming the
/// offending block if any gradient entry is non-finite.
inline void adam_step(DenseNet& net, const GradientSet& grads, AdamState& state) {
    auto& layers = net.layers();
    if (grads.dW.size() != layers.size())
        throw DimensionError("adam_step layer count", layers.size(), grads.dW.size());
    state.step += 1;
    double c1 = 1.0 - std::pow(state.cfg.beta1, static_cast<double>(state.step));
    double c2 = 1.0 - std::pow(state.cfg.beta2, static_cast<double>(state.step));
    for (std::size_t l = 0; l < layers.size(); ++l) {
        std::string tag = "layer " + std::to_string(l);
        detail::adam_update_block(layers[l].W.data, grads.dW[l].data, state.mW[l].data,
                                  state.vW[l].data, state.cfg, c1, c2, tag + " weights");
        detail::adam_update_block(layers[l].b, grads.db[l], state.mb[l], state.vb[l], state.cfg,
                                  c1, c2, tag + " biases");
    }
}

}  // namespace ope
