#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ope/errors.hpp"
#include "ope/rng.hpp"
#include "ope/tensor.hpp"

namespace ope {

enum class Activation { Linear, Tanh, Relu, Sigmoid };

inline const char* to_string(Activation a) {
    switch (a) {
        case Activation::Linear: return "linear";
        case Activation::Tanh: return "tanh";
        case Activation::Relu: return "relu";
        case Activation::Sigmoid: return "sigmoid";
    }
    return "linear";
}

inline Activation activation_from_string(const std::string& s) {
    if (s == "linear") return Activation::Linear;
    if (s == "tanh") return Activation::Tanh;
    if (s == "relu") return Activation::Relu;
    if (s == "sigmoid") return Activation::Sigmoid;
    throw ConfigError("unknown activation: '" + s + "'");
}

inline double activate(Activation a, double z) {
    switch (a) {
        case Activation::Linear: return z;
        case Activation::Tanh: return std::tanh(z);
        case Activation::Relu: return z > 0.0 ? z : 0.0;
        case Activation::Sigmoid: return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                                                  : std::exp(z) / (1.0 + std::exp(z));
    }
    return z;
}

/// Derivative of the activation with respect to its pre-activation input.
inline double activate_grad(Activation a, double z) {
    switch (a) {
        case Activation::Linear: return 1.0;
        case Activation::Tanh: {
            double t = std::tanh(z);
            return 1.0 - t * t;
        }
        case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
        case Activation::Sigmoid: {
            double s = activate(Activation::Sigmoid, z);
            return s * (1.0 - s);
        }
    }
    return 1.0;
}

/// One fully connected layer: out = act(in * W + b), W is in_dim x out_dim.
struct DenseLayer {
    Tensor2 W;
    std::vector<double> b;
    Activation act = Activation::Linear;

    std::size_t in_dim() const { return W.rows; }
    std::size_t out_dim() const { return W.cols; }
};

/// Per-layer parameter gradients, shaped like the network they came from.
struct GradientSet {
    std::vector<Tensor2> dW;
    std::vector<std::vector<double>> db;

    /// this += scale * other
    void axpy(double scale, const GradientSet& other) {
        for (std::size_t l = 0; l < dW.size(); ++l) {
            for (std::size_t i = 0; i < dW[l].data.size(); ++i)
                dW[l].data[i] += scale * other.dW[l].data[i];
            for (std::size_t i = 0; i < db[l].size(); ++i)
                db[l][i] += scale * other.db[l][i];
        }
    }

    bool all_finite() const {
        for (const auto& t : dW)
            if (!t.all_finite()) return false;
        for (const auto& v : db)
            for (double x : v)
                if (!std::isfinite(x)) return false;
        return true;
    }
};

/// Fully connected network. The last layer is linear by construction; for
/// classifiers it produces the logit g(x), with f(x) = sigmoid(g(x)) applied
/// downstream. Generators reuse the same type with out_dim > 1.
class DenseNet {
public:
    DenseNet() = default;

    /// dims = {in, hidden..., out}; hidden layers get `hidden_act`, the final
    /// layer is linear. Weights are Glorot-uniform from `rng`, biases zero.
    DenseNet(const std::vector<std::size_t>& dims, Activation hidden_act, Rng& rng) {
        if (dims.size() < 2) throw ConfigError("DenseNet needs at least input and output dims");
        for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
            DenseLayer layer;
            layer.W = Tensor2(dims[l], dims[l + 1]);
            layer.b.assign(dims[l + 1], 0.0);
            layer.act = (l + 2 == dims.size()) ? Activation::Linear : hidden_act;
            double limit = std::sqrt(6.0 / static_cast<double>(dims[l] + dims[l + 1]));
            for (double& w : layer.W.data) w = rng.uniform(-limit, limit);
            layers_.push_back(std::move(layer));
        }
    }

    /// All-zero weights and biases; forward is identically zero.
    static DenseNet zeros(const std::vector<std::size_t>& dims,
                          Activation hidden_act = Activation::Tanh) {
        Rng dummy(0);
        DenseNet net(dims, hidden_act, dummy);
        for (auto& layer : net.layers_)
            std::fill(layer.W.data.begin(), layer.W.data.end(), 0.0);
        return net;
    }

    std::size_t in_dim() const { return layers_.front().in_dim(); }
    std::size_t out_dim() const { return layers_.back().out_dim(); }
    std::size_t n_layers() const { return layers_.size(); }

    std::vector<DenseLayer>& layers() { return layers_; }
    const std::vector<DenseLayer>& layers() const { return layers_; }

    /// Intermediate values of one forward pass; act[0] is the input batch,
    /// pre[l] / act[l + 1] belong to layer l.
    struct Cache {
        std::vector<Tensor2> pre;
        std::vector<Tensor2> act;
    };

    Tensor2 forward(const Tensor2& X) const {
        Cache cache;
        return forward_cached(X, cache);
    }

    Tensor2 forward_cached(const Tensor2& X, Cache& cache) const {
        if (X.cols != in_dim())
            throw DimensionError("DenseNet::forward input dim", in_dim(), X.cols);
        cache.pre.clear();
        cache.act.clear();
        cache.act.push_back(X);
        for (const auto& layer : layers_) {
            const Tensor2& a = cache.act.back();
            Tensor2 z(a.rows, layer.out_dim());
            for (std::size_t i = 0; i < a.rows; ++i) {
                double* zi = z.data.data() + i * z.cols;
                for (std::size_t j = 0; j < z.cols; ++j) zi[j] = layer.b[j];
                const double* ai = a.data.data() + i * a.cols;
                for (std::size_t k = 0; k < a.cols; ++k) {
                    double aik = ai[k];
                    const double* wk = layer.W.data.data() + k * layer.W.cols;
                    for (std::size_t j = 0; j < z.cols; ++j) zi[j] += aik * wk[j];
                }
            }
            Tensor2 out(z.rows, z.cols);
            for (std::size_t i = 0; i < z.data.size(); ++i)
                out.data[i] = activate(layer.act, z.data[i]);
            cache.pre.push_back(std::move(z));
            cache.act.push_back(std::move(out));
        }
        return cache.act.back();
    }

    /// Scalar logits g(x) per batch row; requires out_dim() == 1.
    std::vector<double> logits(const Tensor2& X) const {
        require_scalar_output();
        Tensor2 out = forward(X);
        return out.data;
    }

    /// Gradient of sum_i dL_dout[i, :] . y_i with respect to all parameters.
    GradientSet backward_params(const Cache& cache, const Tensor2& dL_dout) const {
        GradientSet grads = zero_gradients();
        Tensor2 delta = dL_dout;
        backprop(cache, delta, &grads, nullptr);
        return grads;
    }

    /// dL/dX for the batch that produced `cache`.
    Tensor2 backward_inputs(const Cache& cache, const Tensor2& dL_dout) const {
        Tensor2 dX;
        Tensor2 delta = dL_dout;
        backprop(cache, delta, nullptr, &dX);
        return dX;
    }

    /// Exact gradient of sum_i dL_dg[i] * g(x_i) w.r.t. parameters
    /// (scalar-output networks).
    GradientSet param_grad(const Tensor2& X, const std::vector<double>& dL_dg) const {
        require_scalar_output();
        if (dL_dg.size() != X.rows)
            throw DimensionError("param_grad dL_dg length", X.rows, dL_dg.size());
        Cache cache;
        forward_cached(X, cache);
        Tensor2 dL(X.rows, 1);
        dL.data = dL_dg;
        return backward_params(cache, dL);
    }

    /// Per-row input gradients of g (scalar-output networks): row i of the
    /// result is grad_x g(x_i). Rows are independent, so one batched
    /// backward pass serves all MCMC chains at once.
    Tensor2 input_gradients(const Tensor2& X) const {
        require_scalar_output();
        Cache cache;
        forward_cached(X, cache);
        Tensor2 ones(X.rows, 1, 1.0);
        return backward_inputs(cache, ones);
    }

    /// grad_x g(x) for a single point.
    std::vector<double> input_grad(const std::vector<double>& x) const {
        Tensor2 g = input_gradients(Tensor2::single_row(x));
        return g.data;
    }

    GradientSet zero_gradients() const {
        GradientSet g;
        for (const auto& layer : layers_) {
            g.dW.emplace_back(layer.W.rows, layer.W.cols);
            g.db.emplace_back(layer.b.size(), 0.0);
        }
        return g;
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& layer : layers_) n += layer.W.data.size() + layer.b.size();
        return n;
    }

private:
    void require_scalar_output() const {
        if (layers_.empty() || out_dim() != 1)
            throw DimensionError("expected scalar-output network, output dim is " +
                                 std::to_string(layers_.empty() ? 0 : out_dim()));
    }

    // Shared backward walk. `delta` enters as dL/d(output activations) and is
    // consumed. Fills parameter grads and/or input grads when requested.
    void backprop(const Cache& cache, Tensor2& delta, GradientSet* grads, Tensor2* dX) const {
        for (std::size_t li = layers_.size(); li-- > 0;) {
            const DenseLayer& layer = layers_[li];
            const Tensor2& z = cache.pre[li];
            const Tensor2& a_in = cache.act[li];
            // delta <- dL/dz = dL/da (.) act'(z)
            if (layer.act != Activation::Linear) {
                for (std::size_t i = 0; i < delta.data.size(); ++i)
                    delta.data[i] *= activate_grad(layer.act, z.data[i]);
            }
            if (grads) {
                Tensor2& dW = grads->dW[li];
                std::vector<double>& db = grads->db[li];
                for (std::size_t i = 0; i < a_in.rows; ++i) {
                    const double* ai = a_in.data.data() + i * a_in.cols;
                    const double* di = delta.data.data() + i * delta.cols;
                    for (std::size_t k = 0; k < a_in.cols; ++k) {
                        double aik = ai[k];
                        double* dwk = dW.data.data() + k * dW.cols;
                        for (std::size_t j = 0; j < delta.cols; ++j) dwk[j] += aik * di[j];
                    }
                    for (std::size_t j = 0; j < delta.cols; ++j) db[j] += di[j];
                }
            }
            bool need_input = (li > 0) || (dX != nullptr);
            if (!need_input) break;
            // prev_delta = delta * W^T, row i of prev: dot(delta_i, W_k.)
            Tensor2 prev(delta.rows, layer.in_dim());
            for (std::size_t i = 0; i < delta.rows; ++i) {
                const double* di = delta.data.data() + i * delta.cols;
                double* pi = prev.data.data() + i * prev.cols;
                for (std::size_t k = 0; k < prev.cols; ++k) {
                    const double* wk = layer.W.data.data() + k * layer.W.cols;
                    double s = 0.0;
                    for (std::size_t j = 0; j < delta.cols; ++j) s += di[j] * wk[j];
                    pi[k] = s;
                }
            }
            delta = std::move(prev);
        }
        if (dX) *dX = std::move(delta);
    }

    std::vector<DenseLayer> layers_;
};

}  // namespace ope
