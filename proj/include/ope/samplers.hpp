#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ope/adam.hpp"
#include "ope/errors.hpp"
#include "ope/net.hpp"
#include "ope/rng.hpp"
#include "ope/tensor.hpp"

namespace ope {

/// Anything that exposes batched logits g(x) and per-row input gradients.
/// DenseNet satisfies this; tests use analytic logits (e.g. a quadratic) to
/// check samplers against known target distributions.
template <class M>
concept LogitModel = requires(const M& m, const Tensor2& X) {
    { m.logits(X) } -> std::convertible_to<std::vector<double>>;
    { m.input_gradients(X) } -> std::convertible_to<Tensor2>;
};

/// Axis-aligned box Omega with the density C of the uniform distribution
/// over it. Training fits it around the positive class support.
struct BoxDomain {
    std::vector<double> lo, hi;

    BoxDomain() = default;
    BoxDomain(std::vector<double> lo_, std::vector<double> hi_)
        : lo(std::move(lo_)), hi(std::move(hi_)) {
        validate();
    }

    void validate() const {
        if (lo.size() != hi.size() || lo.empty())
            throw ConfigError("BoxDomain: lo/hi must be non-empty and equally sized");
        for (std::size_t d = 0; d < lo.size(); ++d)
            if (!(hi[d] > lo[d]) || !std::isfinite(lo[d]) || !std::isfinite(hi[d]))
                throw ConfigError("BoxDomain: requires finite hi > lo in every coordinate");
    }

    std::size_t dim() const { return lo.size(); }

    double volume() const {
        double v = 1.0;
        for (std::size_t d = 0; d < dim(); ++d) v *= hi[d] - lo[d];
        return v;
    }

    /// C = 1 / volume.
    double density() const { return 1.0 / volume(); }

    double mean_edge() const {
        double s = 0.0;
        for (std::size_t d = 0; d < dim(); ++d) s += hi[d] - lo[d];
        return s / static_cast<double>(dim());
    }

    bool contains(std::span<const double> x) const {
        for (std::size_t d = 0; d < dim(); ++d)
            if (x[d] < lo[d] || x[d] > hi[d]) return false;
        return true;
    }

    void clamp_row(std::span<double> x) const {
        for (std::size_t d = 0; d < dim(); ++d) x[d] = std::clamp(x[d], lo[d], hi[d]);
    }

    /// Fold a coordinate back into [lo, hi] by wall reflections, negating the
    /// paired momentum component once per bounce.
    static void reflect_coord(double& x, double& p, double lo_d, double hi_d) {
        int guard = 0;
        while ((x < lo_d || x > hi_d) && ++guard < 256) {
            if (x < lo_d) {
                x = 2.0 * lo_d - x;
            } else {
                x = 2.0 * hi_d - x;
            }
            p = -p;
        }
        if (x < lo_d || x > hi_d) x = std::clamp(x, lo_d, hi_d);  // runaway step
    }

    void reflect_row(std::span<double> x, std::span<double> p) const {
        for (std::size_t d = 0; d < dim(); ++d) reflect_coord(x[d], p[d], lo[d], hi[d]);
    }

    void reflect_row(std::span<double> x) const {
        for (std::size_t d = 0; d < dim(); ++d) {
            double ignored = 0.0;
            reflect_coord(x[d], ignored, lo[d], hi[d]);
        }
    }

    /// Per-feature [min - padding*range, max + padding*range] over a sample
    /// matrix. Zero-range features get a unit pad so the box stays valid.
    static BoxDomain fit(const Tensor2& samples, double padding = 0.1) {
        if (samples.empty()) throw DataError("BoxDomain::fit: empty sample matrix");
        std::vector<double> lo(samples.cols, std::numeric_limits<double>::infinity());
        std::vector<double> hi(samples.cols, -std::numeric_limits<double>::infinity());
        for (std::size_t i = 0; i < samples.rows; ++i)
            for (std::size_t d = 0; d < samples.cols; ++d) {
                lo[d] = std::fmin(lo[d], samples(i, d));
                hi[d] = std::fmax(hi[d], samples(i, d));
            }
        for (std::size_t d = 0; d < samples.cols; ++d) {
            double range = hi[d] - lo[d];
            double pad = range > 0.0 ? padding * range : 1.0;
            lo[d] -= pad;
            hi[d] += pad;
        }
        return BoxDomain(std::move(lo), std::move(hi));
    }
};

/// i.i.d. uniform draws over the box, row-major draw order.
inline Tensor2 uniform_sample(const BoxDomain& domain, std::size_t m, Rng& rng) {
    if (m == 0) throw ConfigError("uniform_sample: m must be >= 1");
    Tensor2 X(m, domain.dim());
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t d = 0; d < domain.dim(); ++d)
            X(i, d) = rng.uniform(domain.lo[d], domain.hi[d]);
    return X;
}

struct SamplerStats {
    std::size_t proposed = 0;
    std::size_t accepted = 0;
    std::size_t restarts = 0;
    std::size_t nonfinite_rejects = 0;

    double acceptance_rate() const {
        return proposed == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposed);
    }
};

/// Persistent negative-phase chains: positions, RMSProp second-moment
/// accumulators, an owned RNG stream, and running diagnostics.
struct ChainState {
    Tensor2 positions;
    Tensor2 rmsprop_m;
    Rng rng;
    SamplerStats stats;

    ChainState(Tensor2 pos, Tensor2 msq, Rng r)
        : positions(std::move(pos)), rmsprop_m(std::move(msq)), rng(r) {}

    static ChainState init(const BoxDomain& domain, std::size_t m, std::uint64_t seed) {
        Rng rng(seed);
        Tensor2 pos = uniform_sample(domain, m, rng);
        return ChainState(std::move(pos), Tensor2(m, domain.dim()), rng);
    }

    std::size_t n_chains() const { return positions.rows; }
};

/// Leapfrog integration of the Hamiltonian with potential U(x) = -g(x),
/// batched over rows (chains). X and P are updated in place; box walls act
/// as reflecting boundaries (position folds back, momentum component flips),
/// which keeps the integrator time-reversible and volume-preserving.
template <LogitModel M>
void leapfrog(const M& model, const BoxDomain& domain, Tensor2& X, Tensor2& P, double step_size,
              std::size_t n_steps) {
    if (n_steps == 0 || step_size == 0.0) return;
    // grad U = -grad g, so every kick adds step * grad g.
    Tensor2 G = model.input_gradients(X);
    for (std::size_t i = 0; i < P.data.size(); ++i) P.data[i] += 0.5 * step_size * G.data[i];
    for (std::size_t s = 0; s < n_steps; ++s) {
        for (std::size_t r = 0; r < X.rows; ++r) {
            auto x = X.row(r);
            auto p = P.row(r);
            for (std::size_t d = 0; d < X.cols; ++d) x[d] += step_size * p[d];
            domain.reflect_row(x, p);
        }
        if (s + 1 < n_steps) {
            G = model.input_gradients(X);
            for (std::size_t i = 0; i < P.data.size(); ++i) P.data[i] += step_size * G.data[i];
        }
    }
    G = model.input_gradients(X);
    for (std::size_t i = 0; i < P.data.size(); ++i) P.data[i] += 0.5 * step_size * G.data[i];
}

/// One HMC update of every chain: momentum refresh, leapfrog trajectory,
/// Metropolis accept/reject against H = -g(x) + |p|^2 / 2. Chains whose
/// trajectory produced non-finite values reject and are counted.
template <LogitModel M>
void hmc_step(const M& model, const BoxDomain& domain, ChainState& state, double step_size,
              std::size_t n_leapfrog) {
    const std::size_t m = state.positions.rows;
    const std::size_t n = state.positions.cols;
    Tensor2 P(m, n);
    for (double& p : P.data) p = state.rng.normal();

    std::vector<double> g0 = model.logits(state.positions);
    std::vector<double> kin0(m, 0.0);
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t d = 0; d < n; ++d) kin0[r] += 0.5 * P(r, d) * P(r, d);

    Tensor2 X = state.positions;
    leapfrog(model, domain, X, P, step_size, n_leapfrog);

    std::vector<double> g1 = model.logits(X);
    for (std::size_t r = 0; r < m; ++r) {
        state.stats.proposed += 1;
        double kin1 = 0.0;
        bool finite = std::isfinite(g1[r]);
        for (std::size_t d = 0; d < n; ++d) {
            kin1 += 0.5 * P(r, d) * P(r, d);
            finite = finite && std::isfinite(X(r, d));
        }
        if (!finite) {
            state.stats.nonfinite_rejects += 1;
            state.rng.uniform();  // keep the accept stream aligned
            continue;
        }
        // dH = H_old - H_new with U = -g.
        double dH = (-g0[r] + kin0[r]) - (-g1[r] + kin1);
        double u = state.rng.uniform();
        if (std::log(u > 0.0 ? u : 5e-324) < dH) {
            auto src = X.row(r);
            std::copy(src.begin(), src.end(), state.positions.row(r).begin());
            state.stats.accepted += 1;
        }
    }
}

/// RMSProp-style pseudo-MCMC update:
///   m' = rho m + (1 - rho) grad g (.) grad g
///   x' = x + eta [ grad g / sqrt(max(m', 1e-8)) + lambda xi ],  xi ~ N(0, I)
/// followed by wall reflection. With rho = 0, lambda = 0 each coordinate
/// moves by exactly +-eta wherever grad g^2 clears the floor.
template <LogitModel M>
void rmsprop_step(const M& model, const BoxDomain& domain, ChainState& state, double eta,
                  double rho, double lambda) {
    if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("rmsprop_step: rho must be in [0, 1)");
    if (!(eta > 0.0)) throw ConfigError("rmsprop_step: eta must be > 0");
    if (!(lambda >= 0.0)) throw ConfigError("rmsprop_step: lambda must be >= 0");
    Tensor2 G = model.input_gradients(state.positions);
    for (std::size_t r = 0; r < state.positions.rows; ++r) {
        auto x = state.positions.row(r);
        auto msq = state.rmsprop_m.row(r);
        const double* g = G.data.data() + r * G.cols;
        for (std::size_t d = 0; d < state.positions.cols; ++d) {
            msq[d] = rho * msq[d] + (1.0 - rho) * g[d] * g[d];
            double noise = lambda > 0.0 ? lambda * state.rng.normal() : 0.0;
            x[d] += eta * (g[d] / std::sqrt(std::fmax(msq[d], 1e-8)) + noise);
        }
        domain.reflect_row(x);
    }
}

enum class SamplerKind { Uniform, Hmc, Rmsprop, Generator };

inline const char* to_string(SamplerKind k) {
    switch (k) {
        case SamplerKind::Uniform: return "uniform";
        case SamplerKind::Hmc: return "hmc";
        case SamplerKind::Rmsprop: return "rmsprop";
        case SamplerKind::Generator: return "generator";
    }
    return "uniform";
}

inline SamplerKind sampler_kind_from_string(const std::string& s) {
    if (s == "uniform") return SamplerKind::Uniform;
    if (s == "hmc") return SamplerKind::Hmc;
    if (s == "rmsprop") return SamplerKind::Rmsprop;
    if (s == "generator") return SamplerKind::Generator;
    throw ConfigError("unknown sampler kind: '" + s + "'");
}

/// MCMC sampler knobs. Zero-valued step sizes resolve against the box at use
/// time; neither scale is given in the method description, so the defaults
/// are tied to the box geometry.
struct SamplerOptions {
    SamplerKind kind = SamplerKind::Hmc;
    std::size_t steps_per_update = 4;
    double restart_prob = 0.05;
    double hmc_step_size = 0.0;  // 0 => 0.05 * mean box edge
    std::size_t hmc_n_leapfrog = 5;
    double rmsprop_eta = 0.0;  // 0 => 0.01 * mean box edge
    double rmsprop_rho = 0.9;
    double rmsprop_lambda = 1.0;

    double resolved_hmc_step(const BoxDomain& domain) const {
        return hmc_step_size > 0.0 ? hmc_step_size : 0.05 * domain.mean_edge();
    }

    double resolved_eta(const BoxDomain& domain) const {
        return rmsprop_eta > 0.0 ? rmsprop_eta : 0.01 * domain.mean_edge();
    }
};

/// Advance persistent chains by steps_per_update sampler steps and return the
/// current positions as the negative-phase batch. Each chain first restarts
/// uniformly in the box with probability restart_prob (restart_prob = 1 gives
/// the non-persistent sampler).
template <LogitModel M>
Tensor2 persistent_negative_phase(const M& model, const BoxDomain& domain, ChainState& state,
                                  const SamplerOptions& opt) {
    for (std::size_t r = 0; r < state.n_chains(); ++r) {
        if (opt.restart_prob > 0.0 && state.rng.bernoulli(opt.restart_prob)) {
            auto x = state.positions.row(r);
            for (std::size_t d = 0; d < domain.dim(); ++d)
                x[d] = state.rng.uniform(domain.lo[d], domain.hi[d]);
            auto msq = state.rmsprop_m.row(r);
            std::fill(msq.begin(), msq.end(), 0.0);
            state.stats.restarts += 1;
        }
    }
    for (std::size_t s = 0; s < opt.steps_per_update; ++s) {
        switch (opt.kind) {
            case SamplerKind::Hmc:
                hmc_step(model, domain, state, opt.resolved_hmc_step(domain), opt.hmc_n_leapfrog);
                break;
            case SamplerKind::Rmsprop:
                rmsprop_step(model, domain, state, opt.resolved_eta(domain), opt.rmsprop_rho,
                             opt.rmsprop_lambda);
                break;
            default:
                throw ConfigError("persistent_negative_phase: sampler kind must be hmc or rmsprop");
        }
    }
    return state.positions;
}

/// Latent-to-sample generator network with its own optimizer state.
struct GeneratorNet {
    DenseNet net;  // latent_dim -> ... -> sample dim, final linear
    std::size_t latent_dim = 0;
    AdamState opt;

    static GeneratorNet init(std::size_t latent_dim, const std::vector<std::size_t>& hidden,
                             std::size_t out_dim, Rng& rng, AdamConfig adam_cfg = {}) {
        std::vector<std::size_t> dims;
        dims.push_back(latent_dim);
        dims.insert(dims.end(), hidden.begin(), hidden.end());
        dims.push_back(out_dim);
        GeneratorNet g;
        g.net = DenseNet(dims, Activation::Tanh, rng);
        g.latent_dim = latent_dim;
        g.opt = AdamState::init(g.net, adam_cfg);
        return g;
    }
};

/// Negative-phase batch from the generator: y = G(z), z ~ N(0, I), clamped
/// into the box. Clamping (not reflection) is intentional here; the energy
/// losses tolerate approximate support.
inline Tensor2 generator_negative_phase(GeneratorNet& gen, const BoxDomain& domain, std::size_t m,
                                        Rng& rng) {
    if (gen.net.out_dim() != domain.dim())
        throw DimensionError("generator output dim", domain.dim(), gen.net.out_dim());
    Tensor2 Z(m, gen.latent_dim);
    for (double& z : Z.data) z = rng.normal();
    Tensor2 Y = gen.net.forward(Z);
    for (std::size_t r = 0; r < Y.rows; ++r) domain.clamp_row(Y.row(r));
    return Y;
}

struct GeneratorStepStats {
    double mean_g = 0.0;
    double repulsion = 0.0;
};

/// One ascent step on the generator objective
///   J = mean_i g(G(z_i)) - mean_{i<j} exp(-|G(z_i) - G(z_j)|^2 / h),
/// h = (mean box edge)^2. The pairwise term keeps the batch spread out;
/// the objective is evaluated on raw generator outputs (clamping only
/// applies when sampling).
template <LogitModel M>
GeneratorStepStats generator_train_step(const M& model, GeneratorNet& gen,
                                        const BoxDomain& domain, std::size_t m, Rng& rng) {
    if (m == 0) throw ConfigError("generator_train_step: m must be >= 1");
    Tensor2 Z(m, gen.latent_dim);
    for (double& z : Z.data) z = rng.normal();

    DenseNet::Cache cache;
    Tensor2 Y = gen.net.forward_cached(Z, cache);
    const std::size_t n = Y.cols;

    std::vector<double> g = model.logits(Y);
    Tensor2 dJ_dY = model.input_gradients(Y);
    double inv_m = 1.0 / static_cast<double>(m);
    for (double& v : dJ_dY.data) v *= inv_m;

    GeneratorStepStats stats;
    for (double v : g) stats.mean_g += v * inv_m;

    double h = domain.mean_edge() * domain.mean_edge();
    if (m > 1) {
        double inv_pairs = 2.0 / (static_cast<double>(m) * static_cast<double>(m - 1));
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = i + 1; j < m; ++j) {
                double d2 = 0.0;
                for (std::size_t d = 0; d < n; ++d) {
                    double diff = Y(i, d) - Y(j, d);
                    d2 += diff * diff;
                }
                double k = std::exp(-d2 / h);
                stats.repulsion += inv_pairs * k;
                // d/dY_i of -mean_pairs exp(-d2/h) = +inv_pairs * k * 2 (Y_i - Y_j) / h
                double coef = inv_pairs * k * 2.0 / h;
                for (std::size_t d = 0; d < n; ++d) {
                    double diff = Y(i, d) - Y(j, d);
                    dJ_dY(i, d) += coef * diff;
                    dJ_dY(j, d) -= coef * diff;
                }
            }
        }
    }

    double objective = stats.mean_g - stats.repulsion;
    if (!std::isfinite(objective)) {
        double lo = g.empty() ? 0.0 : *std::min_element(g.begin(), g.end());
        double hi = g.empty() ? 0.0 : *std::max_element(g.begin(), g.end());
        throw NumericError("generator_train_step: non-finite objective (mean_g=" +
                           std::to_string(stats.mean_g) + ", repulsion=" +
                           std::to_string(stats.repulsion) + ", g range [" + std::to_string(lo) +
                           ", " + std::to_string(hi) + "])");
    }

    // Ascend J: feed -dJ/dY to the minimizing optimizer.
    for (double& v : dJ_dY.data) v = -v;
    GradientSet grads = gen.net.backward_params(cache, dJ_dY);
    adam_step(gen.net, grads, gen.opt);
    return stats;
}

}  // namespace ope
