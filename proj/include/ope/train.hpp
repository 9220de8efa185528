#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ope/adam.hpp"
#include "ope/config.hpp"
#include "ope/data.hpp"
#include "ope/errors.hpp"
#include "ope/eval.hpp"
#include "ope/losses.hpp"
#include "ope/net.hpp"
#include "ope/rng.hpp"
#include "ope/samplers.hpp"

namespace ope {

struct BuiltData {
    LabeledDataset train;
    LabeledDataset test;
    std::optional<Standardizer> standardizer;
};

/// Generate or load the configured dataset, apply the subsampling protocol to
/// the training split (never the test split), and standardize both with a
/// scaler fitted on training positives. A preset scaler (from a checkpoint)
/// takes precedence over refitting.
inline BuiltData build_dataset(const RunConfig& cfg, Rng& rng,
                               const std::optional<Standardizer>& preset = std::nullopt) {
    LabeledDataset train, test;
    const DatasetConfig& d = cfg.dataset;
    if (d.type == "csv") {
        train = load_csv(d.train_csv, d.label_column);
        train.split = Split::Train;
        if (!d.test_csv.empty()) {
            test = load_csv(d.test_csv, d.label_column);
            test.split = Split::Test;
        } else {
            auto parts = split_train_test(train, d.test_fraction, rng);
            train = std::move(parts.first);
            test = std::move(parts.second);
        }
    } else {
        LabeledDataset full;
        if (d.type == "moons") {
            full = make_moons(d.n, d.noise, rng);
        } else if (d.type == "two_disks") {
            full = make_two_disks(d.n, d.radius, d.centers, rng);
        } else if (d.type == "gaussian_mixture") {
            GaussianMixture pos(d.positive_components);
            if (d.n_neg == 0) {
                full = make_gaussian_mixture(pos, pos, d.n_pos, 0, rng);
            } else {
                GaussianMixture neg(d.negative_components);
                full = make_gaussian_mixture(pos, neg, d.n_pos, d.n_neg, rng);
            }
        } else if (d.type == "moons_ring") {
            full = make_moons_vs_ring(d.n_pos, d.n_neg, d.noise, d.radius, rng);
        } else {
            throw ConfigError("unknown dataset type '" + d.type + "'");
        }
        auto parts = split_train_test(full, d.test_fraction, rng);
        train = std::move(parts.first);
        test = std::move(parts.second);
    }
    train.validate();

    if (d.subsample.mode != SubsampleSpec::Mode::None)
        train = subsample_protocol(train, d.subsample, rng);

    BuiltData out;
    if (d.standardize) {
        Standardizer s = preset ? *preset : Standardizer::fit(train);
        out.standardizer = s;
        train = s.apply(train);
        if (test.n() > 0) test = s.apply(test);
    }
    out.train = std::move(train);
    out.test = std::move(test);
    return out;
}

/// Empirical class-ratio default for gamma: n_pos / n_neg clamped to
/// [1e-3, 1e3], 0 in one-class mode. Small known-anomaly sets get upweighted
/// so the known-anomaly term keeps a comparable say in the update.
inline double resolve_gamma(const RunConfig& cfg, std::size_t n_pos, std::size_t n_neg) {
    if (!cfg.gamma_auto) return cfg.loss.gamma;
    if (n_neg == 0) return 0.0;
    double g = static_cast<double>(n_pos) / static_cast<double>(n_neg);
    return std::clamp(g, 1e-3, 1e3);
}

struct TrainLogRecord {
    std::uint64_t step = 0;
    LossBreakdown loss;
    bool has_sampler_stats = false;
    double acceptance_rate = 0.0;
    double mean_g_neg = 0.0;
    std::uint64_t restarts = 0;
};

struct TrainResult {
    DenseNet net;
    BoxDomain domain;
    std::optional<Standardizer> standardizer;
    LabeledDataset train_data;
    LabeledDataset test_data;
    std::uint64_t steps_run = 0;
    std::string stop_reason;  // "max_steps" | "converged" | "non_finite_loss"
    double resolved_gamma = 0.0;
    std::string fingerprint;
};

using TrainLogSink = std::function<void(const TrainLogRecord&)>;

/// Run the configured training loop: per step, draw a positive minibatch, a
/// known-anomaly minibatch when anomalies exist, and the negative-phase batch
/// (uniform box draws for the brute-force loss, persistent chains or a
/// generator for the energy loss), then combine gradients and take one adam
/// step. Stops at max_steps, on a plateau of the moving-average total loss,
/// or on a non-finite loss (reverting to the last good parameters).
inline TrainResult train_model(const RunConfig& cfg, const TrainLogSink& sink = {}) {
    cfg.validate();

    Rng data_rng(derive_seed(cfg.seed, streams::kData));
    BuiltData data = build_dataset(cfg, data_rng);
    const LabeledDataset& train = data.train;
    const std::size_t dim = train.dim();

    std::vector<std::size_t> pos_pool = train.indices_of(1);
    std::vector<std::size_t> neg_pool = train.indices_of(0);
    if (pos_pool.empty()) throw DataError("training split has no positive samples");
    bool has_neg = !neg_pool.empty();
    if (cfg.loss.variant == LossVariant::CrossEntropy && !has_neg)
        throw ConfigError("cross_entropy needs negative samples; use ope/eope for one-class data");

    BoxDomain domain = cfg.domain_override
                           ? *cfg.domain_override
                           : BoxDomain::fit(train.features_of(1), cfg.domain_padding);
    if (domain.dim() != dim)
        throw DimensionError("domain dimension", dim, domain.dim());

    Rng init_rng(derive_seed(cfg.seed, streams::kInit));
    std::vector<std::size_t> dims;
    dims.push_back(dim);
    dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
    dims.push_back(1);
    DenseNet net(dims, cfg.activation, init_rng);
    AdamState adam = AdamState::init(net, cfg.optimizer);

    LossConfig loss = cfg.loss;
    loss.gamma = resolve_gamma(cfg, pos_pool.size(), neg_pool.size());

    const std::size_t m = cfg.batch_size;
    const std::size_t n_chains = cfg.chains > 0 ? cfg.chains : m;

    Rng batch_rng(derive_seed(cfg.seed, streams::kBatch));
    Rng neg_rng(derive_seed(cfg.seed, streams::kNegativePhase));
    std::optional<ChainState> chain_state;
    std::optional<GeneratorNet> gen;
    bool use_mcmc = cfg.loss.variant == LossVariant::Eope &&
                    (cfg.sampler.kind == SamplerKind::Hmc ||
                     cfg.sampler.kind == SamplerKind::Rmsprop);
    if (use_mcmc)
        chain_state = ChainState::init(domain, n_chains,
                                       derive_seed(cfg.seed, streams::kNegativePhase));
    if (cfg.loss.variant == LossVariant::Eope && cfg.sampler.kind == SamplerKind::Generator) {
        std::size_t latent =
            cfg.generator.latent_dim > 0 ? cfg.generator.latent_dim : std::max<std::size_t>(2, dim);
        gen = GeneratorNet::init(latent, cfg.generator.hidden, dim, init_rng, cfg.optimizer);
    }

    auto draw_batch = [&batch_rng, &train](const std::vector<std::size_t>& pool, std::size_t k) {
        // With replacement: known-anomaly pools can be far smaller than the
        // batch, and the algorithm keeps all three sums at the same size m.
        std::vector<std::size_t> sel(k);
        for (std::size_t i = 0; i < k; ++i) sel[i] = pool[batch_rng.uniform_index(pool.size())];
        return Tensor2::take_rows(train.features, sel);
    };

    TrainResult result;
    result.stop_reason = "max_steps";
    result.resolved_gamma = loss.gamma;
    result.fingerprint = cfg.fingerprint();

    DenseNet prev_net = net;
    std::deque<double> window;
    double prev_window_mean = std::numeric_limits<double>::infinity();

    std::uint64_t step = 0;
    for (step = 1; step <= cfg.max_steps; ++step) {
        Tensor2 pos = draw_batch(pos_pool, m);
        Tensor2 neg = has_neg ? draw_batch(neg_pool, m) : Tensor2{};

        SamplerStats stats_before = chain_state ? chain_state->stats : SamplerStats{};
        LossResult res;
        switch (cfg.loss.variant) {
            case LossVariant::CrossEntropy:
                res = cross_entropy_loss_and_grad(net, pos, neg, loss.gamma);
                break;
            case LossVariant::Ope: {
                Tensor2 unif = uniform_sample(domain, m, neg_rng);
                res = ope_loss_and_grad(net, pos, neg, unif, loss);
                break;
            }
            case LossVariant::Eope: {
                Tensor2 phase = gen ? generator_negative_phase(*gen, domain, m, neg_rng)
                                    : persistent_negative_phase(net, domain, *chain_state,
                                                                cfg.sampler);
                res = eope_loss_and_grad(net, pos, neg, phase, loss);
                break;
            }
        }

        if (!std::isfinite(res.breakdown.total) || !res.grad.all_finite()) {
            net = prev_net;
            result.stop_reason = "non_finite_loss";
            step -= 1;
            break;
        }

        prev_net = net;
        adam_step(net, res.grad, adam);
        if (gen) generator_train_step(net, *gen, domain, m, neg_rng);

        if (sink) {
            TrainLogRecord rec;
            rec.step = step;
            rec.loss = res.breakdown;
            if (chain_state) {
                rec.has_sampler_stats = true;
                const SamplerStats& now = chain_state->stats;
                std::size_t dp = now.proposed - stats_before.proposed;
                rec.acceptance_rate =
                    dp == 0 ? 0.0
                            : static_cast<double>(now.accepted - stats_before.accepted) /
                                  static_cast<double>(dp);
                rec.restarts = now.restarts - stats_before.restarts;
                rec.mean_g_neg = res.breakdown.l_zero_or_energy;
            } else if (cfg.loss.variant == LossVariant::Eope) {
                rec.has_sampler_stats = true;
                rec.mean_g_neg = res.breakdown.l_zero_or_energy;
            }
            sink(rec);
        }

        window.push_back(res.breakdown.total);
        if (window.size() > cfg.convergence_window) window.pop_front();
        if (cfg.convergence_window > 0 && step % cfg.convergence_window == 0 &&
            window.size() == cfg.convergence_window) {
            double mean = 0.0;
            for (double v : window) mean += v;
            mean /= static_cast<double>(window.size());
            if (prev_window_mean - mean < cfg.convergence_tol &&
                std::isfinite(prev_window_mean)) {
                result.stop_reason = "converged";
                break;
            }
            prev_window_mean = mean;
        }
    }

    result.net = std::move(net);
    result.domain = std::move(domain);
    result.standardizer = data.standardizer;
    result.train_data = std::move(data.train);
    result.test_data = std::move(data.test);
    result.steps_run = std::min<std::uint64_t>(step, cfg.max_steps);
    return result;
}

/// AUC of f = sigmoid(g) on a labeled set; the positive class scores high.
inline double evaluate_auc(const DenseNet& net, const LabeledDataset& ds) {
    std::vector<double> g = net.logits(ds.features);
    std::vector<double> scores(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) scores[i] = sigmoid(g[i]);
    return roc_auc(scores, ds.labels);
}

/// Repeated-trial protocol: every trial re-derives its seed from the master
/// seed, which re-draws the dataset and negative subsample, re-initializes
/// the model, re-trains, and scores the (untouched) test split. Aggregates
/// mean and population std.
inline MetricsReport run_experiment(const RunConfig& cfg, std::size_t n_trials) {
    if (n_trials < 1) throw ConfigError("run_experiment: n_trials must be >= 1");
    std::vector<double> aucs;
    std::vector<std::uint64_t> seeds;
    std::uint64_t trial_root = derive_seed(cfg.seed, streams::kTrial);
    for (std::size_t t = 0; t < n_trials; ++t) {
        RunConfig trial_cfg = cfg;
        trial_cfg.seed = derive_seed(trial_root, t);
        seeds.push_back(trial_cfg.seed);
        TrainResult res = train_model(trial_cfg);
        if (res.test_data.n() == 0)
            throw DataError("run_experiment: trial " + std::to_string(t) + " (seed " +
                            std::to_string(trial_cfg.seed) + ") produced an empty test split");
        aucs.push_back(evaluate_auc(res.net, res.test_data));
    }
    return MetricsReport::from_trials(std::move(aucs), std::move(seeds), cfg.fingerprint());
}

}  // namespace ope
