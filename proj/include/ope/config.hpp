#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ope/adam.hpp"
#include "ope/data.hpp"
#include "ope/errors.hpp"
#include "ope/io.hpp"
#include "ope/losses.hpp"
#include "ope/samplers.hpp"

namespace ope {

namespace detail {

/// Unknown keys are configuration errors; a typo must not silently fall back
/// to a default.
inline void check_keys(const json& j, std::initializer_list<const char*> allowed,
                       const std::string& context) {
    if (!j.is_object()) throw ConfigError(context + ": expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError(context + ": unknown key '" + it.key() + "'");
    }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

}  // namespace detail

struct DatasetConfig {
    std::string type = "moons";  // moons | two_disks | gaussian_mixture | moons_ring | csv
    std::size_t n = 2000;
    std::size_t n_pos = 1000;
    std::size_t n_neg = 1000;
    double noise = 0.1;
    double radius = 0.5;
    std::vector<std::vector<double>> centers = {{-1.0, 0.0}, {1.0, 0.0}};
    std::vector<GaussianComponent> positive_components;
    std::vector<GaussianComponent> negative_components;
    std::string train_csv;
    std::string test_csv;
    std::string label_column = "label";
    double test_fraction = 0.5;
    bool standardize = true;
    SubsampleSpec subsample;
};

struct GeneratorConfig {
    std::size_t latent_dim = 0;  // 0 => data dimension (min 2)
    std::vector<std::size_t> hidden = {32, 32};
};

/// Full run description: dataset, model, loss, sampler, optimizer, training
/// loop and output location. Defaults follow the reference protocol
/// (epsilon = 0.95, adam lr 5e-4, 4 sampler steps per gradient step).
struct RunConfig {
    DatasetConfig dataset;

    std::vector<std::size_t> hidden = {64, 64, 64, 64};
    Activation activation = Activation::Tanh;

    LossConfig loss;
    bool gamma_auto = true;

    SamplerOptions sampler;
    std::size_t chains = 0;  // 0 => batch_size
    GeneratorConfig generator;
    double domain_padding = 0.1;
    std::optional<BoxDomain> domain_override;

    AdamConfig optimizer;

    std::size_t batch_size = 128;
    std::size_t max_steps = 5000;
    std::uint64_t seed = 42;
    std::size_t convergence_window = 200;
    double convergence_tol = 1e-5;

    std::string output_dir = "out";

    void validate() const {
        if (batch_size < 1) throw ConfigError("training.batch_size must be >= 1");
        if (max_steps < 1) throw ConfigError("training.max_steps must be >= 1");
        if (hidden.empty()) throw ConfigError("model.hidden must not be empty");
        loss.validate();
        if (loss.variant == LossVariant::Ope && sampler.kind != SamplerKind::Uniform)
            throw ConfigError("loss variant 'ope' requires sampler kind 'uniform'");
        if (loss.variant == LossVariant::Eope && sampler.kind == SamplerKind::Uniform)
            throw ConfigError("loss variant 'eope' requires an MCMC or generator sampler");
        if (!(dataset.test_fraction > 0.0 && dataset.test_fraction < 1.0))
            throw ConfigError("dataset.test_fraction must be in (0, 1)");
        if (dataset.type == "csv" && dataset.train_csv.empty())
            throw ConfigError("dataset.train_csv is required for csv datasets");
    }

    static RunConfig from_json(const json& j);
    static RunConfig from_file(const std::string& path);
    json to_json() const;

    /// FNV-1a of the canonical (key-sorted, defaults-resolved) JSON form.
    std::string fingerprint() const { return fnv1a_hex(to_json().dump()); }
};

namespace detail {

inline std::vector<GaussianComponent> components_from_json(const json& arr,
                                                           const std::string& context) {
    if (!arr.is_array() || arr.empty())
        throw ConfigError(context + ": expected a non-empty array of components");
    std::vector<GaussianComponent> comps;
    for (const auto& c : arr) {
        check_keys(c, {"weight", "mean", "sigma"}, context);
        GaussianComponent gc;
        gc.weight = get_or<double>(c, "weight", 1.0);
        gc.mean = field_as<std::vector<double>>(c, "mean", context.c_str());
        gc.sigma = field_as<std::vector<double>>(c, "sigma", context.c_str());
        comps.push_back(std::move(gc));
    }
    return comps;
}

inline json components_to_json(const std::vector<GaussianComponent>& comps) {
    json arr = json::array();
    for (const auto& c : comps)
        arr.push_back({{"weight", c.weight}, {"mean", c.mean}, {"sigma", c.sigma}});
    return arr;
}

inline SubsampleSpec subsample_from_json(const json& j) {
    check_keys(j, {"mode", "count", "n_classes", "per_class_cap"}, "dataset.subsample");
    SubsampleSpec s;
    std::string mode = get_or<std::string>(j, "mode", "none");
    if (mode == "none")
        s.mode = SubsampleSpec::Mode::None;
    else if (mode == "count")
        s.mode = SubsampleSpec::Mode::Count;
    else if (mode == "classes")
        s.mode = SubsampleSpec::Mode::Classes;
    else
        throw ConfigError("dataset.subsample.mode must be none|count|classes");
    s.count = get_or<std::size_t>(j, "count", 0);
    s.n_classes = get_or<std::size_t>(j, "n_classes", 0);
    s.per_class_cap = get_or<std::size_t>(j, "per_class_cap", 0);
    return s;
}

}  // namespace detail

inline RunConfig RunConfig::from_json(const json& j) {
    detail::check_keys(
        j, {"dataset", "model", "loss", "sampler", "optimizer", "training", "output_dir"},
        "config");
    RunConfig cfg;

    if (j.contains("dataset")) {
        const json& d = j["dataset"];
        detail::check_keys(d,
                           {"type", "n", "n_pos", "n_neg", "noise", "radius", "centers",
                            "positive", "negative", "train_csv", "test_csv", "label_column",
                            "test_fraction", "standardize", "subsample"},
                           "dataset");
        cfg.dataset.type = detail::get_or<std::string>(d, "type", cfg.dataset.type);
        const std::vector<std::string> known = {"moons", "two_disks", "gaussian_mixture",
                                                "moons_ring", "csv"};
        if (std::find(known.begin(), known.end(), cfg.dataset.type) == known.end())
            throw ConfigError("dataset.type must be one of moons|two_disks|gaussian_mixture|"
                              "moons_ring|csv, got '" + cfg.dataset.type + "'");
        cfg.dataset.n = detail::get_or<std::size_t>(d, "n", cfg.dataset.n);
        cfg.dataset.n_pos = detail::get_or<std::size_t>(d, "n_pos", cfg.dataset.n_pos);
        cfg.dataset.n_neg = detail::get_or<std::size_t>(d, "n_neg", cfg.dataset.n_neg);
        cfg.dataset.noise = detail::get_or<double>(d, "noise", cfg.dataset.noise);
        cfg.dataset.radius = detail::get_or<double>(d, "radius", cfg.dataset.radius);
        cfg.dataset.centers =
            detail::get_or<std::vector<std::vector<double>>>(d, "centers", cfg.dataset.centers);
        if (d.contains("positive"))
            cfg.dataset.positive_components =
                detail::components_from_json(d["positive"], "dataset.positive");
        if (d.contains("negative"))
            cfg.dataset.negative_components =
                detail::components_from_json(d["negative"], "dataset.negative");
        cfg.dataset.train_csv = detail::get_or<std::string>(d, "train_csv", "");
        cfg.dataset.test_csv = detail::get_or<std::string>(d, "test_csv", "");
        cfg.dataset.label_column =
            detail::get_or<std::string>(d, "label_column", cfg.dataset.label_column);
        cfg.dataset.test_fraction =
            detail::get_or<double>(d, "test_fraction", cfg.dataset.test_fraction);
        cfg.dataset.standardize = detail::get_or<bool>(d, "standardize", cfg.dataset.standardize);
        if (d.contains("subsample"))
            cfg.dataset.subsample = detail::subsample_from_json(d["subsample"]);
    }

    if (j.contains("model")) {
        const json& m = j["model"];
        detail::check_keys(m, {"hidden", "activation"}, "model");
        cfg.hidden = detail::get_or<std::vector<std::size_t>>(m, "hidden", cfg.hidden);
        cfg.activation =
            activation_from_string(detail::get_or<std::string>(m, "activation", "tanh"));
    }

    if (j.contains("loss")) {
        const json& l = j["loss"];
        detail::check_keys(l, {"variant", "epsilon", "gamma", "pred_reg_c"}, "loss");
        cfg.loss.variant =
            loss_variant_from_string(detail::get_or<std::string>(l, "variant", "ope"));
        cfg.loss.epsilon = detail::get_or<double>(l, "epsilon", cfg.loss.epsilon);
        cfg.loss.pred_reg_c = detail::get_or<double>(l, "pred_reg_c", cfg.loss.pred_reg_c);
        if (l.contains("gamma") && !l["gamma"].is_null()) {
            if (l["gamma"].is_string()) {
                if (l["gamma"].get<std::string>() != "auto")
                    throw ConfigError("loss.gamma must be a number or \"auto\"");
                cfg.gamma_auto = true;
            } else {
                cfg.gamma_auto = false;
                cfg.loss.gamma = l["gamma"].get<double>();
            }
        }
    }

    if (j.contains("sampler")) {
        const json& s = j["sampler"];
        detail::check_keys(s,
                           {"kind", "chains", "steps_per_update", "restart_prob", "hmc_step_size",
                            "hmc_n_leapfrog", "rmsprop_eta", "rmsprop_rho", "rmsprop_lambda",
                            "generator_latent_dim", "generator_hidden", "domain_padding",
                            "domain_lo", "domain_hi"},
                           "sampler");
        // without an explicit kind, pick the one the loss variant implies
        const char* implied = cfg.loss.variant == LossVariant::Eope ? "hmc" : "uniform";
        cfg.sampler.kind =
            sampler_kind_from_string(detail::get_or<std::string>(s, "kind", implied));
        cfg.chains = detail::get_or<std::size_t>(s, "chains", 0);
        cfg.sampler.steps_per_update =
            detail::get_or<std::size_t>(s, "steps_per_update", cfg.sampler.steps_per_update);
        cfg.sampler.restart_prob =
            detail::get_or<double>(s, "restart_prob", cfg.sampler.restart_prob);
        cfg.sampler.hmc_step_size =
            detail::get_or<double>(s, "hmc_step_size", cfg.sampler.hmc_step_size);
        cfg.sampler.hmc_n_leapfrog =
            detail::get_or<std::size_t>(s, "hmc_n_leapfrog", cfg.sampler.hmc_n_leapfrog);
        cfg.sampler.rmsprop_eta = detail::get_or<double>(s, "rmsprop_eta", cfg.sampler.rmsprop_eta);
        cfg.sampler.rmsprop_rho = detail::get_or<double>(s, "rmsprop_rho", cfg.sampler.rmsprop_rho);
        cfg.sampler.rmsprop_lambda =
            detail::get_or<double>(s, "rmsprop_lambda", cfg.sampler.rmsprop_lambda);
        cfg.generator.latent_dim = detail::get_or<std::size_t>(s, "generator_latent_dim", 0);
        cfg.generator.hidden =
            detail::get_or<std::vector<std::size_t>>(s, "generator_hidden", cfg.generator.hidden);
        cfg.domain_padding = detail::get_or<double>(s, "domain_padding", cfg.domain_padding);
        bool has_lo = s.contains("domain_lo") && !s["domain_lo"].is_null();
        bool has_hi = s.contains("domain_hi") && !s["domain_hi"].is_null();
        if (has_lo != has_hi)
            throw ConfigError("sampler.domain_lo and sampler.domain_hi must be given together");
        if (has_lo)
            cfg.domain_override = BoxDomain(s["domain_lo"].get<std::vector<double>>(),
                                            s["domain_hi"].get<std::vector<double>>());
    } else if (cfg.loss.variant != LossVariant::Eope) {
        cfg.sampler.kind = SamplerKind::Uniform;
    }

    if (j.contains("optimizer")) {
        const json& o = j["optimizer"];
        detail::check_keys(o, {"lr", "beta1", "beta2", "eps"}, "optimizer");
        cfg.optimizer.lr = detail::get_or<double>(o, "lr", cfg.optimizer.lr);
        cfg.optimizer.beta1 = detail::get_or<double>(o, "beta1", cfg.optimizer.beta1);
        cfg.optimizer.beta2 = detail::get_or<double>(o, "beta2", cfg.optimizer.beta2);
        cfg.optimizer.eps = detail::get_or<double>(o, "eps", cfg.optimizer.eps);
    }

    if (j.contains("training")) {
        const json& t = j["training"];
        detail::check_keys(t,
                           {"batch_size", "max_steps", "seed", "convergence_window",
                            "convergence_tol"},
                           "training");
        cfg.batch_size = detail::get_or<std::size_t>(t, "batch_size", cfg.batch_size);
        cfg.max_steps = detail::get_or<std::size_t>(t, "max_steps", cfg.max_steps);
        cfg.seed = detail::get_or<std::uint64_t>(t, "seed", cfg.seed);
        cfg.convergence_window =
            detail::get_or<std::size_t>(t, "convergence_window", cfg.convergence_window);
        cfg.convergence_tol = detail::get_or<double>(t, "convergence_tol", cfg.convergence_tol);
    }

    cfg.output_dir = detail::get_or<std::string>(j, "output_dir", cfg.output_dir);
    cfg.validate();
    return cfg;
}

inline RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config: invalid JSON in '" + path + "': " + e.what());
    }
    return from_json(j);
}

inline json RunConfig::to_json() const {
    json d;
    d["type"] = dataset.type;
    d["n"] = dataset.n;
    d["n_pos"] = dataset.n_pos;
    d["n_neg"] = dataset.n_neg;
    d["noise"] = dataset.noise;
    d["radius"] = dataset.radius;
    d["centers"] = dataset.centers;
    if (!dataset.positive_components.empty())
        d["positive"] = detail::components_to_json(dataset.positive_components);
    if (!dataset.negative_components.empty())
        d["negative"] = detail::components_to_json(dataset.negative_components);
    d["train_csv"] = dataset.train_csv;
    d["test_csv"] = dataset.test_csv;
    d["label_column"] = dataset.label_column;
    d["test_fraction"] = dataset.test_fraction;
    d["standardize"] = dataset.standardize;
    const char* mode = dataset.subsample.mode == SubsampleSpec::Mode::None     ? "none"
                       : dataset.subsample.mode == SubsampleSpec::Mode::Count ? "count"
                                                                              : "classes";
    d["subsample"] = {{"mode", mode},
                      {"count", dataset.subsample.count},
                      {"n_classes", dataset.subsample.n_classes},
                      {"per_class_cap", dataset.subsample.per_class_cap}};

    json j;
    j["dataset"] = d;
    j["model"] = {{"hidden", hidden}, {"activation", to_string(activation)}};
    json l = {{"variant", to_string(loss.variant)},
              {"epsilon", loss.epsilon},
              {"pred_reg_c", loss.pred_reg_c}};
    if (gamma_auto)
        l["gamma"] = "auto";
    else
        l["gamma"] = loss.gamma;
    j["loss"] = l;
    json s = {{"kind", to_string(sampler.kind)},
              {"chains", chains},
              {"steps_per_update", sampler.steps_per_update},
              {"restart_prob", sampler.restart_prob},
              {"hmc_step_size", sampler.hmc_step_size},
              {"hmc_n_leapfrog", sampler.hmc_n_leapfrog},
              {"rmsprop_eta", sampler.rmsprop_eta},
              {"rmsprop_rho", sampler.rmsprop_rho},
              {"rmsprop_lambda", sampler.rmsprop_lambda},
              {"generator_latent_dim", generator.latent_dim},
              {"generator_hidden", generator.hidden},
              {"domain_padding", domain_padding}};
    if (domain_override) {
        s["domain_lo"] = domain_override->lo;
        s["domain_hi"] = domain_override->hi;
    } else {
        s["domain_lo"] = nullptr;
        s["domain_hi"] = nullptr;
    }
    j["sampler"] = s;
    j["optimizer"] = {{"lr", optimizer.lr},
                      {"beta1", optimizer.beta1},
                      {"beta2", optimizer.beta2},
                      {"eps", optimizer.eps}};
    j["training"] = {{"batch_size", batch_size},
                     {"max_steps", max_steps},
                     {"seed", seed},
                     {"convergence_window", convergence_window},
                     {"convergence_tol", convergence_tol}};
    j["output_dir"] = output_dir;
    return j;
}

}  // namespace ope
