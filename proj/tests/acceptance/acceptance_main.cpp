// Acceptance suite: one checkable criterion per function, each printing a
// single PASS/FAIL line. Run with no arguments for all criteria or with a
// criterion number. Exit code = number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ope/ope.hpp"
#include "../oracles.hpp"

using ope::json;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", x);
    return buf;
}

ope::Tensor2 random_batch(std::size_t rows, std::size_t cols, ope::Rng& rng) {
    ope::Tensor2 X(rows, cols);
    for (auto& v : X.data) v = rng.normal();
    return X;
}

// ---------------------------------------------------------------------------
// 1. Gradient suite: analytic vs central finite differences for every loss
//    variant on 100 randomized nets/batches, max relative error < 1e-5.
Outcome criterion_gradients() {
    ope::Rng meta(20240501);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t in_dim = 2 + meta.uniform_index(3);
        std::vector<std::size_t> dims{in_dim};
        std::size_t n_hidden = 1 + meta.uniform_index(2);
        for (std::size_t l = 0; l < n_hidden; ++l) dims.push_back(2 + meta.uniform_index(15));
        dims.push_back(1);
        ope::Rng init(9000 + trial);
        ope::DenseNet net(dims, ope::Activation::Tanh, init);

        ope::Rng batch_rng(5000 + trial);
        auto pos = random_batch(3 + batch_rng.uniform_index(3), in_dim, batch_rng);
        auto neg = random_batch(3 + batch_rng.uniform_index(3), in_dim, batch_rng);
        auto bg = random_batch(3 + batch_rng.uniform_index(3), in_dim, batch_rng);
        double gamma = batch_rng.uniform(0.2, 2.0);
        ope::LossConfig cfg;
        cfg.gamma = gamma;
        cfg.epsilon = batch_rng.uniform(0.0, 1.0);
        cfg.pred_reg_c = batch_rng.uniform(0.0, 0.01);

        // cross-entropy (the returned gradient absorbs the 1/2 of the total)
        auto ce = ope::cross_entropy_loss_and_grad(net, pos, neg, gamma);
        auto ce_fd = oracles::fd_param_gradient(net, [&](const ope::DenseNet& n) {
            return 2.0 * ope::cross_entropy_loss_and_grad(n, pos, neg, gamma).breakdown.total;
        });
        worst = std::max(worst, oracles::max_rel_error(ce.grad, ce_fd));

        // brute-force variant
        auto bf = ope::ope_loss_and_grad(net, pos, neg, bg, cfg);
        auto bf_fd = oracles::fd_param_gradient(net, [&](const ope::DenseNet& n) {
            return 2.0 * ope::ope_loss_and_grad(n, pos, neg, bg, cfg).breakdown.total;
        });
        worst = std::max(worst, oracles::max_rel_error(bf.grad, bf_fd));

        // energy variant: L+, L- and the stabilizer are differentiable; the
        // contrastive term (mean grad g) has no matching scalar, subtract it.
        auto eo = ope::eope_loss_and_grad(net, pos, neg, bg, cfg);
        auto diff_part = eo.grad;
        diff_part.axpy(-(1.0 - cfg.epsilon), ope::energy_gradient(net, bg));
        auto eo_fd = oracles::fd_param_gradient(net, [&](const ope::DenseNet& n) {
            auto r = ope::cross_entropy_loss_and_grad(n, pos, neg, gamma);
            auto g0 = n.logits(bg);
            double msq = 0.0;
            for (double g : g0) msq += g * g;
            msq /= static_cast<double>(g0.size());
            return 2.0 * r.breakdown.total + (1.0 - cfg.epsilon) * cfg.pred_reg_c * msq;
        });
        worst = std::max(worst, oracles::max_rel_error(diff_part, eo_fd));
    }
    return {worst < 1e-5, "max relative error " + fmt(worst) + " over 100 trials x 3 variants"};
}

// ---------------------------------------------------------------------------
// 2. Closed-form oracle: per-bin golden-section minimization of the pointwise
//    objective matches optimal_f to 1e-6 on a 10-bin problem, 20 settings.
Outcome criterion_closed_form() {
    ope::Rng rng(777);
    double worst = 0.0;
    for (int setting = 0; setting < 20; ++setting) {
        double gamma = rng.uniform(0.1, 3.0);
        double eps = rng.uniform(0.0, 0.999);
        double C = rng.uniform(0.1, 3.0);
        for (int bin = 0; bin < 10; ++bin) {
            double p_pos = rng.uniform(0.01, 4.0);
            double p_neg = rng.uniform(0.0, 3.0);
            auto pointwise = [&](double f) {
                return -p_pos * std::log(f) - gamma * p_neg * std::log1p(-f) -
                       (1.0 - eps) * C * std::log1p(-f);
            };
            double brute = oracles::golden_section_min(pointwise, 1e-12, 1.0 - 1e-12);
            double closed = ope::optimal_f(p_pos, p_neg, C, gamma, eps);
            worst = std::max(worst, std::fabs(brute - closed));
        }
    }
    return {worst < 1e-6, "max |argmin - closed form| " + fmt(worst) + " over 200 bins"};
}

// ---------------------------------------------------------------------------
// 3. epsilon = 1 reduction: OPE and EOPE (c = 0) trajectories coincide with
//    the cross-entropy baseline under a shared seed and batch schedule.
Outcome criterion_epsilon_one() {
    json base = {
        {"dataset",
         {{"type", "gaussian_mixture"},
          {"n_pos", 200},
          {"n_neg", 200},
          {"positive", {{{"weight", 1.0}, {"mean", {-2.0, 0.0}}, {"sigma", {0.6, 0.6}}}}},
          {"negative", {{{"weight", 1.0}, {"mean", {2.0, 0.0}}, {"sigma", {0.6, 0.6}}}}}}},
        {"model", {{"hidden", {16, 16}}}},
        {"training", {{"seed", 404}, {"batch_size", 32}, {"convergence_window", 0}}}};

    auto params = [](const ope::DenseNet& net) {
        std::vector<double> out;
        for (const auto& layer : net.layers()) {
            out.insert(out.end(), layer.W.data.begin(), layer.W.data.end());
            out.insert(out.end(), layer.b.begin(), layer.b.end());
        }
        return out;
    };

    double worst = 0.0;
    for (std::size_t steps : {std::size_t{1}, std::size_t{25}, std::size_t{150}}) {
        json ce = base;
        ce["loss"] = {{"variant", "cross_entropy"}};
        ce["training"]["max_steps"] = steps;
        auto p_ce = params(ope::train_model(ope::RunConfig::from_json(ce)).net);

        json bf = base;
        bf["loss"] = {{"variant", "ope"}, {"epsilon", 1.0}};
        bf["training"]["max_steps"] = steps;
        auto p_bf = params(ope::train_model(ope::RunConfig::from_json(bf)).net);

        json eo = base;
        eo["loss"] = {{"variant", "eope"}, {"epsilon", 1.0}, {"pred_reg_c", 0.0}};
        eo["sampler"] = {{"kind", "hmc"}};
        eo["training"]["max_steps"] = steps;
        auto p_eo = params(ope::train_model(ope::RunConfig::from_json(eo)).net);

        for (std::size_t i = 0; i < p_ce.size(); ++i) {
            worst = std::max(worst, std::fabs(p_ce[i] - p_bf[i]));
            worst = std::max(worst, std::fabs(p_ce[i] - p_eo[i]));
        }
    }
    return {worst <= 1e-10,
            "max |param difference| " + fmt(worst) + " across 1/25/150-step trajectories"};
}

// ---------------------------------------------------------------------------
// 4. Sampler correctness on the analytic Gaussian logit g(x) = -|x|^2/2:
//    moments of 1e4 post-burn-in draws plus leapfrog reversibility.
Outcome criterion_hmc() {
    oracles::QuadraticLogit model;
    ope::BoxDomain box({-6.0, -6.0}, {6.0, 6.0});
    auto state = ope::ChainState::init(box, 200, 321);
    const double step = 0.3;  // trajectory ~ quarter period of the oscillator
    for (int burn = 0; burn < 200; ++burn) ope::hmc_step(model, box, state, step, 5);

    std::vector<double> xs, ys;
    for (int it = 0; it < 50; ++it) {  // 200 chains x 50 = 1e4 draws
        ope::hmc_step(model, box, state, step, 5);
        for (std::size_t r = 0; r < state.n_chains(); ++r) {
            xs.push_back(state.positions(r, 0));
            ys.push_back(state.positions(r, 1));
        }
    }
    auto moments = [](const std::vector<double>& v) {
        double m = 0.0, var = 0.0;
        for (double x : v) m += x;
        m /= static_cast<double>(v.size());
        for (double x : v) var += (x - m) * (x - m);
        return std::pair<double, double>(m, var / static_cast<double>(v.size()));
    };
    auto [mx, vx] = moments(xs);
    auto [my, vy] = moments(ys);

    ope::Rng rng(555);
    double rev_err = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        ope::Tensor2 X(1, 2), P(1, 2);
        for (auto& v : X.data) v = rng.uniform(-4.0, 4.0);
        for (auto& v : P.data) v = rng.normal();
        ope::Tensor2 X0 = X;
        ope::leapfrog(model, box, X, P, step, 5);
        for (auto& v : P.data) v = -v;
        ope::leapfrog(model, box, X, P, step, 5);
        for (std::size_t i = 0; i < 2; ++i)
            rev_err = std::max(rev_err, std::fabs(X.data[i] - X0.data[i]));
    }

    bool pass = std::fabs(mx) < 0.05 && std::fabs(my) < 0.05 && std::fabs(vx - 1.0) < 0.1 &&
                std::fabs(vy - 1.0) < 0.1 && rev_err < 1e-8;
    return {pass, "means (" + fmt(mx) + ", " + fmt(my) + "), variances (" + fmt(vx) + ", " +
                      fmt(vy) + "), reversibility error " + fmt(rev_err)};
}

// ---------------------------------------------------------------------------
// 5. Monotone-link probe: one-class energy training on a 1-d unit Gaussian
//    yields Spearman rho(g, P) >= 0.9 over the P > 1e-6 grid (median of 5).
Outcome criterion_monotone_link() {
    std::vector<double> rhos;
    for (std::uint64_t seed = 11; seed <= 15; ++seed) {
        json cfg_json = {
            {"dataset",
             {{"type", "gaussian_mixture"},
              {"n_pos", 4000},
              {"n_neg", 0},
              {"positive", {{{"weight", 1.0}, {"mean", {0.0}}, {"sigma", {1.0}}}}},
              {"standardize", false}}},
            {"model", {{"hidden", {32, 32}}}},
            {"loss", {{"variant", "eope"}}},  // epsilon 0.95, c 1e-3 defaults
            {"sampler", {{"kind", "hmc"}}},   // 4 steps per update default
            {"training",
             {{"seed", seed}, {"batch_size", 128}, {"max_steps", 2500},
              {"convergence_window", 0}}}};
        auto cfg = ope::RunConfig::from_json(cfg_json);
        auto res = ope::train_model(cfg);
        const double inv_sqrt_2pi = 0.3989422804014327;
        double rho = ope::monotonicity_probe(
            res.net,
            [inv_sqrt_2pi](std::span<const double> x) {
                return inv_sqrt_2pi * std::exp(-0.5 * x[0] * x[0]);
            },
            res.domain, 300);
        rhos.push_back(rho);
    }
    double med = median(rhos);
    std::string detail = "spearman rho per seed:";
    for (double r : rhos) detail += " " + fmt(r);
    detail += ", median " + fmt(med);
    return {med >= 0.9, detail};
}

// ---------------------------------------------------------------------------
// 6. Decision-surface contrast on two uniform disks: cross-entropy keeps
//    high predictions far from the data, brute-force OPE suppresses them
//    while still separating the disks.
Outcome criterion_two_disks() {
    const double r = 0.5;
    json base = {{"dataset",
                  {{"type", "two_disks"},
                   {"n", 2000},
                   {"radius", r},
                   {"centers", {{-1.0, 0.0}, {1.0, 0.0}}},
                   {"standardize", false}}},
                 {"model", {{"hidden", {32, 32}}}},
                 {"sampler", {{"domain_lo", {-3.5, -2.5}}, {"domain_hi", {3.5, 2.5}}}},
                 {"training", {{"batch_size", 128}, {"convergence_window", 0}}}};

    ope::BoxDomain window({-3.5, -2.5}, {3.5, 2.5});
    auto far_mask = [&](const ope::GridDump& dump) {
        std::vector<std::pair<std::size_t, std::size_t>> far;
        for (std::size_t iy = 0; iy < dump.ys.size(); ++iy)
            for (std::size_t ix = 0; ix < dump.xs.size(); ++ix) {
                double x = dump.xs[ix], y = dump.ys[iy];
                if (std::hypot(x + 1.0, y) > 3.0 * r && std::hypot(x - 1.0, y) > 3.0 * r)
                    far.emplace_back(iy, ix);
            }
        return far;
    };

    std::vector<double> ce_high_frac, ope_low_frac, ope_auc;
    for (std::uint64_t seed = 21; seed <= 25; ++seed) {
        json ce = base;
        ce.erase("sampler");  // cross-entropy needs no box
        ce["loss"] = {{"variant", "cross_entropy"}};
        ce["training"]["seed"] = seed;
        ce["training"]["max_steps"] = 1500;
        auto ce_res = ope::train_model(ope::RunConfig::from_json(ce));
        auto ce_grid = ope::grid_eval(ce_res.net, window, 61);
        auto far = far_mask(ce_grid);
        double high = 0.0;
        for (auto [iy, ix] : far) high += ce_grid.f(iy, ix) > 0.5 ? 1.0 : 0.0;
        ce_high_frac.push_back(high / static_cast<double>(far.size()));

        json bf = base;
        bf["loss"] = {{"variant", "ope"}, {"epsilon", 0.95}};
        bf["training"]["seed"] = seed;
        bf["training"]["max_steps"] = 8000;
        auto bf_res = ope::train_model(ope::RunConfig::from_json(bf));
        auto bf_grid = ope::grid_eval(bf_res.net, window, 61);
        auto far2 = far_mask(bf_grid);
        double low = 0.0;
        for (auto [iy, ix] : far2) low += bf_grid.f(iy, ix) < 0.1 ? 1.0 : 0.0;
        ope_low_frac.push_back(low / static_cast<double>(far2.size()));
        ope_auc.push_back(ope::evaluate_auc(bf_res.net, bf_res.test_data));
    }

    double ce_med = median(ce_high_frac);
    double low_med = median(ope_low_frac);
    double auc_med = median(ope_auc);
    bool pass = ce_med >= 0.01 && low_med >= 0.99 && auc_med >= 0.95;
    return {pass, "cross-entropy keeps f>0.5 on " + fmt(100.0 * ce_med) +
                      "% of far cells; ope f<0.1 on " + fmt(100.0 * low_med) +
                      "% of far cells, test AUC " + fmt(auc_med) + " (medians of 5 seeds)"};
}

// ---------------------------------------------------------------------------
// 7. Toy benchmark: moons positives with ring negatives; every sampler
//    family must separate held-out moons from uniform-box anomalies.
Outcome criterion_moons_methods() {
    json base = {{"dataset",
                  {{"type", "moons_ring"},
                   {"n_pos", 2000},
                   {"n_neg", 120},
                   {"noise", 0.03},
                   {"radius", 0.5},
                   {"standardize", false}}},
                 {"model", {{"hidden", {32, 32}}}},
                 {"training",
                  {{"seed", 31}, {"batch_size", 128}, {"max_steps", 2500},
                   {"convergence_window", 0}}}};

    struct Method {
        const char* name;
        json loss;
        json sampler;
    };
    const std::vector<Method> methods = {
        {"brute-force", json{{"variant", "ope"}}, json()},
        {"hmc-energy", json{{"variant", "eope"}}, json{{"kind", "hmc"}}},
        {"rmsprop-energy", json{{"variant", "eope"}}, json{{"kind", "rmsprop"}}},
        {"generator-energy", json{{"variant", "eope"}}, json{{"kind", "generator"}}},
    };

    std::string detail;
    bool pass = true;
    for (const auto& method : methods) {
        json cfg_json = base;
        cfg_json["loss"] = method.loss;
        if (!method.sampler.is_null()) cfg_json["sampler"] = method.sampler;
        auto cfg = ope::RunConfig::from_json(cfg_json);
        auto res = ope::train_model(cfg);

        // held-out moons positives vs uniform-box anomalies
        auto pos_idx = res.test_data.indices_of(1);
        ope::Tensor2 pos = ope::Tensor2::take_rows(res.test_data.features, pos_idx);
        ope::Rng neg_rng(909);
        ope::Tensor2 anom = ope::uniform_sample(res.domain, 1000, neg_rng);
        std::vector<double> scores;
        std::vector<int> labels;
        for (double g : res.net.logits(pos)) {
            scores.push_back(ope::sigmoid(g));
            labels.push_back(1);
        }
        for (double g : res.net.logits(anom)) {
            scores.push_back(ope::sigmoid(g));
            labels.push_back(0);
        }
        double auc = ope::roc_auc(scores, labels);
        detail += std::string(method.name) + " " + fmt(auc) + "; ";
        pass = pass && auc >= 0.95;
    }
    return {pass, detail + "(threshold 0.95 each)"};
}

// ---------------------------------------------------------------------------
// 8. Trend over negative budgets {0, 10, 100, 1000} on overlapping Gaussian
//    classes: mean AUC non-decreasing within one pooled std, and one-class
//    brute-force beats cross-entropy trained on ten negatives.
Outcome criterion_budget_trend() {
    json base = {
        {"dataset",
         {{"type", "gaussian_mixture"},
          {"n_pos", 2400},
          {"n_neg", 2400},
          {"positive", {{{"weight", 1.0}, {"mean", {0.0, 0.0}}, {"sigma", {1.0, 1.0}}}}},
          {"negative", {{{"weight", 1.0}, {"mean", {1.6, 1.6}}, {"sigma", {1.0, 1.0}}}}}}},
        {"model", {{"hidden", {16, 16}}}},
        {"training",
         {{"seed", 606}, {"batch_size", 64}, {"max_steps", 1200}, {"convergence_window", 0}}}};

    const std::vector<std::size_t> budgets = {0, 10, 100, 1000};
    std::vector<ope::MetricsReport> reports;
    for (std::size_t k : budgets) {
        json cfg_json = base;
        cfg_json["loss"] = {{"variant", "ope"}};
        cfg_json["dataset"]["subsample"] = {{"mode", "count"}, {"count", k}};
        reports.push_back(ope::run_experiment(ope::RunConfig::from_json(cfg_json), 5));
    }

    json ce_json = base;
    ce_json["loss"] = {{"variant", "cross_entropy"}};
    ce_json["dataset"]["subsample"] = {{"mode", "count"}, {"count", 10}};
    auto ce10 = ope::run_experiment(ope::RunConfig::from_json(ce_json), 5);

    bool trend_ok = true;
    std::string detail = "ope mean AUC by budget:";
    for (std::size_t i = 0; i < reports.size(); ++i) {
        detail += " " + std::to_string(budgets[i]) + "->" + fmt(reports[i].mean);
        if (i > 0) {
            double pooled = std::sqrt(0.5 * (reports[i - 1].stddev * reports[i - 1].stddev +
                                             reports[i].stddev * reports[i].stddev));
            if (reports[i].mean < reports[i - 1].mean - pooled) trend_ok = false;
        }
    }
    detail += "; cross-entropy@10 " + fmt(ce10.mean);
    bool beats = reports[0].mean > ce10.mean;
    return {trend_ok && beats,
            detail + (beats ? " (one-class ope ahead)" : " (one-class ope behind)")};
}

// ---------------------------------------------------------------------------
// 9. AUC against the quadratic pairwise oracle, 1000 random tied instances.
Outcome criterion_auc_oracle() {
    ope::Rng rng(4242);
    double worst = 0.0;
    for (int instance = 0; instance < 1000; ++instance) {
        std::size_t n = 2 + rng.uniform_index(49);
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        labels[0] = 1;
        labels[1] = 0;
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = std::floor(rng.uniform(0.0, 6.0)) / 6.0;  // heavy ties
            if (i >= 2) labels[i] = rng.bernoulli(0.5) ? 1 : 0;
        }
        worst = std::max(worst, std::fabs(ope::roc_auc(scores, labels) -
                                          oracles::pairwise_auc(scores, labels)));
    }
    return {worst <= 1e-12, "max |fast - pairwise oracle| " + fmt(worst) + " over 1000 instances"};
}

struct Criterion {
    const char* name;
    std::function<Outcome()> run;
};

const std::vector<Criterion>& criteria() {
    static const std::vector<Criterion> all = {
        {"gradient suite vs finite differences", criterion_gradients},
        {"closed-form optimum vs per-bin minimization", criterion_closed_form},
        {"epsilon = 1 reduction to cross-entropy", criterion_epsilon_one},
        {"hmc moments and leapfrog reversibility", criterion_hmc},
        {"monotone link of one-class energy solution", criterion_monotone_link},
        {"two-disks decision surfaces", criterion_two_disks},
        {"moons benchmark across sampler families", criterion_moons_methods},
        {"auc trend over negative budgets", criterion_budget_trend},
        {"roc auc vs pairwise oracle", criterion_auc_oracle},
    };
    return all;
}

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    if (argc > 1) only = std::atoi(argv[1]);
    int failures = 0;
    for (std::size_t i = 0; i < criteria().size(); ++i) {
        if (only != 0 && static_cast<int>(i + 1) != only) continue;
        const auto& c = criteria()[i];
        auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = c.run();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("[%s] criterion %zu: %s — %s (%.1fs)\n", outcome.pass ? "PASS" : "FAIL", i + 1,
                    c.name, outcome.detail.c_str(), secs);
        std::fflush(stdout);
        failures += outcome.pass ? 0 : 1;
    }
    return failures;
}
