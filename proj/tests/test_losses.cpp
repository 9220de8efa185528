#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "ope/losses.hpp"
#include "ope/math.hpp"
#include "ope/net.hpp"
#include "ope/rng.hpp"
#include "oracles.hpp"

using Catch::Approx;

namespace {

ope::DenseNet random_net(std::uint64_t seed, std::vector<std::size_t> dims = {3, 8, 1}) {
    ope::Rng rng(seed);
    return ope::DenseNet(dims, ope::Activation::Tanh, rng);
}

ope::Tensor2 random_batch(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    ope::Rng rng(seed);
    ope::Tensor2 X(rows, cols);
    for (auto& v : X.data) v = rng.normal();
    return X;
}

/// Net with g(x) = x on 1-d inputs; lets tests place logits exactly.
ope::DenseNet identity_net() {
    auto net = ope::DenseNet::zeros({1, 1});
    net.layers()[0].W(0, 0) = 1.0;
    return net;
}

}  // namespace

TEST_CASE("zero network gives log 2 on every term", "[losses]") {
    auto net = ope::DenseNet::zeros({2, 4, 1});
    auto pos = random_batch(5, 2, 1);
    auto neg = random_batch(4, 2, 2);
    auto unif = random_batch(6, 2, 3);
    ope::LossConfig cfg;
    cfg.epsilon = 0.0;
    cfg.gamma = 1.0;
    auto res = ope::ope_loss_and_grad(net, pos, neg, unif, cfg);
    CHECK(res.breakdown.l_plus == Approx(std::log(2.0)).epsilon(1e-13));
    CHECK(res.breakdown.l_minus == Approx(std::log(2.0)).epsilon(1e-13));
    CHECK(res.breakdown.l_zero_or_energy == Approx(std::log(2.0)).epsilon(1e-13));
    CHECK(res.breakdown.total == Approx(1.0397207708399179).epsilon(1e-13));
}

TEST_CASE("epsilon = 1 collapses ope onto the cross-entropy baseline", "[losses]") {
    auto net = random_net(4);
    auto pos = random_batch(6, 3, 5);
    auto neg = random_batch(6, 3, 6);
    auto unif = random_batch(6, 3, 7);
    ope::LossConfig cfg;
    cfg.epsilon = 1.0;
    cfg.gamma = 0.8;
    auto a = ope::ope_loss_and_grad(net, pos, neg, unif, cfg);
    auto b = ope::cross_entropy_loss_and_grad(net, pos, neg, cfg.gamma);
    CHECK(a.breakdown.total == Approx(b.breakdown.total).margin(1e-12));
    CHECK(oracles::max_rel_error(a.grad, b.grad) == 0.0);  // bitwise
}

TEST_CASE("cross-entropy values", "[losses]") {
    auto zero = ope::DenseNet::zeros({2, 1});
    auto pos = random_batch(4, 2, 8);
    auto neg = random_batch(4, 2, 9);
    auto res = ope::cross_entropy_loss_and_grad(zero, pos, neg, 1.0);
    CHECK(res.breakdown.total == Approx(std::log(2.0)).epsilon(1e-13));

    // perfectly separated logits: g = +20 on positives, -20 on negatives
    auto net = identity_net();
    ope::Tensor2 p(2, 1), n(2, 1);
    p.data = {20.0, 20.0};
    n.data = {-20.0, -20.0};
    auto sep = ope::cross_entropy_loss_and_grad(net, p, n, 1.0);
    CHECK(sep.breakdown.total < 1e-8);
}

TEST_CASE("cross-entropy rejects empty batches", "[losses]") {
    auto net = random_net(10);
    auto pos = random_batch(3, 3, 11);
    CHECK_THROWS_AS(ope::cross_entropy_loss_and_grad(net, pos, ope::Tensor2{}, 1.0),
                    ope::DataError);
    CHECK_THROWS_AS(ope::cross_entropy_loss_and_grad(net, ope::Tensor2{}, pos, 1.0),
                    ope::DataError);
}

TEST_CASE("ope rejects empty positives and bad epsilon", "[losses]") {
    auto net = random_net(12);
    auto batch = random_batch(3, 3, 13);
    ope::LossConfig cfg;
    CHECK_THROWS_AS(ope::ope_loss_and_grad(net, ope::Tensor2{}, batch, batch, cfg),
                    ope::DataError);
    CHECK_THROWS_AS(ope::ope_loss_and_grad(net, batch, batch, ope::Tensor2{}, cfg),
                    ope::DataError);
    cfg.epsilon = 1.5;
    CHECK_THROWS_AS(ope::ope_loss_and_grad(net, batch, batch, batch, cfg), ope::ConfigError);
}

TEST_CASE("cross-entropy gradient matches finite differences", "[losses]") {
    for (int trial = 0; trial < 20; ++trial) {
        auto net = random_net(100 + trial);
        auto pos = random_batch(4, 3, 200 + trial);
        auto neg = random_batch(5, 3, 300 + trial);
        double gamma = 0.5 + 0.1 * trial;
        auto res = ope::cross_entropy_loss_and_grad(net, pos, neg, gamma);
        // the returned gradient is 2 * d(total)/dtheta (the 1/2 is absorbed)
        auto fd = oracles::fd_param_gradient(net, [&](const ope::DenseNet& n) {
            return 2.0 * ope::cross_entropy_loss_and_grad(n, pos, neg, gamma).breakdown.total;
        });
        CHECK(oracles::max_rel_error(res.grad, fd) < 1e-5);
    }
}

TEST_CASE("ope combined gradient matches finite differences of the total", "[losses]") {
    for (int trial = 0; trial < 20; ++trial) {
        auto net = random_net(400 + trial);
        auto pos = random_batch(4, 3, 500 + trial);
        auto neg = random_batch(3, 3, 600 + trial);
        auto unif = random_batch(6, 3, 700 + trial);
        ope::LossConfig cfg;
        cfg.epsilon = 0.95;
        cfg.gamma = 1.7;
        auto res = ope::ope_loss_and_grad(net, pos, neg, unif, cfg);
        auto fd = oracles::fd_param_gradient(net, [&](const ope::DenseNet& n) {
            return 2.0 * ope::ope_loss_and_grad(n, pos, neg, unif, cfg).breakdown.total;
        });
        CHECK(oracles::max_rel_error(res.grad, fd) < 1e-5);
    }
}

TEST_CASE("ope supports one-class mode with an empty negative batch", "[losses]") {
    auto net = random_net(14);
    auto pos = random_batch(4, 3, 15);
    auto unif = random_batch(4, 3, 16);
    ope::LossConfig cfg;
    auto res = ope::ope_loss_and_grad(net, pos, ope::Tensor2{}, unif, cfg);
    CHECK(res.breakdown.l_minus == 0.0);
    CHECK(std::isfinite(res.breakdown.total));
}

TEST_CASE("eope constant network: energy and stabilizer gradients", "[losses]") {
    const double k = 1.7;
    auto net = ope::DenseNet::zeros({2, 4, 1});
    net.layers().back().b[0] = k;  // g(x) = k everywhere
    auto x0 = random_batch(8, 2, 17);

    auto eg = ope::energy_gradient(net, x0);
    CHECK(eg.db.back()[0] == Approx(1.0).margin(1e-14));

    const double c = 1e-3;
    auto g0 = net.logits(x0);
    auto sg = ope::prediction_reg_gradient(net, x0, c, g0);
    CHECK(sg.db.back()[0] == Approx(2.0 * c * k).margin(1e-14));
}

TEST_CASE("eope with epsilon = 1, c = 0 matches cross-entropy gradients", "[losses]") {
    auto net = random_net(18);
    auto pos = random_batch(5, 3, 19);
    auto neg = random_batch(5, 3, 20);
    auto phase = random_batch(5, 3, 21);
    ope::LossConfig cfg;
    cfg.variant = ope::LossVariant::Eope;
    cfg.epsilon = 1.0;
    cfg.pred_reg_c = 0.0;
    cfg.gamma = 1.3;
    auto a = ope::eope_loss_and_grad(net, pos, neg, phase, cfg);
    auto b = ope::cross_entropy_loss_and_grad(net, pos, neg, cfg.gamma);
    CHECK(oracles::max_rel_error(a.grad, b.grad) == 0.0);
}

TEST_CASE("eope differentiable parts match finite differences", "[losses]") {
    // The energy part is an estimator of grad log Z with no matching scalar;
    // subtract it and check L+, L- and the stabilizer against FD.
    for (int trial = 0; trial < 20; ++trial) {
        auto net = random_net(800 + trial);
        auto pos = random_batch(4, 3, 900 + trial);
        auto neg = random_batch(4, 3, 1000 + trial);
        auto phase = random_batch(5, 3, 1100 + trial);
        ope::LossConfig cfg;
        cfg.variant = ope::LossVariant::Eope;
        cfg.epsilon = 0.9;
        cfg.gamma = 0.6;
        cfg.pred_reg_c = 1e-2;

        auto res = ope::eope_loss_and_grad(net, pos, neg, phase, cfg);
        auto analytic = res.grad;
        analytic.axpy(-(1.0 - cfg.epsilon), ope::energy_gradient(net, phase));

        auto fd = oracles::fd_param_gradient(net, [&](const ope::DenseNet& n) {
            auto r = ope::cross_entropy_loss_and_grad(n, pos, neg, cfg.gamma);
            double scalar = 2.0 * r.breakdown.total;
            auto g0 = n.logits(phase);
            double msq = 0.0;
            for (double g : g0) msq += g * g;
            msq /= static_cast<double>(g0.size());
            return scalar + (1.0 - cfg.epsilon) * cfg.pred_reg_c * msq;
        });
        CHECK(oracles::max_rel_error(analytic, fd) < 1e-5);
    }
}

TEST_CASE("eope rejects an empty negative-phase batch", "[losses]") {
    auto net = random_net(22);
    auto pos = random_batch(3, 3, 23);
    ope::LossConfig cfg;
    cfg.variant = ope::LossVariant::Eope;
    CHECK_THROWS_AS(ope::eope_loss_and_grad(net, pos, ope::Tensor2{}, ope::Tensor2{}, cfg),
                    ope::DataError);
}

TEST_CASE("totals stay finite for extreme logits", "[losses]") {
    auto net = identity_net();
    ope::Tensor2 huge(2, 1), tiny(2, 1);
    huge.data = {1000.0, 900.0};
    tiny.data = {-1000.0, -900.0};
    ope::LossConfig cfg;
    cfg.epsilon = 0.5;
    auto a = ope::ope_loss_and_grad(net, huge, tiny, huge, cfg);
    CHECK(std::isfinite(a.breakdown.total));
    auto b = ope::ope_loss_and_grad(net, tiny, huge, tiny, cfg);
    CHECK(std::isfinite(b.breakdown.total));
    auto c = ope::cross_entropy_loss_and_grad(net, huge, tiny, 1.0);
    CHECK(std::isfinite(c.breakdown.total));
}

TEST_CASE("raising positive logits strictly decreases L+", "[losses]") {
    auto net = identity_net();
    ope::Rng rng(24);
    ope::Tensor2 pos(6, 1), shifted(6, 1), unif(3, 1);
    for (std::size_t i = 0; i < 6; ++i) {
        pos(i, 0) = rng.normal();
        shifted(i, 0) = pos(i, 0) + 0.3;
    }
    unif.data = {0.0, 0.5, -0.5};
    ope::LossConfig cfg;
    auto a = ope::ope_loss_and_grad(net, pos, ope::Tensor2{}, unif, cfg);
    auto b = ope::ope_loss_and_grad(net, shifted, ope::Tensor2{}, unif, cfg);
    CHECK(b.breakdown.l_plus < a.breakdown.l_plus);
}

TEST_CASE("ope total is affine in epsilon with slope -L0/2", "[losses]") {
    auto net = random_net(25);
    auto pos = random_batch(4, 3, 26);
    auto neg = random_batch(4, 3, 27);
    auto unif = random_batch(4, 3, 28);
    auto at = [&](double eps) {
        ope::LossConfig cfg;
        cfg.epsilon = eps;
        cfg.gamma = 1.0;
        return ope::ope_loss_and_grad(net, pos, neg, unif, cfg).breakdown;
    };
    auto b0 = at(0.0);
    auto b5 = at(0.5);
    auto b1 = at(1.0);
    double slope = -0.5 * b0.l_zero_or_energy;
    CHECK(b5.total == Approx(b0.total + 0.5 * slope).margin(1e-12));
    CHECK(b1.total == Approx(b0.total + slope).margin(1e-12));
    CHECK(b1.total < b5.total);
    CHECK(b5.total < b0.total);
}

TEST_CASE("optimal_f closed form", "[losses]") {
    CHECK(ope::optimal_f(1.0, 0.0, 1.0, 1.0, 0.0) == Approx(0.5).margin(1e-15));
    CHECK(ope::optimal_f(2.0, 0.5, 1.0, 1.0, 0.5) == Approx(2.0 / 3.0).margin(1e-15));
    // C = 0 reduces to the equal-prior posterior
    CHECK(ope::optimal_f(2.0, 1.0, 0.0, 1.0, 0.3) == Approx(2.0 / 3.0).margin(1e-15));
    CHECK_THROWS_AS(ope::optimal_f(0.0, 0.0, 0.0, 1.0, 0.5), ope::DomainError);
    CHECK_THROWS_AS(ope::optimal_f(-1.0, 0.0, 1.0, 1.0, 0.5), ope::DomainError);
}

TEST_CASE("optimal_f is monotone in its density arguments", "[losses]") {
    ope::Rng rng(29);
    for (int i = 0; i < 100; ++i) {
        double p = rng.uniform(0.1, 3.0), q = rng.uniform(0.1, 3.0), C = rng.uniform(0.1, 3.0);
        double gamma = rng.uniform(0.1, 3.0), eps = rng.uniform(0.0, 0.99);
        double f = ope::optimal_f(p, q, C, gamma, eps);
        CHECK(ope::optimal_f(p + 0.1, q, C, gamma, eps) > f);
        CHECK(ope::optimal_f(p, q + 0.1, C, gamma, eps) < f);
        CHECK(ope::optimal_f(p, q, C + 0.1, gamma, eps) < f);
    }
}

TEST_CASE("per-bin minimization of the pointwise objective reproduces optimal_f", "[losses]") {
    // Discretized problem: each bin has fixed densities and a free logit;
    // the pointwise objective p_pos(-log f) + gamma p_neg(-log(1-f))
    // + (1-eps) C (-log(1-f)) is minimized by golden-section search.
    ope::Rng rng(30);
    for (int setting = 0; setting < 5; ++setting) {
        double gamma = rng.uniform(0.2, 2.0);
        double eps = rng.uniform(0.0, 0.99);
        double C = rng.uniform(0.2, 2.0);
        for (int bin = 0; bin < 10; ++bin) {
            double p_pos = rng.uniform(0.01, 3.0);
            double p_neg = rng.uniform(0.0, 2.0);
            auto objective = [&](double f) {
                return -p_pos * std::log(f) - gamma * p_neg * std::log1p(-f) -
                       (1.0 - eps) * C * std::log1p(-f);
            };
            double brute = oracles::golden_section_min(objective, 1e-12, 1.0 - 1e-12);
            double closed = ope::optimal_f(p_pos, p_neg, C, gamma, eps);
            CHECK(brute == Approx(closed).margin(1e-6));
        }
    }
}
