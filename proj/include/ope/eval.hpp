#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "ope/errors.hpp"
#include "ope/math.hpp"
#include "ope/net.hpp"
#include "ope/samplers.hpp"

namespace ope {

namespace detail {

/// Midranks (1-based, ties averaged) of a value vector.
inline std::vector<double> midranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&v](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size(), 0.0);
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        double mid = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
        i = j + 1;
    }
    return ranks;
}

}  // namespace detail

/// Mann-Whitney form of the ROC AUC with ties counted one half. The positive
/// class is scored HIGH: callers rank by f = sigmoid(g), so the anomaly score
/// is 1 - f and this AUC measures separating normal from anomalous.
inline double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw DimensionError("roc_auc labels length", scores.size(), labels.size());
    std::size_t n_pos = 0;
    for (int l : labels) n_pos += l == 1 ? 1 : 0;
    std::size_t n_neg = scores.size() - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw DataError("roc_auc: needs at least one positive and one negative label");
    std::vector<double> ranks = detail::midranks(scores);
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == 1) rank_sum += ranks[i];
    double u = rank_sum - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

/// Spearman rank correlation (midranks, then Pearson on the ranks).
inline double spearman_rho(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw DimensionError("spearman_rho length", a.size(), b.size());
    if (a.size() < 2) throw DataError("spearman_rho: needs at least two points");
    std::vector<double> ra = detail::midranks(a);
    std::vector<double> rb = detail::midranks(b);
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= static_cast<double>(ra.size());
    mb /= static_cast<double>(rb.size());
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        double da = ra[i] - ma;
        double db = rb[i] - mb;
        cov += da * db;
        va += da * da;
        vb += db * db;
    }
    if (va == 0.0 || vb == 0.0) throw DataError("spearman_rho: constant ranks");
    return cov / std::sqrt(va * vb);
}

/// f = sigmoid(g) on a resolution x resolution lattice over a 2-d box,
/// endpoints included. f(iy, ix) corresponds to (xs[ix], ys[iy]).
struct GridDump {
    std::vector<double> xs, ys;
    Tensor2 f;
    BoxDomain domain;
};

inline GridDump grid_eval(const DenseNet& net, const BoxDomain& domain, std::size_t resolution) {
    if (domain.dim() != 2)
        throw DimensionError("grid_eval supports 2-d domains only, got dim " +
                             std::to_string(domain.dim()));
    if (resolution < 2) throw ConfigError("grid_eval: resolution must be >= 2");
    GridDump dump;
    dump.domain = domain;
    dump.xs.resize(resolution);
    dump.ys.resize(resolution);
    double step_x = (domain.hi[0] - domain.lo[0]) / static_cast<double>(resolution - 1);
    double step_y = (domain.hi[1] - domain.lo[1]) / static_cast<double>(resolution - 1);
    for (std::size_t i = 0; i < resolution; ++i) {
        dump.xs[i] = domain.lo[0] + static_cast<double>(i) * step_x;
        dump.ys[i] = domain.lo[1] + static_cast<double>(i) * step_y;
    }
    Tensor2 X(resolution * resolution, 2);
    for (std::size_t iy = 0; iy < resolution; ++iy)
        for (std::size_t ix = 0; ix < resolution; ++ix) {
            X(iy * resolution + ix, 0) = dump.xs[ix];
            X(iy * resolution + ix, 1) = dump.ys[iy];
        }
    std::vector<double> g = net.logits(X);
    dump.f = Tensor2(resolution, resolution);
    for (std::size_t i = 0; i < g.size(); ++i) dump.f.data[i] = sigmoid(g[i]);
    return dump;
}

/// CSV rows (x, y, f). A leading comment line can carry provenance.
inline void write_grid_csv(const GridDump& dump, const std::string& path,
                           const std::string& comment = "") {
    std::ofstream out(path);
    if (!out) throw DataError("write_grid_csv: cannot open '" + path + "'");
    out.precision(17);
    if (!comment.empty()) out << "# " << comment << "\n";
    out << "x,y,f\n";
    for (std::size_t iy = 0; iy < dump.ys.size(); ++iy)
        for (std::size_t ix = 0; ix < dump.xs.size(); ++ix)
            out << dump.xs[ix] << "," << dump.ys[iy] << "," << dump.f(iy, ix) << "\n";
}

/// Grayscale PGM (P2), f scaled to 0..255, top row = max y.
inline void write_grid_pgm(const GridDump& dump, const std::string& path,
                           const std::string& comment = "") {
    std::ofstream out(path);
    if (!out) throw DataError("write_grid_pgm: cannot open '" + path + "'");
    out << "P2\n";
    if (!comment.empty()) out << "# " << comment << "\n";
    out << dump.xs.size() << " " << dump.ys.size() << "\n255\n";
    for (std::size_t iy = dump.ys.size(); iy-- > 0;) {
        for (std::size_t ix = 0; ix < dump.xs.size(); ++ix)
            out << static_cast<int>(std::lround(dump.f(iy, ix) * 255.0))
                << (ix + 1 < dump.xs.size() ? ' ' : '\n');
    }
}

/// Spearman correlation between the learned logit g and an analytic density P
/// over a lattice, restricted to cells with P > 1e-6 (below that the optimal
/// monotone link diverges and ranks are numerically meaningless). 1-d and 2-d
/// domains; n_grid points per axis.
inline double monotonicity_probe(const DenseNet& net,
                                 const std::function<double(std::span<const double>)>& density,
                                 const BoxDomain& domain, std::size_t n_grid) {
    if (domain.dim() > 2)
        throw DimensionError("monotonicity_probe supports dim <= 2, got " +
                             std::to_string(domain.dim()));
    if (n_grid < 2) throw ConfigError("monotonicity_probe: n_grid must be >= 2");
    std::vector<std::vector<double>> points;
    if (domain.dim() == 1) {
        double step = (domain.hi[0] - domain.lo[0]) / static_cast<double>(n_grid - 1);
        for (std::size_t i = 0; i < n_grid; ++i)
            points.push_back({domain.lo[0] + static_cast<double>(i) * step});
    } else {
        double sx = (domain.hi[0] - domain.lo[0]) / static_cast<double>(n_grid - 1);
        double sy = (domain.hi[1] - domain.lo[1]) / static_cast<double>(n_grid - 1);
        for (std::size_t iy = 0; iy < n_grid; ++iy)
            for (std::size_t ix = 0; ix < n_grid; ++ix)
                points.push_back({domain.lo[0] + static_cast<double>(ix) * sx,
                                  domain.lo[1] + static_cast<double>(iy) * sy});
    }
    std::vector<double> g_vals, p_vals;
    Tensor2 X(points.size(), domain.dim());
    for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t d = 0; d < domain.dim(); ++d) X(i, d) = points[i][d];
    std::vector<double> g = net.logits(X);
    for (std::size_t i = 0; i < points.size(); ++i) {
        double p = density(points[i]);
        if (p > 1e-6) {
            g_vals.push_back(g[i]);
            p_vals.push_back(p);
        }
    }
    if (g_vals.size() < 2)
        throw DataError("monotonicity_probe: lattice empty after density threshold");
    return spearman_rho(g_vals, p_vals);
}

/// Per-trial AUCs with their aggregate. std is the population standard
/// deviation of the trial list.
struct MetricsReport {
    std::vector<double> aucs;
    double mean = 0.0;
    double stddev = 0.0;
    std::vector<std::uint64_t> trial_seeds;
    std::string config_fingerprint;

    static MetricsReport from_trials(std::vector<double> aucs, std::vector<std::uint64_t> seeds,
                                     std::string fingerprint) {
        MetricsReport r;
        r.aucs = std::move(aucs);
        r.trial_seeds = std::move(seeds);
        r.config_fingerprint = std::move(fingerprint);
        for (double a : r.aucs) r.mean += a;
        r.mean /= static_cast<double>(r.aucs.size());
        for (double a : r.aucs) r.stddev += (a - r.mean) * (a - r.mean);
        r.stddev = std::sqrt(r.stddev / static_cast<double>(r.aucs.size()));
        return r;
    }
};

}  // namespace ope
