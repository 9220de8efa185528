#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "ope/errors.hpp"
#include "ope/rng.hpp"
#include "ope/tensor.hpp"

namespace ope {

enum class Split { Train, Test };

/// Feature matrix with binary class roles: label 1 = positive (normal),
/// label 0 = negative (anomalous). class_ids optionally keeps the original
/// multi-class id a negative sample came from (used by class-mode
/// subsampling); empty means no such structure.
struct LabeledDataset {
    Tensor2 features;
    std::vector<int> labels;
    std::vector<int> class_ids;
    Split split = Split::Train;
    bool standardized = false;

    std::size_t n() const { return features.rows; }
    std::size_t dim() const { return features.cols; }

    void validate() const {
        if (labels.size() != n()) throw DataError("dataset: labels length != sample count");
        if (!class_ids.empty() && class_ids.size() != n())
            throw DataError("dataset: class_ids length != sample count");
        for (int l : labels)
            if (l != 0 && l != 1) throw DataError("dataset: labels must be 0 or 1");
        if (split == Split::Train && count_label(1) == 0)
            throw DataError("dataset: training split needs at least one positive sample");
    }

    std::size_t count_label(int label) const {
        return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
    }

    std::vector<std::size_t> indices_of(int label) const {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == label) idx.push_back(i);
        return idx;
    }

    LabeledDataset select(const std::vector<std::size_t>& idx) const {
        LabeledDataset out;
        out.features = Tensor2::take_rows(features, idx);
        out.labels.reserve(idx.size());
        for (std::size_t i : idx) out.labels.push_back(labels[i]);
        if (!class_ids.empty())
            for (std::size_t i : idx) out.class_ids.push_back(class_ids[i]);
        out.split = split;
        out.standardized = standardized;
        return out;
    }

    Tensor2 features_of(int label) const { return Tensor2::take_rows(features, indices_of(label)); }
};

/// Two interleaving half-circle arcs with Gaussian jitter; the upper moon is
/// the positive class. Arc centers are (0, 0) and (1, 0.5), both radius 1.
inline LabeledDataset make_moons(std::size_t n, double noise_sigma, Rng& rng) {
    if (n < 2) throw ConfigError("make_moons: n must be >= 2");
    std::size_t n_upper = n / 2;
    LabeledDataset ds;
    ds.features = Tensor2(n, 2);
    ds.labels.assign(n, 0);
    const double pi = 3.14159265358979323846;
    for (std::size_t i = 0; i < n; ++i) {
        double t = rng.uniform(0.0, pi);
        double x, y;
        if (i < n_upper) {
            x = std::cos(t);
            y = std::sin(t);
            ds.labels[i] = 1;
        } else {
            x = 1.0 - std::cos(t);
            y = 0.5 - std::sin(t);
        }
        ds.features(i, 0) = x + (noise_sigma > 0.0 ? rng.normal(0.0, noise_sigma) : 0.0);
        ds.features(i, 1) = y + (noise_sigma > 0.0 ? rng.normal(0.0, noise_sigma) : 0.0);
    }
    return ds;
}

/// Uniform samples on two disks of radius r; the left disk is positive.
inline LabeledDataset make_two_disks(std::size_t n, double r,
                                     const std::vector<std::vector<double>>& centers, Rng& rng) {
    if (n < 2) throw ConfigError("make_two_disks: n must be >= 2");
    if (!(r > 0.0)) throw ConfigError("make_two_disks: r must be > 0");
    if (centers.size() != 2 || centers[0].size() != 2 || centers[1].size() != 2)
        throw ConfigError("make_two_disks: needs exactly two 2-d centers");
    bool left_first = centers[0][0] <= centers[1][0];
    std::size_t n_pos = n / 2;
    LabeledDataset ds;
    ds.features = Tensor2(n, 2);
    ds.labels.assign(n, 0);
    const double two_pi = 6.28318530717958647692;
    for (std::size_t i = 0; i < n; ++i) {
        bool positive = i < n_pos;
        const auto& c = positive == left_first ? centers[0] : centers[1];
        double theta = rng.uniform(0.0, two_pi);
        double rad = r * std::sqrt(rng.uniform());
        ds.features(i, 0) = c[0] + rad * std::cos(theta);
        ds.features(i, 1) = c[1] + rad * std::sin(theta);
        ds.labels[i] = positive ? 1 : 0;
    }
    return ds;
}

struct GaussianComponent {
    double weight = 1.0;
    std::vector<double> mean;
    std::vector<double> sigma;  // per-dimension standard deviations
};

/// Diagonal-covariance Gaussian mixture with analytic density; negative-class
/// component index doubles as the original class id for subsampling.
class GaussianMixture {
public:
    explicit GaussianMixture(std::vector<GaussianComponent> comps) : comps_(std::move(comps)) {
        if (comps_.empty()) throw ConfigError("GaussianMixture: needs at least one component");
        double wsum = 0.0;
        dim_ = comps_[0].mean.size();
        for (const auto& c : comps_) {
            if (c.mean.size() != dim_ || c.sigma.size() != dim_)
                throw ConfigError("GaussianMixture: component dims disagree");
            if (!(c.weight > 0.0)) throw ConfigError("GaussianMixture: weights must be > 0");
            for (double s : c.sigma)
                if (!(s > 0.0)) throw ConfigError("GaussianMixture: sigmas must be > 0");
            wsum += c.weight;
        }
        if (std::fabs(wsum - 1.0) > 1e-9)
            throw ConfigError("GaussianMixture: weights must sum to 1");
    }

    std::size_t dim() const { return dim_; }
    const std::vector<GaussianComponent>& components() const { return comps_; }

    double density(std::span<const double> x) const {
        if (x.size() != dim_) throw DimensionError("GaussianMixture::density dim", dim_, x.size());
        const double inv_sqrt_2pi = 0.3989422804014326779399461;
        double p = 0.0;
        for (const auto& c : comps_) {
            double comp = c.weight;
            for (std::size_t d = 0; d < dim_; ++d) {
                double z = (x[d] - c.mean[d]) / c.sigma[d];
                comp *= inv_sqrt_2pi / c.sigma[d] * std::exp(-0.5 * z * z);
            }
            p += comp;
        }
        return p;
    }

    /// Draws one sample; returns the component index it came from.
    std::size_t sample(Rng& rng, std::span<double> out) const {
        double u = rng.uniform();
        std::size_t k = comps_.size() - 1;
        double acc = 0.0;
        for (std::size_t i = 0; i < comps_.size(); ++i) {
            acc += comps_[i].weight;
            if (u < acc) {
                k = i;
                break;
            }
        }
        for (std::size_t d = 0; d < dim_; ++d)
            out[d] = rng.normal(comps_[k].mean[d], comps_[k].sigma[d]);
        return k;
    }

private:
    std::vector<GaussianComponent> comps_;
    std::size_t dim_ = 0;
};

/// Draws n_pos positives and n_neg negatives from per-class mixtures. The
/// analytic densities stay available through the GaussianMixture objects.
inline LabeledDataset make_gaussian_mixture(const GaussianMixture& positive,
                                            const GaussianMixture& negative, std::size_t n_pos,
                                            std::size_t n_neg, Rng& rng) {
    if (positive.dim() != negative.dim())
        throw ConfigError("make_gaussian_mixture: class dims disagree");
    LabeledDataset ds;
    ds.features = Tensor2(n_pos + n_neg, positive.dim());
    ds.labels.assign(n_pos + n_neg, 0);
    ds.class_ids.assign(n_pos + n_neg, -1);
    for (std::size_t i = 0; i < n_pos; ++i) {
        positive.sample(rng, ds.features.row(i));
        ds.labels[i] = 1;
    }
    for (std::size_t i = 0; i < n_neg; ++i) {
        std::size_t comp = negative.sample(rng, ds.features.row(n_pos + i));
        ds.class_ids[n_pos + i] = static_cast<int>(comp);
    }
    return ds;
}

/// Toy task for the energy losses: positives sampled from both moon arcs,
/// negatives uniformly on a circle of radius `ring_radius` centered in the
/// middle of the figure.
inline LabeledDataset make_moons_vs_ring(std::size_t n_pos, std::size_t n_neg, double noise_sigma,
                                         double ring_radius, Rng& rng) {
    LabeledDataset moons = make_moons(std::max<std::size_t>(n_pos, 2), noise_sigma, rng);
    LabeledDataset ds;
    ds.features = Tensor2(n_pos + n_neg, 2);
    ds.labels.assign(n_pos + n_neg, 0);
    for (std::size_t i = 0; i < n_pos; ++i) {
        ds.features(i, 0) = moons.features(i, 0);
        ds.features(i, 1) = moons.features(i, 1);
        ds.labels[i] = 1;
    }
    const double two_pi = 6.28318530717958647692;
    const double cx = 0.5, cy = 0.25;  // centroid of the two arcs
    for (std::size_t i = 0; i < n_neg; ++i) {
        double t = rng.uniform(0.0, two_pi);
        ds.features(n_pos + i, 0) = cx + ring_radius * std::cos(t);
        ds.features(n_pos + i, 1) = cy + ring_radius * std::sin(t);
    }
    return ds;
}

/// Random 50/50-style split; tags the halves Train/Test.
inline std::pair<LabeledDataset, LabeledDataset> split_train_test(const LabeledDataset& ds,
                                                                  double test_fraction, Rng& rng) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw ConfigError("split_train_test: test_fraction must be in (0, 1)");
    std::vector<std::size_t> idx(ds.n());
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = idx.size(); i > 1; --i)
        std::swap(idx[i - 1], idx[rng.uniform_index(i)]);
    std::size_t n_test = static_cast<std::size_t>(std::round(test_fraction * ds.n()));
    n_test = std::min(n_test, ds.n() - 1);
    std::vector<std::size_t> test_idx(idx.begin(), idx.begin() + n_test);
    std::vector<std::size_t> train_idx(idx.begin() + n_test, idx.end());
    std::sort(test_idx.begin(), test_idx.end());
    std::sort(train_idx.begin(), train_idx.end());
    LabeledDataset train = ds.select(train_idx);
    LabeledDataset test = ds.select(test_idx);
    train.split = Split::Train;
    test.split = Split::Test;
    train.validate();
    return {std::move(train), std::move(test)};
}

/// Per-feature affine scaler fitted on positive training samples only, so
/// negative outliers cannot stretch the box the uniform term lives on.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> stddev;
    bool fitted = false;
    std::vector<std::string> warnings;

    static Standardizer fit(const LabeledDataset& train) {
        if (train.split != Split::Train)
            throw DataError("Standardizer::fit expects the training split");
        Tensor2 pos = train.features_of(1);
        if (pos.empty()) throw DataError("Standardizer::fit: no positive samples");
        Standardizer s;
        s.mean.assign(pos.cols, 0.0);
        s.stddev.assign(pos.cols, 0.0);
        for (std::size_t i = 0; i < pos.rows; ++i)
            for (std::size_t d = 0; d < pos.cols; ++d) s.mean[d] += pos(i, d);
        for (double& m : s.mean) m /= static_cast<double>(pos.rows);
        for (std::size_t i = 0; i < pos.rows; ++i)
            for (std::size_t d = 0; d < pos.cols; ++d) {
                double c = pos(i, d) - s.mean[d];
                s.stddev[d] += c * c;
            }
        for (std::size_t d = 0; d < pos.cols; ++d) {
            s.stddev[d] = std::sqrt(s.stddev[d] / static_cast<double>(pos.rows));
            if (s.stddev[d] <= 0.0) {
                s.stddev[d] = 1.0;
                s.warnings.push_back("feature " + std::to_string(d) +
                                     " has zero variance; std forced to 1");
            }
        }
        s.fitted = true;
        return s;
    }

    LabeledDataset apply(const LabeledDataset& ds) const {
        if (!fitted) throw DataError("Standardizer::apply before fit");
        if (ds.standardized) throw DataError("Standardizer::apply: dataset already standardized");
        if (ds.dim() != mean.size())
            throw DimensionError("Standardizer::apply dim", mean.size(), ds.dim());
        LabeledDataset out = ds;
        for (std::size_t i = 0; i < out.n(); ++i)
            for (std::size_t d = 0; d < out.dim(); ++d)
                out.features(i, d) = (out.features(i, d) - mean[d]) / stddev[d];
        out.standardized = true;
        return out;
    }

    LabeledDataset invert(const LabeledDataset& ds) const {
        if (!fitted) throw DataError("Standardizer::invert before fit");
        if (!ds.standardized) throw DataError("Standardizer::invert: dataset not standardized");
        LabeledDataset out = ds;
        for (std::size_t i = 0; i < out.n(); ++i)
            for (std::size_t d = 0; d < out.dim(); ++d)
                out.features(i, d) = out.features(i, d) * stddev[d] + mean[d];
        out.standardized = false;
        return out;
    }
};

namespace detail {

inline bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* begin = s.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    return end == begin + s.size();
}

inline std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace detail

/// Strict numeric CSV: comma-separated, '.' decimal, optional single header
/// row, no quoting. The label column must be binary {0, 1} (1 = positive);
/// `label_column` is a header name or a 0-based index. Errors carry the
/// 1-based line number.
inline LabeledDataset load_csv(const std::string& path, const std::string& label_column) {
    std::ifstream in(path);
    if (!in) throw DataError("load_csv: cannot open '" + path + "'");
    std::string line;
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        rows.push_back(detail::split_fields(line));
    }
    if (rows.empty()) throw DataError("load_csv: '" + path + "' is empty");

    bool has_header = false;
    for (const auto& f : rows[0]) {
        double tmp;
        if (!detail::parse_double(f, tmp)) {
            has_header = true;
            break;
        }
    }

    std::size_t n_cols = rows[0].size();
    std::size_t label_idx = n_cols;
    if (has_header) {
        for (std::size_t c = 0; c < n_cols; ++c)
            if (rows[0][c] == label_column) label_idx = c;
    }
    if (label_idx == n_cols) {
        double as_num;
        if (detail::parse_double(label_column, as_num) && as_num >= 0 &&
            as_num < static_cast<double>(n_cols) && as_num == std::floor(as_num))
            label_idx = static_cast<std::size_t>(as_num);
        else
            throw DataError("load_csv: label column '" + label_column + "' not found");
    }

    std::size_t first_data = has_header ? 1 : 0;
    std::size_t n = rows.size() - first_data;
    if (n == 0) throw DataError("load_csv: no data rows in '" + path + "'");
    LabeledDataset ds;
    ds.features = Tensor2(n, n_cols - 1);
    ds.labels.assign(n, 0);
    for (std::size_t r = 0; r < n; ++r) {
        const auto& row = rows[first_data + r];
        std::size_t line_no = first_data + r + 1;
        if (row.size() != n_cols)
            throw DataError("load_csv: line " + std::to_string(line_no) + ": expected " +
                            std::to_string(n_cols) + " fields, got " + std::to_string(row.size()));
        std::size_t out_c = 0;
        for (std::size_t c = 0; c < n_cols; ++c) {
            double v;
            if (!detail::parse_double(row[c], v))
                throw DataError("load_csv: line " + std::to_string(line_no) +
                                ": non-numeric cell '" + row[c] + "'");
            if (c == label_idx) {
                if (v != 0.0 && v != 1.0)
                    throw DataError("load_csv: line " + std::to_string(line_no) +
                                    ": label must be 0 or 1, got '" + row[c] + "'");
                ds.labels[r] = static_cast<int>(v);
            } else {
                ds.features(r, out_c++) = v;
            }
        }
    }
    return ds;
}

/// Writes features plus a trailing `label` column, with a header row.
inline void write_csv(const LabeledDataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("write_csv: cannot open '" + path + "' for writing");
    out.precision(17);
    for (std::size_t d = 0; d < ds.dim(); ++d) out << "x" << d << ",";
    out << "label\n";
    for (std::size_t i = 0; i < ds.n(); ++i) {
        for (std::size_t d = 0; d < ds.dim(); ++d) out << ds.features(i, d) << ",";
        out << ds.labels[i] << "\n";
    }
    if (!out) throw DataError("write_csv: failed writing '" + path + "'");
}

/// Negative-class reduction protocol. Positives and the test split are never
/// touched; subsampling a test-tagged dataset is an error.
struct SubsampleSpec {
    enum class Mode { None, Count, Classes };
    Mode mode = Mode::None;
    std::size_t count = 0;          // Mode::Count: keep exactly this many negatives
    std::size_t n_classes = 0;      // Mode::Classes: pick this many original classes...
    std::size_t per_class_cap = 0;  // ...keeping at most this many samples from each
};

inline LabeledDataset subsample_protocol(const LabeledDataset& ds, const SubsampleSpec& spec,
                                         Rng& rng) {
    if (ds.split == Split::Test)
        throw DataError("subsample_protocol: refusing to modify a test split");
    if (spec.mode == SubsampleSpec::Mode::None) return ds;

    std::vector<std::size_t> keep = ds.indices_of(1);
    std::vector<std::size_t> negatives = ds.indices_of(0);

    auto draw_without_replacement = [&rng](std::vector<std::size_t>& pool, std::size_t k) {
        for (std::size_t i = 0; i < k; ++i)
            std::swap(pool[i], pool[i + rng.uniform_index(pool.size() - i)]);
        pool.resize(k);
    };

    if (spec.mode == SubsampleSpec::Mode::Count) {
        if (spec.count > negatives.size())
            throw DataError("subsample_protocol: requested " + std::to_string(spec.count) +
                            " negatives, only " + std::to_string(negatives.size()) + " available");
        draw_without_replacement(negatives, spec.count);
        keep.insert(keep.end(), negatives.begin(), negatives.end());
    } else {
        if (ds.class_ids.empty())
            throw DataError("subsample_protocol: class mode needs original class ids");
        std::vector<int> classes;
        for (std::size_t i : negatives)
            if (std::find(classes.begin(), classes.end(), ds.class_ids[i]) == classes.end())
                classes.push_back(ds.class_ids[i]);
        if (spec.n_classes > classes.size())
            throw DataError("subsample_protocol: requested " + std::to_string(spec.n_classes) +
                            " classes, only " + std::to_string(classes.size()) + " available");
        std::vector<std::size_t> class_order(classes.size());
        std::iota(class_order.begin(), class_order.end(), 0);
        draw_without_replacement(class_order, spec.n_classes);
        for (std::size_t ci : class_order) {
            std::vector<std::size_t> members;
            for (std::size_t i : negatives)
                if (ds.class_ids[i] == classes[ci]) members.push_back(i);
            if (spec.per_class_cap > 0 && members.size() > spec.per_class_cap)
                draw_without_replacement(members, spec.per_class_cap);
            keep.insert(keep.end(), members.begin(), members.end());
        }
    }
    std::sort(keep.begin(), keep.end());
    return ds.select(keep);
}

}  // namespace ope
