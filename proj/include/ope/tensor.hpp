#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "ope/errors.hpp"

namespace ope {

/// Dense row-major matrix of doubles. Row count may be zero (empty batch);
/// all entries are expected to stay finite.
struct Tensor2 {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Tensor2() = default;
    Tensor2(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    bool empty() const { return rows == 0; }
    std::size_t size() const { return data.size(); }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    static Tensor2 single_row(const std::vector<double>& v) {
        Tensor2 t(1, v.size());
        t.data = v;
        return t;
    }

    /// Stack a subset of rows of `src` given by `indices`.
    static Tensor2 take_rows(const Tensor2& src, const std::vector<std::size_t>& indices) {
        Tensor2 out(indices.size(), src.cols);
        for (std::size_t i = 0; i < indices.size(); ++i) {
            auto r = src.row(indices[i]);
            std::copy(r.begin(), r.end(), out.row(i).begin());
        }
        return out;
    }
};

inline void check_same_shape(const Tensor2& a, const Tensor2& b, const char* what) {
    if (a.rows != b.rows || a.cols != b.cols)
        throw DimensionError(std::string(what) + ": shape mismatch (" +
                             std::to_string(a.rows) + "x" + std::to_string(a.cols) + " vs " +
                             std::to_string(b.rows) + "x" + std::to_string(b.cols) + ")");
}

}  // namespace ope
