// SPDX-License-Identifier: MIT
#include "impactlab/interpolation.hpp"

#include "impactlab/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace impactlab {

namespace {

// First stencil index and Lagrange weights for position q (in units of the step).
std::size_t stencil(double q, std::size_t n, std::array<double, 4>& wts) {
    const double last = static_cast<double>(n - 1);
    q = std::clamp(q, 0.0, last);
    if (n < 4) {
        // Linear fallback for tiny tables.
        const auto j = static_cast<std::size_t>(std::min(std::floor(q), last - 1.0));
        const double t = q - static_cast<double>(j);
        wts = {1.0 - t, t, 0.0, 0.0};
        return j;
    }
    auto j = static_cast<long>(std::floor(q)) - 1;
    j = std::clamp(j, 0L, static_cast<long>(n) - 4);
    const double t = q - static_cast<double>(j);  // position within nodes 0..3
    wts[0] = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
    wts[1] = t * (t - 2.0) * (t - 3.0) / 2.0;
    wts[2] = -t * (t - 1.0) * (t - 3.0) / 2.0;
    wts[3] = t * (t - 1.0) * (t - 2.0) / 6.0;
    return static_cast<std::size_t>(j);
}

}  // namespace

double cubic_uniform(std::span<const double> v, double x0, double h, double xq) {
    if (v.size() < 2) throw InvalidArgument("cubic_uniform needs at least two samples");
    std::array<double, 4> w{};
    const std::size_t j = stencil((xq - x0) / h, v.size(), w);
    const std::size_t m = std::min<std::size_t>(4, v.size());
    double out = 0.0;
    for (std::size_t k = 0; k < m; ++k) out += w[k] * v[j + k];
    return out;
}

BicubicTable::BicubicTable(std::span<const double> data, std::size_t rows, std::size_t cols,
                           double r0, double hr, double c0, double hc)
    : data_(data), rows_(rows), cols_(cols), r0_(r0), hr_(hr), c0_(c0), hc_(hc) {
    if (rows < 2 || cols < 2 || data.size() != rows * cols)
        throw InvalidArgument("bicubic table needs at least 2x2 samples");
}

double BicubicTable::operator()(double r, double c) const {
    std::array<double, 4> wr{}, wc{};
    const std::size_t jr = stencil((r - r0_) / hr_, rows_, wr);
    const std::size_t jc = stencil((c - c0_) / hc_, cols_, wc);
    const std::size_t mr = std::min<std::size_t>(4, rows_);
    const std::size_t mc = std::min<std::size_t>(4, cols_);
    double out = 0.0;
    for (std::size_t a = 0; a < mr; ++a) {
        const double* row = data_.data() + (jr + a) * cols_ + jc;
        double acc = 0.0;
        for (std::size_t b = 0; b < mc; ++b) acc += wc[b] * row[b];
        out += wr[a] * acc;
    }
    return out;
}

}  // namespace impactlab
