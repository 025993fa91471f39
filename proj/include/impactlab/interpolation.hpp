// SPDX-License-Identifier: MIT
//
// Four-point Lagrange interpolation on uniform grids (stencil shifted inward at the edges).
#pragma once

#include <cstddef>
#include <span>

namespace impactlab {

/// Cubic interpolation of samples v[i] at x0 + i h; xq is clamped to the sampled range.
[[nodiscard]] double cubic_uniform(std::span<const double> v, double x0, double h, double xq);

/// Tensor-product cubic interpolation of a row-major (rows x cols) table with uniform
/// row coordinate r0 + n hr and column coordinate c0 + i hc.
class BicubicTable {
public:
    BicubicTable() = default;
    BicubicTable(std::span<const double> data, std::size_t rows, std::size_t cols, double r0,
                 double hr, double c0, double hc);

    [[nodiscard]] double operator()(double r, double c) const;
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

private:
    std::span<const double> data_;
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    double r0_ = 0.0, hr_ = 1.0, c0_ = 0.0, hc_ = 1.0;
};

}  // namespace impactlab
