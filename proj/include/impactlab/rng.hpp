// SPDX-License-Identifier: MIT
//
// Counter-based normal variates keyed by (seed, path, step), so Monte Carlo
// paths are reproducible and can be generated by any worker in any order.
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace impactlab {

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter generate(Counter ctr, Key key) noexcept;
};

/// Standard normal variate number `step` of stream `path` under `seed`.
[[nodiscard]] double standard_normal(std::uint64_t seed, std::uint64_t path, std::uint64_t step) noexcept;

/// Fills out[i] = standard_normal(seed, path, first + i).
void fill_standard_normals(std::uint64_t seed, std::uint64_t path, std::uint64_t first,
                           std::span<double> out) noexcept;

/// Brownian increments sqrt(dt) * N(0,1) for one path.
[[nodiscard]] std::vector<double> brownian_increments(std::uint64_t seed, std::uint64_t path,
                                                      std::size_t steps, double dt);

/// Sums consecutive blocks of `factor` increments (common noise on a coarser grid).
[[nodiscard]] std::vector<double> coarsen_increments(std::span<const double> fine, std::size_t factor);

}  // namespace impactlab
