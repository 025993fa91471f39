// SPDX-License-Identifier: MIT
//
// Sampled checks of the algebraic identities of the impact flow and cost,
// run against the numerical curve rather than the closed forms.
#pragma once

#include "impactlab/impact_curve.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace impactlab {

struct IdentityCheckConfig {
    std::size_t samples = 1000;
    /// Prices are drawn uniformly from [x_lo, x_hi]; sizes y, iota from [-share_range, share_range].
    double x_lo = -1.0;
    double x_hi = 1.0;
    double share_range = 1.0;
    double tolerance = 1e-8;
    double round_trip_tolerance = 1e-9;
    /// Step of the fourth-order central differences in x and y.
    double fd_step = 1e-3;
    std::uint64_t seed = 0;

    void check() const;
};

struct IdentityResult {
    std::string name;
    std::size_t samples = 0;
    double max_error = 0.0;
    double tolerance = 0.0;
    /// Sample (x, y, iota) where the error was largest.
    double worst_x = 0.0, worst_y = 0.0, worst_iota = 0.0;

    [[nodiscard]] bool passed() const { return max_error <= tolerance; }
};

/// Rows: reversibility, size_derivative, price_derivative, cost_shift,
/// cost_size_derivative, cost_price_derivative, round_trip, inverse_flow.
[[nodiscard]] std::vector<IdentityResult> check_identities(const ImpactCurve& curve,
                                                           const IdentityCheckConfig& cfg);

/// Header identity,samples,max_error,tolerance,passed,x,y,iota.
void write_csv(const std::vector<IdentityResult>& rows, std::ostream& out);

}  // namespace impactlab
