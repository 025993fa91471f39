// SPDX-License-Identifier: MIT
#pragma once

#include <cmath>

namespace impactlab {

/// Stock price X, shares held Y and portfolio value V (cash + Y·X).
struct MarketState {
    double price = 0.0;
    double shares = 0.0;
    double value = 0.0;

    [[nodiscard]] bool finite() const noexcept {
        return std::isfinite(price) && std::isfinite(shares) && std::isfinite(value);
    }

    friend bool operator==(const MarketState&, const MarketState&) = default;
};

/// Squared Euclidean distance between two states.
inline double squared_distance(const MarketState& a, const MarketState& b) noexcept {
    const double dx = a.price - b.price;
    const double dy = a.shares - b.shares;
    const double dv = a.value - b.value;
    return dx * dx + dy * dy + dv * dv;
}

}  // namespace impactlab
