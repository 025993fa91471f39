// SPDX-License-Identifier: MIT
//
// Euler-Maruyama integration of the continuous-time trading dynamics
//
//   dY = b dt + a dW (+ block orders)
//   dX = sigma(X) dW + f(X) dY^c + (mu(X) + a (sigma f')(X)) dt
//   dV = Y dX + 1/2 a^2 f(X) dt
//
// with block orders applied through the impact-curve jump map.
#pragma once

#include "impactlab/market_model.hpp"
#include "impactlab/state.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace impactlab {

struct TimeGrid {
    double t0 = 0.0;
    double T = 1.0;
    std::size_t steps = 1;

    static TimeGrid uniform(double t0, double T, std::size_t steps);

    [[nodiscard]] double dt() const noexcept { return (T - t0) / static_cast<double>(steps); }
    [[nodiscard]] double time(std::size_t k) const noexcept {
        return k == steps ? T : t0 + static_cast<double>(k) * dt();
    }
    /// Nearest grid node to t (clamped to the grid).
    [[nodiscard]] std::size_t nearest_node(double t) const;
};

struct JumpOrder {
    double time = 0.0;
    double shares = 0.0;
};

/// Controls (a, b) evaluated at grid node `step` from the current state.
using FeedbackControl =
    std::function<std::pair<double, double>(std::size_t step, double t, const MarketState& s)>;

/// Ito trading signal Y = y0 + int b dt + int a dW + sum of block orders.
struct TradingSignal {
    double y0 = 0.0;
    /// Per-step loadings; a single entry means constant over the grid.
    std::vector<double> a{0.0};
    std::vector<double> b{0.0};
    std::vector<JumpOrder> jumps;
    double bound = std::numeric_limits<double>::infinity();
    /// When set, replaces the open-loop arrays.
    FeedbackControl feedback;

    static TradingSignal constant(double y0, double a, double b);

    [[nodiscard]] double a_at(std::size_t k) const { return a.size() == 1 ? a[0] : a.at(k); }
    [[nodiscard]] double b_at(std::size_t k) const { return b.size() == 1 ? b[0] : b.at(k); }

    /// Throws InvalidArgument when |a|, |b|, jump sizes or jump count exceed `bound`,
    /// or jump times are decreasing or outside the grid.
    void check(const TimeGrid& grid) const;
};

struct InitialCondition {
    double price = 0.0;
    double value = 0.0;
};

struct JumpRecord {
    std::size_t node = 0;
    double requested_time = 0.0;
    double shares = 0.0;
    MarketState before;
    MarketState after;
};

struct PathResult {
    TimeGrid grid;
    /// Right-continuous state at every node (post-jump values at jump nodes).
    std::vector<MarketState> states;
    /// Left and right limits at jump nodes.
    std::vector<JumpRecord> jumps;
    std::vector<double> brownian;
    bool admissibility_violated = false;
    std::vector<std::string> warnings;

    [[nodiscard]] const MarketState& terminal() const { return states.back(); }
};

/// One Euler step. `ramp` is an additional deterministic trading rate (shares per time);
/// the liquidity term uses the realized square of the Ito part of dY.
[[nodiscard]] MarketState euler_step(const MarketModel& model, const MarketState& s, double a,
                                     double b, double dw, double dt, double ramp = 0.0);

/// Euler step plus the second-order terms in dW of a single-noise Milstein scheme.
/// `la` is the derivative of a along the diffusion direction (sigma + f a, a) of (X, Y).
[[nodiscard]] MarketState milstein_step(const MarketModel& model, const MarketState& s, double a,
                                        double b, double la, double dw, double dt);

/// Continuous dynamics without block orders, driven by the given increments.
[[nodiscard]] PathResult simulate_continuous(const MarketModel& model, const TradingSignal& signal,
                                             const TimeGrid& grid, InitialCondition init,
                                             std::span<const double> brownian);
[[nodiscard]] PathResult simulate_continuous(const MarketModel& model, const TradingSignal& signal,
                                             const TimeGrid& grid, InitialCondition init,
                                             std::uint64_t seed, std::uint64_t path = 0);

/// Continuous dynamics plus block orders, snapped to the nearest grid node and applied
/// through the jump map in list order.
[[nodiscard]] PathResult simulate_with_jumps(const MarketModel& model, const TradingSignal& signal,
                                             const TimeGrid& grid, InitialCondition init,
                                             std::span<const double> brownian);
[[nodiscard]] PathResult simulate_with_jumps(const MarketModel& model, const TradingSignal& signal,
                                             const TimeGrid& grid, InitialCondition init,
                                             std::uint64_t seed, std::uint64_t path = 0);

/// One row per grid node: t, X, Y, V, dW (dW of the step leaving the node).
void write_csv(const PathResult& path, std::ostream& out);

}  // namespace impactlab
