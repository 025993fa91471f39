// SPDX-License-Identifier: MIT
//
// Rebalancing a continuous signal only at t_i = i T / n: the position is held
// constant in between, the price follows the pure diffusion, and each trade of
// size delta moves the price by delta f(X-) and costs delta^2 f(X-) / 2.
#pragma once

#include "impactlab/convergence.hpp"
#include "impactlab/path_engine.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace impactlab {

struct DiscreteRunConfig {
    std::size_t n = 1;
    std::size_t mc_paths = 1000;
    /// Fine simulation grid; must be a multiple of every rebalancing count.
    std::size_t base_grid_steps = 2048;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    std::size_t jackknife_groups = 20;
    InitialCondition init{};

    void check() const;
};

/// Signal Y at every node of the fine grid (open-loop Euler, shared with the continuous run).
[[nodiscard]] std::vector<double> signal_path(const TradingSignal& signal, const TimeGrid& grid,
                                              std::span<const double> brownian);

/// (X^n, Y^n, V^n) on the fine grid for rebalancing count n (n must divide grid.steps).
[[nodiscard]] PathResult simulate_discrete(const MarketModel& model, const TradingSignal& signal,
                                           const TimeGrid& grid, std::size_t n,
                                           InitialCondition init, std::span<const double> brownian);

/// For each n: sup over fine-grid nodes of E|Z^n - Z|^2 at matched noise, with a
/// grouped-jackknife standard error, plus the log-log slope against n.
[[nodiscard]] ConvergenceTable convergence_study(const MarketModel& model, const TradingSignal& signal,
                                                 std::span<const std::size_t> n_list,
                                                 const DiscreteRunConfig& cfg);

}  // namespace impactlab
