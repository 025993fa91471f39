// SPDX-License-Identifier: MIT
//
// Block orders replaced by continuous trading at rate delta / epsilon on
// [tau, tau + epsilon], compared with the jump dynamics as epsilon -> 0.
#pragma once

#include "impactlab/convergence.hpp"
#include "impactlab/path_engine.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace impactlab {

struct SplitConfig {
    /// Strictly decreasing window lengths in time units.
    std::vector<double> epsilon_list;
    std::size_t mc_paths = 1000;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    std::size_t jackknife_groups = 20;
    /// Grid steps inside the smallest window; the common step is min(epsilon) / this.
    std::size_t steps_per_epsilon = 32;
    InitialCondition init{};

    void check() const;
};

/// Throws InvalidArgument when two block orders are closer than epsilon.
void check_separation(const TradingSignal& signal, double epsilon);

/// Steps of `grid` covering a window of length epsilon; throws when epsilon is not a
/// whole number of steps or is resolved by fewer than `min_steps`.
[[nodiscard]] std::size_t window_steps(const TimeGrid& grid, double epsilon, std::size_t min_steps = 1);

/// Split dynamics on grid extended to T + epsilon (same step). `brownian` must hold the
/// increments of the extended grid; its prefix drives [0, T]. Loadings past T repeat
/// the last value.
[[nodiscard]] PathResult simulate_split(const MarketModel& model, const TradingSignal& signal,
                                        double epsilon, const TimeGrid& grid, InitialCondition init,
                                        std::span<const double> brownian);
[[nodiscard]] PathResult simulate_split(const MarketModel& model, const TradingSignal& signal,
                                        double epsilon, const TimeGrid& grid, InitialCondition init,
                                        std::uint64_t seed, std::uint64_t path = 0);

/// E|Z^eps_{T+eps} - Z_T|^2 at matched noise for each epsilon, with the log-log slope.
[[nodiscard]] ConvergenceTable splitting_convergence(const MarketModel& model,
                                                     const TradingSignal& signal,
                                                     const SplitConfig& cfg);

}  // namespace impactlab
