// SPDX-License-Identifier: MIT
#include "impactlab/jump_splitting.hpp"

#include "impactlab/errors.hpp"
#include "impactlab/parallel.hpp"
#include "impactlab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace impactlab {

void SplitConfig::check() const {
    if (epsilon_list.empty()) throw InvalidArgument("epsilon_list must not be empty");
    for (std::size_t i = 0; i < epsilon_list.size(); ++i) {
        if (!(epsilon_list[i] > 0.0)) throw InvalidArgument("epsilon values must be positive");
        if (i > 0 && !(epsilon_list[i] < epsilon_list[i - 1]))
            throw InvalidArgument("epsilon_list must be strictly decreasing");
    }
    if (mc_paths < 2) throw InvalidArgument("mc_paths must be at least 2");
    if (jackknife_groups < 2) throw InvalidArgument("jackknife_groups must be >= 2");
    if (steps_per_epsilon < 32) throw InvalidArgument("steps_per_epsilon must be at least 32");
}

void check_separation(const TradingSignal& signal, double epsilon) {
    for (std::size_t j = 1; j < signal.jumps.size(); ++j) {
        const double gap = signal.jumps[j].time - signal.jumps[j - 1].time;
        if (gap < epsilon) {
            std::ostringstream os;
            os << "block orders " << j - 1 << " and " << j << " are " << gap
               << " apart, closer than the splitting window " << epsilon;
            throw InvalidArgument(os.str());
        }
    }
}

std::size_t window_steps(const TimeGrid& grid, double epsilon, std::size_t min_steps) {
    const double ratio = epsilon / grid.dt();
    const double k = std::round(ratio);
    if (k < 1.0 || std::abs(ratio - k) > 1e-9 * std::max(1.0, ratio))
        throw InvalidArgument("splitting window is not a whole number of grid steps");
    if (static_cast<std::size_t>(k) < min_steps) {
        std::ostringstream os;
        os << "splitting window resolved by " << k << " steps, need at least " << min_steps;
        throw InvalidArgument(os.str());
    }
    return static_cast<std::size_t>(k);
}

PathResult simulate_split(const MarketModel& model, const TradingSignal& signal, double epsilon,
                          const TimeGrid& grid, InitialCondition init,
                          std::span<const double> brownian) {
    if (signal.feedback) throw InvalidArgument("splitting needs an open-loop signal");
    if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
    signal.check(grid);
    check_separation(signal, epsilon);
    const std::size_t width = window_steps(grid, epsilon);
    const double dt = grid.dt();
    TimeGrid ext{grid.t0, grid.T + static_cast<double>(width) * dt, grid.steps + width};
    if (brownian.size() < ext.steps)
        throw InvalidArgument("not enough Brownian increments for the extended grid");

    PathResult out;
    out.grid = ext;
    out.brownian.assign(brownian.begin(), brownian.begin() + static_cast<long>(ext.steps));
    out.states.reserve(ext.steps + 1);

    // Trading rate added on each step.
    std::vector<double> ramp(ext.steps, 0.0);
    for (const auto& j : signal.jumps) {
        const std::size_t start = grid.nearest_node(j.time);
        if (std::abs(grid.time(start) - j.time) > 1e-12 * std::max(1.0, std::abs(j.time))) {
            std::ostringstream os;
            os.precision(17);
            os << "block order at t=" << j.time << " snapped to node " << start;
            out.warnings.push_back(os.str());
        }
        for (std::size_t k = start; k < start + width; ++k) ramp[k] += j.shares / epsilon;
    }

    if (!model.box().contains(init.price))
        throw DomainEscapeError("initial price", init.price, model.box().lo, model.box().hi);
    MarketState s{init.price, signal.y0, init.value};
    out.states.push_back(s);
    for (std::size_t k = 0; k < ext.steps; ++k) {
        const std::size_t kk = std::min(k, grid.steps - 1);
        s = euler_step(model, s, signal.a_at(kk), signal.b_at(kk), brownian[k], dt, ramp[k]);
        if (!out.admissibility_violated && std::abs(s.shares) > signal.bound) {
            out.admissibility_violated = true;
            out.warnings.push_back("|Y| exceeds the admissibility bound");
        }
        out.states.push_back(s);
    }
    return out;
}

PathResult simulate_split(const MarketModel& model, const TradingSignal& signal, double epsilon,
                          const TimeGrid& grid, InitialCondition init, std::uint64_t seed,
                          std::uint64_t path) {
    const std::size_t width = window_steps(grid, epsilon);
    const auto dw = brownian_increments(seed, path, grid.steps + width, grid.dt());
    return simulate_split(model, signal, epsilon, grid, init, dw);
}

ConvergenceTable splitting_convergence(const MarketModel& model, const TradingSignal& signal,
                                       const SplitConfig& cfg) {
    cfg.check();
    check_separation(signal, cfg.epsilon_list.front());
    const double dt = cfg.epsilon_list.back() / static_cast<double>(cfg.steps_per_epsilon);
    const double ratio = model.horizon / dt;
    const double steps_d = std::round(ratio);
    if (std::abs(ratio - steps_d) > 1e-9 * ratio)
        throw InvalidArgument("horizon is not a whole number of splitting grid steps");
    const TimeGrid grid{0.0, model.horizon, static_cast<std::size_t>(steps_d)};
    std::vector<std::size_t> widths;
    for (double eps : cfg.epsilon_list) widths.push_back(window_steps(grid, eps, 32));
    const std::size_t longest = grid.steps + widths.front();

    const std::size_t n_eps = cfg.epsilon_list.size();
    const std::size_t groups = std::min(cfg.jackknife_groups, cfg.mc_paths);
    std::vector<std::vector<GroupedNodeSums>> per_group(groups);
    parallel_for(groups, cfg.threads, [&](std::size_t g) {
        std::vector<GroupedNodeSums> local(n_eps, GroupedNodeSums(groups, 1));
        for (std::size_t p = 0; p < cfg.mc_paths; ++p) {
            if (group_of(p, cfg.mc_paths, groups) != g) continue;
            const auto dw = brownian_increments(cfg.seed, p, longest, dt);
            const auto limit = simulate_with_jumps(model, signal, grid, cfg.init, dw);
            for (std::size_t i = 0; i < n_eps; ++i) {
                const auto split = simulate_split(model, signal, cfg.epsilon_list[i], grid,
                                                  cfg.init, dw);
                const double err[1] = {squared_distance(split.terminal(), limit.terminal())};
                local[i].add(g, err);
                local[i].add_count(g);
            }
        }
        per_group[g] = std::move(local);
    });

    ConvergenceTable table;
    table.parameter_name = "epsilon";
    table.value_name = "mse";
    table.paths = cfg.mc_paths;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < n_eps; ++i) {
        GroupedNodeSums merged(groups, 1);
        for (std::size_t g = 0; g < groups; ++g) merged.merge_group(per_group[g][i], g);
        const auto row = merged.sup_mean(cfg.epsilon_list[i]);
        table.rows.push_back(row);
        xs.push_back(row.parameter);
        ys.push_back(row.mse);
    }
    bool positive = true;
    for (double v : ys) positive = positive && v > 0.0;
    if (positive && xs.size() >= 2) table.fit = fit_loglog(xs, ys);
    return table;
}

}  // namespace impactlab
