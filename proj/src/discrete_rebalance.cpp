// SPDX-License-Identifier: MIT
#include "impactlab/discrete_rebalance.hpp"

#include "impactlab/errors.hpp"
#include "impactlab/parallel.hpp"
#include "impactlab/rng.hpp"

#include <cmath>

namespace impactlab {

void DiscreteRunConfig::check() const {
    if (n == 0) throw InvalidArgument("rebalancing count n must be positive");
    if (mc_paths == 0) throw InvalidArgument("mc_paths must be positive");
    if (base_grid_steps < n || base_grid_steps % n != 0)
        throw InvalidArgument("base_grid_steps must be a multiple of n");
    if (jackknife_groups < 2) throw InvalidArgument("jackknife_groups must be >= 2");
}

std::vector<double> signal_path(const TradingSignal& signal, const TimeGrid& grid,
                                std::span<const double> brownian) {
    if (signal.feedback) throw InvalidArgument("discrete rebalancing needs an open-loop signal");
    if (!signal.jumps.empty()) throw InvalidArgument("discrete rebalancing needs a jump-free signal");
    signal.check(grid);
    std::vector<double> y(grid.steps + 1);
    y[0] = signal.y0;
    const double dt = grid.dt();
    for (std::size_t k = 0; k < grid.steps; ++k)
        y[k + 1] = y[k] + (signal.b_at(k) * dt + signal.a_at(k) * brownian[k]);
    return y;
}

PathResult simulate_discrete(const MarketModel& model, const TradingSignal& signal,
                             const TimeGrid& grid, std::size_t n, InitialCondition init,
                             std::span<const double> brownian) {
    if (n == 0 || grid.steps % n != 0)
        throw InvalidArgument("rebalancing count must divide the number of grid steps");
    if (brownian.size() < grid.steps)
        throw InvalidArgument("not enough Brownian increments for the grid");
    const auto y = signal_path(signal, grid, brownian);
    const std::size_t stride = grid.steps / n;
    const double dt = grid.dt();
    const auto& box = model.box();

    PathResult out;
    out.grid = grid;
    out.brownian.assign(brownian.begin(), brownian.begin() + static_cast<long>(grid.steps));
    out.states.reserve(grid.steps + 1);

    if (!box.contains(init.price))
        throw DomainEscapeError("initial price", init.price, box.lo, box.hi);
    MarketState s{init.price, y[0], init.value};
    out.states.push_back(s);
    for (std::size_t k = 0; k < grid.steps; ++k) {
        const double x = s.price;
        const double dx = model.mu(x) * dt + model.sigma(x) * brownian[k];
        s.price = x + dx;
        s.value += s.shares * dx;
        if (!box.contains(s.price)) throw DomainEscapeError("price path", s.price, box.lo, box.hi);
        if ((k + 1) % stride == 0) {
            const double delta = y[k + 1] - s.shares;
            if (delta != 0.0) {
                const MarketState before = s;
                const double f = model.curve.slope(before.price);
                const double jump = delta * f;
                s.price = before.price + jump;
                s.value = before.value + before.shares * jump + 0.5 * delta * delta * f;
                s.shares = y[k + 1];
                if (!box.contains(s.price))
                    throw DomainEscapeError("price path", s.price, box.lo, box.hi);
                out.jumps.push_back(JumpRecord{k + 1, grid.time(k + 1), delta, before, s});
            }
        }
        out.states.push_back(s);
    }
    return out;
}

ConvergenceTable convergence_study(const MarketModel& model, const TradingSignal& signal,
                                   std::span<const std::size_t> n_list,
                                   const DiscreteRunConfig& cfg) {
    if (n_list.empty()) throw InvalidArgument("n_list must not be empty");
    for (std::size_t i = 0; i < n_list.size(); ++i) {
        DiscreteRunConfig c = cfg;
        c.n = n_list[i];
        c.check();
        if (i > 0 && n_list[i] <= n_list[i - 1])
            throw InvalidArgument("n_list must be increasing");
    }
    const auto grid = TimeGrid::uniform(0.0, model.horizon, cfg.base_grid_steps);
    const std::size_t nodes = grid.steps + 1;
    const std::size_t groups = std::min(cfg.jackknife_groups, cfg.mc_paths);
    if (groups < 2) throw InvalidArgument("convergence study needs at least two paths");

    // One worker per jackknife group keeps accumulation order fixed.
    std::vector<std::vector<GroupedNodeSums>> per_group(groups);
    parallel_for(groups, cfg.threads, [&](std::size_t g) {
        std::vector<GroupedNodeSums> local(n_list.size(), GroupedNodeSums(groups, nodes));
        std::vector<double> err(nodes);
        for (std::size_t p = 0; p < cfg.mc_paths; ++p) {
            if (group_of(p, cfg.mc_paths, groups) != g) continue;
            const auto dw = brownian_increments(cfg.seed, p, grid.steps, grid.dt());
            const auto limit = simulate_continuous(model, signal, grid, cfg.init, dw);
            for (std::size_t i = 0; i < n_list.size(); ++i) {
                const auto disc = simulate_discrete(model, signal, grid, n_list[i], cfg.init, dw);
                for (std::size_t k = 0; k < nodes; ++k)
                    err[k] = squared_distance(disc.states[k], limit.states[k]);
                local[i].add(g, err);
                local[i].add_count(g);
            }
        }
        per_group[g] = std::move(local);
    });

    ConvergenceTable table;
    table.parameter_name = "n";
    table.value_name = "sup_node_mse";
    table.paths = cfg.mc_paths;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < n_list.size(); ++i) {
        GroupedNodeSums merged(groups, nodes);
        for (std::size_t g = 0; g < groups; ++g) merged.merge_group(per_group[g][i], g);
        const auto row = merged.sup_mean(static_cast<double>(n_list[i]));
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
