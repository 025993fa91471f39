// SPDX-License-Identifier: MIT
#include "impactlab/path_engine.hpp"

#include "impactlab/csv.hpp"
#include "impactlab/errors.hpp"
#include "impactlab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace impactlab {

TimeGrid TimeGrid::uniform(double t0, double T, std::size_t steps) {
    if (steps == 0) throw InvalidArgument("time grid needs at least one step");
    if (!(T > t0)) throw InvalidArgument("time grid needs T > t0");
    return TimeGrid{t0, T, steps};
}

std::size_t TimeGrid::nearest_node(double t) const {
    const double k = std::round((t - t0) / dt());
    if (k <= 0.0) return 0;
    if (k >= static_cast<double>(steps)) return steps;
    return static_cast<std::size_t>(k);
}

TradingSignal TradingSignal::constant(double y0, double a, double b) {
    TradingSignal s;
    s.y0 = y0;
    s.a = {a};
    s.b = {b};
    return s;
}

void TradingSignal::check(const TimeGrid& grid) const {
    if (!feedback) {
        if (a.empty() || b.empty()) throw InvalidArgument("signal loadings must not be empty");
        if (a.size() != 1 && a.size() < grid.steps)
            throw InvalidArgument("signal loading 'a' shorter than the grid");
        if (b.size() != 1 && b.size() < grid.steps)
            throw InvalidArgument("signal loading 'b' shorter than the grid");
        for (double v : a)
            if (!(std::abs(v) <= bound)) throw InvalidArgument("|a| exceeds the signal bound k");
        for (double v : b)
            if (!(std::abs(v) <= bound)) throw InvalidArgument("|b| exceeds the signal bound k");
    }
    if (static_cast<double>(jumps.size()) > bound)
        throw InvalidArgument("number of block orders exceeds the signal bound k");
    for (std::size_t j = 0; j < jumps.size(); ++j) {
        if (!(std::abs(jumps[j].shares) <= bound))
            throw InvalidArgument("block order size exceeds the signal bound k");
        if (jumps[j].time < grid.t0 || jumps[j].time > grid.T)
            throw InvalidArgument("block order time outside the grid");
        if (j > 0 && jumps[j].time < jumps[j - 1].time)
            throw InvalidArgument("block orders must be sorted by time");
    }
}

MarketState euler_step(const MarketModel& model, const MarketState& s, double a, double b,
                       double dw, double dt, double ramp) {
    const double x = s.price;
    const double f = model.curve.slope(x);
    const double sig = model.sigma(x);
    const double dyc = b * dt + a * dw;
    const double dy = dyc + ramp * dt;
    const double drift = model.mu(x) + a * sig * model.curve.slope_prime(x);
    const double dx = sig * dw + f * dy + drift * dt;
    MarketState next;
    next.price = x + dx;
    next.shares = s.shares + dy;
    // The ramp is of finite variation: pairing it at mid-step is exact for linear ramps.
    next.value = s.value + (s.shares + 0.5 * ramp * dt) * dx + 0.5 * f * dyc * dyc;
    if (!model.box().contains(next.price))
        throw DomainEscapeError("price path", next.price, model.box().lo, model.box().hi);
    return next;
}

MarketState milstein_step(const MarketModel& model, const MarketState& s, double a, double b,
                          double la, double dw, double dt) {
    const double x = s.price;
    const double f = model.curve.slope(x);
    const double fp = model.curve.slope_prime(x);
    const double sig = model.sigma(x);
    const double sigp = model.coefficients.sigma.derivative(x);
    const double gx = sig + f * a;
    const double q = 0.5 * (dw * dw - dt);
    const double dyc = b * dt + a * dw + la * q;
    const double drift = model.mu(x) + a * sig * fp;
    const double dx = sig * dw + f * dyc + drift * dt + gx * (sigp + fp * a) * q;
    MarketState next;
    next.price = x + dx;
    next.shares = s.shares + dyc;
    next.value = s.value + s.shares * dx + 0.5 * f * dyc * dyc + a * sig * q;
    if (!model.box().contains(next.price))
        throw DomainEscapeError("price path", next.price, model.box().lo, model.box().hi);
    return next;
}

namespace {

void monitor_bound(PathResult& out, const MarketState& s, double bound, std::size_t node) {
    if (!out.admissibility_violated && std::abs(s.shares) > bound) {
        out.admissibility_violated = true;
        std::ostringstream os;
        os << "|Y| exceeds the admissibility bound " << bound << " at node " << node;
        out.warnings.push_back(os.str());
    }
}

PathResult integrate(const MarketModel& model, const TradingSignal& signal, const TimeGrid& grid,
                     InitialCondition init, std::span<const double> brownian, bool with_jumps) {
    signal.check(grid);
    if (brownian.size() < grid.steps)
        throw InvalidArgument("not enough Brownian increments for the grid");

    PathResult out;
    out.grid = grid;
    out.brownian.assign(brownian.begin(), brownian.begin() + static_cast<long>(grid.steps));
    out.states.reserve(grid.steps + 1);

    std::vector<std::size_t> jump_nodes;
    if (with_jumps) {
        for (const auto& j : signal.jumps) {
            const std::size_t node = grid.nearest_node(j.time);
            jump_nodes.push_back(node);
            if (std::abs(grid.time(node) - j.time) > 1e-12 * std::max(1.0, std::abs(j.time))) {
                std::ostringstream os;
                os.precision(17);
                os << "block order at t=" << j.time << " snapped to node " << node
                   << " (t=" << grid.time(node) << ")";
                out.warnings.push_back(os.str());
            }
        }
    }

    if (!model.box().contains(init.price))
        throw DomainEscapeError("initial price", init.price, model.box().lo, model.box().hi);
    MarketState s{init.price, signal.y0, init.value};
    std::size_t next_jump = 0;
    const double dt = grid.dt();
    for (std::size_t k = 0;; ++k) {
        while (next_jump < jump_nodes.size() && jump_nodes[next_jump] == k) {
            const auto& order = signal.jumps[next_jump];
            const MarketState after = model.curve.round_trip_state(s, order.shares);
            out.jumps.push_back(JumpRecord{k, order.time, order.shares, s, after});
            s = after;
            ++next_jump;
        }
        monitor_bound(out, s, signal.bound, k);
        out.states.push_back(s);
        if (k == grid.steps) break;
        double a = 0.0;
        double b = 0.0;
        if (signal.feedback) {
            std::tie(a, b) = signal.feedback(k, grid.time(k), s);
        } else {
            a = signal.a_at(k);
            b = signal.b_at(k);
        }
        s = euler_step(model, s, a, b, brownian[k], dt);
    }
    return out;
}

}  // namespace

PathResult simulate_continuous(const MarketModel& model, const TradingSignal& signal,
                               const TimeGrid& grid, InitialCondition init,
                               std::span<const double> brownian) {
    if (!signal.jumps.empty())
        throw InvalidArgument("simulate_continuous: signal must not contain block orders");
    return integrate(model, signal, grid, init, brownian, false);
}

PathResult simulate_continuous(const MarketModel& model, const TradingSignal& signal,
                               const TimeGrid& grid, InitialCondition init, std::uint64_t seed,
                               std::uint64_t path) {
    const auto dw = brownian_increments(seed, path, grid.steps, grid.dt());
    return simulate_continuous(model, signal, grid, init, dw);
}

PathResult simulate_with_jumps(const MarketModel& model, const TradingSignal& signal,
                               const TimeGrid& grid, InitialCondition init,
                               std::span<const double> brownian) {
    return integrate(model, signal, grid, init, brownian, true);
}

PathResult simulate_with_jumps(const MarketModel& model, const TradingSignal& signal,
                               const TimeGrid& grid, InitialCondition init, std::uint64_t seed,
                               std::uint64_t path) {
    const auto dw = brownian_increments(seed, path, grid.steps, grid.dt());
    return simulate_with_jumps(model, signal, grid, init, dw);
}

void write_csv(const PathResult& path, std::ostream& out) {
    csv::Writer w(out);
    w.header({"t", "X", "Y", "V", "dW"});
    for (std::size_t k = 0; k < path.states.size(); ++k) {
        const auto& s = path.states[k];
        w.row({csv::format(path.grid.time(k)), csv::format(s.price), csv::format(s.shares),
               csv::format(s.value),
               k < path.brownian.size() ? csv::format(path.brownian[k]) : std::string{}});
    }
}

}  // namespace impactlab
