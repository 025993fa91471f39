// SPDX-License-Identifier: MIT
//
// Backward solver for the super-hedging equation
//
//   d_t w + 1/2 hs^2 d_xx w + hm d_x w + [hm d_x I + 1/2 hs^2 d_xx I](x, yh) = 0,  w(T) = G,
//
// where yh = x^{-1}(x, x + f(x) d_x w) and the hat coefficients hm, hs are taken
// at (x, yh). Implicit Euler in time, Picard iteration on the coefficients.
#pragma once

#include "impactlab/market_model.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace impactlab {

/// Uniform space-time grid; space_steps intervals on [x_lo, x_hi], time_steps on [0, T].
struct PdeGrid {
    double x_lo = 0.0;
    double x_hi = 1.0;
    std::size_t space_steps = 64;
    std::size_t time_steps = 64;
    double T = 1.0;

    void check() const;
    [[nodiscard]] double dx() const noexcept { return (x_hi - x_lo) / static_cast<double>(space_steps); }
    [[nodiscard]] double dt() const noexcept { return T / static_cast<double>(time_steps); }
    [[nodiscard]] double x(std::size_t i) const noexcept {
        return i == space_steps ? x_hi : x_lo + static_cast<double>(i) * dx();
    }
    [[nodiscard]] double s(std::size_t n) const noexcept {
        return n == time_steps ? T : static_cast<double>(n) * dt();
    }
    /// Same box, both step counts multiplied by `factor`.
    [[nodiscard]] PdeGrid refined(std::size_t factor) const;
};

/// Row-major (time x space) array of node values.
struct NodeField {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    NodeField() = default;
    NodeField(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    double& operator()(std::size_t n, std::size_t i) { return data[n * cols + i]; }
    double operator()(std::size_t n, std::size_t i) const { return data[n * cols + i]; }
};

struct HatCoefficients {
    double mu = 0.0;
    double sigma = 0.0;
};

/// Hat drift and volatility at (x, y); `end` must equal flow(x, y).
[[nodiscard]] HatCoefficients hat_coefficients(const MarketModel& model, double x, double y,
                                               double end);
[[nodiscard]] HatCoefficients hat_coefficients(const MarketModel& model, double x, double y);

struct TerminalOptions {
    /// Restricts deliveries to |y| <= k_bound (the truncated terminal value G_k).
    std::optional<double> k_bound;
    /// Scan points per node for the delivery fixed point y = g1(flow(x, y)).
    std::size_t scan_points = 400;
    /// Half-width of the scan when no k_bound is given (further cut by the price box).
    double scan_half_width = 50.0;
};

struct TerminalData {
    std::vector<double> values;
    /// Delivered shares y* at each node (the minimizing fixed point).
    std::vector<double> shares;
    /// Number of fixed points found at each node.
    std::vector<int> multiplicity;
};

/// G(x) = inf { y x(x,y) + g0(x(x,y)) - I(x,y) : y = g1(x(x,y)) } on the given nodes.
/// Throws FixedPointError listing the nodes without a fixed point.
[[nodiscard]] TerminalData terminal_condition(const MarketModel& model,
                                              const std::vector<double>& nodes,
                                              const TerminalOptions& opts = {});

/// Delivered shares at price x for a general claim (same fixed-point rule).
[[nodiscard]] double delivery_shares(const MarketModel& model, double x,
                                     const TerminalOptions& opts = {});

struct PdeOptions {
    double picard_tol = 1e-9;
    int max_picard = 50;
    TerminalOptions terminal;
    /// Discount rate of the transformed solver.
    double rho = 1.0;
};

struct PdeDiagnostics {
    std::vector<int> picard_iterations;   // per time step, index n = step from s_{n+1} to s_n
    std::vector<double> picard_residual;  // final sup-norm update per step
    double max_residual = 0.0;
    int max_iterations = 0;
    /// Interior node-steps where the drift had to be upwinded.
    std::size_t upwind_nodes = 0;
    /// max |flow(x, yh) - (x + f(x) d_x w)| over all stored nodes.
    double hedge_map_error = 0.0;
    std::size_t fixed_point_multiple_nodes = 0;
    double wall_seconds = 0.0;
};

struct PdeSolution {
    std::string solver;
    PdeGrid grid;
    std::vector<double> x;
    std::vector<double> s;
    NodeField w;
    NodeField dw_dx;
    NodeField y_hat;
    TerminalData terminal;
    PdeDiagnostics diagnostics;

    /// Value at time node n by cubic interpolation in x.
    [[nodiscard]] double value_at(std::size_t n, double xq) const;
};

/// Central differences inside, second-order one-sided at the edges.
[[nodiscard]] std::vector<double> gradient(const std::vector<double>& v, double h);

/// Solves on grid.x_lo..x_hi, which must lie inside the model's price box together with
/// every x + f(x) d_x w reached by the solution.
[[nodiscard]] PdeSolution solve(const MarketModel& model, const PdeGrid& grid,
                                const PdeOptions& opts = {});

/// Solves the equation in the coordinate u with x = Phi(u), Phi' = f(Phi), for
/// e^{rho t} v(t, Phi(u)), and maps the result back onto grid's x nodes.
[[nodiscard]] PdeSolution solve_transformed(const MarketModel& model, const PdeGrid& grid,
                                            const PdeOptions& opts = {});

/// max |a.w - b.w| over all time nodes and the x nodes of a lying in [lo, hi];
/// b is sampled by cubic interpolation at the nearest time node.
[[nodiscard]] double max_difference(const PdeSolution& a, const PdeSolution& b, double lo,
                                    double hi);

/// Long format: s, x, w, dw_dx, y_hat.
void write_csv(const PdeSolution& sol, std::ostream& out);
/// Diagnostics sidecar as a JSON object string.
[[nodiscard]] std::string diagnostics_json(const PdeSolution& sol);

}  // namespace impactlab
