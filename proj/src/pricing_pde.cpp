// SPDX-License-Identifier: MIT
#include "impactlab/pricing_pde.hpp"

#include "impactlab/csv.hpp"
#include "impactlab/errors.hpp"
#include "impactlab/interpolation.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <sstream>

namespace impactlab {

void PdeGrid::check() const {
    if (!(x_hi > x_lo)) throw InvalidArgument("PDE grid needs x_hi > x_lo");
    if (space_steps < 4) throw InvalidArgument("PDE grid needs at least 4 space steps");
    if (time_steps < 1) throw InvalidArgument("PDE grid needs at least 1 time step");
    if (!(T > 0.0)) throw InvalidArgument("PDE grid needs T > 0");
}

PdeGrid PdeGrid::refined(std::size_t factor) const {
    PdeGrid g = *this;
    g.space_steps *= factor;
    g.time_steps *= factor;
    return g;
}

HatCoefficients hat_coefficients(const MarketModel& model, double x, double y, double end) {
    const auto& fn = model.impact();
    if (fn.constant_slope) return {0.0, model.sigma(end)};
    if (y == 0.0) return {0.0, model.sigma(x)};
    const double fx = fn.f(x);
    const double fe = fn.f(end);
    const double se = model.sigma(end);
    // (sigma d_x x)(end, -y) and 1/2 (sigma^2 d_xx x)(end, -y), with x(end, -y) = x.
    return {0.5 * se * se * fx * (fn.df(x) - fn.df(end)) / (fe * fe), se * fx / fe};
}

HatCoefficients hat_coefficients(const MarketModel& model, double x, double y) {
    return hat_coefficients(model, x, y, model.curve.flow(x, y));
}

namespace {

struct Candidate {
    double value;
    double shares;
};

// Minimizing root of y - g1(flow(x, y)) on [lo, hi], and the number of roots.
std::pair<std::optional<Candidate>, int> scan_fixed_points(const MarketModel& model, double x,
                                                           double lo, double hi,
                                                           std::size_t points) {
    const auto& curve = model.curve;
    const auto& claim = model.claim;
    auto residual = [&](double y, double end) { return y - claim.g1(end); };
    auto candidate = [&](double y) {
        const auto [end, cost] = curve.flow_and_cost(x, y);
        return Candidate{y * end + claim.g0(end) - cost, y};
    };
    std::optional<Candidate> best;
    int roots = 0;
    auto take = [&](double y) {
        ++roots;
        const auto c = candidate(y);
        if (!best || c.value < best->value) best = c;
    };
    const double h = (hi - lo) / static_cast<double>(points);
    double y_prev = lo;
    double x_prev = curve.flow(x, lo);
    double r_prev = residual(y_prev, x_prev);
    if (r_prev == 0.0) take(y_prev);
    for (std::size_t j = 1; j <= points; ++j) {
        const double y = j == points ? hi : lo + static_cast<double>(j) * h;
        const double xe = curve.flow(x_prev, y - y_prev);
        const double r = residual(y, xe);
        if (r == 0.0) {
            take(y);
        } else if (r_prev != 0.0 && (r < 0.0) != (r_prev < 0.0)) {
            double a = y_prev, b = y, ra = r_prev;
            for (int it = 0; it < 200 && b - a > 1e-14 * std::max(1.0, std::abs(a)); ++it) {
                const double m = 0.5 * (a + b);
                const double rm = residual(m, curve.flow(x, m));
                if (rm == 0.0) {
                    a = b = m;
                    break;
                }
                if ((rm < 0.0) == (ra < 0.0)) {
                    a = m;
                    ra = rm;
                } else {
                    b = m;
                }
            }
            take(0.5 * (a + b));
        }
        y_prev = y;
        x_prev = xe;
        r_prev = r;
    }
    return {best, roots};
}

std::pair<double, double> scan_range(const MarketModel& model, double x,
                                     const TerminalOptions& opts) {
    const double half = opts.k_bound ? *opts.k_bound : opts.scan_half_width;
    const auto& box = model.box();
    // Shrink slightly so incremental integration never touches the box edge.
    const double margin = 1e-9 * box.width();
    const double lo = std::max(-half, model.curve.inverse_flow(x, box.lo + margin));
    const double hi = std::min(half, model.curve.inverse_flow(x, box.hi - margin));
    return {lo, hi};
}

}  // namespace

double delivery_shares(const MarketModel& model, double x, const TerminalOptions& opts) {
    switch (model.claim.g1_kind) {
        case DeliveryKind::zero:
            return 0.0;
        case DeliveryKind::constant:
            return *model.claim.constant_delivery;
        case DeliveryKind::general:
            break;
    }
    const auto [lo, hi] = scan_range(model, x, opts);
    const auto [best, roots] = scan_fixed_points(model, x, lo, hi, opts.scan_points);
    if (!best) throw FixedPointError("no delivery fixed point", {x});
    return best->shares;
}

TerminalData terminal_condition(const MarketModel& model, const std::vector<double>& nodes,
                                const TerminalOptions& opts) {
    if (opts.k_bound && !(*opts.k_bound >= 0.0)) throw InvalidArgument("k_bound must be >= 0");
    if (opts.scan_points < 2) throw InvalidArgument("scan_points must be >= 2");
    const auto& claim = model.claim;
    TerminalData out;
    out.values.resize(nodes.size());
    out.shares.resize(nodes.size());
    out.multiplicity.assign(nodes.size(), 1);
    std::vector<double> failed;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double x = nodes[i];
        switch (claim.g1_kind) {
            case DeliveryKind::zero:
                out.values[i] = claim.g0(x);
                out.shares[i] = 0.0;
                break;
            case DeliveryKind::constant: {
                const double q = *claim.constant_delivery;
                if (opts.k_bound && std::abs(q) > *opts.k_bound) {
                    failed.push_back(x);
                    break;
                }
                const auto [end, cost] = model.curve.flow_and_cost(x, q);
                out.values[i] = q * end + claim.g0(end) - cost;
                out.shares[i] = q;
                break;
            }
            case DeliveryKind::general: {
                const auto [lo, hi] = scan_range(model, x, opts);
                const auto [best, roots] = scan_fixed_points(model, x, lo, hi, opts.scan_points);
                out.multiplicity[i] = roots;
                if (!best) {
                    failed.push_back(x);
                    break;
                }
                out.values[i] = best->value;
                out.shares[i] = best->shares;
                break;
            }
        }
    }
    if (!failed.empty()) {
        std::ostringstream os;
        os << "terminal condition: no admissible delivery y = g1(x(x,y)) at " << failed.size()
           << " node(s), first at x=" << failed.front();
        throw FixedPointError(os.str(), std::move(failed));
    }
    return out;
}

std::vector<double> gradient(const std::vector<double>& v, double h) {
    const std::size_t n = v.size();
    if (n < 3) throw InvalidArgument("gradient needs at least 3 nodes");
    std::vector<double> g(n);
    for (std::size_t i = 1; i + 1 < n; ++i) g[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
    g[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
    g[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
    return g;
}

double PdeSolution::value_at(std::size_t n, double xq) const {
    return cubic_uniform(std::span<const double>(w.data.data() + n * w.cols, w.cols), grid.x_lo,
                         grid.dx(), xq);
}

namespace {

// Generic linear backward step of  d_t u + D u_zz + B u_z + R u + S = 0  on a uniform
// z grid, implicit in time, with u_zz = 0 at both ends.
struct LinearStep {
    std::vector<double> D, B, S;
    double R = 0.0;
};

void implicit_step(const std::vector<double>& next, const LinearStep& c, double h, double dt,
                   std::vector<double>& out, std::size_t& upwind) {
    const std::size_t M = next.size() - 1;
    const std::size_t n = M - 1;  // unknowns 1..M-1
    std::vector<double> lower(n), diag(n), upper(n), rhs(n);
    const double h2 = h * h;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = k + 1;
        double l = c.D[i] / h2;
        double u = c.D[i] / h2;
        double m = -2.0 * c.D[i] / h2;
        const double b = c.B[i];
        if (std::abs(b) * h <= 2.0 * c.D[i]) {
            l -= b / (2.0 * h);
            u += b / (2.0 * h);
        } else {
            ++upwind;
            if (b > 0.0) {
                u += b / h;
                m -= b / h;
            } else {
                l -= b / h;
                m += b / h;
            }
        }
        lower[k] = -dt * l;
        upper[k] = -dt * u;
        diag[k] = 1.0 - dt * m - dt * c.R;
        rhs[k] = next[i] + dt * c.S[i];
    }
    // Linear extrapolation at both ends: u_0 = 2 u_1 - u_2, u_M = 2 u_{M-1} - u_{M-2}.
    diag[0] += 2.0 * lower[0];
    upper[0] -= lower[0];
    diag[n - 1] += 2.0 * upper[n - 1];
    lower[n - 1] -= upper[n - 1];

    // Thomas algorithm.
    for (std::size_t k = 1; k < n; ++k) {
        const double w = lower[k] / diag[k - 1];
        diag[k] -= w * upper[k - 1];
        rhs[k] -= w * rhs[k - 1];
    }
    out.resize(M + 1);
    out[n] = rhs[n - 1] / diag[n - 1];
    for (std::size_t k = n - 1; k-- > 0;) out[k + 1] = (rhs[k] - upper[k] * out[k + 2]) / diag[k];
    out[0] = 2.0 * out[1] - out[2];
    out[M] = 2.0 * out[M - 1] - out[M - 2];
}

struct NodeHedge {
    double y = 0.0;
    double end = 0.0;
};

// yh = x^{-1}(x, x + p), warm-started from the previous solve at the same node.
NodeHedge hedge_at(const MarketModel& model, double x, double p, NodeHedge& hint) {
    const double target = x + p;
    if (const auto& lam = model.impact().constant_slope) {
        const auto& box = model.box();
        if (!box.contains(target)) throw DomainEscapeError("hedge map target", target, box.lo, box.hi);
        hint = {p / *lam, target};
        return hint;
    }
    const auto fp = model.curve.inverse_flow_from(x, target, FlowPoint{hint.y, hint.end});
    hint = {fp.shares, fp.price};
    return hint;
}

// Coefficients D = 1/2 hs^2, B = hm and source L = hm d_x I + 1/2 hs^2 d_xx I at (x, yh).
void node_coefficients(const MarketModel& model, double x, const NodeHedge& h, double& D,
                       double& B, double& L) {
    const auto hc = hat_coefficients(model, x, h.y, h.end);
    D = 0.5 * hc.sigma * hc.sigma;
    B = hc.mu;
    if (model.impact().constant_slope) {
        L = 0.0;  // I(x, y) = lambda y^2 / 2 does not depend on x
        return;
    }
    L = hc.mu * model.curve.dcost_dx(x, h.y, h.end) +
        D * model.curve.d2cost_dxx(x, h.y, h.end);
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

void check_grid_in_box(const MarketModel& model, const PdeGrid& grid) {
    grid.check();
    const auto& box = model.box();
    if (grid.x_lo < box.lo || grid.x_hi > box.hi)
        throw InvalidArgument("PDE grid must lie inside the model's price box");
    if (std::abs(grid.T - model.horizon) > 1e-12 * std::max(1.0, model.horizon))
        throw InvalidArgument("PDE grid horizon must equal the model horizon");
}

void init_solution(PdeSolution& sol, const PdeGrid& grid) {
    const std::size_t rows = grid.time_steps + 1, cols = grid.space_steps + 1;
    sol.grid = grid;
    sol.x.resize(cols);
    sol.s.resize(rows);
    for (std::size_t i = 0; i < cols; ++i) sol.x[i] = grid.x(i);
    for (std::size_t n = 0; n < rows; ++n) sol.s[n] = grid.s(n);
    sol.w = NodeField(rows, cols);
    sol.dw_dx = NodeField(rows, cols);
    sol.y_hat = NodeField(rows, cols);
    sol.diagnostics.picard_iterations.assign(grid.time_steps, 0);
    sol.diagnostics.picard_residual.assign(grid.time_steps, 0.0);
}

// Stores w row n with its gradient and hedge map; updates the hedge-map error.
void store_row(const MarketModel& model, PdeSolution& sol, std::size_t n,
               const std::vector<double>& w, const std::vector<double>& g,
               std::vector<NodeHedge>& hints) {
    const std::size_t cols = sol.x.size();
    for (std::size_t i = 0; i < cols; ++i) {
        const double x = sol.x[i];
        const double p = model.impact().f(x) * g[i];
        const auto h = hedge_at(model, x, p, hints[i]);
        sol.w(n, i) = w[i];
        sol.dw_dx(n, i) = g[i];
        sol.y_hat(n, i) = h.y;
        sol.diagnostics.hedge_map_error =
            std::max(sol.diagnostics.hedge_map_error, std::abs(h.end - (x + p)));
    }
}

template <typename Assemble>
void picard_loop(std::vector<double>& iterate, const std::vector<double>& next, double h,
                 double dt, const PdeOptions& opts, std::size_t step, PdeDiagnostics& diag,
                 Assemble&& assemble) {
    LinearStep coeffs;
    std::vector<double> solved;
    double res = 0.0;
    int it = 0;
    for (;;) {
        assemble(iterate, coeffs);
        implicit_step(next, coeffs, h, dt, solved, diag.upwind_nodes);
        res = sup_diff(solved, iterate);
        iterate.swap(solved);
        ++it;
        if (res <= opts.picard_tol) break;
        if (it >= opts.max_picard) {
            std::ostringstream os;
            os << "Picard iteration did not converge at time step " << step << " (residual "
               << res << " after " << it << " iterations)";
            throw ConvergenceError(os.str());
        }
    }
    diag.picard_iterations[step] = it;
    diag.picard_residual[step] = res;
    diag.max_residual = std::max(diag.max_residual, res);
    diag.max_iterations = std::max(diag.max_iterations, it);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

PdeSolution solve(const MarketModel& model, const PdeGrid& grid, const PdeOptions& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    check_grid_in_box(model, grid);
    PdeSolution sol;
    sol.solver = "direct";
    init_solution(sol, grid);
    const std::size_t M = grid.space_steps, N = grid.time_steps;
    const double h = grid.dx(), dt = grid.dt();
    const auto& f = model.impact().f;

    sol.terminal = terminal_condition(model, sol.x, opts.terminal);
    for (int m : sol.terminal.multiplicity)
        if (m > 1) ++sol.diagnostics.fixed_point_multiple_nodes;

    std::vector<double> fx(M + 1);
    std::vector<NodeHedge> hints(M + 1);
    for (std::size_t i = 0; i <= M; ++i) {
        fx[i] = f(sol.x[i]);
        hints[i] = {0.0, sol.x[i]};
    }

    std::vector<double> next = sol.terminal.values;
    store_row(model, sol, N, next, gradient(next, h), hints);
    std::vector<double> iterate;
    for (std::size_t n = N; n-- > 0;) {
        iterate = next;
        picard_loop(iterate, next, h, dt, opts, n, sol.diagnostics,
                    [&](const std::vector<double>& w, LinearStep& c) {
                        const auto g = gradient(w, h);
                        c.D.assign(M + 1, 0.0);
                        c.B.assign(M + 1, 0.0);
                        c.S.assign(M + 1, 0.0);
                        c.R = 0.0;
                        for (std::size_t i = 1; i < M; ++i) {
                            const auto hd = hedge_at(model, sol.x[i], fx[i] * g[i], hints[i]);
                            node_coefficients(model, sol.x[i], hd, c.D[i], c.B[i], c.S[i]);
                        }
                    });
        store_row(model, sol, n, iterate, gradient(iterate, h), hints);
        next.swap(iterate);
    }
    sol.diagnostics.wall_seconds = seconds_since(t0);
    return sol;
}

PdeSolution solve_transformed(const MarketModel& model, const PdeGrid& grid,
                              const PdeOptions& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    check_grid_in_box(model, grid);
    const auto& fn = model.impact();
    const auto& curve = model.curve;
    const std::size_t M = grid.space_steps, N = grid.time_steps;
    const double dt = grid.dt();
    const double rho = opts.rho;

    // u grid with Phi(u) = x(xc, u) covering exactly [x_lo, x_hi].
    const double xc = 0.5 * (grid.x_lo + grid.x_hi);
    const double u_lo = curve.inverse_flow(xc, grid.x_lo);
    const double u_hi = curve.inverse_flow(xc, grid.x_hi);
    const double du = (u_hi - u_lo) / static_cast<double>(M);
    std::vector<double> u(M + 1), phi(M + 1), f(M + 1), df(M + 1);
    for (std::size_t i = 0; i <= M; ++i) {
        u[i] = i == M ? u_hi : u_lo + static_cast<double>(i) * du;
        phi[i] = i == 0 ? grid.x_lo : (i == M ? grid.x_hi : curve.flow(xc, u[i]));
        f[i] = fn.f(phi[i]);
        df[i] = fn.df(phi[i]);
    }

    PdeSolution sol;
    sol.solver = "transformed";
    init_solution(sol, grid);
    sol.terminal = terminal_condition(model, sol.x, opts.terminal);
    for (int m : sol.terminal.multiplicity)
        if (m > 1) ++sol.diagnostics.fixed_point_multiple_nodes;

    const auto g_phi = terminal_condition(model, phi, opts.terminal);
    std::vector<double> next(M + 1);
    const double grow_T = std::exp(rho * grid.T);
    for (std::size_t i = 0; i <= M; ++i) next[i] = grow_T * g_phi.values[i];

    // Fields on the u grid: v~ and d_u v~ per time node.
    NodeField vt(N + 1, M + 1), qt(N + 1, M + 1);
    auto keep = [&](std::size_t n, const std::vector<double>& v) {
        const auto q = gradient(v, du);
        for (std::size_t i = 0; i <= M; ++i) {
            vt(n, i) = v[i];
            qt(n, i) = q[i];
        }
    };
    keep(N, next);

    std::vector<NodeHedge> hints(M + 1);
    for (std::size_t i = 0; i <= M; ++i) hints[i] = {0.0, phi[i]};
    std::vector<double> iterate;
    for (std::size_t n = N; n-- > 0;) {
        const double t = grid.s(n);
        const double decay = std::exp(-rho * t);
        iterate = next;
        picard_loop(iterate, next, du, dt, opts, n, sol.diagnostics,
                    [&](const std::vector<double>& v, LinearStep& c) {
                        const auto q = gradient(v, du);
                        c.D.assign(M + 1, 0.0);
                        c.B.assign(M + 1, 0.0);
                        c.S.assign(M + 1, 0.0);
                        c.R = -rho;
                        for (std::size_t i = 1; i < M; ++i) {
                            const auto hd = hedge_at(model, phi[i], decay * q[i], hints[i]);
                            double D = 0, B = 0, L = 0;
                            node_coefficients(model, phi[i], hd, D, B, L);
                            const double f2 = f[i] * f[i];
                            c.D[i] = D / f2;
                            c.B[i] = B / f[i] - D * df[i] / f2;
                            c.S[i] = L / decay;
                        }
                    });
        keep(n, iterate);
        next.swap(iterate);
    }

    // Back to x: v(t, x) = e^{-rho t} v~(t, U(x)), d_x v = e^{-rho t} d_u v~ / f(x).
    std::vector<double> ux(M + 1);
    for (std::size_t j = 0; j <= M; ++j)
        ux[j] = j == 0 ? u_lo : (j == M ? u_hi : curve.inverse_flow(xc, sol.x[j]));
    std::vector<NodeHedge> xhints(M + 1);
    for (std::size_t j = 0; j <= M; ++j) xhints[j] = {0.0, sol.x[j]};
    for (std::size_t n = N + 1; n-- > 0;) {
        const double decay = std::exp(-rho * grid.s(n));
        const std::span<const double> vrow(vt.data.data() + n * (M + 1), M + 1);
        const std::span<const double> qrow(qt.data.data() + n * (M + 1), M + 1);
        for (std::size_t j = 0; j <= M; ++j) {
            const double x = sol.x[j];
            const double w = decay * cubic_uniform(vrow, u_lo, du, ux[j]);
            const double g = decay * cubic_uniform(qrow, u_lo, du, ux[j]) / fn.f(x);
            const double p = fn.f(x) * g;
            const auto hd = hedge_at(model, x, p, xhints[j]);
            sol.w(n, j) = w;
            sol.dw_dx(n, j) = g;
            sol.y_hat(n, j) = hd.y;
            sol.diagnostics.hedge_map_error =
                std::max(sol.diagnostics.hedge_map_error, std::abs(hd.end - (x + p)));
        }
    }
    sol.diagnostics.wall_seconds = seconds_since(t0);
    return sol;
}

double max_difference(const PdeSolution& a, const PdeSolution& b, double lo, double hi) {
    double m = 0.0;
    const double bdt = b.grid.dt();
    for (std::size_t n = 0; n < a.s.size(); ++n) {
        const double k = std::round(a.s[n] / bdt);
        if (std::abs(k * bdt - a.s[n]) > 1e-9 * bdt) continue;
        const auto nb = static_cast<std::size_t>(k);
        if (nb >= b.s.size()) continue;
        for (std::size_t i = 0; i < a.x.size(); ++i) {
            const double x = a.x[i];
            if (x < lo || x > hi) continue;
            m = std::max(m, std::abs(a.w(n, i) - b.value_at(nb, x)));
        }
    }
    return m;
}

void write_csv(const PdeSolution& sol, std::ostream& out) {
    csv::Writer w(out);
    w.header({"s", "x", "w", "dw_dx", "y_hat"});
    for (std::size_t n = 0; n < sol.s.size(); ++n)
        for (std::size_t i = 0; i < sol.x.size(); ++i)
            w.row({sol.s[n], sol.x[i], sol.w(n, i), sol.dw_dx(n, i), sol.y_hat(n, i)});
}

std::string diagnostics_json(const PdeSolution& sol) {
    const auto& d = sol.diagnostics;
    nlohmann::json j;
    j["solver"] = sol.solver;
    j["grid"] = {{"x_lo", sol.grid.x_lo},
                 {"x_hi", sol.grid.x_hi},
                 {"space_steps", sol.grid.space_steps},
                 {"time_steps", sol.grid.time_steps},
                 {"T", sol.grid.T}};
    j["picard_iterations"] = d.picard_iterations;
    j["picard_residual"] = d.picard_residual;
    j["max_picard_residual"] = d.max_residual;
    j["max_picard_iterations"] = d.max_iterations;
    j["upwind_nodes"] = d.upwind_nodes;
    j["hedge_map_error"] = d.hedge_map_error;
    j["fixed_point_multiple_nodes"] = d.fixed_point_multiple_nodes;
    j["wall_seconds"] = d.wall_seconds;
    return j.dump(2);
}

}  // namespace impactlab
