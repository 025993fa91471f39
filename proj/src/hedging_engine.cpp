// SPDX-License-Identifier: MIT
#include "impactlab/hedging_engine.hpp"

#include "impactlab/convergence.hpp"
#include "impactlab/csv.hpp"
#include "impactlab/errors.hpp"
#include "impactlab/parallel.hpp"
#include "impactlab/rng.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace impactlab {

namespace {

// Central differences in time, second-order one-sided at both ends, column by column.
std::vector<double> time_derivative(const NodeField& f, double dt) {
    std::vector<double> out(f.data.size());
    const std::size_t R = f.rows, C = f.cols;
    for (std::size_t i = 0; i < C; ++i) {
        for (std::size_t n = 0; n < R; ++n) {
            double d = 0.0;
            if (R < 3) {
                d = (f(R - 1, i) - f(0, i)) / (dt * static_cast<double>(R - 1));
            } else if (n == 0) {
                d = (-3.0 * f(0, i) + 4.0 * f(1, i) - f(2, i)) / (2.0 * dt);
            } else if (n == R - 1) {
                d = (3.0 * f(n, i) - 4.0 * f(n - 1, i) + f(n - 2, i)) / (2.0 * dt);
            } else {
                d = (f(n + 1, i) - f(n - 1, i)) / (2.0 * dt);
            }
            out[n * C + i] = d;
        }
    }
    return out;
}

std::vector<double> space_derivative(const std::vector<double>& data, std::size_t rows,
                                     std::size_t cols, double h) {
    std::vector<double> out(data.size());
    std::vector<double> row(cols);
    for (std::size_t n = 0; n < rows; ++n) {
        std::copy_n(data.begin() + static_cast<long>(n * cols), cols, row.begin());
        const auto g = gradient(row, h);
        std::copy(g.begin(), g.end(), out.begin() + static_cast<long>(n * cols));
    }
    return out;
}

}  // namespace

SolutionDerivatives::SolutionDerivatives(const PdeSolution& sol)
    : lo_(sol.grid.x_lo), hi_(sol.grid.x_hi) {
    const std::size_t R = sol.w.rows, C = sol.w.cols;
    const double dx = sol.grid.dx(), dt = sol.grid.dt();
    dw_ = sol.w.data;
    dwx_ = sol.dw_dx.data;
    dwxx_ = space_derivative(dwx_, R, C, dx);
    dwxxx_ = space_derivative(dwxx_, R, C, dx);
    dwtx_ = time_derivative(sol.dw_dx, dt);
    auto table = [&](const std::vector<double>& v) {
        return BicubicTable(v, R, C, 0.0, dt, lo_, dx);
    };
    w_ = table(dw_);
    wx_ = table(dwx_);
    wxx_ = table(dwxx_);
    wxxx_ = table(dwxxx_);
    wtx_ = table(dwtx_);
}

ControlValues build_feedback_controls(const SolutionDerivatives& d, const MarketModel& model,
                                      double t, double price, double shares, double x_hat) {
    if (!d.covers(x_hat))
        throw DomainEscapeError("hedge: liquidation price outside the PDE grid", x_hat, d.lo(),
                                d.hi());
    const auto& fn = model.impact();
    const double fX = fn.f(price), fpX = fn.df(price);
    const double fh = fn.f(x_hat), fph = fn.df(x_hat), fpph = fn.d2f(x_hat);
    const double sX = model.sigma(price), mX = model.mu(price);
    const auto hc = hat_coefficients(model, x_hat, shares, price);

    const double wx = d.wx(t, x_hat), wxx = d.wxx(t, x_hat), wxxx = d.wxxx(t, x_hat),
                 wtx = d.wtx(t, x_hat);
    const double psi_x = 1.0 + fph * wx + fh * wxx;
    const double psi_xx = fpph * wx + 2.0 * fph * wxx + fh * wxxx;
    const double psi_t = fh * wtx;

    ControlValues c;
    c.x_hat = x_hat;
    c.a = (hc.sigma * psi_x - sX) / fX;
    const double m = hc.mu + fh / fX * (mX - 0.5 * c.a * c.a * fX * fpX);
    c.b = (psi_t + psi_x * m + 0.5 * hc.sigma * hc.sigma * psi_xx - mX - c.a * sX * fpX) / fX;
    return c;
}

namespace {

double liquidation_price(const MarketModel& model, const MarketState& s) {
    if (const auto& lam = model.impact().constant_slope) return s.price - *lam * s.shares;
    return model.curve.flow(s.price, -s.shares);
}

// y_hat(t, xh) = x^{-1}(xh, xh + f(xh) w_x(t, xh)), warm-started from `near` when given.
double hedge_ratio(const MarketModel& model, const SolutionDerivatives& d, double t, double xh,
                   std::optional<FlowPoint> near = std::nullopt) {
    const double p = model.impact().f(xh) * d.wx(t, xh);
    if (const auto& lam = model.impact().constant_slope) return p / *lam;
    if (near) return model.curve.inverse_flow_from(xh, xh + p, *near).shares;
    return model.curve.inverse_flow(xh, xh + p);
}

}  // namespace

ControlValues build_feedback_controls(const SolutionDerivatives& d, const MarketModel& model,
                                      double t, double price, double shares) {
    return build_feedback_controls(d, model, t, price, shares,
                                   liquidation_price(model, MarketState{price, shares, 0.0}));
}

void HedgeRun::check() const {
    if (steps == 0) throw InvalidArgument("hedge steps must be positive");
    if (noise_steps != 0 && noise_steps % steps != 0)
        throw InvalidArgument("noise_steps must be a multiple of steps");
    if (mc_paths == 0) throw InvalidArgument("mc_paths must be positive");
    if (!(control_cap > 0.0)) throw InvalidArgument("control_cap must be positive");
    if (!(max_capped_fraction >= 0.0)) throw InvalidArgument("max_capped_fraction must be >= 0");
    if (!(direction_step > 0.0)) throw InvalidArgument("direction_step must be positive");
}

HedgeReport run_hedge(const MarketModel& model, const PdeSolution& sol, const HedgeRun& run) {
    run.check();
    if (std::abs(sol.grid.T - model.horizon) > 1e-12 * std::max(1.0, model.horizon))
        throw InvalidArgument("PDE solution horizon differs from the model horizon");
    if (!(run.t0 >= 0.0 && run.t0 < model.horizon))
        throw InvalidArgument("hedge start time must lie in [0, T)");
    const SolutionDerivatives d(sol);
    if (!d.covers(run.x0)) throw InvalidArgument("initial price outside the PDE grid");

    HedgeReport rep;
    rep.run = run;
    rep.initial_wealth = run.v0 ? *run.v0 : d.w(run.t0, run.x0);
    rep.opening_shares = hedge_ratio(model, d, run.t0, run.x0);
    const auto grid = TimeGrid::uniform(run.t0, model.horizon, run.steps);
    const std::size_t noise_steps = run.noise_steps == 0 ? run.steps : run.noise_steps;
    const std::size_t factor = noise_steps / run.steps;
    const double noise_dt = (model.horizon - run.t0) / static_cast<double>(noise_steps);
    const double dt = grid.dt();
    const auto& claim = model.claim;

    rep.paths.resize(run.mc_paths);
    rep.traces.resize(std::min(run.traces, run.mc_paths));
    parallel_for(run.mc_paths, run.threads, [&](std::size_t p) {
        const auto fine = brownian_increments(run.seed, p, noise_steps, noise_dt);
        const auto dw = factor == 1 ? fine : coarsen_increments(fine, factor);
        PathHedge out;
        const bool keep = p < rep.traces.size();
        PathResult trace;
        if (keep) {
            trace.grid = grid;
            trace.brownian = dw;
        }

        const MarketState pre{run.x0, 0.0, rep.initial_wealth};
        MarketState s = model.curve.round_trip_state(pre, rep.opening_shares);
        if (keep) trace.jumps.push_back(JumpRecord{0, run.t0, rep.opening_shares, pre, s});
        out.opening_gap = std::abs(liquidation_price(model, s) - run.x0);

        for (std::size_t k = 0; k < run.steps; ++k) {
            if (keep) trace.states.push_back(s);
            const double t = grid.time(k);
            const double xh = liquidation_price(model, s);
            auto c = build_feedback_controls(d, model, t, s.price, s.shares, xh);
            const double yh = hedge_ratio(model, d, t, xh, FlowPoint{s.shares, s.price});
            out.max_tracking_gap = std::max(out.max_tracking_gap, std::abs(s.shares - yh));
            const bool capped = std::abs(c.a) > run.control_cap || std::abs(c.b) > run.control_cap;
            if (capped) {
                ++out.capped_steps;
                c.a = std::clamp(c.a, -run.control_cap, run.control_cap);
                c.b = std::clamp(c.b, -run.control_cap, run.control_cap);
            }
            const double sig = model.sigma(s.price);
            out.stochastic_integral += s.shares * sig * dw[k];
            if (run.scheme == HedgeScheme::euler || capped) {
                s = euler_step(model, s, c.a, c.b, dw[k], dt);
                continue;
            }
            // Derivative of a along (sigma + f a, a) by central differences.
            const double gx = sig + model.curve.slope(s.price) * c.a;
            const double e = run.direction_step;
            auto a_at = [&](double sign) {
                const double X = s.price + sign * e * gx, Y = s.shares + sign * e * c.a;
                return build_feedback_controls(d, model, t, X, Y).a;
            };
            const double la = (a_at(1.0) - a_at(-1.0)) / (2.0 * e);
            const double q = 0.5 * (dw[k] * dw[k] - dt);
            out.stochastic_integral +=
                (c.a * sig + gx * s.shares * model.coefficients.sigma.derivative(s.price)) * q;
            s = milstein_step(model, s, c.a, c.b, la, dw[k], dt);
        }
        if (keep) trace.states.push_back(s);

        // Unwind at T through the jump map, then deliver y* when the claim asks for shares.
        const double Y = s.shares;
        const double xh = liquidation_price(model, s);
        const auto [end, cost_out] = model.curve.flow_and_cost(s.price, -Y);
        const double cost_in = model.curve.cost(xh, Y);
        out.unwind_residual = Y * (end - s.price) + cost_out + cost_in;
        const MarketState closed = model.curve.round_trip_state(s, -Y);
        if (keep) trace.jumps.push_back(JumpRecord{run.steps, model.horizon, -Y, s, closed});
        MarketState settled = closed;
        if (claim.g1_kind == DeliveryKind::zero) {
            out.target = claim.g0(closed.price);
            out.error = closed.value - out.target;
        } else {
            const double ystar = delivery_shares(model, closed.price, run.terminal);
            settled = model.curve.round_trip_state(closed, ystar);
            if (keep)
                trace.jumps.push_back(JumpRecord{run.steps, model.horizon, ystar, closed, settled});
            const double delivered = ystar * settled.price + claim.g0(settled.price);
            out.target = delivered - model.curve.cost(closed.price, ystar);
            out.error = settled.value - delivered;
        }
        out.terminal_price = settled.price;
        out.terminal_value = closed.value;
        rep.paths[p] = out;
        if (keep) rep.traces[p] = std::move(trace);
    });

    double se = 0.0, s2 = 0.0, t2 = 0.0;
    std::size_t capped = 0;
    for (const auto& ph : rep.paths) {
        se += ph.error;
        s2 += ph.error * ph.error;
        t2 += ph.target * ph.target;
        rep.max_abs_error = std::max(rep.max_abs_error, std::abs(ph.error));
        capped += ph.capped_steps;
    }
    const auto n = static_cast<double>(rep.paths.size());
    rep.mean_error = se / n;
    rep.rms_error = std::sqrt(s2 / n);
    rep.rms_target = std::sqrt(t2 / n);
    rep.capped_fraction = static_cast<double>(capped) / (n * static_cast<double>(run.steps));
    if (rep.capped_fraction > run.max_capped_fraction) {
        rep.invalid = true;
        std::ostringstream os;
        os << "controls capped on " << rep.capped_fraction * 100.0
           << "% of steps, above the allowed " << run.max_capped_fraction * 100.0 << "%";
        rep.warnings.push_back(os.str());
    }
    return rep;
}

CancellationReport liquidation_cancellation_check(const MarketModel& model,
                                                  const HedgeReport& report) {
    CancellationReport out;
    const auto& c = model.coefficients;
    const bool constant_impact = model.impact().constant_slope.has_value();
    const bool constant_sigma = c.sigma.constant.has_value();
    const bool zero_mu = c.mu.constant.has_value() && *c.mu.constant == 0.0;
    const bool cash_claim = model.claim.g1_kind == DeliveryKind::zero;
    if (!(constant_impact && constant_sigma && zero_mu && cash_claim)) {
        out.status =
            "skipped: the cancellation identity needs constant impact, constant volatility, "
            "zero drift and a cash-settled claim";
        return out;
    }
    out.applicable = true;
    out.status = "checked";
    out.residuals.reserve(report.paths.size());
    for (const auto& p : report.paths) {
        const double r = p.terminal_value - report.initial_wealth - p.stochastic_integral;
        out.residuals.push_back(r);
        out.max_residual = std::max(out.max_residual, std::abs(r));
    }
    return out;
}

RefinementStudy hedge_refinement(const MarketModel& model, const PdeGrid& base,
                                 const HedgeRun& run, std::size_t levels,
                                 const PdeOptions& opts) {
    if (levels < 2) throw InvalidArgument("refinement needs at least two levels");
    RefinementStudy study;
    const std::size_t finest = run.steps << (levels - 1);
    std::vector<double> dts, errs;
    for (std::size_t k = 0; k < levels; ++k) {
        const auto grid = base.refined(std::size_t{1} << k);
        const auto sol = solve(model, grid, opts);
        HedgeRun r = run;
        r.steps = run.steps << k;
        r.noise_steps = finest;
        const auto rep = run_hedge(model, sol, r);
        study.levels.push_back(RefinementLevel{grid.space_steps, grid.time_steps, r.steps,
                                               rep.rms_error, rep.rms_target, rep.mean_error});
        dts.push_back((model.horizon - run.t0) / static_cast<double>(r.steps));
        errs.push_back(rep.rms_error);
    }
    bool positive = true;
    for (double e : errs) positive = positive && e > 0.0;
    if (positive) study.observed_order = fit_loglog(dts, errs).slope;
    return study;
}

void write_csv(const HedgeReport& report, std::ostream& out) {
    csv::Writer w(out);
    w.header({"path", "error", "target", "X_T", "V_T", "stochastic_integral", "capped_steps"});
    for (std::size_t p = 0; p < report.paths.size(); ++p) {
        const auto& ph = report.paths[p];
        w.row({std::to_string(p), csv::format(ph.error), csv::format(ph.target),
               csv::format(ph.terminal_price), csv::format(ph.terminal_value),
               csv::format(ph.stochastic_integral), std::to_string(ph.capped_steps)});
    }
}

std::string summary_json(const HedgeReport& report) {
    double opening = 0.0, unwind = 0.0, tracking = 0.0;
    for (const auto& p : report.paths) {
        opening = std::max(opening, p.opening_gap);
        unwind = std::max(unwind, std::abs(p.unwind_residual));
        tracking = std::max(tracking, p.max_tracking_gap);
    }
    nlohmann::json j;
    j["paths"] = report.paths.size();
    j["steps"] = report.run.steps;
    j["t0"] = report.run.t0;
    j["x0"] = report.run.x0;
    j["initial_wealth"] = report.initial_wealth;
    j["opening_shares"] = report.opening_shares;
    j["mean_error"] = report.mean_error;
    j["rms_error"] = report.rms_error;
    j["max_abs_error"] = report.max_abs_error;
    j["rms_target"] = report.rms_target;
    j["relative_rms_error"] = report.rms_target > 0.0 ? report.rms_error / report.rms_target : 0.0;
    j["capped_fraction"] = report.capped_fraction;
    j["invalid"] = report.invalid;
    j["max_opening_gap"] = opening;
    j["max_unwind_residual"] = unwind;
    j["max_tracking_gap"] = tracking;
    j["warnings"] = report.warnings;
    return j.dump(2);
}

}  // namespace impactlab
