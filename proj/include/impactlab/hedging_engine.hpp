// SPDX-License-Identifier: MIT
//
// Replication of a claim from a solved pricing equation: open with the block
// trade y_hat(t, x), steer (a, b) so that the market price stays on
// X = psi(t, X_hat) with psi = x + f d_x w, unwind at T and settle.
#pragma once

#include "impactlab/interpolation.hpp"
#include "impactlab/path_engine.hpp"
#include "impactlab/pricing_pde.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace impactlab {

/// d_x w, d_xx w, d_xxx w and d_t d_x w on the PDE grid, interpolated bicubically.
class SolutionDerivatives {
public:
    explicit SolutionDerivatives(const PdeSolution& sol);
    // The tables view the owned arrays.
    SolutionDerivatives(const SolutionDerivatives&) = delete;
    SolutionDerivatives& operator=(const SolutionDerivatives&) = delete;

    [[nodiscard]] double wx(double t, double x) const { return wx_(t, x); }
    [[nodiscard]] double wxx(double t, double x) const { return wxx_(t, x); }
    [[nodiscard]] double wxxx(double t, double x) const { return wxxx_(t, x); }
    [[nodiscard]] double wtx(double t, double x) const { return wtx_(t, x); }
    [[nodiscard]] double w(double t, double x) const { return w_(t, x); }
    [[nodiscard]] bool covers(double x) const noexcept { return x >= lo_ && x <= hi_; }
    [[nodiscard]] double lo() const noexcept { return lo_; }
    [[nodiscard]] double hi() const noexcept { return hi_; }

private:
    std::vector<double> dw_, dwx_, dwxx_, dwxxx_, dwtx_;
    BicubicTable w_, wx_, wxx_, wxxx_, wtx_;
    double lo_ = 0.0, hi_ = 0.0;
};

struct ControlValues {
    double a = 0.0;
    double b = 0.0;
    double x_hat = 0.0;
};

/// (a, b) solving
///   sigma(X) + f(X) a = hs(Xh, Y) psi_x(t, Xh)
///   f(X) b = psi_t + psi_x m + 1/2 hs^2 psi_xx - mu(X) - a sigma(X) f'(X)   (all at (t, Xh))
/// with m = hm(Xh, Y) + f(Xh)/f(X) (mu(X) - 1/2 a^2 f(X) f'(X)) and Xh = x(X, -Y).
[[nodiscard]] ControlValues build_feedback_controls(const SolutionDerivatives& d,
                                                    const MarketModel& model, double t,
                                                    double price, double shares);
/// Same, with the liquidation price Xh already known.
[[nodiscard]] ControlValues build_feedback_controls(const SolutionDerivatives& d,
                                                    const MarketModel& model, double t,
                                                    double price, double shares, double x_hat);

enum class HedgeScheme { euler, milstein };

struct HedgeRun {
    double t0 = 0.0;
    double x0 = 0.0;
    /// Initial wealth before the opening trade; defaults to w(t0, x0).
    std::optional<double> v0;
    std::size_t steps = 512;
    /// Resolution of the driving noise; a multiple of steps (coarsened increments).
    std::size_t noise_steps = 0;
    std::size_t mc_paths = 1000;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    double control_cap = 1e3;
    double max_capped_fraction = 1e-3;
    TerminalOptions terminal;
    /// Number of leading paths whose full trace is kept.
    std::size_t traces = 0;
    HedgeScheme scheme = HedgeScheme::milstein;
    /// Step along the diffusion direction for the derivative of a (Milstein only).
    double direction_step = 1e-4;

    void check() const;
};

struct PathHedge {
    double error = 0.0;
    double target = 0.0;         // settlement value the wealth should reach
    double terminal_price = 0.0;
    double terminal_value = 0.0;
    /// sum of Y sigma(X) dW over the steps, plus 1/2 (a sigma + (sigma + f a) Y sigma')(dW^2 - dt)
    /// under the Milstein scheme
    double stochastic_integral = 0.0;
    double opening_gap = 0.0;          // |x(X_t, -Y_t) - x0|
    double unwind_residual = 0.0;      // Y dx(X,-Y) + I(X,-Y) + I(Xh,Y) at T-
    double max_tracking_gap = 0.0;     // max_k |Y - y_hat(t, Xh)|
    std::size_t capped_steps = 0;
};

struct HedgeReport {
    HedgeRun run;
    double initial_wealth = 0.0;
    double opening_shares = 0.0;
    std::vector<PathHedge> paths;
    std::vector<PathResult> traces;
    double mean_error = 0.0;
    double rms_error = 0.0;
    double max_abs_error = 0.0;
    double rms_target = 0.0;
    double capped_fraction = 0.0;
    bool invalid = false;
    std::vector<std::string> warnings;
};

[[nodiscard]] HedgeReport run_hedge(const MarketModel& model, const PdeSolution& sol,
                                    const HedgeRun& run);

struct CancellationReport {
    bool applicable = false;
    std::string status;
    std::vector<double> residuals;  // V_T - V_{t-} - sum Y sigma dW, per path
    double max_residual = 0.0;
};

/// For f = lambda, sigma = sigma0, mu = 0, g1 = 0 the impact and liquidity terms of the
/// hedge telescope away: V_T = V_{t-} + sum Y sigma0 dW on every path.
[[nodiscard]] CancellationReport liquidation_cancellation_check(const MarketModel& model,
                                                                const HedgeReport& report);

struct RefinementLevel {
    std::size_t space_steps = 0;
    std::size_t time_steps = 0;
    std::size_t hedge_steps = 0;
    double rms_error = 0.0;
    double rms_target = 0.0;
    double mean_error = 0.0;
};

struct RefinementStudy {
    std::vector<RefinementLevel> levels;
    /// Slope of log RMS error against log hedge time step.
    double observed_order = 0.0;
};

/// Joint refinement: level k uses the PDE grid refined by 2^k and hedge steps
/// run.steps * 2^k, all driven by coarsenings of the finest level's noise.
[[nodiscard]] RefinementStudy hedge_refinement(const MarketModel& model, const PdeGrid& base,
                                               const HedgeRun& run, std::size_t levels,
                                               const PdeOptions& opts = {});

/// One row per path: path, error, target, X_T, V_T, stochastic_integral, capped_steps.
void write_csv(const HedgeReport& report, std::ostream& out);
[[nodiscard]] std::string summary_json(const HedgeReport& report);

}  // namespace impactlab
